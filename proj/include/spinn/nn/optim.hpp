#pragma once

#include "spinn/nn/mlp.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace spinn::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::uint64_t step = 0;
  AdamConfig config;

  OptimState() = default;
  OptimState(std::size_t n, AdamConfig cfg)
      : m(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))),
        v(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))),
        config(cfg) {}
};

/// One bias-corrected Adam update, in place.
void adam_step(OptimState& state, std::span<double> params, std::span<const double> grads);

/// A named group of parameters that the training loop may update.
struct ParamSlot {
  std::string block;
  ParamVector* params = nullptr;
};

struct TrainSchedule {
  int epochs = 0;
  int batch_size = 256;  // <= 0 means full batch
  AdamConfig adam;
  std::uint64_t seed = 0;
  bool shuffle = true;
  /// Blocks whose parameters stay fixed for this run.
  std::vector<std::string> frozen_blocks;
};

struct TrainTrace {
  std::vector<double> epoch_loss;  // mean minibatch loss per epoch
  bool diverged = false;
  std::uint64_t steps = 0;
};

/// Computes the loss of a minibatch (indices into the dataset) and accumulates
/// gradients into the slots' grad buffers. Returns the loss value.
using BatchLoss = std::function<double(std::span<const std::size_t> batch)>;

/// Runs epochs of shuffled minibatch Adam. Optimizer states persist in `states`
/// (keyed by slot order) so consecutive calls continue the same run. Stops and
/// marks the trace as diverged on a non-finite loss or gradient.
TrainTrace train_loop(std::span<const ParamSlot> slots, std::vector<OptimState>& states,
                      std::size_t dataset_size, const BatchLoss& loss, const TrainSchedule& schedule);

}  // namespace spinn::nn

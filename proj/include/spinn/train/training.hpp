#pragma once

#include "spinn/model/model.hpp"
#include "spinn/nn/optim.hpp"
#include "spinn/oracle/pde.hpp"
#include "spinn/train/family.hpp"

#include <optional>
#include <string>
#include <vector>

namespace spinn::train {

using model::Model;
using model::SpectralPinnModel;

/// Initial-condition batch: every (initial condition, grid point) pair at t = 0.
struct InitialBatch {
  Eigen::MatrixXd samples;  // L x n
  Eigen::MatrixXd points;   // dim x P
  Eigen::MatrixXd targets;  // P x n, f_i at points
};

/// Grid rows `grid_index` of the listed initial conditions.
InitialBatch initial_batch(const TrainSet& set, std::span<const std::size_t> rows,
                           std::span<const int> grid_index);

/// Loss terms. With `backprop`, the gradient of weight * value is accumulated
/// into the model's (unfrozen) parameter gradients.
struct LossOptions {
  bool backprop = false;
  double weight = 1.0;
};

/// Mean over all (ic, point) pairs of |u(f, p, 0) - f(p)|^2.
double loss_initial(Model& m, const InitialBatch& b, LossOptions opt = {});

/// Mean over the batch of |u_t - (coeff Lap u + reaction(u))|^2.
/// Throws PoleSingularity for sphere collocation points at a pole.
double loss_residual(Model& m, const model::Batch& b, const oracle::PdeSpec& pde, LossOptions opt = {});

/// (1 / (K n)) sum_i |D(C(F_i), 0) - C(F_i)|^2.
double loss_coeff_consistency(SpectralPinnModel& m, const Eigen::MatrixXd& samples, LossOptions opt = {});

/// (1 / (K n)) sum_i |C(F_i) - target_i|^2 for targets (K x n) from a numerical basis.
double loss_transform_target(SpectralPinnModel& m, const Eigen::MatrixXd& samples, const Eigen::MatrixXd& targets,
                             LossOptions opt = {});

/// Mean over all (ic, point) pairs of |f(p) - R(C(f), p)|^2, time stepping bypassed.
double loss_autoencode(SpectralPinnModel& m, const InitialBatch& b, LossOptions opt = {});

struct LossReport {
  double l0 = 0.0;
  double ld = 0.0;
  std::optional<double> lcoef;
  std::optional<double> mse_b;  // boundary term; closed domains leave it empty
  [[nodiscard]] double total() const { return l0 + ld + lcoef.value_or(0.0) + mse_b.value_or(0.0); }
};

enum class PhaseKind {
  pretrain,  // transformation + reconstruction on the autoencoding loss
  frozen,    // time stepping only; L0 + LD (+ Lcoef)
  full,      // everything; L0 + LD (+ Lcoef)
  fit_transform,  // transformation only, supervised by transform_target
  fit_recon,      // reconstruction only on the autoencoding loss
};
std::string_view to_string(PhaseKind k);

struct PhaseSpec {
  PhaseKind kind = PhaseKind::full;
  int epochs = 0;
};

struct ScheduleSpec {
  std::vector<PhaseSpec> phases;
  oracle::PdeSpec pde;
  int batch_size = 64;
  nn::AdamConfig adam;
  double lr_final = 0.0;   // > 0: geometric decay from adam.learning_rate over each phase
  bool coef_loss = true;   // adds Lcoef for spectral models with a trainable time stepping
  int l0_points = 0;       // grid points per ic in L0 / pretraining; 0 = whole grid
  Eigen::MatrixXd transform_target;  // K x samples operator giving fit_transform targets
  std::uint64_t seed = 0;
};

struct PhaseTrace {
  PhaseKind kind;
  std::vector<double> epoch_loss;
};

/// Runs the phases in order. Naive models accept only `full` phases
/// (InvalidVariant otherwise). Throws Diverged on a non-finite loss or gradient.
std::vector<PhaseTrace> run_schedule(Model& m, const TrainSet& data, const ScheduleSpec& schedule);

/// Loss report on rows of a dataset (no gradients).
LossReport evaluate_losses(Model& m, const TrainSet& data, std::span<const std::size_t> rows,
                           const ScheduleSpec& schedule);

}  // namespace spinn::train

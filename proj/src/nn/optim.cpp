#include "spinn/nn/optim.hpp"

#include "spinn/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace spinn::nn {

void adam_step(OptimState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || static_cast<Eigen::Index>(params.size()) != state.m.size())
    throw Error(ErrorKind::ShapeMismatch, "adam: parameter, gradient and moment sizes differ");
  ++state.step;
  const AdamConfig& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const double g = grads[i];
    state.m(k) = c.beta1 * state.m(k) + (1.0 - c.beta1) * g;
    state.v(k) = c.beta2 * state.v(k) + (1.0 - c.beta2) * g * g;
    const double mhat = state.m(k) / bc1;
    const double vhat = state.v(k) / bc2;
    params[i] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
  }
}

TrainTrace train_loop(std::span<const ParamSlot> slots, std::vector<OptimState>& states,
                      std::size_t dataset_size, const BatchLoss& loss, const TrainSchedule& schedule) {
  TrainTrace trace;
  if (schedule.epochs <= 0) return trace;
  if (dataset_size == 0) throw Error(ErrorKind::InvalidShape, "training on an empty dataset");

  if (states.size() != slots.size()) {
    states.clear();
    for (const ParamSlot& s : slots) states.emplace_back(s.params->size(), schedule.adam);
  }
  for (OptimState& s : states) s.config = schedule.adam;

  // Freeze flags for this run; restored on exit.
  std::vector<bool> saved(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    saved[i] = slots[i].params->frozen;
    const bool frozen = std::find(schedule.frozen_blocks.begin(), schedule.frozen_blocks.end(),
                                  slots[i].block) != schedule.frozen_blocks.end();
    slots[i].params->frozen = saved[i] || frozen;
  }
  const bool any_trainable = std::any_of(slots.begin(), slots.end(),
                                         [](const ParamSlot& s) { return !s.params->frozen; });

  std::vector<std::size_t> order(dataset_size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(schedule.seed);
  const std::size_t batch =
      schedule.batch_size <= 0 ? dataset_size
                               : std::min<std::size_t>(dataset_size, static_cast<std::size_t>(schedule.batch_size));

  for (int epoch = 0; epoch < schedule.epochs && !trace.diverged; ++epoch) {
    if (schedule.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < dataset_size; start += batch) {
      const std::size_t len = std::min(batch, dataset_size - start);
      for (const ParamSlot& s : slots) s.params->zero_grad();
      const double value = loss(std::span<const std::size_t>(order.data() + start, len));
      bool finite = std::isfinite(value);
      for (const ParamSlot& s : slots)
        if (!s.params->frozen && !s.params->grad.allFinite()) finite = false;
      if (!finite) {
        trace.diverged = true;
        break;
      }
      total += value;
      ++batches;
      if (any_trainable) {
        for (std::size_t i = 0; i < slots.size(); ++i) {
          ParamVector& p = *slots[i].params;
          if (p.frozen) continue;
          adam_step(states[i], std::span<double>(p.values.data(), p.size()),
                    std::span<const double>(p.grad.data(), p.size()));
        }
        ++trace.steps;
      }
    }
    if (!trace.diverged) trace.epoch_loss.push_back(total / static_cast<double>(batches));
  }

  for (std::size_t i = 0; i < slots.size(); ++i) slots[i].params->frozen = saved[i];
  return trace;
}

}  // namespace spinn::nn

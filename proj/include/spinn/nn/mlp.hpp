#pragma once

#include "spinn/autodiff/graph.hpp"
#include "spinn/autodiff/jet.hpp"
#include "spinn/autodiff/tape.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spinn::nn {

/// Flat trainable storage plus its gradient accumulator.
struct ParamVector {
  Eigen::VectorXd values;
  Eigen::VectorXd grad;
  bool frozen = false;

  void resize(Eigen::Index n) {
    values = Eigen::VectorXd::Zero(n);
    grad = Eigen::VectorXd::Zero(n);
  }
  void zero_grad() { grad.setZero(); }
  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  /// Gradient sink for graph nodes, or null when frozen.
  [[nodiscard]] double* grad_at(std::size_t offset) {
    return frozen ? nullptr : grad.data() + offset;
  }
};

enum class ActivationKind : std::uint8_t { identity, tanh, exp, sin_pow, cos_pow, elementwise_sin };

struct Activation {
  ActivationKind kind = ActivationKind::identity;
  int power = 1;  // only for sin_pow / cos_pow; 0 yields the constant 1

  static Activation identity() { return {}; }
  static Activation tanh() { return {ActivationKind::tanh, 1}; }
  static Activation exp() { return {ActivationKind::exp, 1}; }
  static Activation sin() { return {ActivationKind::elementwise_sin, 1}; }
  static Activation sin_pow(int l) { return {ActivationKind::sin_pow, l}; }
  static Activation cos_pow(int l) { return {ActivationKind::cos_pow, l}; }
  friend bool operator==(const Activation&, const Activation&) = default;
};

std::string to_string(const Activation& a);

struct DenseLayer {
  int in = 0;
  int out = 0;
  bool bias = true;
  Activation activation;
  std::size_t offset = 0;  // weights (column-major out x in), then bias

  [[nodiscard]] std::size_t param_count() const {
    return static_cast<std::size_t>(in) * out + (bias ? out : 0);
  }
};

/// Shape of an MLP: widths[0] inputs, then one dense layer per following width.
struct MlpShape {
  std::vector<int> widths;
  Activation hidden = Activation::tanh();
  Activation output = Activation::identity();
  bool bias = true;
};

class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(const MlpShape& shape);
  /// Arbitrary layer list (used for checkpoints and hand-built nets).
  explicit Mlp(std::vector<DenseLayer> layers);

  [[nodiscard]] const std::vector<DenseLayer>& layers() const { return layers_; }
  [[nodiscard]] std::size_t param_count() const { return params.size(); }
  [[nodiscard]] int input_width() const { return layers_.empty() ? 0 : layers_.front().in; }
  [[nodiscard]] int output_width() const { return layers_.empty() ? 0 : layers_.back().out; }

  [[nodiscard]] Eigen::Map<const ad::Mat> weights(std::size_t layer) const;
  [[nodiscard]] Eigen::Map<ad::Mat> weights(std::size_t layer);
  [[nodiscard]] Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;
  [[nodiscard]] Eigen::Map<Eigen::VectorXd> bias(std::size_t layer);

  /// Jet evaluation of one input vector. When `tape` is given, every scalar
  /// operation is recorded and parameters are registered with ids equal to
  /// their flat index plus `param_id_base`.
  [[nodiscard]] std::vector<ad::Jet2> forward(std::span<const ad::Jet2> input,
                                              ad::Tape* tape = nullptr,
                                              ad::ParamId param_id_base = 0) const;

  /// Batched evaluation on a graph. Gradients land in params.grad unless frozen.
  ad::Graph::Id forward(ad::Graph& g, ad::Graph::Id x);

  /// Plain double evaluation of a batch (columns are samples).
  [[nodiscard]] ad::Mat evaluate(const ad::Mat& x) const;

  ParamVector params;

 private:
  void layout();
  std::vector<DenseLayer> layers_;
};

/// Glorot-uniform weights, zero biases, reproducible from `seed`.
Mlp init_params(const MlpShape& shape, std::uint64_t seed);

/// Shared activation application for the graph path.
ad::Graph::Id apply_activation(ad::Graph& g, ad::Graph::Id x, const Activation& a);
ad::Jet2 apply_activation(const ad::Jet2& x, const Activation& a);

}  // namespace spinn::nn

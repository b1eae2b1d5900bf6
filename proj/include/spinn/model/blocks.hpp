#pragma once

#include "spinn/autodiff/graph.hpp"
#include "spinn/nn/convnet.hpp"
#include "spinn/nn/mlp.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace spinn::model {

using ad::Graph;
using Id = Graph::Id;

enum class Geometry { interval, sphere, torus };

enum class TransformVariant { exact_operator, linear_trained, grid_conv_trained, encoder };
enum class StepVariant {
  realization_heat, mlp_plain, exp_nonlinear_a, exp_standard_b, naive_mlp_c, torus_a, torus_b
};
enum class ReconVariant { exact_sine, mlp_interval, sphere_spectral_activations, torus_mlp, decoder };

std::string_view to_string(Geometry g);
std::string_view to_string(TransformVariant v);
std::string_view to_string(StepVariant v);
std::string_view to_string(ReconVariant v);
/// Parsers throw InvalidVariant on unknown names.
Geometry parse_geometry(std::string_view s);
TransformVariant parse_transform(std::string_view s);
StepVariant parse_step(std::string_view s);
ReconVariant parse_recon(std::string_view s);

/// Point dimension per geometry (x, or theta/phi).
int point_dim(Geometry g);

/// Sizes and widths shared by the block builders. A zero width means "same as
/// the layer's input width"; a zero layer count means the variant default.
struct BlockConfig {
  Geometry geometry = Geometry::interval;
  int K = 20;          // coefficient width handed between blocks
  int samples = 101;   // length of the flattened sample vector
  int grid_h = 0;      // sample grid shape for convolutional transforms
  int grid_w = 0;
  Eigen::MatrixXd exact_operator;  // K x samples, for exact_operator
  double alpha = 0.01;             // heat diffusivity for realization_heat

  std::vector<int> conv_channels;  // empty: variant default
  int step_layers = 0;
  int step_hidden = 0;
  int d12_layers = 0;
  int d12_hidden = 0;
  int d2_layers = 0;
  int d2_hidden = 0;
  int recon_layers = 0;
  int recon_hidden = 0;
  int sphere_degree = 9;  // sin^l / cos^l powers 0..degree
  int rd_layers = 2;
};

/// A block's trainable storage under a stable name (used for checkpoints).
struct NamedParams {
  std::string name;
  nn::ParamVector* params;
};

class TransformationBlock {
 public:
  virtual ~TransformationBlock() = default;
  /// samples (L x B) -> coefficients (K x B).
  virtual Id forward(Graph& g, Id samples) = 0;
  /// Plain evaluation without a graph.
  [[nodiscard]] virtual ad::Mat evaluate(const ad::Mat& samples) const = 0;
  virtual std::vector<NamedParams> params() = 0;
  [[nodiscard]] virtual std::size_t param_count() const = 0;
  [[nodiscard]] virtual TransformVariant variant() const = 0;
  [[nodiscard]] virtual int output_width() const = 0;
};

class TimeSteppingBlock {
 public:
  virtual ~TimeSteppingBlock() = default;
  /// coeffs (K x B), nonlinear coeffs (K x B, or -1), t (1 x B) -> K x B.
  virtual Id forward(Graph& g, Id coeffs, Id nonlinear, Id t) = 0;
  virtual std::vector<NamedParams> params() = 0;
  [[nodiscard]] virtual std::size_t param_count() const = 0;
  [[nodiscard]] virtual StepVariant variant() const = 0;
  /// True when the block consumes the transform of F - F^3.
  [[nodiscard]] virtual bool needs_nonlinear() const { return false; }
};

class ReconstructionBlock {
 public:
  virtual ~ReconstructionBlock() = default;
  /// coefficients (K x B), points (dim x B) -> 1 x B.
  virtual Id forward(Graph& g, Id coeffs, Id points) = 0;
  virtual std::vector<NamedParams> params() = 0;
  [[nodiscard]] virtual std::size_t param_count() const = 0;
  [[nodiscard]] virtual ReconVariant variant() const = 0;
};

std::unique_ptr<TransformationBlock> build_transformation(TransformVariant v, const BlockConfig& cfg,
                                                          std::uint64_t seed);
std::unique_ptr<TimeSteppingBlock> build_time_stepping(StepVariant v, const BlockConfig& cfg, std::uint64_t seed);
std::unique_ptr<ReconstructionBlock> build_reconstruction(ReconVariant v, const BlockConfig& cfg,
                                                          std::uint64_t seed);

/// Default dense-layer count of each variant (per subnet where it has several).
struct StepLayout {
  int d12_layers, d12_hidden, d2_layers, d2_hidden;
};
StepLayout step_layout(StepVariant v, const BlockConfig& cfg);

/// Derives independent sub-seeds from one model seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Tanh MLP of `layers` dense layers from `in` to `out` with hidden width
/// `hidden` (0: same as `in`) and identity output.
nn::MlpShape mlp_shape(int in, int out, int layers, int hidden);

}  // namespace spinn::model

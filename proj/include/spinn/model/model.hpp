#pragma once

#include "spinn/autodiff/jet.hpp"
#include "spinn/bases/torus.hpp"
#include "spinn/model/blocks.hpp"
#include "spinn/nn/optim.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace spinn::model {

/// Columns are samples: samples (L x B), points (dim x B), t (1 x B).
struct Batch {
  ad::Mat samples;
  ad::Mat points;
  Eigen::RowVectorXd t;

  [[nodiscard]] int size() const { return static_cast<int>(t.size()); }
  /// Columns `index` of this batch.
  [[nodiscard]] Batch select(std::span<const std::size_t> index) const;
};

/// Which input carries the jet seed in a forward pass.
enum class Direction { none, time, coord0, coord1 };

/// Everything a model run needs besides its parameters.
struct ModelInfo {
  Geometry geometry = Geometry::interval;
  int samples = 101;
  bases::TorusGeometry torus;  // used when geometry == torus
};

class Model {
 public:
  virtual ~Model() = default;

  /// One output node (1 x B) per requested direction. Each node's d1/d2 are the
  /// first and second derivatives along that direction.
  virtual std::vector<Id> forward(Graph& g, const Batch& batch, std::span<const Direction> dirs) = 0;

  virtual std::vector<NamedParams> params() = 0;
  [[nodiscard]] virtual std::size_t param_count() const = 0;
  [[nodiscard]] virtual std::string describe() const = 0;
  [[nodiscard]] const ModelInfo& info() const { return info_; }

  /// Trainable groups for the training loop, tagged by block name
  /// ("transformation", "time_stepping", "reconstruction" or "naive").
  virtual std::vector<nn::ParamSlot> slots() = 0;

 protected:
  explicit Model(ModelInfo info) : info_(std::move(info)) {}
  ModelInfo info_;
};

struct SpectralSpec {
  TransformVariant transform = TransformVariant::exact_operator;
  StepVariant step = StepVariant::realization_heat;
  ReconVariant recon = ReconVariant::exact_sine;
  BlockConfig blocks;
};

/// R(D(t, C(f)[, C(f - f^3)]), x).
class SpectralPinnModel final : public Model {
 public:
  SpectralPinnModel(ModelInfo info, const SpectralSpec& spec, std::uint64_t seed);

  std::vector<Id> forward(Graph& g, const Batch& batch, std::span<const Direction> dirs) override;
  std::vector<NamedParams> params() override;
  [[nodiscard]] std::size_t param_count() const override;
  [[nodiscard]] std::string describe() const override;
  std::vector<nn::ParamSlot> slots() override;

  /// Coefficient path only: D(t, C(f)) as a K x B node.
  Id coefficients(Graph& g, const Batch& batch, bool seed_time);
  /// C(f) as a K x B node.
  Id transform(Graph& g, const ad::Mat& samples);

  TransformationBlock& transformation() { return *transform_; }
  TimeSteppingBlock& time_stepping() { return *step_; }
  ReconstructionBlock& reconstruction() { return *recon_; }
  [[nodiscard]] const SpectralSpec& spec() const { return spec_; }

 private:
  SpectralSpec spec_;
  std::unique_ptr<TransformationBlock> transform_;
  std::unique_ptr<TimeSteppingBlock> step_;
  std::unique_ptr<ReconstructionBlock> recon_;
};

struct NaiveSpec {
  int layers = 6;   // dense layers including the scalar output
  int hidden = 0;   // 0: equal to the input width
};

/// One tanh MLP on (samples, point, t).
class NaiveModel final : public Model {
 public:
  NaiveModel(ModelInfo info, const NaiveSpec& spec, std::uint64_t seed);

  std::vector<Id> forward(Graph& g, const Batch& batch, std::span<const Direction> dirs) override;
  std::vector<NamedParams> params() override { return {{"naive", &net_.params}}; }
  [[nodiscard]] std::size_t param_count() const override { return net_.param_count(); }
  [[nodiscard]] std::string describe() const override;
  std::vector<nn::ParamSlot> slots() override { return {{"naive", &net_.params}}; }
  [[nodiscard]] int input_width() const { return net_.input_width(); }
  [[nodiscard]] const NaiveSpec& spec() const { return spec_; }

 private:
  NaiveSpec spec_;
  nn::Mlp net_;
};

/// Graph input for `points` seeded along `dir` (coord0/coord1), else constant.
Id point_node(Graph& g, const ad::Mat& points, Direction dir);
/// Graph input for t seeded when dir == time.
Id time_node(Graph& g, const Eigen::RowVectorXd& t, Direction dir);

/// Single-point evaluation with the jet along `dir`.
ad::Jet2 model_forward(Model& m, std::span<const double> samples, std::span<const double> point, double t,
                       Direction dir = Direction::none);

/// Coefficients of the Laplace-Beltrami operator in parameter coordinates:
/// Lap u = sum_i d1w[i] * u_i + d2w[i] * u_ii (no mixed terms on these geometries).
struct LaplaceWeights {
  Eigen::RowVectorXd d1w[2];
  Eigen::RowVectorXd d2w[2];
};
/// Throws PoleSingularity for sphere points with sin(theta) < 1e-6.
LaplaceWeights laplace_weights(const ModelInfo& info, const ad::Mat& points);

struct Derivatives {
  double u = 0.0;
  double u_t = 0.0;
  double laplacian = 0.0;
};
Derivatives model_derivatives(Model& m, std::span<const double> samples, std::span<const double> point, double t);

/// Values at many points for one sample vector and time. The coefficient path is
/// evaluated once; results are bit-identical to per-point model_forward.
std::vector<double> reassemble_multi_eval(Model& m, std::span<const double> samples, double t,
                                          const ad::Mat& points);

/// Values on a (points x times) table for one sample vector. Uses the fast
/// (non column-exact) products; meant for metrics.
ad::Mat evaluate_table(Model& m, std::span<const double> samples, const ad::Mat& points,
                       std::span<const double> times);

/// Saves the model's parameters with a manifest line describing the model.
void save_model(const std::filesystem::path& path, Model& m, const std::string& manifest);
/// Copies parameters from a checkpoint into an already-built model of the same shape.
void load_model_params(const std::filesystem::path& path, Model& m);

}  // namespace spinn::model

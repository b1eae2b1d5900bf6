#pragma once

#include "spinn/bases/torus.hpp"
#include "spinn/model/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>

namespace spinn::train {

using model::Geometry;

/// Random initial conditions with unit-norm coefficient vectors.
///
///   interval: sum_{k=1..degree} c_k sin(2 pi k x)                 on x_j = j/100
///   sphere:   sum_{l<=degree} c_lm Y_lm(theta, phi)               on the sphere grid
///   torus:    sum_{k,l=1..degree} c_kl sin(k theta) sin(l phi)     on the torus grid
///
/// Torus coefficients are indexed (k-1)*degree + (l-1).
struct FamilySpec {
  Geometry geometry = Geometry::interval;
  int degree = 20;
  int n_theta = 20;  // sample grid for sphere/torus
  int n_phi = 20;
  bases::TorusGeometry torus;  // R, r for torus (grid taken from n_theta/n_phi)

  static FamilySpec interval(int degree);
  static FamilySpec sphere(int degree, int n_theta = 20, int n_phi = 20);
  static FamilySpec torus_family(int degree, const bases::TorusGeometry& geom);

  [[nodiscard]] int dim() const;
  /// Number of samples per initial condition.
  [[nodiscard]] int samples() const;
  /// Throws ConfigError on non-positive sizes.
  void validate() const;
  [[nodiscard]] std::uint64_t hash() const;
  [[nodiscard]] model::ModelInfo model_info() const;
};

/// Coordinates of the sample grid, point_dim x samples.
Eigen::MatrixXd family_grid(const FamilySpec& spec);

/// P x dim matrix of the family's basis functions at points (dim x P).
Eigen::MatrixXd family_design(const FamilySpec& spec, const Eigen::MatrixXd& points);

/// Values of one initial condition (coefficient vector) at points (dim x P).
Eigen::VectorXd family_eval(const FamilySpec& spec, std::span<const double> coeffs, const Eigen::MatrixXd& points);

/// dim x n coefficients (normalized isotropic Gaussian) and samples x n grid values.
struct Family {
  FamilySpec spec;
  Eigen::MatrixXd coeffs;
  Eigen::MatrixXd samples;

  [[nodiscard]] int size() const { return static_cast<int>(coeffs.cols()); }
};

/// n >= 1 draws, reproducible from `seed`.
Family sample_family(const FamilySpec& spec, int n, std::uint64_t seed);

/// One collocation triple per initial condition.
struct DataSpec {
  FamilySpec family;
  int n = 5000;
  double T = 0.5;
  double pole_margin = 0.05;  // sphere collocation keeps theta in [margin, pi - margin]
};

struct TrainSet {
  DataSpec spec;
  Family family;
  Eigen::MatrixXd points;  // point_dim x n collocation points
  Eigen::RowVectorXd t;    // n collocation times in [0, T]

  [[nodiscard]] int size() const { return family.size(); }
  /// Collocation batch for the given rows.
  [[nodiscard]] model::Batch batch(std::span<const std::size_t> rows) const;
};

TrainSet make_train_set(const DataSpec& spec, std::uint64_t seed);

/// Cache file layout (little-endian):
///   "SPNNDATA" u32 version(=1) u64 key u64 seed
///   u32 dim u32 samples u32 point_dim u32 n
///   f64 coeffs[n][dim]  f64 samples[n][samples]  f64 points[n][point_dim]  f64 t[n]
/// `key` hashes the data spec; a mismatch triggers regeneration.
std::uint64_t data_key(const DataSpec& spec);
void save_train_set(const std::filesystem::path& path, const TrainSet& set, std::uint64_t seed);
TrainSet load_or_make_train_set(const std::filesystem::path& path, const DataSpec& spec, std::uint64_t seed);

}  // namespace spinn::train

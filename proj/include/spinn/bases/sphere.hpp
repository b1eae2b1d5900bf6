#pragma once

#include "spinn/autodiff/jet.hpp"

#include <Eigen/Dense>

#include <span>
#include <utility>

namespace spinn::bases {

/// Real spherical harmonics up to `degree` on the uniform polar/azimuth grid
/// theta_j = pi j/(n_theta-1), phi_k = 2 pi k/n_phi. Flattened sample index is
/// j * n_phi + k. Coefficients are ordered (l, m) with m from -l to l.
struct SphereBasisSpec {
  int degree = 9;
  int n_theta = 20;
  int n_phi = 20;

  [[nodiscard]] int count() const { return (degree + 1) * (degree + 1); }
  [[nodiscard]] int samples() const { return n_theta * n_phi; }
  [[nodiscard]] double theta(int j) const;
  [[nodiscard]] double phi(int k) const;
};

/// Position of (l, m) in the coefficient vector.
constexpr int sph_index(int l, int m) { return l * l + l + m; }
std::pair<int, int> sph_degree_order(int index);

/// Associated Legendre function with the Condon-Shortley phase.
double assoc_legendre(int l, int m, double x);

/// Real spherical harmonic Y_lm (orthonormal on the unit sphere).
double real_sph_harm(int l, int m, double theta, double phi);
ad::Jet2 real_sph_harm(int l, int m, const ad::Jet2& theta, const ad::Jet2& phi);

/// Laplace-Beltrami of Y_lm assembled from jet passes in theta and phi.
/// Throws PoleSingularity when sin(theta) < 1e-6.
double sphere_laplacian_check(int l, int m, double theta, double phi);

/// sum_i c_i Y_i(theta, phi).
double sphere_eval(std::span<const double> coeffs, double theta, double phi);

/// samples x count design matrix of the grid.
Eigen::MatrixXd sphere_design(const SphereBasisSpec& spec);

/// Pseudo-inverse grid-to-coefficient operator. Throws RankDeficient on
/// construction when the grid cannot resolve the degree.
class SphereTransform {
 public:
  explicit SphereTransform(const SphereBasisSpec& spec);
  [[nodiscard]] Eigen::VectorXd apply(std::span<const double> samples) const;
  [[nodiscard]] const Eigen::MatrixXd& matrix() const { return pinv_; }
  [[nodiscard]] const Eigen::MatrixXd& design() const { return design_; }
  [[nodiscard]] const SphereBasisSpec& spec() const { return spec_; }

 private:
  SphereBasisSpec spec_;
  Eigen::MatrixXd design_;
  Eigen::MatrixXd pinv_;
};

Eigen::VectorXd sphere_transform(std::span<const double> samples, const SphereBasisSpec& spec = {});

}  // namespace spinn::bases

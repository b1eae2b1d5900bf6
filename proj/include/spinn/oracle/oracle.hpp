#pragma once

#include "spinn/bases/torus.hpp"
#include "spinn/oracle/pde.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>

namespace spinn::oracle {

/// sum_k exp(-4 pi^2 k^2 alpha t) c_k sin(2 pi k x), k = 1..size.
double heat_analytic(std::span<const double> coeffs, double x, double t, double alpha);

/// Orthonormal eigenbasis of -Lap on a node set, as used by the Galerkin solver.
/// Mode k satisfies Lap phi_k = -lambda_k phi_k.
class GalerkinBasis {
 public:
  virtual ~GalerkinBasis() = default;
  [[nodiscard]] int count() const { return static_cast<int>(eigenvalues_.size()); }
  [[nodiscard]] const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  /// Node coordinates, point_dim x nodes.
  [[nodiscard]] const Eigen::MatrixXd& nodes() const { return nodes_; }
  /// nodes x K: nodal values of each mode.
  [[nodiscard]] const Eigen::MatrixXd& synthesis() const { return synthesis_; }
  /// K x nodes: nodal values -> coefficients.
  [[nodiscard]] const Eigen::MatrixXd& analysis() const { return analysis_; }
  /// P x K mode values at arbitrary points (dim x P).
  [[nodiscard]] virtual Eigen::MatrixXd design_at(const Eigen::MatrixXd& points) const = 0;
  [[nodiscard]] virtual std::string describe() const = 0;
  [[nodiscard]] std::uint64_t hash() const;

 protected:
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd nodes_, synthesis_, analysis_;
};

/// Real spherical harmonics up to `degree`, nonlinear term on an n_theta x n_phi
/// grid with least-squares projection.
std::shared_ptr<const GalerkinBasis> sphere_galerkin(int degree, int n_theta, int n_phi);
/// FEM eigenbasis on the torus mesh; K = 0 keeps every mode.
std::shared_ptr<const GalerkinBasis> torus_galerkin(const bases::TorusGeometry& geom, int K);
/// Grid used by default for a sphere degree: max(20, 2 degree + 2) in both angles.
int sphere_oracle_grid(int degree);

struct SolverOptions {
  bool nonlinear = true;  // false drops the reaction term even for Allen-Cahn
  int startup_substeps = 10;
  double blowup = 1e6;    // Instability when |c| exceeds blowup * max(1, |c0|)
};

/// Coefficient trajectory sampled every dt on [0, T].
struct OracleSolution {
  std::shared_ptr<const GalerkinBasis> basis;
  PdeSpec pde;
  double dt = 0.0;
  Eigen::MatrixXd coeffs;  // K x (floor(T/dt) + 1)
  std::string scheme;      // startup and stepping metadata

  [[nodiscard]] int steps() const { return static_cast<int>(coeffs.cols()); }
  /// Stored column nearest to t. Throws TimeOutOfRange unless within dt/2 of the grid.
  [[nodiscard]] int step_index(double t) const;
};

/// IMEX-BDF4: diffusion implicit and diagonal per mode, reaction nodal and
/// extrapolated explicitly; u1..u3 from RK4 on the full right-hand side with
/// `startup_substeps` substeps per step. Throws Instability, NonFiniteCoefficient.
OracleSolution imex_bdf4_solve(const Eigen::VectorXd& coeffs0, const PdeSpec& pde,
                               std::shared_ptr<const GalerkinBasis> basis, double dt, SolverOptions opt = {});

double oracle_evaluate(const OracleSolution& sol, std::span<const double> point, double t);
/// P x times table of solution values at points (dim x P).
Eigen::MatrixXd oracle_table(const OracleSolution& sol, const Eigen::MatrixXd& points, std::span<const double> times);

/// Trajectory cache (little-endian):
///   "SPNNORCL" u32 version(=1) u64 key f64 dt u32 K u32 steps f64 coeffs[steps][K]
/// key = hash(pde, basis, coeffs0, dt, options).
std::uint64_t oracle_key(const Eigen::VectorXd& coeffs0, const PdeSpec& pde, const GalerkinBasis& basis, double dt,
                         const SolverOptions& opt);
OracleSolution cached_solve(const std::filesystem::path& dir, const Eigen::VectorXd& coeffs0, const PdeSpec& pde,
                            std::shared_ptr<const GalerkinBasis> basis, double dt, SolverOptions opt = {});

}  // namespace spinn::oracle

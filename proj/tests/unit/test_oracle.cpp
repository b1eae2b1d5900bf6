#include "spinn/bases/sphere.hpp"
#include "spinn/common/error.hpp"
#include "spinn/oracle/oracle.hpp"
#include "spinn/train/family.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace spinn;
using namespace spinn::oracle;

namespace {
constexpr double kPi = std::numbers::pi;

PdeSpec ac_sphere(double eps = 0.1, double T = 1.0) { return {PdeKind::allen_cahn, eps, model::Geometry::sphere, T}; }

// Closed form of u' = u - u^3.
double logistic_cubic(double u0, double t) {
  const double e = std::exp(2 * t);
  return u0 * std::exp(t) / std::sqrt(1 - u0 * u0 + u0 * u0 * e);
}

Eigen::VectorXd unit_mode(int K, int i) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(K);
  c[i] = 1.0;
  return c;
}
}  // namespace

TEST(HeatAnalytic, Examples) {
  const std::vector<double> c{1.0};
  // 4 pi^2 * 0.01 * 0.5 = 0.02 pi^2
  EXPECT_NEAR(heat_analytic(c, 0.25, 0.5, 0.01), std::exp(-0.02 * kPi * kPi), 1e-15);
  EXPECT_NEAR(heat_analytic(c, 0.25, 0.5, 0.01), 0.8208687, 1e-7);
  const std::vector<double> f{0.3, -0.2, 0.5};
  for (double x : {0.1, 0.4, 0.9}) {
    double direct = 0;
    for (int k = 1; k <= 3; ++k) direct += f[k - 1] * std::sin(2 * kPi * k * x);
    EXPECT_NEAR(heat_analytic(f, x, 0.0, 0.01), direct, 1e-15);
  }
  double prev = 1.0;
  for (double t = 1.0; t <= 50.0; t += 7.0) {
    const double a = heat_analytic(c, 0.25, t, 0.01);
    EXPECT_LT(a, prev);
    prev = a;
  }
}

TEST(Imex, LinearSphereDecay) {
  auto basis = sphere_galerkin(9, 20, 20);
  const int i = bases::sph_index(2, 1);
  OracleSolution sol = imex_bdf4_solve(unit_mode(100, i), ac_sphere(), basis, 1e-3, SolverOptions{false});
  EXPECT_EQ(sol.steps(), 1001);
  EXPECT_NEAR(sol.coeffs(i, 1000), std::exp(-0.6), 1e-6);
  EXPECT_NEAR(std::exp(-0.6), 0.548812, 1e-6);
  EXPECT_LE(sol.coeffs.col(1000).cwiseAbs().maxCoeff() - std::abs(sol.coeffs(i, 1000)), 1e-12);
  const std::array<double, 2> p{0.7, 1.9};
  EXPECT_NEAR(oracle_evaluate(sol, p, 1.0), std::exp(-0.6) * bases::real_sph_harm(2, 1, 0.7, 1.9), 1e-6);
  EXPECT_NEAR(oracle_evaluate(sol, p, 0.0), bases::real_sph_harm(2, 1, 0.7, 1.9), 1e-14);
}

TEST(Imex, ZeroStaysZero) {
  auto basis = sphere_galerkin(5, 20, 20);
  const OracleSolution sol = imex_bdf4_solve(Eigen::VectorXd::Zero(36), ac_sphere(), basis, 1e-3);
  EXPECT_EQ(sol.coeffs.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Imex, ConstantDataFollowsScalarOde) {
  auto basis = sphere_galerkin(5, 20, 20);
  const double y00 = 1.0 / std::sqrt(4 * kPi);
  const OracleSolution sol = imex_bdf4_solve(unit_mode(36, 0) * (0.5 / y00), ac_sphere(), basis, 1e-3);
  double worst = 0;
  for (int n = 0; n < sol.steps(); n += 10) worst = std::max(worst, std::abs(sol.coeffs(0, n) * y00 - logistic_cubic(0.5, n * 1e-3)));
  EXPECT_LE(worst, 1e-6);
  EXPECT_LE(sol.coeffs.bottomRows(35).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Imex, SteadyStatesArePreserved) {
  auto basis = sphere_galerkin(5, 20, 20);
  const double y00 = 1.0 / std::sqrt(4 * kPi);
  for (double u : {-1.0, 0.0, 1.0}) {
    const OracleSolution sol = imex_bdf4_solve(unit_mode(36, 0) * (u / y00), ac_sphere(0.1, 0.2), basis, 1e-3);
    for (int n = 1; n < sol.steps(); ++n)
      EXPECT_LE((sol.coeffs.col(n) - sol.coeffs.col(n - 1)).cwiseAbs().maxCoeff() * y00, 1e-10) << u << " " << n;
  }
}

TEST(Imex, FourthOrderConvergence) {
  // Linear problem, initial data on the stiffest modes.
  auto basis = sphere_galerkin(9, 20, 20);
  Eigen::VectorXd c0 = Eigen::VectorXd::Zero(100);
  for (int m = -9; m <= 9; ++m) c0[bases::sph_index(9, m)] = 0.2;
  c0[bases::sph_index(5, 2)] = 0.5;
  const PdeSpec pde = ac_sphere();
  std::vector<double> err;
  for (double dt : {2e-3, 1e-3, 5e-4}) {
    const OracleSolution sol = imex_bdf4_solve(c0, pde, basis, dt, SolverOptions{false});
    double e = 0;
    for (int n = 0; n < sol.steps(); ++n)
      for (int i = 0; i < 100; ++i)
        e = std::max(e, std::abs(sol.coeffs(i, n) - c0[i] * std::exp(-pde.coeff * basis->eigenvalues()[i] * n * dt)));
    err.push_back(e);
  }
  const double r1 = err[0] / err[1], r2 = err[1] / err[2];
  EXPECT_GE(r1, 10.0);
  EXPECT_LE(r1, 24.0);
  EXPECT_GE(r2, 10.0);
  EXPECT_LE(r2, 24.0);
}

TEST(Imex, ComparisonPrincipleBound) {
  auto basis = sphere_galerkin(9, 20, 20);
  const train::Family fam = train::sample_family(train::FamilySpec::sphere(9), 3, 17);
  for (int i = 0; i < 3; ++i) {
    const Eigen::VectorXd c0 = fam.coeffs.col(i);
    const double finf = (basis->synthesis() * c0).cwiseAbs().maxCoeff();
    const OracleSolution sol = imex_bdf4_solve(c0, ac_sphere(), basis, 1e-3);
    const double umax = (basis->synthesis() * sol.coeffs).cwiseAbs().maxCoeff();
    EXPECT_LE(umax, std::max(1.0, finf) + 0.1);
  }
}

TEST(Imex, TorusLinearDecay) {
  const bases::TorusGeometry g{2.0, 1.0, 9, 9};
  auto basis = torus_galerkin(g, 0);
  EXPECT_EQ(basis->count(), 81);
  const PdeSpec pde{PdeKind::allen_cahn, 0.1, model::Geometry::torus, 0.5};
  const OracleSolution sol = imex_bdf4_solve(unit_mode(81, 4), pde, basis, 1e-3, SolverOptions{false});
  EXPECT_NEAR(sol.coeffs(4, 500), std::exp(-0.1 * basis->eigenvalues()[4] * 0.5), 1e-8);
  // projecting nodal values recovers the mode
  EXPECT_LE((basis->analysis() * basis->synthesis() - Eigen::MatrixXd::Identity(81, 81)).cwiseAbs().maxCoeff(), 1e-8);
  // evaluation at a vertex equals the nodal value
  const Eigen::VectorXd nodal = basis->synthesis() * sol.coeffs.col(200);
  const std::array<double, 2> v{g.theta(3), g.phi(5)};
  EXPECT_NEAR(oracle_evaluate(sol, v, 0.2), nodal[3 * 9 + 5], 1e-12);
}

TEST(OracleEvaluate, GridConsistencyAndTimeRange) {
  auto basis = sphere_galerkin(5, 20, 20);
  const train::Family fam = train::sample_family(train::FamilySpec::sphere(5), 1, 4);
  const OracleSolution sol = imex_bdf4_solve(fam.coeffs.col(0), ac_sphere(0.1, 0.1), basis, 1e-3);
  const Eigen::VectorXd grid = basis->synthesis() * sol.coeffs.col(40);
  const std::array<double, 2> node{basis->nodes()(0, 57), basis->nodes()(1, 57)};
  EXPECT_NEAR(oracle_evaluate(sol, node, 0.04), grid[57], 1e-12);
  EXPECT_NEAR(oracle_evaluate(sol, node, 0.0), fam.samples(57, 0), 1e-12);
  EXPECT_EQ(sol.step_index(0.0404), 40);
  for (double t : {-0.01, 0.2, std::nan("")}) {
    try {
      (void)oracle_evaluate(sol, node, t);
      FAIL() << t;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::TimeOutOfRange);
    }
  }
  const std::vector<double> times{0.0, 0.04};
  const Eigen::MatrixXd table = oracle_table(sol, basis->nodes(), times);
  EXPECT_LE((table.col(1) - grid).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Imex, ErrorsAndCache) {
  auto basis = sphere_galerkin(5, 20, 20);
  EXPECT_THROW((void)imex_bdf4_solve(Eigen::VectorXd::Zero(10), ac_sphere(), basis, 1e-3), Error);
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(36);
  bad[3] = std::nan("");
  try {
    (void)imex_bdf4_solve(bad, ac_sphere(), basis, 1e-3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFiniteCoefficient);
  }
  // Large data under an explicit reaction blows up.
  try {
    (void)imex_bdf4_solve(unit_mode(36, 0) * 50.0, ac_sphere(), basis, 0.05);
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.kind() == ErrorKind::Instability || e.kind() == ErrorKind::NonFiniteCoefficient);
  }

  const auto dir = std::filesystem::temp_directory_path() / "spinn_oracle_cache";
  std::filesystem::remove_all(dir);
  const train::Family fam = train::sample_family(train::FamilySpec::sphere(5), 1, 9);
  const OracleSolution a = cached_solve(dir, fam.coeffs.col(0), ac_sphere(0.1, 0.1), basis, 1e-3);
  const OracleSolution b = cached_solve(dir, fam.coeffs.col(0), ac_sphere(0.1, 0.1), basis, 1e-3);
  EXPECT_EQ(a.coeffs, b.coeffs);
  EXPECT_EQ(b.scheme.rfind("cached", 0), 0u);
  std::filesystem::remove_all(dir);
}

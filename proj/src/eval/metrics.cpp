#include "spinn/eval/metrics.hpp"

#include "spinn/common/error.hpp"

#include <cmath>
#include <random>

namespace spinn::eval {

EvalGrid default_eval_grid(const train::FamilySpec& family, double T, int steps) {
  if (steps < 1 || !(T > 0)) throw Error(ErrorKind::ConfigError, "evaluation needs T > 0 and at least one step");
  EvalGrid g;
  g.points = train::family_grid(family);
  g.times.reserve(static_cast<std::size_t>(steps) + 1);
  for (int n = 0; n <= steps; ++n) g.times.push_back(T * n / steps);
  return g;
}

Tables oracle_truth(const train::Family& family, const oracle::PdeSpec& pde, const EvalGrid& grid,
                    const TruthOptions& opt) {
  const train::FamilySpec& fs = family.spec;
  Tables out;
  out.reserve(static_cast<std::size_t>(family.size()));

  if (fs.geometry == model::Geometry::interval) {
    if (pde.kind != oracle::PdeKind::heat)
      throw Error(ErrorKind::ConfigError, "the interval oracle covers the heat equation only");
    for (int i = 0; i < family.size(); ++i) {
      const std::span<const double> c(family.coeffs.col(i).data(), static_cast<std::size_t>(fs.dim()));
      Eigen::MatrixXd t(grid.points.cols(), static_cast<Eigen::Index>(grid.times.size()));
      for (Eigen::Index p = 0; p < t.rows(); ++p)
        for (std::size_t n = 0; n < grid.times.size(); ++n)
          t(p, static_cast<Eigen::Index>(n)) = oracle::heat_analytic(c, grid.points(0, p), grid.times[n], pde.coeff);
      out.push_back(std::move(t));
    }
    return out;
  }

  if (pde.kind != oracle::PdeKind::allen_cahn)
    throw Error(ErrorKind::ConfigError, "sphere and torus oracles cover Allen-Cahn only");
  std::shared_ptr<const oracle::GalerkinBasis> basis;
  if (fs.geometry == model::Geometry::sphere) {
    const int g = oracle::sphere_oracle_grid(fs.degree);
    basis = oracle::sphere_galerkin(fs.degree, g, g);
  } else {
    bases::TorusGeometry geom = fs.torus;
    geom.n_theta = fs.n_theta;
    geom.n_phi = fs.n_phi;
    basis = oracle::torus_galerkin(geom, 0);
  }
  for (int i = 0; i < family.size(); ++i) {
    const Eigen::VectorXd c0 = fs.geometry == model::Geometry::sphere
                                   ? Eigen::VectorXd(family.coeffs.col(i))
                                   : Eigen::VectorXd(basis->analysis() * family.samples.col(i));
    const oracle::OracleSolution sol = opt.cache_dir.empty()
                                           ? oracle::imex_bdf4_solve(c0, pde, basis, opt.dt)
                                           : oracle::cached_solve(opt.cache_dir, c0, pde, basis, opt.dt);
    out.push_back(oracle::oracle_table(sol, grid.points, grid.times));
  }
  return out;
}

Tables predict(model::Model& m, const train::Family& family, const EvalGrid& grid) {
  Tables out;
  out.reserve(static_cast<std::size_t>(family.size()));
  for (int i = 0; i < family.size(); ++i) {
    const std::span<const double> f(family.samples.col(i).data(), static_cast<std::size_t>(family.samples.rows()));
    out.push_back(model::evaluate_table(m, f, grid.points, grid.times));
  }
  return out;
}

namespace {
void check_tables(const Tables& a, const Tables& b) {
  if (a.size() != b.size() || a.empty()) throw Error(ErrorKind::ShapeMismatch, "prediction and truth differ in size");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols())
      throw Error(ErrorKind::ShapeMismatch, "prediction and truth tables differ in shape");
}
}  // namespace

double mse_metric(const Tables& pred, const Tables& truth) {
  check_tables(pred, truth);
  double s = 0.0;
  double n = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    s += (pred[i] - truth[i]).squaredNorm();
    n += static_cast<double>(pred[i].size());
  }
  return s / n;
}

std::vector<double> error_vs_time(const Tables& pred, const Tables& truth) {
  check_tables(pred, truth);
  const Eigen::Index P = pred[0].rows();
  std::vector<double> e(static_cast<std::size_t>(pred[0].cols()), 0.0);
  for (std::size_t i = 0; i < pred.size(); ++i)
    for (Eigen::Index n = 0; n < pred[i].cols(); ++n)
      e[static_cast<std::size_t>(n)] += (pred[i].col(n) - truth[i].col(n)).norm() / static_cast<double>(P);
  return e;
}

std::vector<double> stability_metric(model::Model& m, const train::Family& family, const Eigen::MatrixXd& points,
                                     const std::vector<double>& times, double variance, std::uint64_t seed) {
  if (!(variance > 0)) throw Error(ErrorKind::ConfigError, "noise variance must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, std::sqrt(variance));
  std::vector<double> out(times.size(), 0.0);
  const Eigen::Index L = family.samples.rows();
  for (int i = 0; i < family.size(); ++i) {
    const Eigen::VectorXd f = family.samples.col(i);
    Eigen::VectorXd d(L);
    for (Eigen::Index j = 0; j < L; ++j) d[j] = noise(rng);
    const Eigen::VectorXd g = f + d;
    const Eigen::MatrixXd a = model::evaluate_table(m, std::span<const double>(f.data(), static_cast<std::size_t>(L)),
                                                    points, times);
    const Eigen::MatrixXd b = model::evaluate_table(m, std::span<const double>(g.data(), static_cast<std::size_t>(L)),
                                                    points, times);
    for (std::size_t n = 0; n < times.size(); ++n)
      out[n] += (b.col(static_cast<Eigen::Index>(n)) - a.col(static_cast<Eigen::Index>(n))).norm() / d.norm();
  }
  for (double& v : out) v /= family.size();
  return out;
}

}  // namespace spinn::eval

#include "spinn/oracle/oracle.hpp"

#include "spinn/bases/sphere.hpp"
#include "spinn/common/binary_io.hpp"
#include "spinn/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace spinn::oracle {

namespace {
constexpr double kPi = std::numbers::pi;
}

double heat_analytic(std::span<const double> coeffs, double x, double t, double alpha) {
  double s = 0.0;
  for (std::size_t k = 1; k <= coeffs.size(); ++k) {
    const double kk = static_cast<double>(k);
    s += std::exp(-4.0 * kPi * kPi * kk * kk * alpha * t) * coeffs[k - 1] * std::sin(2.0 * kPi * kk * x);
  }
  return s;
}

std::uint64_t GalerkinBasis::hash() const {
  io::Fnv1a h;
  h.add(describe());
  h.add(std::span<const double>(eigenvalues_.data(), static_cast<std::size_t>(eigenvalues_.size())));
  return h.value();
}

namespace {

class SphereGalerkin final : public GalerkinBasis {
 public:
  SphereGalerkin(int degree, int n_theta, int n_phi) : spec_{degree, n_theta, n_phi} {
    const bases::SphereTransform tr(spec_);
    synthesis_ = tr.design();
    analysis_ = tr.matrix();
    eigenvalues_.resize(spec_.count());
    for (int i = 0; i < spec_.count(); ++i) {
      const int l = bases::sph_degree_order(i).first;
      eigenvalues_[i] = l * (l + 1.0);
    }
    nodes_.resize(2, spec_.samples());
    for (int j = 0; j < n_theta; ++j)
      for (int k = 0; k < n_phi; ++k) {
        nodes_(0, j * n_phi + k) = spec_.theta(j);
        nodes_(1, j * n_phi + k) = spec_.phi(k);
      }
  }

  [[nodiscard]] Eigen::MatrixXd design_at(const Eigen::MatrixXd& points) const override {
    if (points.rows() != 2) throw Error(ErrorKind::ShapeMismatch, "sphere points are (theta, phi)");
    Eigen::MatrixXd d(points.cols(), count());
    for (Eigen::Index p = 0; p < points.cols(); ++p)
      for (int i = 0; i < count(); ++i) {
        const auto [l, m] = bases::sph_degree_order(i);
        d(p, i) = bases::real_sph_harm(l, m, points(0, p), points(1, p));
      }
    return d;
  }

  [[nodiscard]] std::string describe() const override {
    std::ostringstream s;
    s << "sphere_sh degree=" << spec_.degree << " grid=" << spec_.n_theta << "x" << spec_.n_phi;
    return s.str();
  }

 private:
  bases::SphereBasisSpec spec_;
};

class TorusGalerkin final : public GalerkinBasis {
 public:
  TorusGalerkin(const bases::TorusGeometry& geom, int K)
      : basis_(bases::torus_eigenbasis(geom, K > 0 ? K : geom.vertex_count())) {
    eigenvalues_ = basis_.eigenvalues;
    synthesis_ = basis_.vectors;
    analysis_ = basis_.projector();
    nodes_.resize(2, geom.vertex_count());
    for (int i = 0; i < geom.n_theta; ++i)
      for (int k = 0; k < geom.n_phi; ++k) {
        nodes_(0, i * geom.n_phi + k) = geom.theta(i);
        nodes_(1, i * geom.n_phi + k) = geom.phi(k);
      }
  }

  [[nodiscard]] Eigen::MatrixXd design_at(const Eigen::MatrixXd& points) const override {
    if (points.rows() != 2) throw Error(ErrorKind::ShapeMismatch, "torus points are (theta, phi)");
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(points.cols(), count());
    for (Eigen::Index p = 0; p < points.cols(); ++p) {
      const bases::P1Stencil s = bases::torus_locate(basis_.geom, points(0, p), points(1, p));
      for (int v = 0; v < 3; ++v) d.row(p) += s.weights[static_cast<std::size_t>(v)] * synthesis_.row(s.nodes[static_cast<std::size_t>(v)]);
    }
    return d;
  }

  [[nodiscard]] std::string describe() const override {
    std::ostringstream s;
    s << "torus_fem R=" << basis_.geom.R << " r=" << basis_.geom.r << " grid=" << basis_.geom.n_theta << "x"
      << basis_.geom.n_phi << " K=" << count();
    return s.str();
  }

 private:
  bases::EigenBasis basis_;
};

}  // namespace

std::shared_ptr<const GalerkinBasis> sphere_galerkin(int degree, int n_theta, int n_phi) {
  return std::make_shared<SphereGalerkin>(degree, n_theta, n_phi);
}

std::shared_ptr<const GalerkinBasis> torus_galerkin(const bases::TorusGeometry& geom, int K) {
  geom.validate();
  return std::make_shared<TorusGalerkin>(geom, K);
}

int sphere_oracle_grid(int degree) { return std::max(20, 2 * degree + 2); }

int OracleSolution::step_index(double t) const {
  const double pos = t / dt;
  const double idx = std::round(pos);
  if (!std::isfinite(pos) || idx < 0 || idx >= steps() || std::abs(pos - idx) > 0.5 + 1e-9)
    throw Error(ErrorKind::TimeOutOfRange, "time " + std::to_string(t) + " is outside the stored trajectory");
  return static_cast<int>(idx);
}

namespace {

Eigen::VectorXd reaction_coeffs(const GalerkinBasis& b, const PdeSpec& pde, const Eigen::VectorXd& c) {
  Eigen::VectorXd u = b.synthesis() * c;
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = pde.reaction(u[i]);
  return b.analysis() * u;
}

}  // namespace

OracleSolution imex_bdf4_solve(const Eigen::VectorXd& coeffs0, const PdeSpec& pde,
                               std::shared_ptr<const GalerkinBasis> basis, double dt, SolverOptions opt) {
  pde.validate();
  if (!basis) throw Error(ErrorKind::ConfigError, "oracle needs a basis");
  if (!(dt > 0.0) || dt > pde.T) throw Error(ErrorKind::ConfigError, "oracle dt must lie in (0, T]");
  if (coeffs0.size() != basis->count()) throw Error(ErrorKind::ShapeMismatch, "initial coefficients do not match the basis");
  if (!coeffs0.allFinite()) throw Error(ErrorKind::NonFiniteCoefficient, "initial coefficients are not finite");
  if (opt.startup_substeps < 1) throw Error(ErrorKind::ConfigError, "startup needs at least one substep");

  const bool reactive = opt.nonlinear && pde.kind == PdeKind::allen_cahn;
  const Eigen::VectorXd decay = -pde.coeff * basis->eigenvalues();
  const auto n_steps = static_cast<int>(std::floor(pde.T / dt + 1e-9)) + 1;
  const double limit = opt.blowup * std::max(1.0, coeffs0.norm());

  OracleSolution sol;
  sol.basis = basis;
  sol.pde = pde;
  sol.dt = dt;
  sol.coeffs.resize(basis->count(), n_steps);
  sol.coeffs.col(0) = coeffs0;
  {
    std::ostringstream s;
    s << "imex_bdf4 startup=rk4x" << opt.startup_substeps << " dt=" << dt << " steps=" << n_steps - 1
      << " nonlinear=" << (reactive ? 1 : 0) << " basis=" << basis->describe();
    sol.scheme = s.str();
  }

  auto nonlinear = [&](const Eigen::VectorXd& c) -> Eigen::VectorXd {
    return reactive ? reaction_coeffs(*basis, pde, c) : Eigen::VectorXd::Zero(c.size());
  };
  auto check = [&](const Eigen::VectorXd& c, int step) {
    if (!c.allFinite())
      throw Error(ErrorKind::NonFiniteCoefficient, "non-finite coefficient at step " + std::to_string(step));
    if (c.norm() > limit) throw Error(ErrorKind::Instability, "coefficient blow-up at step " + std::to_string(step));
  };

  // Startup: u1..u3 by RK4 on c' = decay .* c + N(c).
  std::vector<Eigen::VectorXd> hist;  // reaction terms N(u_n)
  hist.push_back(nonlinear(coeffs0));
  auto rhs = [&](const Eigen::VectorXd& c) -> Eigen::VectorXd { return decay.cwiseProduct(c) + nonlinear(c); };
  const double h = dt / opt.startup_substeps;
  for (int n = 1; n < std::min(4, n_steps); ++n) {
    Eigen::VectorXd c = sol.coeffs.col(n - 1);
    for (int s = 0; s < opt.startup_substeps; ++s) {
      const Eigen::VectorXd k1 = rhs(c);
      const Eigen::VectorXd k2 = rhs(c + 0.5 * h * k1);
      const Eigen::VectorXd k3 = rhs(c + 0.5 * h * k2);
      const Eigen::VectorXd k4 = rhs(c + h * k3);
      c += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    check(c, n);
    sol.coeffs.col(n) = c;
    hist.push_back(nonlinear(c));
  }

  // (25/12) u+ - 4u + 3u- - (4/3)u-- + (1/4)u--- = dt (decay u+ + 4N - 6N- + 4N-- - N---)
  const Eigen::ArrayXd denom = 25.0 / 12.0 - dt * decay.array();
  for (int n = 4; n < n_steps; ++n) {
    const auto u = [&](int back) { return sol.coeffs.col(n - back); };
    const auto N = [&](int back) -> const Eigen::VectorXd& { return hist[static_cast<std::size_t>(n - back)]; };
    const Eigen::VectorXd rhs_vec = 4.0 * u(1) - 3.0 * u(2) + (4.0 / 3.0) * u(3) - 0.25 * u(4) +
                                    dt * (4.0 * N(1) - 6.0 * N(2) + 4.0 * N(3) - N(4));
    const Eigen::VectorXd next = (rhs_vec.array() / denom).matrix();
    check(next, n);
    sol.coeffs.col(n) = next;
    hist.push_back(nonlinear(next));
  }
  return sol;
}

double oracle_evaluate(const OracleSolution& sol, std::span<const double> point, double t) {
  const int idx = sol.step_index(t);
  const Eigen::MatrixXd p = Eigen::Map<const Eigen::VectorXd>(point.data(), static_cast<Eigen::Index>(point.size()));
  return (sol.basis->design_at(p) * sol.coeffs.col(idx))(0, 0);
}

Eigen::MatrixXd oracle_table(const OracleSolution& sol, const Eigen::MatrixXd& points, std::span<const double> times) {
  const Eigen::MatrixXd d = sol.basis->design_at(points);
  Eigen::MatrixXd c(sol.coeffs.rows(), static_cast<Eigen::Index>(times.size()));
  for (std::size_t j = 0; j < times.size(); ++j) c.col(static_cast<Eigen::Index>(j)) = sol.coeffs.col(sol.step_index(times[j]));
  return d * c;
}

std::uint64_t oracle_key(const Eigen::VectorXd& coeffs0, const PdeSpec& pde, const GalerkinBasis& basis, double dt,
                         const SolverOptions& opt) {
  io::Fnv1a h;
  h.add(to_string(pde.kind)).add(pde.coeff).add(pde.T).add(model::to_string(pde.geometry));
  h.add(basis.hash()).add(dt).add(std::uint64_t(opt.nonlinear)).add(std::uint64_t(opt.startup_substeps)).add(opt.blowup);
  h.add(std::span<const double>(coeffs0.data(), static_cast<std::size_t>(coeffs0.size())));
  return h.value();
}

OracleSolution cached_solve(const std::filesystem::path& dir, const Eigen::VectorXd& coeffs0, const PdeSpec& pde,
                            std::shared_ptr<const GalerkinBasis> basis, double dt, SolverOptions opt) {
  const std::uint64_t key = oracle_key(coeffs0, pde, *basis, dt, opt);
  const auto path = dir / ("oracle_" + io::hex64(key) + ".bin");
  if (std::filesystem::exists(path)) {
    try {
      auto r = io::BinaryReader::load(path);
      r.expect_magic("SPNNORCL");
      if (r.u32() == 1 && r.u64() == key && r.f64() == dt) {
        const auto K = r.u32(), steps = r.u32();
        OracleSolution sol;
        sol.basis = basis;
        sol.pde = pde;
        sol.dt = dt;
        sol.coeffs = r.matrix_row_major(steps, K).transpose();
        sol.scheme = "cached " + io::hex64(key);
        if (r.at_end() && static_cast<int>(K) == basis->count()) return sol;
      }
    } catch (const Error&) {
      // rebuild below
    }
  }
  OracleSolution sol = imex_bdf4_solve(coeffs0, pde, std::move(basis), dt, opt);
  io::BinaryWriter w;
  w.bytes("SPNNORCL");
  w.u32(1);
  w.u64(key);
  w.f64(dt);
  w.u32(static_cast<std::uint32_t>(sol.coeffs.rows()));
  w.u32(static_cast<std::uint32_t>(sol.coeffs.cols()));
  w.matrix_row_major(sol.coeffs.transpose());
  std::filesystem::create_directories(dir);
  w.save(path);
  return sol;
}

}  // namespace spinn::oracle

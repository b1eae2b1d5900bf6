#include "spinn/theorem/theorem_nets.hpp"

#include "spinn/common/error.hpp"

#include <unsupported/Eigen/LevenbergMarquardt>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace spinn::theorem {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::string_view to_string(TargetKind k) {
  switch (k) {
    case TargetKind::mul2: return "mul2";
    case TargetKind::exp_decay: return "exp_decay";
    case TargetKind::sine: return "sine";
    case TargetKind::constant: return "constant";
  }
  return "?";
}

double ComponentNetSpec::target_value(std::span<const double> x) const {
  switch (target) {
    case TargetKind::mul2: return x[0] * x[1];
    case TargetKind::exp_decay: return std::exp(-4.0 * kPi * kPi * k * k * alpha * x[0]);
    case TargetKind::sine: return std::sin(2.0 * kPi * k * x[0]);
    case TargetKind::constant: return value;
  }
  return 0.0;
}

std::string ComponentNetSpec::label() const {
  std::ostringstream s;
  s << to_string(target);
  if (target == TargetKind::mul2) s << "[box=" << box << "]";
  if (target == TargetKind::exp_decay) s << "[k=" << k << ",alpha=" << alpha << "]";
  if (target == TargetKind::sine) s << "[k=" << k << "]";
  if (target == TargetKind::constant) s << "[" << value << "]";
  return s.str();
}

double TanhNet::operator()(std::span<const double> x) const {
  const Eigen::Map<const Eigen::VectorXd> in(x.data(), static_cast<Eigen::Index>(x.size()));
  return a.dot((v * in + b).array().tanh().matrix()) + c;
}

std::size_t TanhNet::param_count() const {
  return static_cast<std::size_t>(v.size() + b.size() + a.size() + 1);
}

namespace {

// Domain box per input: [lo, hi].
std::pair<double, double> domain(const ComponentNetSpec& s) {
  if (s.target == TargetKind::mul2) return {-s.box, s.box};
  return {0.0, 1.0};
}

Eigen::MatrixXd grid_points(const ComponentNetSpec& spec, int per_axis_2d, int count_1d) {
  const auto [lo, hi] = domain(spec);
  if (spec.input_dim() == 1) {
    Eigen::MatrixXd p(1, count_1d);
    for (int i = 0; i < count_1d; ++i) p(0, i) = lo + (hi - lo) * i / (count_1d - 1);
    return p;
  }
  Eigen::MatrixXd p(2, per_axis_2d * per_axis_2d);
  for (int i = 0; i < per_axis_2d; ++i)
    for (int j = 0; j < per_axis_2d; ++j) {
      p(0, i * per_axis_2d + j) = lo + (hi - lo) * i / (per_axis_2d - 1);
      p(1, i * per_axis_2d + j) = lo + (hi - lo) * j / (per_axis_2d - 1);
    }
  return p;
}

Eigen::VectorXd targets(const ComponentNetSpec& spec, const Eigen::MatrixXd& x) {
  Eigen::VectorXd f(x.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i)
    f[i] = spec.target_value(std::span<const double>(x.col(i).data(), static_cast<std::size_t>(x.rows())));
  return f;
}

// Flat parameter layout: v (n x d, column-major) | b | a | c.
struct Layout {
  int n, d;
  [[nodiscard]] int size() const { return n * d + 2 * n + 1; }
};

TanhNet unpack(const Eigen::VectorXd& p, const Layout& L) {
  TanhNet net;
  net.v = Eigen::Map<const Eigen::MatrixXd>(p.data(), L.n, L.d);
  net.b = p.segment(L.n * L.d, L.n);
  net.a = p.segment(L.n * L.d + L.n, L.n);
  net.c = p[L.size() - 1];
  return net;
}

Eigen::VectorXd pack(const TanhNet& net, const Layout& L) {
  Eigen::VectorXd p(L.size());
  p.head(L.n * L.d) = Eigen::Map<const Eigen::VectorXd>(net.v.data(), L.n * L.d);
  p.segment(L.n * L.d, L.n) = net.b;
  p.segment(L.n * L.d + L.n, L.n) = net.a;
  p[L.size() - 1] = net.c;
  return p;
}

struct FitFunctor : Eigen::DenseFunctor<double> {
  FitFunctor(const Eigen::MatrixXd& x, const Eigen::VectorXd& f, Layout L)
      : Eigen::DenseFunctor<double>(L.size(), static_cast<int>(x.cols())), x_(x), f_(f), L_(L) {}

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
    const TanhNet net = unpack(p, L_);
    const Eigen::MatrixXd h = ((net.v * x_).colwise() + net.b).array().tanh().matrix();
    r = (h.transpose() * net.a).array() + net.c;
    r -= f_;
    return 0;
  }

  int df(const Eigen::VectorXd& p, Eigen::MatrixXd& J) const {
    const TanhNet net = unpack(p, L_);
    const Eigen::MatrixXd h = ((net.v * x_).colwise() + net.b).array().tanh().matrix();
    const Eigen::Index N = x_.cols();
    J.resize(N, L_.size());
    for (int j = 0; j < L_.n; ++j) {
      const Eigen::ArrayXd dz = net.a[j] * (1.0 - h.row(j).transpose().array().square());
      for (int d = 0; d < L_.d; ++d) J.col(d * L_.n + j) = (dz * x_.row(d).transpose().array()).matrix();
      J.col(L_.n * L_.d + j) = dz.matrix();
      J.col(L_.n * L_.d + L_.n + j) = h.row(j).transpose();
    }
    J.col(L_.size() - 1).setOnes();
    return 0;
  }

 private:
  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& f_;
  Layout L_;
};

double sup_error(const ComponentNetSpec& spec, const std::function<double(std::span<const double>)>& fn) {
  const Eigen::MatrixXd g = dense_grid(spec);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < g.cols(); ++i) {
    const std::span<const double> x(g.col(i).data(), static_cast<std::size_t>(g.rows()));
    worst = std::max(worst, std::abs(fn(x) - spec.target_value(x)));
  }
  return worst;
}

}  // namespace

Eigen::MatrixXd dense_grid(const ComponentNetSpec& spec) { return grid_points(spec, 100, 10000); }

FittedComponent fit_component_net(const ComponentNetSpec& spec, std::uint64_t seed, const TanhNet* warm) {
  if (spec.n < 4) throw Error(ErrorKind::FitDiverged, "component nets need at least 4 hidden units");
  if (spec.k < 1 && spec.target != TargetKind::mul2 && spec.target != TargetKind::constant)
    throw Error(ErrorKind::FitDiverged, "component frequency must be positive");
  const Layout L{spec.n, spec.input_dim()};
  const auto [lo, hi] = domain(spec);
  const double width = hi - lo;

  // Training samples: 41 x 41 in 2-D, 2001 points in 1-D.
  const Eigen::MatrixXd x = grid_points(spec, 41, 2001);
  const Eigen::VectorXd f = targets(spec, x);

  // Units with random orientation and slope, centred inside the domain.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  TanhNet net;
  net.v.resize(L.n, L.d);
  net.b.resize(L.n);
  int first = 0;
  if (warm && warm->v.cols() == L.d && warm->v.rows() <= L.n) {
    first = static_cast<int>(warm->v.rows());
    net.v.topRows(first) = warm->v;
    net.b.head(first) = warm->b;
  }
  for (int j = first; j < L.n; ++j) {
    Eigen::VectorXd dir(L.d);
    if (L.d == 1) {
      dir[0] = unit(rng) < 0.5 ? -1.0 : 1.0;
    } else {
      const double ang = 2.0 * kPi * unit(rng);
      dir << std::cos(ang), std::sin(ang);
    }
    const double slope = (1.0 + 5.0 * unit(rng)) * 2.0 / width;
    Eigen::VectorXd centre(L.d);
    for (int d = 0; d < L.d; ++d) centre[d] = lo + width * unit(rng);
    net.v.row(j) = slope * dir.transpose();
    net.b[j] = -slope * dir.dot(centre);
  }
  // Output layer by linear least squares. With a warm start the previous
  // solution is feasible, so the training residual cannot grow.
  Eigen::MatrixXd H(x.cols(), L.n + 1);
  H.leftCols(L.n) = ((net.v * x).colwise() + net.b).array().tanh().matrix().transpose();
  H.col(L.n).setOnes();
  const Eigen::VectorXd out = H.colPivHouseholderQr().solve(f);
  net.a = out.head(L.n);
  net.c = out[L.n];

  FitFunctor functor(x, f, L);
  Eigen::LevenbergMarquardt<FitFunctor> lm(functor);
  lm.setMaxfev(400);
  lm.setXtol(1e-15);
  lm.setFtol(1e-15);
  Eigen::VectorXd p = pack(net, L);
  lm.minimize(p);
  if (!p.allFinite()) throw Error(ErrorKind::FitDiverged, "component fit produced non-finite weights");

  FittedComponent fc;
  fc.spec = spec;
  fc.net = unpack(p, L);
  const TanhNet& fitted = fc.net;
  fc.max_error = sup_error(spec, [&](std::span<const double> in) { return fitted(in); });
  if (!std::isfinite(fc.max_error)) throw Error(ErrorKind::FitDiverged, "component fit error is not finite");
  return fc;
}

Component as_component(const FittedComponent& f) {
  Component c;
  c.spec = f.spec;
  c.eval = [net = f.net](std::span<const double> x) { return net(x); };
  c.max_error = f.max_error;
  c.param_count = f.net.param_count();
  return c;
}

Component exact_component(const ComponentNetSpec& spec) {
  Component c;
  c.spec = spec;
  c.eval = [spec](std::span<const double> x) { return spec.target_value(x); };
  return c;
}

Eigen::VectorXd AssembledBlock::decay(double t, std::span<const double> c) const {
  if (static_cast<int>(c.size()) != K_) throw Error(ErrorKind::ShapeMismatch, "decay input must have K entries");
  Eigen::VectorXd out(K_);
  const std::array<double, 1> tin{t};
  for (int k = 1; k <= K_; ++k) {
    const std::array<double, 2> m{c[static_cast<std::size_t>(k - 1)], parts_.decays.at(k).eval(tin)};
    out[k - 1] = parts_.mul_decay->eval(m);
  }
  return out;
}

double AssembledBlock::reconstruct(std::span<const double> a, double x) const {
  if (static_cast<int>(a.size()) != K_) throw Error(ErrorKind::ShapeMismatch, "reconstruction input must have K entries");
  if (!parts_.mul_recon) throw Error(ErrorKind::MissingComponent, "no reconstruction components assembled");
  const std::array<double, 1> xin{x};
  double s = 0.0;
  for (int k = 1; k <= K_; ++k) {
    const std::array<double, 2> m{a[static_cast<std::size_t>(k - 1)], parts_.sines.at(k).eval(xin)};
    s += parts_.mul_recon->eval(m);
  }
  return s;
}

std::size_t AssembledBlock::decay_param_count() const {
  std::size_t n = static_cast<std::size_t>(K_) * parts_.mul_decay->param_count;
  for (const auto& [k, e] : parts_.decays)
    if (k <= K_) n += e.param_count;
  return n;
}

std::size_t AssembledBlock::recon_param_count() const {
  if (!parts_.mul_recon) return 0;
  std::size_t n = static_cast<std::size_t>(K_) * parts_.mul_recon->param_count;
  for (const auto& [k, s] : parts_.sines)
    if (k <= K_) n += s.param_count;
  return n;
}

double AssembledBlock::decay_error_bound() const {
  double e = 0.0;
  for (int k = 1; k <= K_; ++k) e = std::max(e, parts_.decays.at(k).max_error);
  return parts_.mul_decay->max_error + e;
}

double AssembledBlock::recon_error_bound() const {
  if (!parts_.mul_recon) return 0.0;
  double e = 0.0;
  for (int k = 1; k <= K_; ++k) e = std::max(e, parts_.sines.at(k).max_error);
  return K_ * (parts_.mul_recon->max_error + e);
}

AssembledBlock assemble_theorem_blocks(TheoremComponents components, int K) {
  if (K < 1) throw Error(ErrorKind::MissingComponent, "assembly needs K >= 1");
  if (!components.mul_decay) throw Error(ErrorKind::MissingComponent, "multiplication net M is missing");
  for (int k = 1; k <= K; ++k)
    if (!components.decays.count(k)) throw Error(ErrorKind::MissingComponent, "decay net E_" + std::to_string(k) + " is missing");
  if (!components.sines.empty() || components.mul_recon) {
    if (!components.mul_recon) throw Error(ErrorKind::MissingComponent, "reconstruction multiplication net is missing");
    for (int k = 1; k <= K; ++k)
      if (!components.sines.count(k)) throw Error(ErrorKind::MissingComponent, "sine net S_" + std::to_string(k) + " is missing");
  }
  return AssembledBlock(std::move(components), K);
}

Eigen::VectorXd exact_decay(double t, std::span<const double> c, double alpha) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(c.size()));
  for (std::size_t k = 1; k <= c.size(); ++k) {
    const double kk = static_cast<double>(k);
    out[static_cast<Eigen::Index>(k - 1)] = c[k - 1] * std::exp(-4.0 * kPi * kPi * kk * kk * alpha * t);
  }
  return out;
}

LadderReport verify_decay(const ComponentNetSpec& target, std::span<const int> ladder, std::uint64_t seed) {
  LadderReport rep;
  std::optional<TanhNet> prev;
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (i > 0 && ladder[i] <= ladder[i - 1]) throw Error(ErrorKind::ConfigError, "ladder must be ascending");
    ComponentNetSpec s = target;
    s.n = ladder[i];
    const FittedComponent f = fit_component_net(s, seed, prev ? &*prev : nullptr);
    rep.rows.push_back({s.n, s.label(), f.max_error});
    prev = f.net;
  }
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    if (rep.rows[i].max_error > 1.1 * rep.rows[i - 1].max_error) rep.monotone = false;
  if (!rep.rows.empty()) rep.decayed_tenfold = rep.rows.back().max_error <= rep.rows.front().max_error / 10.0;
  return rep;
}

void write_ladder_csv(const std::filesystem::path& path, const std::vector<LadderRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << "n,target,max_error\n";
  out.precision(17);
  for (const LadderRow& r : rows) out << r.n << ",\"" << r.target << "\"," << r.max_error << "\n";
}

}  // namespace spinn::theorem

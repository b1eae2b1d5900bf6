#include "spinn/model/model.hpp"

#include "spinn/common/error.hpp"
#include "spinn/nn/checkpoint.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace spinn::model {

Batch Batch::select(std::span<const std::size_t> index) const {
  Batch out;
  const auto n = static_cast<Eigen::Index>(index.size());
  out.samples.resize(samples.rows(), n);
  out.points.resize(points.rows(), n);
  out.t.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto src = static_cast<Eigen::Index>(index[static_cast<std::size_t>(j)]);
    out.samples.col(j) = samples.col(src);
    out.points.col(j) = points.col(src);
    out.t[j] = t[src];
  }
  return out;
}

Id point_node(Graph& g, const ad::Mat& points, Direction dir) {
  if (dir != Direction::coord0 && dir != Direction::coord1) return g.constant(points);
  const int row = dir == Direction::coord0 ? 0 : 1;
  if (row >= points.rows()) throw Error(ErrorKind::ShapeMismatch, "point has no second coordinate");
  ad::Mat d1 = ad::Mat::Zero(points.rows(), points.cols());
  d1.row(row).setOnes();
  return g.seeded(points, std::move(d1), ad::Mat::Zero(points.rows(), points.cols()));
}

Id time_node(Graph& g, const Eigen::RowVectorXd& t, Direction dir) {
  return dir == Direction::time ? g.variable(t) : g.constant(ad::Mat(t));
}

namespace {

void check_batch(const ModelInfo& info, const Batch& b) {
  const auto n = b.t.size();
  if (b.samples.rows() != info.samples || b.samples.cols() != n)
    throw Error(ErrorKind::ShapeMismatch, "batch samples must be " + std::to_string(info.samples) + " x batch");
  if (b.points.rows() != point_dim(info.geometry) || b.points.cols() != n)
    throw Error(ErrorKind::ShapeMismatch, "batch points have the wrong shape");
}

ModelInfo checked(ModelInfo info) {
  if (info.samples < 1) throw Error(ErrorKind::InvalidShape, "model needs at least one sample");
  if (info.geometry == Geometry::torus) info.torus.validate();
  return info;
}

}  // namespace

// ---- spectral model ----

SpectralPinnModel::SpectralPinnModel(ModelInfo info, const SpectralSpec& spec, std::uint64_t seed)
    : Model(checked(std::move(info))), spec_(spec) {
  spec_.blocks.geometry = info_.geometry;
  spec_.blocks.samples = info_.samples;
  transform_ = build_transformation(spec_.transform, spec_.blocks, mix_seed(seed, 11));
  step_ = build_time_stepping(spec_.step, spec_.blocks, mix_seed(seed, 12));
  recon_ = build_reconstruction(spec_.recon, spec_.blocks, mix_seed(seed, 13));
  if (transform_->output_width() != spec_.blocks.K)
    throw Error(ErrorKind::InvalidShape, "transformation width disagrees with K");
}

Id SpectralPinnModel::transform(Graph& g, const ad::Mat& samples) {
  return transform_->forward(g, g.constant(samples));
}

Id SpectralPinnModel::coefficients(Graph& g, const Batch& batch, bool seed_time) {
  check_batch(info_, batch);
  const Id c = transform(g, batch.samples);
  Id nl = -1;
  if (step_->needs_nonlinear()) {
    const ad::Mat f = batch.samples;
    nl = transform(g, f - f.cwiseProduct(f).cwiseProduct(f));
  }
  return step_->forward(g, c, nl, time_node(g, batch.t, seed_time ? Direction::time : Direction::none));
}

std::vector<Id> SpectralPinnModel::forward(Graph& g, const Batch& batch, std::span<const Direction> dirs) {
  const bool any_time = std::find(dirs.begin(), dirs.end(), Direction::time) != dirs.end();
  const Id d = coefficients(g, batch, any_time);
  Id d_value = g.is_jet(d) ? -1 : d;
  Id fixed_points = -1;
  std::vector<Id> out;
  out.reserve(dirs.size());
  for (Direction dir : dirs) {
    Id a = d;
    if (dir != Direction::time) {
      if (d_value < 0) d_value = g.value_of(d);
      a = d_value;
    }
    Id p;
    if (dir == Direction::coord0 || dir == Direction::coord1) {
      p = point_node(g, batch.points, dir);
    } else {
      if (fixed_points < 0) fixed_points = g.constant(batch.points);
      p = fixed_points;
    }
    out.push_back(recon_->forward(g, a, p));
  }
  return out;
}

std::vector<NamedParams> SpectralPinnModel::params() {
  std::vector<NamedParams> out = transform_->params();
  for (auto& p : step_->params()) out.push_back(p);
  for (auto& p : recon_->params()) out.push_back(p);
  return out;
}

std::size_t SpectralPinnModel::param_count() const {
  return transform_->param_count() + step_->param_count() + recon_->param_count();
}

std::vector<nn::ParamSlot> SpectralPinnModel::slots() {
  std::vector<nn::ParamSlot> out;
  for (auto& p : transform_->params()) out.push_back({"transformation", p.params});
  for (auto& p : step_->params()) out.push_back({"time_stepping", p.params});
  for (auto& p : recon_->params()) out.push_back({"reconstruction", p.params});
  return out;
}

std::string SpectralPinnModel::describe() const {
  std::ostringstream s;
  s << "spectral geometry=" << to_string(info_.geometry) << " transform=" << to_string(spec_.transform)
    << " step=" << to_string(spec_.step) << " recon=" << to_string(spec_.recon) << " K=" << spec_.blocks.K
    << " L=" << info_.samples;
  return s.str();
}

// ---- naive model ----

NaiveModel::NaiveModel(ModelInfo info, const NaiveSpec& spec, std::uint64_t seed)
    : Model(checked(std::move(info))),
      spec_(spec),
      net_(nn::init_params(mlp_shape(info_.samples + point_dim(info_.geometry) + 1, 1, spec.layers, spec.hidden),
                           mix_seed(seed, 21))) {}

std::vector<Id> NaiveModel::forward(Graph& g, const Batch& batch, std::span<const Direction> dirs) {
  check_batch(info_, batch);
  const int L = info_.samples, dim = point_dim(info_.geometry);
  ad::Mat x(L + dim + 1, batch.size());
  x.topRows(L) = batch.samples;
  x.middleRows(L, dim) = batch.points;
  x.bottomRows(1) = batch.t;
  std::vector<Id> out;
  Id fixed = -1;
  for (Direction dir : dirs) {
    Id in;
    if (dir == Direction::none) {
      if (fixed < 0) fixed = g.constant(x);
      in = fixed;
    } else {
      const int row = dir == Direction::time ? L + dim : L + (dir == Direction::coord0 ? 0 : 1);
      if (dir == Direction::coord1 && dim < 2) throw Error(ErrorKind::ShapeMismatch, "point has no second coordinate");
      ad::Mat d1 = ad::Mat::Zero(x.rows(), x.cols());
      d1.row(row).setOnes();
      in = g.seeded(x, std::move(d1), ad::Mat::Zero(x.rows(), x.cols()));
    }
    out.push_back(net_.forward(g, in));
  }
  return out;
}

std::string NaiveModel::describe() const {
  std::ostringstream s;
  s << "naive geometry=" << to_string(info_.geometry) << " layers=" << spec_.layers
    << " input=" << net_.input_width() << " hidden=" << (spec_.hidden > 0 ? spec_.hidden : net_.input_width());
  return s.str();
}

// ---- evaluation helpers ----

namespace {

Batch single(const ModelInfo& info, std::span<const double> samples, std::span<const double> point, double t) {
  if (static_cast<int>(samples.size()) != info.samples)
    throw Error(ErrorKind::ShapeMismatch, "expected " + std::to_string(info.samples) + " samples");
  if (static_cast<int>(point.size()) != point_dim(info.geometry))
    throw Error(ErrorKind::ShapeMismatch, "point has the wrong dimension");
  Batch b;
  b.samples = Eigen::Map<const Eigen::VectorXd>(samples.data(), info.samples);
  b.points = Eigen::Map<const Eigen::VectorXd>(point.data(), static_cast<Eigen::Index>(point.size()));
  b.t = Eigen::RowVectorXd::Constant(1, t);
  return b;
}

ad::Jet2 jet_at(const Graph& g, Id id, Eigen::Index col) {
  if (!g.is_jet(id)) return ad::Jet2(g.value(id)(0, col));
  return {g.value(id)(0, col), g.d1(id)(0, col), g.d2(id)(0, col)};
}

}  // namespace

ad::Jet2 model_forward(Model& m, std::span<const double> samples, std::span<const double> point, double t,
                       Direction dir) {
  const Batch b = single(m.info(), samples, point, t);
  Graph g;
  const std::array<Direction, 1> dirs{dir};
  const Id out = m.forward(g, b, dirs)[0];
  return jet_at(g, out, 0);
}

LaplaceWeights laplace_weights(const ModelInfo& info, const ad::Mat& points) {
  const auto n = points.cols();
  LaplaceWeights w;
  for (int i = 0; i < 2; ++i) {
    w.d1w[i] = Eigen::RowVectorXd::Zero(n);
    w.d2w[i] = Eigen::RowVectorXd::Zero(n);
  }
  switch (info.geometry) {
    case Geometry::interval: w.d2w[0].setOnes(); break;
    case Geometry::sphere:
      for (Eigen::Index j = 0; j < n; ++j) {
        const double s = std::sin(points(0, j));
        if (std::abs(s) < 1e-6) throw Error(ErrorKind::PoleSingularity, "Laplacian requested at a pole");
        w.d2w[0][j] = 1.0;
        w.d1w[0][j] = std::cos(points(0, j)) / s;
        w.d2w[1][j] = 1.0 / (s * s);
      }
      break;
    case Geometry::torus: {
      const double R = info.torus.R, r = info.torus.r;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double ring = R + r * std::cos(points(0, j));
        w.d2w[0][j] = 1.0 / (r * r);
        w.d1w[0][j] = -std::sin(points(0, j)) / (r * ring);
        w.d2w[1][j] = 1.0 / (ring * ring);
      }
      break;
    }
  }
  return w;
}

Derivatives model_derivatives(Model& m, std::span<const double> samples, std::span<const double> point, double t) {
  const Batch b = single(m.info(), samples, point, t);
  const LaplaceWeights w = laplace_weights(m.info(), b.points);
  const int dim = point_dim(m.info().geometry);
  std::vector<Direction> dirs{Direction::time, Direction::coord0};
  if (dim == 2) dirs.push_back(Direction::coord1);
  Graph g;
  const std::vector<Id> out = m.forward(g, b, dirs);
  Derivatives d;
  const ad::Jet2 ut = jet_at(g, out[0], 0);
  d.u = ut.v;
  d.u_t = ut.d1;
  for (int i = 0; i < dim; ++i) {
    const ad::Jet2 ux = jet_at(g, out[static_cast<std::size_t>(i + 1)], 0);
    d.laplacian += w.d1w[i][0] * ux.d1 + w.d2w[i][0] * ux.d2;
  }
  return d;
}

std::vector<double> reassemble_multi_eval(Model& m, std::span<const double> samples, double t,
                                          const ad::Mat& points) {
  const int dim = point_dim(m.info().geometry);
  if (points.rows() != dim) throw Error(ErrorKind::ShapeMismatch, "points have the wrong dimension");
  const auto n = points.cols();
  if (n == 0) return {};
  Graph g;
  auto* spectral = dynamic_cast<SpectralPinnModel*>(&m);
  Id out;
  if (spectral) {
    const std::vector<double> origin(static_cast<std::size_t>(dim), 0.0);
    const Batch b = single(m.info(), samples, origin, t);
    const Id d = spectral->coefficients(g, b, false);
    const Id a = g.gather_cols(d, std::vector<int>(static_cast<std::size_t>(n), 0));
    out = spectral->reconstruction().forward(g, a, g.constant(points));
  } else {
    Batch b;
    b.samples = Eigen::Map<const Eigen::VectorXd>(samples.data(), static_cast<Eigen::Index>(samples.size()))
                    .replicate(1, n);
    b.points = points;
    b.t = Eigen::RowVectorXd::Constant(n, t);
    const std::array<Direction, 1> dirs{Direction::none};
    out = m.forward(g, b, dirs)[0];
  }
  const ad::Mat& v = g.value(out);
  return {v.data(), v.data() + v.size()};
}

ad::Mat evaluate_table(Model& m, std::span<const double> samples, const ad::Mat& points,
                       std::span<const double> times) {
  const int dim = point_dim(m.info().geometry);
  if (points.rows() != dim) throw Error(ErrorKind::ShapeMismatch, "points have the wrong dimension");
  const auto P = points.cols();
  const auto T = static_cast<Eigen::Index>(times.size());
  ad::Mat table(P, T);
  if (P == 0 || T == 0) return table;
  const Eigen::Map<const Eigen::VectorXd> f(samples.data(), static_cast<Eigen::Index>(samples.size()));
  const Eigen::Index chunk = std::max<Eigen::Index>(1, 16384 / P);
  auto* spectral = dynamic_cast<SpectralPinnModel*>(&m);
  for (Eigen::Index t0 = 0; t0 < T; t0 += chunk) {
    const Eigen::Index nt = std::min(chunk, T - t0);
    Graph g(false);
    Id out;
    if (spectral) {
      Batch b;
      b.samples = f.replicate(1, nt);
      b.points = ad::Mat::Zero(dim, nt);
      b.t = Eigen::Map<const Eigen::RowVectorXd>(times.data() + t0, nt);
      const Id d = spectral->coefficients(g, b, false);
      std::vector<int> idx(static_cast<std::size_t>(P * nt));
      for (Eigen::Index j = 0; j < nt; ++j)
        for (Eigen::Index p = 0; p < P; ++p) idx[static_cast<std::size_t>(j * P + p)] = static_cast<int>(j);
      const Id a = g.gather_cols(d, std::move(idx));
      out = spectral->reconstruction().forward(g, a, g.constant(points.replicate(1, nt)));
    } else {
      Batch b;
      b.samples = f.replicate(1, P * nt);
      b.points = points.replicate(1, nt);
      b.t.resize(P * nt);
      for (Eigen::Index j = 0; j < nt; ++j) b.t.segment(j * P, P).setConstant(times[static_cast<std::size_t>(t0 + j)]);
      const std::array<Direction, 1> dirs{Direction::none};
      out = m.forward(g, b, dirs)[0];
    }
    const ad::Mat& v = g.value(out);
    table.middleCols(t0, nt) = Eigen::Map<const ad::Mat>(v.data(), P, nt);
  }
  return table;
}

void save_model(const std::filesystem::path& path, Model& m, const std::string& manifest) {
  nn::Checkpoint ck;
  ck.manifest = manifest.empty() ? m.describe() : manifest;
  for (const NamedParams& p : m.params()) ck.vectors.emplace_back(p.name, p.params->values);
  nn::save_checkpoint(path, ck);
}

void load_model_params(const std::filesystem::path& path, Model& m) {
  const nn::Checkpoint ck = nn::load_checkpoint(path);
  for (const NamedParams& p : m.params()) {
    const Eigen::VectorXd& v = ck.vector(p.name);
    if (v.size() != p.params->values.size())
      throw Error(ErrorKind::IoError, "checkpoint vector '" + p.name + "' has the wrong length");
    p.params->values = v;
  }
}

}  // namespace spinn::model

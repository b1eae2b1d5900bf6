#include "spinn/train/training.hpp"

#include "spinn/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace spinn::train {

using ad::Component;
using model::Direction;
using model::Graph;
using model::Id;

InitialBatch initial_batch(const TrainSet& set, std::span<const std::size_t> rows, std::span<const int> grid_index) {
  const Eigen::MatrixXd grid = family_grid(set.spec.family);
  InitialBatch b;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto P = static_cast<Eigen::Index>(grid_index.size());
  b.samples.resize(set.family.samples.rows(), n);
  b.points.resize(grid.rows(), P);
  b.targets.resize(P, n);
  for (Eigen::Index p = 0; p < P; ++p) b.points.col(p) = grid.col(grid_index[static_cast<std::size_t>(p)]);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]);
    b.samples.col(i) = set.family.samples.col(r);
    for (Eigen::Index p = 0; p < P; ++p) b.targets(p, i) = set.family.samples(grid_index[static_cast<std::size_t>(p)], r);
  }
  return b;
}

namespace {

// Column order of every (ic, point) table below: col = i * P + p.
std::vector<int> repeat_each(Eigen::Index n, Eigen::Index P) {
  std::vector<int> idx(static_cast<std::size_t>(n * P));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index p = 0; p < P; ++p) idx[static_cast<std::size_t>(i * P + p)] = static_cast<int>(i);
  return idx;
}

Eigen::MatrixXd tile_points(const Eigen::MatrixXd& points, Eigen::Index n) { return points.replicate(1, n); }

Eigen::RowVectorXd flat_targets(const Eigen::MatrixXd& targets) {
  return Eigen::Map<const Eigen::RowVectorXd>(targets.data(), targets.size());
}

void check_initial(const Model& m, const InitialBatch& b) {
  if (b.samples.rows() != m.info().samples) throw Error(ErrorKind::ShapeMismatch, "initial batch samples");
  if (b.points.rows() != model::point_dim(m.info().geometry))
    throw Error(ErrorKind::ShapeMismatch, "initial batch points do not match the geometry");
  if (b.targets.rows() != b.points.cols() || b.targets.cols() != b.samples.cols())
    throw Error(ErrorKind::ShapeMismatch, "initial batch targets must be points x ics");
}

// u(f_i, p, 0) for every pair as a 1 x (n P) node.
Id values_at_zero(Model& m, Graph& g, const InitialBatch& b) {
  const Eigen::Index n = b.samples.cols(), P = b.points.cols();
  if (auto* s = dynamic_cast<SpectralPinnModel*>(&m)) {
    model::Batch coeffs;
    coeffs.samples = b.samples;
    coeffs.points = Eigen::MatrixXd::Zero(b.points.rows(), n);
    coeffs.t = Eigen::RowVectorXd::Zero(n);
    const Id d = s->coefficients(g, coeffs, false);
    const Id a = g.gather_cols(d, repeat_each(n, P));
    return s->reconstruction().forward(g, a, g.constant(tile_points(b.points, n)));
  }
  model::Batch full;
  full.samples.resize(b.samples.rows(), n * P);
  for (Eigen::Index i = 0; i < n; ++i) full.samples.middleCols(i * P, P) = b.samples.col(i).replicate(1, P);
  full.points = tile_points(b.points, n);
  full.t = Eigen::RowVectorXd::Zero(n * P);
  const std::array<Direction, 1> dirs{Direction::none};
  return m.forward(g, full, dirs)[0];
}

// Mean squared difference of a 1 x N node against `target`, with optional backprop.
double mean_square_fit(Graph& g, Id out, const Eigen::RowVectorXd& target, LossOptions opt) {
  const Eigen::RowVectorXd diff = g.value(out).row(0) - target;
  const auto N = static_cast<double>(diff.size());
  if (diff.size() == 0) return 0.0;
  const double loss = diff.squaredNorm() / N;
  if (opt.backprop) {
    const std::array<Graph::Seed, 1> seeds{Graph::Seed{out, Component::value, (2.0 * opt.weight / N) * diff}};
    g.backward(seeds);
  }
  return loss;
}

}  // namespace

double loss_initial(Model& m, const InitialBatch& b, LossOptions opt) {
  check_initial(m, b);
  if (b.targets.size() == 0) return 0.0;
  Graph g(false);
  const Id out = values_at_zero(m, g, b);
  return mean_square_fit(g, out, flat_targets(b.targets), opt);
}

double loss_autoencode(SpectralPinnModel& m, const InitialBatch& b, LossOptions opt) {
  check_initial(m, b);
  if (b.targets.size() == 0) return 0.0;
  const Eigen::Index n = b.samples.cols(), P = b.points.cols();
  Graph g(false);
  const Id c = m.transform(g, b.samples);
  const Id a = g.gather_cols(c, repeat_each(n, P));
  const Id out = m.reconstruction().forward(g, a, g.constant(tile_points(b.points, n)));
  return mean_square_fit(g, out, flat_targets(b.targets), opt);
}

double loss_residual(Model& m, const model::Batch& b, const oracle::PdeSpec& pde, LossOptions opt) {
  pde.validate();
  const auto B = b.size();
  if (B == 0) return 0.0;
  const model::LaplaceWeights w = model::laplace_weights(m.info(), b.points);
  const int dim = model::point_dim(m.info().geometry);
  std::vector<Direction> dirs{Direction::time, Direction::coord0};
  if (dim == 2) dirs.push_back(Direction::coord1);
  Graph g(false);
  const std::vector<Id> out = m.forward(g, b, dirs);

  const Eigen::RowVectorXd u = g.value(out[0]).row(0);
  Eigen::RowVectorXd r = g.d1(out[0]).row(0);
  for (int i = 0; i < dim; ++i) {
    const Id o = out[static_cast<std::size_t>(i + 1)];
    r -= pde.coeff * (w.d1w[i].cwiseProduct(g.d1(o).row(0)) + w.d2w[i].cwiseProduct(g.d2(o).row(0)));
  }
  for (Eigen::Index j = 0; j < B; ++j) r[j] -= pde.reaction(u[j]);
  const double loss = r.squaredNorm() / static_cast<double>(B);

  if (opt.backprop) {
    const Eigen::RowVectorXd adj = (2.0 * opt.weight / static_cast<double>(B)) * r;
    std::vector<Graph::Seed> seeds;
    seeds.push_back({out[0], Component::d1, adj});
    for (int i = 0; i < dim; ++i) {
      const Id o = out[static_cast<std::size_t>(i + 1)];
      seeds.push_back({o, Component::d1, -pde.coeff * adj.cwiseProduct(w.d1w[i])});
      seeds.push_back({o, Component::d2, -pde.coeff * adj.cwiseProduct(w.d2w[i])});
    }
    if (pde.kind == oracle::PdeKind::allen_cahn) {
      Eigen::RowVectorXd slope(B);
      for (Eigen::Index j = 0; j < B; ++j) slope[j] = -pde.reaction_slope(u[j]) * adj[j];
      seeds.push_back({out[0], Component::value, slope});
    }
    g.backward(seeds);
  }
  return loss;
}

double loss_coeff_consistency(SpectralPinnModel& m, const Eigen::MatrixXd& samples, LossOptions opt) {
  const auto n = samples.cols();
  if (n == 0) return 0.0;
  model::Batch b;
  b.samples = samples;
  b.points = Eigen::MatrixXd::Zero(model::point_dim(m.info().geometry), n);
  b.t = Eigen::RowVectorXd::Zero(n);
  Graph g(false);
  const Id d = m.coefficients(g, b, false);
  const Id c = m.transform(g, samples);
  const Id diff = g.sub(d, c);
  const Eigen::MatrixXd& v = g.value(diff);
  const double scale = 1.0 / static_cast<double>(v.size());
  const double loss = v.squaredNorm() * scale;
  if (opt.backprop) {
    const std::array<Graph::Seed, 1> seeds{Graph::Seed{diff, Component::value, (2.0 * opt.weight * scale) * v}};
    g.backward(seeds);
  }
  return loss;
}

double loss_transform_target(SpectralPinnModel& m, const Eigen::MatrixXd& samples, const Eigen::MatrixXd& targets,
                             LossOptions opt) {
  const auto n = samples.cols();
  if (n == 0) return 0.0;
  Graph g(false);
  const Id c = m.transform(g, samples);
  if (g.value(c).rows() != targets.rows() || targets.cols() != n)
    throw Error(ErrorKind::ShapeMismatch, "transform targets do not match the coefficient width");
  const Id diff = g.sub(c, g.constant(targets));
  const Eigen::MatrixXd& v = g.value(diff);
  const double scale = 1.0 / static_cast<double>(v.size());
  const double loss = v.squaredNorm() * scale;
  if (opt.backprop) {
    const std::array<Graph::Seed, 1> seeds{Graph::Seed{diff, Component::value, (2.0 * opt.weight * scale) * v}};
    g.backward(seeds);
  }
  return loss;
}

std::string_view to_string(PhaseKind k) {
  switch (k) {
    case PhaseKind::pretrain: return "pretrain";
    case PhaseKind::frozen: return "frozen";
    case PhaseKind::full: return "full";
    case PhaseKind::fit_transform: return "fit_transform";
    case PhaseKind::fit_recon: return "fit_recon";
  }
  return "?";
}

namespace {

std::vector<int> pick_grid(int L, int count, std::mt19937_64& rng) {
  std::vector<int> idx(static_cast<std::size_t>(L));
  std::iota(idx.begin(), idx.end(), 0);
  if (count <= 0 || count >= L) return idx;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(count));
  std::sort(idx.begin(), idx.end());
  return idx;
}

bool uses_coef(Model& m, const ScheduleSpec& s) {
  auto* sp = dynamic_cast<SpectralPinnModel*>(&m);
  return s.coef_loss && sp && sp->time_stepping().param_count() > 0;
}

}  // namespace

std::vector<PhaseTrace> run_schedule(Model& m, const TrainSet& data, const ScheduleSpec& schedule) {
  schedule.pde.validate();
  if (data.family.samples.rows() != m.info().samples)
    throw Error(ErrorKind::ShapeMismatch, "dataset samples do not match the model");
  auto* spectral = dynamic_cast<SpectralPinnModel*>(&m);
  for (const PhaseSpec& p : schedule.phases)
    if (!spectral && p.kind != PhaseKind::full)
      throw Error(ErrorKind::InvalidVariant, "naive models only take full training phases");

  std::vector<PhaseTrace> traces;
  const std::vector<nn::ParamSlot> slots = m.slots();
  const int L = m.info().samples;
  const bool coef = uses_coef(m, schedule);
  for (const PhaseSpec& p : schedule.phases)
    if (p.kind == PhaseKind::fit_transform &&
        (schedule.transform_target.cols() != L || schedule.transform_target.rows() == 0))
      throw Error(ErrorKind::ShapeMismatch, "fit_transform needs a K x samples target operator");

  for (std::size_t pi = 0; pi < schedule.phases.size(); ++pi) {
    const PhaseSpec& phase = schedule.phases[pi];
    PhaseTrace trace{phase.kind, {}};
    nn::TrainSchedule ts;
    ts.batch_size = schedule.batch_size;
    ts.adam = schedule.adam;
    if (phase.kind == PhaseKind::pretrain) ts.frozen_blocks = {"time_stepping"};
    if (phase.kind == PhaseKind::frozen) ts.frozen_blocks = {"transformation", "reconstruction"};
    if (phase.kind == PhaseKind::fit_transform) ts.frozen_blocks = {"time_stepping", "reconstruction"};
    if (phase.kind == PhaseKind::fit_recon) ts.frozen_blocks = {"transformation", "time_stepping"};
    std::vector<nn::OptimState> states;
    std::mt19937_64 grid_rng(model::mix_seed(schedule.seed, 0x6000 + pi));

    const nn::BatchLoss loss = [&](std::span<const std::size_t> rows) {
      const std::vector<int> grid = pick_grid(L, schedule.l0_points, grid_rng);
      const InitialBatch ib = initial_batch(data, rows, grid);
      const LossOptions bp{true, 1.0};
      if (phase.kind == PhaseKind::pretrain || phase.kind == PhaseKind::fit_recon) return loss_autoencode(*spectral, ib, bp);
      if (phase.kind == PhaseKind::fit_transform)
        return loss_transform_target(*spectral, ib.samples, schedule.transform_target * ib.samples, bp);
      double total = loss_initial(m, ib, bp);
      total += loss_residual(m, data.batch(rows), schedule.pde, bp);
      if (coef) total += loss_coeff_consistency(*spectral, ib.samples, bp);
      return total;
    };

    for (int e = 0; e < phase.epochs; ++e) {
      ts.epochs = 1;
      ts.seed = model::mix_seed(schedule.seed, (pi << 32) + static_cast<std::uint64_t>(e));
      if (schedule.lr_final > 0.0 && phase.epochs > 1) {
        const double frac = static_cast<double>(e) / static_cast<double>(phase.epochs - 1);
        ts.adam.learning_rate =
            schedule.adam.learning_rate * std::pow(schedule.lr_final / schedule.adam.learning_rate, frac);
      }
      const nn::TrainTrace t = nn::train_loop(slots, states, static_cast<std::size_t>(data.size()), loss, ts);
      if (t.diverged)
        throw Error(ErrorKind::Diverged, std::string("training diverged in phase ") +
                                             std::string(to_string(phase.kind)) + " epoch " + std::to_string(e));
      trace.epoch_loss.push_back(t.epoch_loss.empty() ? 0.0 : t.epoch_loss.front());
    }
    traces.push_back(std::move(trace));
  }
  return traces;
}

LossReport evaluate_losses(Model& m, const TrainSet& data, std::span<const std::size_t> rows,
                           const ScheduleSpec& schedule) {
  LossReport rep;
  if (rows.empty()) return rep;
  const int L = m.info().samples;
  std::vector<int> grid(static_cast<std::size_t>(L));
  std::iota(grid.begin(), grid.end(), 0);
  const bool coef = uses_coef(m, schedule);
  double l0 = 0, ld = 0, lc = 0;
  const std::size_t chunk = 64;
  for (std::size_t s = 0; s < rows.size(); s += chunk) {
    const auto part = rows.subspan(s, std::min(chunk, rows.size() - s));
    const double w = static_cast<double>(part.size());
    const InitialBatch ib = initial_batch(data, part, grid);
    l0 += w * loss_initial(m, ib);
    ld += w * loss_residual(m, data.batch(part), schedule.pde);
    if (coef) lc += w * loss_coeff_consistency(dynamic_cast<SpectralPinnModel&>(m), ib.samples);
  }
  const double n = static_cast<double>(rows.size());
  rep.l0 = l0 / n;
  rep.ld = ld / n;
  if (coef) rep.lcoef = lc / n;
  return rep;
}

}  // namespace spinn::train

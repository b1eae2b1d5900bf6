#include "spinn/bases/sine.hpp"
#include "spinn/bases/sphere.hpp"
#include "spinn/common/error.hpp"
#include "spinn/train/training.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <numeric>

using namespace spinn;
using namespace spinn::train;
using model::NaiveModel;
using model::NaiveSpec;
using model::SpectralSpec;
using model::StepVariant;

namespace {
constexpr double kPi = std::numbers::pi;

SpectralSpec exact_interval() {
  SpectralSpec s;
  s.blocks.K = 20;
  s.blocks.alpha = 0.01;
  s.blocks.exact_operator = bases::SineTransform(bases::SineBasisSpec{}).matrix();
  return s;
}

oracle::PdeSpec heat() { return {oracle::PdeKind::heat, 0.01, model::Geometry::interval, 0.5}; }
oracle::PdeSpec allen_cahn(model::Geometry g) { return {oracle::PdeKind::allen_cahn, 0.1, g, 1.0}; }

// Naive model whose output is the constant c.
NaiveModel constant_model(const model::ModelInfo& info, double c) {
  NaiveModel m(info, NaiveSpec{2, 4}, 0);
  auto& v = m.params()[0].params->values;
  v.setZero();
  v[v.size() - 1] = c;
  return m;
}

std::vector<std::size_t> all_rows(int n) {
  std::vector<std::size_t> r(static_cast<std::size_t>(n));
  std::iota(r.begin(), r.end(), std::size_t{0});
  return r;
}

std::vector<int> whole_grid(int L) {
  std::vector<int> g(static_cast<std::size_t>(L));
  std::iota(g.begin(), g.end(), 0);
  return g;
}

SpectralSpec small_sphere_a() {
  SpectralSpec s;
  s.transform = model::TransformVariant::linear_trained;
  s.step = StepVariant::exp_nonlinear_a;
  s.recon = model::ReconVariant::sphere_spectral_activations;
  s.blocks.K = 9;
  s.blocks.sphere_degree = 2;
  s.blocks.d12_layers = s.blocks.d2_layers = 2;
  s.blocks.d12_hidden = s.blocks.d2_hidden = 6;
  return s;
}
}  // namespace

TEST(Family, UnitNormDrawsAndReproducibility) {
  for (const FamilySpec& spec : {FamilySpec::interval(20), FamilySpec::sphere(9),
                                 FamilySpec::torus_family(5, bases::TorusGeometry{})}) {
    const Family a = sample_family(spec, 50, 7);
    const Family b = sample_family(spec, 50, 7);
    EXPECT_EQ(a.coeffs, b.coeffs);
    EXPECT_EQ(a.samples, b.samples);
    ASSERT_EQ(a.coeffs.rows(), spec.dim());
    ASSERT_EQ(a.samples.rows(), spec.samples());
    for (int i = 0; i < 50; ++i) {
      EXPECT_NEAR(a.coeffs.col(i).norm(), 1.0, 1e-12);
      EXPECT_LE(a.coeffs.col(i).cwiseAbs().maxCoeff(), 1.0);
    }
    EXPECT_NE(sample_family(spec, 50, 8).coeffs, a.coeffs);
  }
  EXPECT_EQ(FamilySpec::sphere(9).dim(), 100);
  EXPECT_EQ(FamilySpec::torus_family(5, bases::TorusGeometry{}).samples(), 225);
  EXPECT_THROW((void)sample_family(FamilySpec::interval(20), 0, 1), Error);
}

TEST(Family, EmpiricalMeanIsNearZero) {
  const Family f = sample_family(FamilySpec::interval(20), 10000, 3);
  const Eigen::VectorXd mean = f.coeffs.rowwise().mean();
  EXPECT_LE(mean.cwiseAbs().maxCoeff(), 0.05);
}

TEST(Family, SamplesMatchIndependentEvaluation) {
  const Family fi = sample_family(FamilySpec::interval(20), 3, 1);
  for (int j = 0; j < 101; j += 17) {
    const std::vector<double> c(fi.coeffs.col(1).data(), fi.coeffs.col(1).data() + 20);
    EXPECT_NEAR(fi.samples(j, 1), bases::sine_reconstruct(c, j / 100.0), 1e-13);
  }
  const Family fs = sample_family(FamilySpec::sphere(9), 2, 1);
  const bases::SphereBasisSpec grid{9, 20, 20};
  const Eigen::VectorXd via_design = bases::sphere_design(grid) * fs.coeffs.col(0);
  EXPECT_LE((via_design - fs.samples.col(0)).cwiseAbs().maxCoeff(), 1e-12);

  const bases::TorusGeometry tg{2.0, 1.0, 15, 15};
  const Family ft = sample_family(FamilySpec::torus_family(5, tg), 1, 1);
  // vertex (i, k) holds sum c_kl sin(k theta_i) sin(l phi_k)
  const int i = 4, k = 11;
  double s = 0;
  for (int a = 1; a <= 5; ++a)
    for (int b = 1; b <= 5; ++b) s += ft.coeffs((a - 1) * 5 + b - 1, 0) * std::sin(a * tg.theta(i)) * std::sin(b * tg.phi(k));
  EXPECT_NEAR(ft.samples(i * 15 + k, 0), s, 1e-12);
}

TEST(Family, TrainSetRangesAndCache) {
  DataSpec spec{FamilySpec::sphere(3), 300, 1.0, 0.05};
  const TrainSet set = make_train_set(spec, 5);
  EXPECT_GE(set.points.row(0).minCoeff(), 0.05);
  EXPECT_LE(set.points.row(0).maxCoeff(), kPi - 0.05);
  EXPECT_GE(set.points.row(1).minCoeff(), 0.0);
  EXPECT_LT(set.points.row(1).maxCoeff(), 2 * kPi);
  EXPECT_GE(set.t.minCoeff(), 0.0);
  EXPECT_LE(set.t.maxCoeff(), 1.0);

  const auto dir = std::filesystem::temp_directory_path() / "spinn_data_cache";
  std::filesystem::remove_all(dir);
  const auto path = dir / "set.bin";
  const TrainSet made = load_or_make_train_set(path, spec, 5);
  ASSERT_TRUE(std::filesystem::exists(path));
  const TrainSet loaded = load_or_make_train_set(path, spec, 5);
  EXPECT_EQ(made.family.samples, loaded.family.samples);
  EXPECT_EQ(made.points, loaded.points);
  EXPECT_EQ(made.t, loaded.t);
  EXPECT_EQ(loaded.family.coeffs, set.family.coeffs);
  // a different seed misses the cache and regenerates
  EXPECT_NE(load_or_make_train_set(path, spec, 6).t, set.t);
  std::filesystem::remove_all(dir);
}

TEST(Losses, InitialLossExamples) {
  const TrainSet set = make_train_set(DataSpec{FamilySpec::interval(20), 30, 0.5}, 2);
  const auto rows = all_rows(30);
  const InitialBatch ib = initial_batch(set, rows, whole_grid(101));

  model::SpectralPinnModel exact(set.spec.family.model_info(), exact_interval(), 0);
  EXPECT_LE(loss_initial(exact, ib), 1e-12);

  auto zero = constant_model(set.spec.family.model_info(), 0.0);
  EXPECT_NEAR(loss_initial(zero, ib), set.family.samples.squaredNorm() / (101.0 * 30), 1e-14);

  InitialBatch one;
  one.samples.resize(101, 1);
  for (int j = 0; j < 101; ++j) one.samples(j, 0) = std::sin(2 * kPi * j / 100.0);
  one.points = family_grid(FamilySpec::interval(20));
  one.targets = one.samples;
  EXPECT_NEAR(loss_initial(zero, one), 50.0 / 101.0, 1e-12);
}

TEST(Losses, ResidualExamples) {
  const TrainSet set = make_train_set(DataSpec{FamilySpec::interval(20), 40, 0.5}, 2);
  const auto rows = all_rows(40);
  model::SpectralPinnModel exact(set.spec.family.model_info(), exact_interval(), 0);
  EXPECT_LE(loss_residual(exact, set.batch(rows), heat()), 1e-16);

  const TrainSet sphere = make_train_set(DataSpec{FamilySpec::sphere(3), 20, 1.0}, 4);
  const auto srows = all_rows(20);
  auto one = constant_model(sphere.spec.family.model_info(), 1.0);
  EXPECT_EQ(loss_residual(one, sphere.batch(srows), allen_cahn(model::Geometry::sphere)), 0.0);
  auto half = constant_model(sphere.spec.family.model_info(), 0.5);
  EXPECT_NEAR(loss_residual(half, sphere.batch(srows), allen_cahn(model::Geometry::sphere)), 0.140625, 1e-15);

  model::Batch pole = sphere.batch(std::vector<std::size_t>{0});
  pole.points(0, 0) = 0.0;
  try {
    (void)loss_residual(half, pole, allen_cahn(model::Geometry::sphere));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PoleSingularity);
  }
}

TEST(Losses, CoefficientConsistencyExamples) {
  const TrainSet set = make_train_set(DataSpec{FamilySpec::interval(20), 10, 0.5}, 2);
  model::SpectralPinnModel exact(set.spec.family.model_info(), exact_interval(), 0);
  EXPECT_LE(loss_coeff_consistency(exact, set.family.samples), 1e-24);

  SpectralSpec zero_step = exact_interval();
  zero_step.step = StepVariant::mlp_plain;
  zero_step.blocks.step_hidden = 8;
  model::SpectralPinnModel z(set.spec.family.model_info(), zero_step, 1);
  z.time_stepping().params()[0].params->values.setZero();
  const Eigen::MatrixXd c = bases::SineTransform(bases::SineBasisSpec{}).matrix() * set.family.samples;
  EXPECT_NEAR(loss_coeff_consistency(z, set.family.samples), c.squaredNorm() / (20.0 * 10), 1e-14);

  model::SpectralPinnModel random(set.spec.family.model_info(), zero_step, 2);
  const double l = loss_coeff_consistency(random, set.family.samples);
  EXPECT_GT(l, 0.0);
  EXPECT_TRUE(std::isfinite(l));
}

namespace {
// Central differences of `loss` on probe entries of every parameter group.
void check_loss_gradient(Model& m, const std::function<double(bool)>& loss, const std::string& label) {
  for (auto& p : m.params()) p.params->zero_grad();
  (void)loss(true);
  for (auto& p : m.params()) {
    Eigen::VectorXd& v = p.params->values;
    const Eigen::VectorXd grad = p.params->grad;
    const Eigen::Index n = v.size();
    for (int probe = 0; probe < 10; ++probe) {
      const Eigen::Index i = (probe * 7919 + 13) % n;
      const double keep = v[i], h = 1e-6 * std::max(1.0, std::abs(keep));
      v[i] = keep + h;
      const double up = loss(false);
      v[i] = keep - h;
      const double dn = loss(false);
      v[i] = keep;
      const double fd = (up - dn) / (2 * h);
      EXPECT_LE(std::abs(grad[i] - fd), 1e-4 * std::max(1e-3, std::abs(fd)))
          << label << " " << p.name << "[" << i << "] graph " << grad[i] << " fd " << fd;
    }
  }
}
}  // namespace

TEST(Losses, GradientsMatchFiniteDifferences) {
  const TrainSet set = make_train_set(DataSpec{FamilySpec::sphere(2), 6, 1.0}, 9);
  const auto rows = all_rows(6);
  const InitialBatch ib = initial_batch(set, rows, std::vector<int>{3, 57, 140, 222, 399});
  const model::Batch b = set.batch(rows);
  const auto pde = allen_cahn(model::Geometry::sphere);

  model::SpectralPinnModel a(set.spec.family.model_info(), small_sphere_a(), 5);
  check_loss_gradient(a, [&](bool bp) { return loss_initial(a, ib, {bp, 1.0}); }, "L0");
  check_loss_gradient(a, [&](bool bp) { return loss_residual(a, b, pde, {bp, 1.0}); }, "LD");
  check_loss_gradient(a, [&](bool bp) { return loss_coeff_consistency(a, ib.samples, {bp, 1.0}); }, "Lcoef");
  check_loss_gradient(a, [&](bool bp) { return loss_autoencode(a, ib, {bp, 1.0}); }, "AE");

  NaiveModel naive(set.spec.family.model_info(), NaiveSpec{3, 8}, 6);
  check_loss_gradient(naive, [&](bool bp) { return loss_residual(naive, b, pde, {bp, 1.0}); }, "naive LD");
  check_loss_gradient(naive, [&](bool bp) { return loss_initial(naive, ib, {bp, 1.0}); }, "naive L0");
}

TEST(Schedule, EmptyPhasesLeaveModelUnchanged) {
  const TrainSet set = make_train_set(DataSpec{FamilySpec::sphere(2), 16, 1.0}, 1);
  model::SpectralPinnModel a(set.spec.family.model_info(), small_sphere_a(), 3);
  std::vector<Eigen::VectorXd> before;
  for (auto& p : a.params()) before.push_back(p.params->values);
  ScheduleSpec s;
  s.pde = allen_cahn(model::Geometry::sphere);
  EXPECT_TRUE(run_schedule(a, set, s).empty());
  const auto after = a.params();
  for (std::size_t i = 0; i < after.size(); ++i) EXPECT_EQ(after[i].params->values, before[i]);
}

TEST(Schedule, FrozenPhaseKeepsTransformAndReconstruction) {
  const TrainSet set = make_train_set(DataSpec{FamilySpec::sphere(2), 16, 1.0}, 1);
  model::SpectralPinnModel a(set.spec.family.model_info(), small_sphere_a(), 3);
  std::vector<Eigen::VectorXd> before;
  for (auto& p : a.params()) before.push_back(p.params->values);
  ScheduleSpec s;
  s.pde = allen_cahn(model::Geometry::sphere);
  s.phases = {{PhaseKind::frozen, 2}};
  s.batch_size = 8;
  s.l0_points = 10;
  const auto trace = run_schedule(a, set, s);
  ASSERT_EQ(trace.size(), 1u);
  EXPECT_EQ(trace[0].epoch_loss.size(), 2u);
  const auto after = a.params();
  for (std::size_t i = 0; i < after.size(); ++i) {
    const bool step = after[i].name.rfind("step", 0) == 0;
    if (step)
      EXPECT_NE(after[i].params->values, before[i]) << after[i].name;
    else
      EXPECT_EQ(after[i].params->values, before[i]) << after[i].name;
  }
  // pretraining leaves the time stepping untouched
  std::vector<Eigen::VectorXd> mid;
  for (auto& p : a.params()) mid.push_back(p.params->values);
  s.phases = {{PhaseKind::pretrain, 1}};
  (void)run_schedule(a, set, s);
  const auto post = a.params();
  for (std::size_t i = 0; i < post.size(); ++i)
    if (post[i].name.rfind("step", 0) == 0) EXPECT_EQ(post[i].params->values, mid[i]);
}

TEST(Schedule, NaiveRejectsStagedPhases) {
  const TrainSet set = make_train_set(DataSpec{FamilySpec::interval(20), 8, 0.5}, 1);
  NaiveModel naive(set.spec.family.model_info(), NaiveSpec{2, 4}, 0);
  ScheduleSpec s;
  s.pde = heat();
  s.phases = {{PhaseKind::pretrain, 1}};
  EXPECT_THROW((void)run_schedule(naive, set, s), Error);
}

TEST(Schedule, NonFiniteDataDiverges) {
  TrainSet set = make_train_set(DataSpec{FamilySpec::interval(20), 8, 0.5}, 1);
  set.family.samples(5, 3) = std::nan("");
  NaiveModel naive(set.spec.family.model_info(), NaiveSpec{2, 4}, 0);
  ScheduleSpec s;
  s.pde = heat();
  s.phases = {{PhaseKind::full, 1}};
  try {
    (void)run_schedule(naive, set, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Diverged);
  }
}

TEST(Schedule, ResidualLossFallsOnFixedBatch) {
  // Exact transform and reconstruction, 5-layer MLP time stepping.
  const TrainSet set = make_train_set(DataSpec{FamilySpec::interval(20), 64, 0.5}, 11);
  SpectralSpec spec = exact_interval();
  spec.step = StepVariant::mlp_plain;
  model::SpectralPinnModel m(set.spec.family.model_info(), spec, 4);
  ScheduleSpec s;
  s.pde = heat();
  s.phases = {{PhaseKind::full, 1}};
  s.batch_size = 0;
  s.coef_loss = false;
  s.adam.learning_rate = 1e-3;
  const auto rows = all_rows(64);
  double prev = loss_residual(m, set.batch(rows), s.pde);
  for (int e = 0; e < 5; ++e) {
    s.seed = static_cast<std::uint64_t>(e);
    (void)run_schedule(m, set, s);
    const double now = loss_residual(m, set.batch(rows), s.pde);
    EXPECT_LT(now, prev) << "epoch " << e;
    prev = now;
  }
}

TEST(Schedule, EvaluateLossesReport) {
  const TrainSet set = make_train_set(DataSpec{FamilySpec::interval(20), 20, 0.5}, 2);
  model::SpectralPinnModel exact(set.spec.family.model_info(), exact_interval(), 0);
  ScheduleSpec s;
  s.pde = heat();
  const LossReport r = evaluate_losses(exact, set, all_rows(20), s);
  EXPECT_LE(r.l0, 1e-12);
  EXPECT_LE(r.ld, 1e-16);
  EXPECT_FALSE(r.lcoef.has_value());
  EXPECT_FALSE(r.mse_b.has_value());
  EXPECT_GE(r.total(), 0.0);
}

TEST(Schedule, TransformTargetPhases) {
  const TrainSet set = make_train_set(DataSpec{FamilySpec::interval(20), 32, 0.5}, 4);
  const Eigen::MatrixXd op = bases::SineTransform(bases::SineBasisSpec{}).matrix();
  SpectralSpec spec = exact_interval();
  spec.transform = model::TransformVariant::linear_trained;
  model::SpectralPinnModel m(set.spec.family.model_info(), spec, 8);

  const Eigen::MatrixXd targets = op * set.family.samples;
  EXPECT_GT(loss_transform_target(m, set.family.samples, targets), 0.0);
  check_loss_gradient(m, [&](bool bp) { return loss_transform_target(m, set.family.samples, targets, {bp, 1.0}); },
                      "transform target");

  ScheduleSpec s;
  s.pde = heat();
  s.batch_size = 0;
  s.adam.learning_rate = 1e-2;
  s.phases = {{PhaseKind::fit_transform, 1}};
  EXPECT_THROW((void)run_schedule(m, set, s), Error);
  s.transform_target = op;
  s.phases = {{PhaseKind::fit_transform, 40}, {PhaseKind::fit_recon, 1}};
  const double before = loss_transform_target(m, set.family.samples, targets);
  const auto trace = run_schedule(m, set, s);
  ASSERT_EQ(trace.size(), 2u);
  EXPECT_LT(loss_transform_target(m, set.family.samples, targets), 0.1 * before);
  EXPECT_EQ(to_string(PhaseKind::fit_recon), "fit_recon");
}

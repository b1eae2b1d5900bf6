#include "spinn/bases/sine.hpp"
#include "spinn/bases/sphere.hpp"
#include "spinn/common/error.hpp"
#include "spinn/model/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

using namespace spinn;
using namespace spinn::model;

namespace {
constexpr double kPi = std::numbers::pi;

ModelInfo interval_info() { return {Geometry::interval, 101, {}}; }
ModelInfo sphere_info() { return {Geometry::sphere, 400, {}}; }
ModelInfo torus_info(int n = 6) { return {Geometry::torus, n * n, bases::TorusGeometry{2.0, 1.0, n, n}}; }

SpectralSpec exact_interval(double alpha = 0.01) {
  SpectralSpec s;
  s.transform = TransformVariant::exact_operator;
  s.step = StepVariant::realization_heat;
  s.recon = ReconVariant::exact_sine;
  s.blocks.K = 20;
  s.blocks.alpha = alpha;
  s.blocks.exact_operator = bases::SineTransform(bases::SineBasisSpec{}).matrix();
  return s;
}

std::vector<double> sine_samples(const std::vector<double>& c) {
  std::vector<double> f(101);
  for (int j = 0; j < 101; ++j) f[j] = bases::sine_reconstruct(c, j / 100.0);
  return f;
}

double heat(const std::vector<double>& c, double x, double t, double alpha) {
  double s = 0;
  for (std::size_t k = 1; k <= c.size(); ++k)
    s += std::exp(-4 * kPi * kPi * double(k * k) * alpha * t) * c[k - 1] * std::sin(2 * kPi * double(k) * x);
  return s;
}

SpectralSpec small_sphere(StepVariant step) {
  SpectralSpec s;
  s.transform = TransformVariant::linear_trained;
  s.step = step;
  s.recon = ReconVariant::sphere_spectral_activations;
  s.blocks.K = 9;
  s.blocks.sphere_degree = 2;
  s.blocks.d12_layers = 2;
  s.blocks.d2_layers = 2;
  s.blocks.d12_hidden = 8;
  s.blocks.d2_hidden = 8;
  s.blocks.step_layers = 3;
  s.blocks.step_hidden = 8;
  return s;
}

std::vector<double> random_vec(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}
}  // namespace

TEST(Blocks, ParameterCounts) {
  BlockConfig cfg;
  EXPECT_EQ(build_time_stepping(StepVariant::realization_heat, cfg, 1)->param_count(), 0u);
  EXPECT_EQ(build_reconstruction(ReconVariant::exact_sine, cfg, 1)->param_count(), 0u);

  // Full-realization interval model: only the dense 101 -> 20 transform trains.
  SpectralSpec full = exact_interval();
  full.transform = TransformVariant::linear_trained;
  EXPECT_EQ(SpectralPinnModel(interval_info(), full, 1).param_count(), 101u * 20 + 20);

  // Naive interval: five 103 -> 103 tanh layers and a scalar head.
  EXPECT_EQ(NaiveModel(interval_info(), NaiveSpec{6, 0}, 1).param_count(), 53664u);
}

TEST(Blocks, SpherePaperScaleCounts) {
  SpectralSpec a;
  a.transform = TransformVariant::linear_trained;
  a.step = StepVariant::exp_nonlinear_a;
  a.recon = ReconVariant::sphere_spectral_activations;
  a.blocks.K = 100;
  a.blocks.d12_hidden = 118;
  a.blocks.d2_hidden = 206;
  const SpectralPinnModel m(sphere_info(), a, 3);
  // C 400*100+100, D11 100, D12 200->118x5->100, D2 201->206x5->100, R_d 2x(100*100+100),
  // R_loc 10 x (2x6 + 2x300)
  const std::size_t c = 40100, d11 = 100;
  const std::size_t d12 = (200 * 118 + 118) + 4 * (118 * 118 + 118) + (118 * 100 + 100);
  const std::size_t d2 = (201 * 206 + 206) + 4 * (206 * 206 + 206) + (206 * 100 + 100);
  const std::size_t rd = 2 * (100 * 100 + 100), rloc = 10 * (2 * 6 + 2 * 300);
  EXPECT_EQ(c + d11 + d12 + d2 + rd + rloc, 391186u);
  EXPECT_EQ(m.param_count(), 391186u);
}

TEST(Blocks, NaiveSphereCount) {
  EXPECT_EQ(NaiveModel(sphere_info(), NaiveSpec{26, 0}, 1).param_count(), 4070704u);
}

TEST(Blocks, InvalidVariants) {
  BlockConfig cfg;
  cfg.geometry = Geometry::sphere;
  for (auto v : {StepVariant::realization_heat, StepVariant::mlp_plain, StepVariant::torus_a}) {
    try {
      (void)build_time_stepping(v, cfg, 1);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidVariant);
    }
  }
  EXPECT_THROW((void)build_reconstruction(ReconVariant::exact_sine, cfg, 1), Error);
  EXPECT_THROW((void)build_transformation(TransformVariant::encoder, cfg, 1), Error);
  EXPECT_THROW((void)parse_step("variant_z"), Error);
  EXPECT_EQ(parse_step("exp_nonlinear_a"), StepVariant::exp_nonlinear_a);
  EXPECT_EQ(parse_recon(to_string(ReconVariant::decoder)), ReconVariant::decoder);
  EXPECT_EQ(parse_transform(to_string(TransformVariant::grid_conv_trained)), TransformVariant::grid_conv_trained);
  EXPECT_EQ(parse_geometry("torus"), Geometry::torus);
}

TEST(ModelForward, ExactIntervalMatchesHeatSolution) {
  SpectralPinnModel m(interval_info(), exact_interval(), 0);
  std::vector<double> c(20, 0.0);
  c[0] = 1.0;
  const auto f = sine_samples(c);
  for (double x : {0.0, 0.13, 0.5, 0.77})
    for (double t : {0.0, 0.2, 0.5}) {
      const std::array<double, 1> p{x};
      EXPECT_NEAR(model_forward(m, f, p, t).v, std::exp(-4 * kPi * kPi * 0.01 * t) * std::sin(2 * kPi * x), 1e-10);
    }
  const std::array<double, 1> p{0.3};
  EXPECT_EQ(model_forward(m, std::vector<double>(101, 0.0), p, 0.4).v, 0.0);
  EXPECT_THROW((void)model_forward(m, std::vector<double>(100, 0.0), p, 0.4), Error);
}

TEST(ModelForward, RealizationAtTimeZeroKeepsCoefficients) {
  SpectralPinnModel m(interval_info(), exact_interval(), 0);
  const auto c = random_vec(20, 4);
  Batch b;
  b.samples = Eigen::Map<const Eigen::VectorXd>(sine_samples(c).data(), 101);
  b.points = ad::Mat::Zero(1, 1);
  b.t = Eigen::RowVectorXd::Zero(1);
  Graph g;
  const Id d = m.coefficients(g, b, false);
  for (int k = 0; k < 20; ++k) EXPECT_NEAR(g.value(d)(k, 0), c[k], 1e-12);
}

TEST(ModelDerivatives, ExactIntervalSatisfiesHeatEquation) {
  SpectralPinnModel m(interval_info(), exact_interval(), 0);
  std::vector<double> c(20, 0.0);
  c[0] = 1.0;
  const auto f = sine_samples(c);
  const std::array<double, 1> p{0.21};
  const Derivatives d = model_derivatives(m, f, p, 0.3);
  EXPECT_NEAR(d.u_t, -4 * kPi * kPi * 0.01 * d.u, 1e-9);
  EXPECT_NEAR(d.laplacian, -4 * kPi * kPi * d.u, 1e-8);
  EXPECT_LE(std::abs(d.u_t - 0.01 * d.laplacian), 1e-8);

  const auto c2 = random_vec(20, 9);
  const Derivatives d2 = model_derivatives(m, sine_samples(c2), p, 0.1);
  EXPECT_LE(std::abs(d2.u_t - 0.01 * d2.laplacian), 1e-8);
}

TEST(ModelDerivatives, ConstantModelHasZeroDerivatives) {
  NaiveModel m(sphere_info(), NaiveSpec{3, 10}, 0);
  m.params()[0].params->values.setZero();
  m.params()[0].params->values.tail(1)[0] = 0.7;  // output bias
  const std::array<double, 2> p{1.0, 2.0};
  const Derivatives d = model_derivatives(m, random_vec(400, 1), p, 0.5);
  EXPECT_EQ(d.u, 0.7);
  EXPECT_EQ(d.u_t, 0.0);
  EXPECT_EQ(d.laplacian, 0.0);
}

namespace {
// 5-point finite-difference Laplace-Beltrami from plain forward values.
double fd_laplacian(Model& m, const std::vector<double>& f, double th, double ph, double t, double h) {
  auto u = [&](double a, double b) {
    const std::array<double, 2> p{a, b};
    return model_forward(m, f, p, t).v;
  };
  const double c = u(th, ph);
  const double utt = (u(th + h, ph) - 2 * c + u(th - h, ph)) / (h * h);
  const double ut = (u(th + h, ph) - u(th - h, ph)) / (2 * h);
  const double upp = (u(th, ph + h) - 2 * c + u(th, ph - h)) / (h * h);
  if (m.info().geometry == Geometry::sphere)
    return utt + std::cos(th) / std::sin(th) * ut + upp / std::pow(std::sin(th), 2);
  const double R = m.info().torus.R, r = m.info().torus.r, ring = R + r * std::cos(th);
  return utt / (r * r) - std::sin(th) / (r * ring) * ut + upp / (ring * ring);
}
}  // namespace

TEST(ModelDerivatives, SphereLaplacianMatchesFiniteDifferences) {
  for (auto v : {StepVariant::exp_nonlinear_a, StepVariant::exp_standard_b, StepVariant::naive_mlp_c}) {
    SpectralPinnModel m(sphere_info(), small_sphere(v), 17);
    const auto f = random_vec(400, 2, 0.3);
    const std::array<double, 2> p{1.2, 0.7};
    const Derivatives d = model_derivatives(m, f, p, 0.4);
    const double fd = fd_laplacian(m, f, 1.2, 0.7, 0.4, 1e-4);
    EXPECT_LE(std::abs(d.laplacian - fd), 1e-4 * std::max(1.0, std::abs(fd))) << to_string(v);
    // time derivative too
    const std::array<double, 2> q{1.2, 0.7};
    const double h = 1e-5;
    const double ft = (model_forward(m, f, q, 0.4 + h).v - model_forward(m, f, q, 0.4 - h).v) / (2 * h);
    EXPECT_NEAR(d.u_t, ft, 1e-6 * std::max(1.0, std::abs(ft)));
  }
  NaiveModel naive(sphere_info(), NaiveSpec{3, 12}, 5);
  const auto f = random_vec(400, 3, 0.3);
  const std::array<double, 2> p{1.2, 0.7};
  const double fd = fd_laplacian(naive, f, 1.2, 0.7, 0.4, 1e-4);
  EXPECT_LE(std::abs(model_derivatives(naive, f, p, 0.4).laplacian - fd), 1e-4 * std::max(1.0, std::abs(fd)));
  const std::array<double, 2> pole{0.0, 0.3};
  try {
    (void)model_derivatives(naive, f, pole, 0.4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PoleSingularity);
  }
}

TEST(ModelDerivatives, TorusLaplacianMatchesFiniteDifferences) {
  const int n = 6;
  for (auto v : {StepVariant::torus_a, StepVariant::torus_b}) {
    SpectralSpec s;
    s.transform = TransformVariant::grid_conv_trained;
    s.step = v;
    s.recon = ReconVariant::torus_mlp;
    s.blocks.K = 7;
    s.blocks.grid_h = n;
    s.blocks.grid_w = n;
    s.blocks.conv_channels = {2, 3};
    s.blocks.recon_layers = 3;
    s.blocks.step_layers = 3;
    s.blocks.d12_layers = 2;
    s.blocks.d2_layers = 2;
    SpectralPinnModel m(torus_info(n), s, 23);
    const auto f = random_vec(n * n, 5, 0.5);
    const std::array<double, 2> p{2.1, 4.0};
    const double fd = fd_laplacian(m, f, 2.1, 4.0, 0.6, 1e-4);
    EXPECT_LE(std::abs(model_derivatives(m, f, p, 0.6).laplacian - fd), 1e-4 * std::max(1.0, std::abs(fd)));
  }
}

TEST(Reassemble, MatchesPointwiseForward) {
  SpectralPinnModel exact(interval_info(), exact_interval(), 0);
  const auto c = random_vec(20, 6);
  const auto f = sine_samples(c);
  ad::Mat pts(1, 101);
  for (int j = 0; j < 101; ++j) pts(0, j) = j / 100.0;
  const auto vals = reassemble_multi_eval(exact, f, 0.25, pts);
  ASSERT_EQ(vals.size(), 101u);
  for (int j = 0; j < 101; ++j) EXPECT_NEAR(vals[j], heat(c, j / 100.0, 0.25, 0.01), 1e-10);
  EXPECT_TRUE(reassemble_multi_eval(exact, f, 0.25, ad::Mat(1, 0)).empty());

  SpectralPinnModel sphere(sphere_info(), small_sphere(StepVariant::exp_nonlinear_a), 8);
  const auto fs = random_vec(400, 7, 0.3);
  ad::Mat sp(2, 7);
  for (int j = 0; j < 7; ++j) sp.col(j) << 0.2 + 0.4 * j, 0.9 * j;
  const auto many = reassemble_multi_eval(sphere, fs, 0.6, sp);
  for (int j = 0; j < 7; ++j) {
    const std::array<double, 2> p{sp(0, j), sp(1, j)};
    EXPECT_EQ(many[j], model_forward(sphere, fs, p, 0.6).v) << j;
  }
  const std::array<double, 2> p0{sp(0, 0), sp(1, 0)};
  EXPECT_EQ(reassemble_multi_eval(sphere, fs, 0.6, sp.leftCols(1))[0], model_forward(sphere, fs, p0, 0.6).v);

  const ad::Mat table = evaluate_table(sphere, fs, sp, std::vector<double>{0.0, 0.6});
  for (int j = 0; j < 7; ++j) EXPECT_NEAR(table(j, 1), many[j], 1e-12);
}

TEST(ModelGradients, FiniteForEveryVariant) {
  std::vector<std::unique_ptr<Model>> models;
  SpectralSpec a = exact_interval();
  a.transform = TransformVariant::linear_trained;
  a.step = StepVariant::mlp_plain;
  a.blocks.step_hidden = 8;
  models.push_back(std::make_unique<SpectralPinnModel>(interval_info(), a, 1));
  SpectralSpec b = exact_interval();
  b.transform = TransformVariant::linear_trained;
  b.recon = ReconVariant::mlp_interval;
  b.blocks.recon_hidden = 8;
  models.push_back(std::make_unique<SpectralPinnModel>(interval_info(), b, 2));
  for (auto v : {StepVariant::exp_nonlinear_a, StepVariant::exp_standard_b, StepVariant::naive_mlp_c})
    models.push_back(std::make_unique<SpectralPinnModel>(sphere_info(), small_sphere(v), 3));
  SpectralSpec enc;
  enc.transform = TransformVariant::encoder;
  enc.step = StepVariant::torus_a;
  enc.recon = ReconVariant::decoder;
  enc.blocks.K = 5;
  enc.blocks.grid_h = enc.blocks.grid_w = 6;
  enc.blocks.conv_channels = {2, 2};
  enc.blocks.recon_layers = 3;
  enc.blocks.d12_layers = enc.blocks.d2_layers = 2;
  models.push_back(std::make_unique<SpectralPinnModel>(torus_info(), enc, 4));
  models.push_back(std::make_unique<NaiveModel>(interval_info(), NaiveSpec{3, 10}, 5));

  for (auto& m : models) {
    const int L = m->info().samples, dim = point_dim(m->info().geometry);
    Batch batch;
    batch.samples = Eigen::Map<const Eigen::VectorXd>(random_vec(L * 4, 11, 0.3).data(), L * 4).reshaped(L, 4);
    batch.points = ad::Mat::Constant(dim, 4, 0.8);
    batch.t = Eigen::RowVectorXd::LinSpaced(4, 0.1, 0.9);
    Graph g;
    const std::array<Direction, 2> dirs{Direction::time, Direction::coord0};
    const auto out = m->forward(g, batch, dirs);
    std::vector<Graph::Seed> seeds;
    seeds.push_back({out[0], ad::Component::d1, ad::Mat::Ones(1, 4)});
    seeds.push_back({out[1], ad::Component::d2, ad::Mat::Ones(1, 4)});
    seeds.push_back({out[0], ad::Component::value, ad::Mat::Ones(1, 4)});
    for (auto& p : m->params()) p.params->zero_grad();
    g.backward(seeds);
    double total = 0;
    for (auto& p : m->params()) {
      EXPECT_TRUE(p.params->grad.allFinite()) << m->describe() << " " << p.name;
      total += p.params->grad.squaredNorm();
    }
    EXPECT_GT(total, 0.0) << m->describe();
  }
}

TEST(ModelVariants, NonlinearVariantReducesWhenChannelIsCut) {
  // (a) with zero fan-in from C(F - F^3) equals an exponential block fed only C(F).
  SpectralSpec sa = small_sphere(StepVariant::exp_nonlinear_a);
  SpectralSpec sb = small_sphere(StepVariant::exp_standard_b);
  sb.blocks.d12_layers = sa.blocks.d12_layers;
  SpectralPinnModel a(sphere_info(), sa, 31), b(sphere_info(), sb, 32);
  auto pa = a.params();
  auto pb = b.params();
  ASSERT_EQ(pa.size(), pb.size());
  const int K = 9;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    ASSERT_EQ(pa[i].name, pb[i].name);
    Eigen::VectorXd& va = pa[i].params->values;
    const Eigen::VectorXd& vb = pb[i].params->values;
    if (va.size() == vb.size()) {
      va = vb;
      continue;
    }
    // first layer of D12 (in 2K) or D2 (in 2K+1): copy the C(F) columns, zero the rest, keep later layers
    const bool d2 = pa[i].name == "step_d2";
    const int h = 8, in_b = d2 ? K + 1 : K;
    Eigen::Map<ad::Mat> wa(va.data(), h, in_b + K);
    Eigen::Map<const ad::Mat> wb(vb.data(), h, in_b);
    wa.setZero();
    wa.leftCols(K) = wb.leftCols(K);
    if (d2) wa.col(2 * K) = wb.col(K);  // t column
    const Eigen::Index rest_a = h * (in_b + K), rest_b = h * in_b;
    va.tail(va.size() - rest_a) = vb.tail(vb.size() - rest_b);
  }
  const auto f = random_vec(400, 12, 0.4);
  for (double t : {0.0, 0.5}) {
    const std::array<double, 2> p{0.9, 2.5};
    EXPECT_NEAR(model_forward(a, f, p, t).v, model_forward(b, f, p, t).v, 1e-13);
  }
}

TEST(ModelCheckpoint, RoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "spinn_model_ckpt";
  std::filesystem::create_directories(dir);
  SpectralPinnModel a(sphere_info(), small_sphere(StepVariant::exp_nonlinear_a), 41);
  SpectralPinnModel b(sphere_info(), small_sphere(StepVariant::exp_nonlinear_a), 42);
  save_model(dir / "m.ckpt", a, "");
  load_model_params(dir / "m.ckpt", b);
  const auto f = random_vec(400, 13, 0.4);
  const std::array<double, 2> p{0.5, 1.5};
  EXPECT_EQ(model_forward(a, f, p, 0.3).v, model_forward(b, f, p, 0.3).v);
  SpectralPinnModel c(sphere_info(), small_sphere(StepVariant::naive_mlp_c), 42);
  EXPECT_THROW(load_model_params(dir / "m.ckpt", c), Error);
  std::filesystem::remove_all(dir);
}

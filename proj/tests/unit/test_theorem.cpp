#include "spinn/common/error.hpp"
#include "spinn/theorem/theorem_nets.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace spinn;
using namespace spinn::theorem;

namespace {

ComponentNetSpec spec_of(TargetKind kind, int n, int k = 1) {
  ComponentNetSpec s;
  s.target = kind;
  s.n = n;
  s.k = k;
  return s;
}

TheoremComponents exact_parts(int K) {
  TheoremComponents p;
  p.mul_decay = exact_component(spec_of(TargetKind::mul2, 4));
  p.mul_recon = exact_component(spec_of(TargetKind::mul2, 4));
  for (int k = 1; k <= K; ++k) {
    p.decays.emplace(k, exact_component(spec_of(TargetKind::exp_decay, 4, k)));
    p.sines.emplace(k, exact_component(spec_of(TargetKind::sine, 4, k)));
  }
  return p;
}

}  // namespace

TEST(ComponentNet, Targets) {
  const std::array<double, 2> xy{0.3, -0.5};
  EXPECT_DOUBLE_EQ(spec_of(TargetKind::mul2, 8).target_value(xy), -0.15);
  const std::array<double, 1> t{0.5};
  EXPECT_NEAR(spec_of(TargetKind::exp_decay, 8).target_value(t), 0.8208687, 1e-7);
  const std::array<double, 1> x{0.125};
  EXPECT_NEAR(spec_of(TargetKind::sine, 8, 2).target_value(x), 1.0, 1e-15);
  EXPECT_EQ(dense_grid(spec_of(TargetKind::mul2, 8)).cols(), 10000);
  EXPECT_EQ(dense_grid(spec_of(TargetKind::sine, 8)).cols(), 10000);
}

TEST(ComponentNet, RejectsTooFewUnits) {
  try {
    (void)fit_component_net(spec_of(TargetKind::sine, 3), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::FitDiverged);
  }
}

TEST(ComponentNet, FittedFacesAndCounts) {
  const FittedComponent m = fit_component_net(spec_of(TargetKind::mul2, 16), 1);
  EXPECT_EQ(m.net.param_count(), 16u * 2 + 2 * 16 + 1);
  for (double y : {-1.0, -0.37, 0.0, 0.52, 1.0}) {
    const std::array<double, 2> p{0.0, y};
    EXPECT_LE(std::abs(m.net(p)), m.max_error);
  }
  const FittedComponent e = fit_component_net(spec_of(TargetKind::exp_decay, 8), 1);
  EXPECT_EQ(e.net.param_count(), 8u + 2 * 8 + 1);
  const std::array<double, 1> t0{0.0};
  EXPECT_LE(std::abs(e.net(t0) - 1.0), e.max_error);
}

TEST(ComponentNet, Mul2AtSixtyFourUnits) {
  const FittedComponent m = fit_component_net(spec_of(TargetKind::mul2, 64), 1);
  EXPECT_LE(m.max_error, 1e-3);
}

TEST(ComponentNet, WarmStartKeepsTrainingLoss) {
  const FittedComponent small = fit_component_net(spec_of(TargetKind::sine, 8, 3), 5);
  const FittedComponent big = fit_component_net(spec_of(TargetKind::sine, 16, 3), 5, &small.net);
  EXPECT_LE(big.max_error, 1.1 * small.max_error);
}

TEST(Assembly, ExactComponentsReproduceDecay) {
  const AssembledBlock blk = assemble_theorem_blocks(exact_parts(5), 5);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::array<double, 5> c{};
    for (double& ci : c) ci = u(rng);
    const double t = 0.5 * (u(rng) + 1.0);
    EXPECT_LE((blk.decay(t, c) - exact_decay(t, c, 0.01)).cwiseAbs().maxCoeff(), 1e-12);
    const double x = 0.5 * (u(rng) + 1.0);
    double direct = 0;
    for (int k = 1; k <= 5; ++k) direct += c[k - 1] * std::sin(2 * std::numbers::pi * k * x);
    EXPECT_NEAR(blk.reconstruct(c, x), direct, 1e-12);
  }
  EXPECT_EQ(blk.decay_param_count(), 0u);
}

TEST(Assembly, MissingComponents) {
  auto expect_missing = [](TheoremComponents p, int K) {
    try {
      (void)assemble_theorem_blocks(std::move(p), K);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::MissingComponent);
    }
  };
  TheoremComponents no_m = exact_parts(3);
  no_m.mul_decay.reset();
  expect_missing(no_m, 3);
  expect_missing(exact_parts(3), 4);
  TheoremComponents no_s = exact_parts(3);
  no_s.sines.erase(2);
  expect_missing(no_s, 3);
  TheoremComponents decay_only = exact_parts(3);
  decay_only.sines.clear();
  decay_only.mul_recon.reset();
  EXPECT_NO_THROW((void)assemble_theorem_blocks(decay_only, 3));
}

TEST(Assembly, FittedTriangleBound) {
  const int K = 5;
  TheoremComponents p;
  p.mul_decay = as_component(fit_component_net(spec_of(TargetKind::mul2, 24), 2));
  for (int k = 1; k <= K; ++k) p.decays.emplace(k, as_component(fit_component_net(spec_of(TargetKind::exp_decay, 8, k), 2 + k)));
  const AssembledBlock blk = assemble_theorem_blocks(p, K);

  // Exact arithmetic of the wiring.
  std::size_t expected = K * (24u * 2 + 2 * 24 + 1);
  for (int k = 1; k <= K; ++k) expected += 8u + 2 * 8 + 1;
  EXPECT_EQ(blk.decay_param_count(), expected);

  std::array<double, K> zero{};
  for (double t : {0.0, 0.3, 1.0})
    EXPECT_LE(blk.decay(t, zero).cwiseAbs().maxCoeff(), p.mul_decay->max_error);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::array<double, K> c{};
    for (double& ci : c) ci = u(rng);
    for (int i = 0; i <= 200; ++i) {
      const double t = i / 200.0;
      worst = std::max(worst, (blk.decay(t, c) - exact_decay(t, c, 0.01)).cwiseAbs().maxCoeff());
    }
  }
  EXPECT_LE(worst, blk.decay_error_bound());
  EXPECT_GT(worst, 0.0);
}

TEST(Assembly, ReconstructionBound) {
  const int K = 3;
  TheoremComponents p = exact_parts(K);
  p.mul_recon = as_component(fit_component_net(spec_of(TargetKind::mul2, 16), 4));
  for (int k = 1; k <= K; ++k) p.sines[k] = as_component(fit_component_net(spec_of(TargetKind::sine, 16, k), 4 + k));
  const AssembledBlock blk = assemble_theorem_blocks(p, K);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0;
  for (int trial = 0; trial < 30; ++trial) {
    std::array<double, K> a{};
    for (double& ai : a) ai = u(rng);
    for (int i = 0; i <= 200; ++i) {
      const double x = i / 200.0;
      double direct = 0;
      for (int k = 1; k <= K; ++k) direct += a[k - 1] * std::sin(2 * std::numbers::pi * k * x);
      worst = std::max(worst, std::abs(blk.reconstruct(a, x) - direct));
    }
  }
  EXPECT_LE(worst, blk.recon_error_bound());
}

TEST(Ladder, ConstantIsExact) {
  ComponentNetSpec s = spec_of(TargetKind::constant, 4);
  s.value = 0.3;
  const std::vector<int> ladder{4, 8};
  const LadderReport r = verify_decay(s, ladder, 1);
  for (const LadderRow& row : r.rows) EXPECT_LE(row.max_error, 1e-12);
}

TEST(Ladder, SineNonIncreasing) {
  const std::vector<int> ladder{4, 8, 16, 32};
  const LadderReport r = verify_decay(spec_of(TargetKind::sine, 4), ladder, 1);
  ASSERT_EQ(r.rows.size(), 4u);
  EXPECT_TRUE(r.monotone);
  EXPECT_TRUE(r.decayed_tenfold);
}

TEST(Ladder, ExpDecayTenfold) {
  const std::vector<int> ladder{4, 8, 16};
  const LadderReport r = verify_decay(spec_of(TargetKind::exp_decay, 4, 5), ladder, 1);
  EXPECT_LE(r.rows.back().max_error, r.rows.front().max_error / 10.0);
}

TEST(Ladder, RejectsUnsortedAndWritesCsv) {
  const std::vector<int> bad{8, 4};
  EXPECT_THROW((void)verify_decay(spec_of(TargetKind::sine, 4), bad, 1), Error);

  const auto path = std::filesystem::temp_directory_path() / "spinn_ladder" / "ladder.csv";
  write_ladder_csv(path, {{8, "sine[k=1]", 1e-3}, {16, "sine[k=1]", 2e-5}});
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "n,target,max_error");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 2);
  std::filesystem::remove_all(path.parent_path());
}

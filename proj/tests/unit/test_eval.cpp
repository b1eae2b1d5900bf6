#include "spinn/common/error.hpp"
#include "spinn/eval/experiment.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

using namespace spinn;
using namespace spinn::eval;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::IoError;
}

}  // namespace

TEST(Config, ParsesKeysCommentsAndLists) {
  const ExperimentConfig c = parse_config(
      "# heat run\n"
      "name = demo\n"
      "train_n = 128   \n"
      "lr=0.005\n"
      "variants = exact, naive\n"
      "stability_times = 0.1, 0.5\n");
  EXPECT_EQ(c.name, "demo");
  EXPECT_EQ(c.train_n, 128);
  EXPECT_DOUBLE_EQ(c.lr, 0.005);
  EXPECT_EQ(c.variants, (std::vector<std::string>{"exact", "naive"}));
  EXPECT_EQ(c.stability_times, (std::vector<double>{0.1, 0.5}));
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_EQ(kind_of([] { (void)parse_config("no_such_key = 1\n"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { (void)parse_config("train_n = many\n"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { (void)parse_config("just a line\n"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { (void)preset("nope"); }), ErrorKind::ConfigError);
}

TEST(Config, ValidateCatchesInconsistentSettings) {
  EXPECT_EQ(kind_of([] { (void)parse_config("eval_steps = 7\n"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { (void)parse_config("stability_times = 0.9\n"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { (void)parse_config("geometry = sphere\npde = heat\n"); }), ErrorKind::ConfigError);
}

TEST(Config, PresetLineAndOverrides) {
  const ExperimentConfig c = parse_config("preset = table3-desk\nfull_epochs = 3\n");
  EXPECT_EQ(c.geometry, model::Geometry::sphere);
  EXPECT_EQ(c.full_epochs, 3);
  EXPECT_EQ(c.degree, preset("table3-desk").degree);
}

TEST(Config, EveryPresetValidates) {
  for (const std::string& n : preset_names()) EXPECT_NO_THROW(preset(n).validate()) << n;
}

TEST(Config, SerializeRoundTripsAndHashIgnoresOut) {
  for (const std::string& n : preset_names()) {
    const ExperimentConfig c = preset(n);
    EXPECT_EQ(parse_config(c.serialize()).hash(), c.hash()) << n;
  }
  ExperimentConfig a = preset("minimal"), b = a;
  b.out = "elsewhere";
  EXPECT_EQ(a.hash(), b.hash());
  b.seed = a.seed + 1;
  EXPECT_NE(a.hash(), b.hash());
}

TEST(Metrics, MseAndErrorVsTimeByHand) {
  Tables truth{Eigen::MatrixXd::Zero(4, 3), Eigen::MatrixXd::Zero(4, 3)};
  Tables pred{Eigen::MatrixXd::Constant(4, 3, 2.0), Eigen::MatrixXd::Zero(4, 3)};
  pred[1](0, 2) = 4.0;
  // squares: 12 entries of 4 plus one 16, over 24 entries
  EXPECT_DOUBLE_EQ(mse_metric(pred, truth), (12 * 4.0 + 16.0) / 24.0);
  const std::vector<double> e = error_vs_time(pred, truth);
  ASSERT_EQ(e.size(), 3u);
  EXPECT_DOUBLE_EQ(e[0], std::sqrt(16.0) / 4);
  EXPECT_DOUBLE_EQ(e[2], std::sqrt(16.0) / 4 + 4.0 / 4);
}

TEST(Metrics, HeatTruthMatchesSamplesAtTimeZero) {
  const train::Family fam = train::sample_family(train::FamilySpec::interval(20), 3, 5);
  const EvalGrid grid = default_eval_grid(fam.spec, 0.5, 10);
  ASSERT_EQ(grid.times.size(), 11u);
  EXPECT_DOUBLE_EQ(grid.times.back(), 0.5);
  const Tables truth = oracle_truth(fam, {oracle::PdeKind::heat, 0.01, model::Geometry::interval, 0.5}, grid);
  for (int i = 0; i < 3; ++i) EXPECT_LE((truth[i].col(0) - fam.samples.col(i)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(kind_of([&] {
              (void)oracle_truth(fam, {oracle::PdeKind::allen_cahn, 0.1, model::Geometry::interval, 0.5}, grid);
            }),
            ErrorKind::ConfigError);
}

TEST(Metrics, StabilityOfExactModelIsSeededAndBounded) {
  const ExperimentConfig cfg = preset("minimal");
  auto m = build_variant("exact", cfg, 1);
  const train::Family fam = train::sample_family(cfg.train_family(), 2, 9);
  const EvalGrid grid = default_eval_grid(fam.spec, 0.5, 10);
  const auto a = stability_metric(*m, fam, grid.points, {0.0, 0.5}, 0.3, 4);
  const auto b = stability_metric(*m, fam, grid.points, {0.0, 0.5}, 0.3, 4);
  EXPECT_EQ(a, b);
  // The exact model keeps only the first 20 sine modes of the noise and then damps them.
  EXPECT_GT(a[0], 0.0);
  EXPECT_LE(a[0], 1.0 + 1e-12);
  EXPECT_LT(a[1], a[0]);
  EXPECT_EQ(kind_of([&] { (void)stability_metric(*m, fam, grid.points, {0.5}, 0.0, 4); }), ErrorKind::ConfigError);
}

TEST(Experiment, CsvRowsAndNonFiniteValues) {
  MetricRow r{"run", "interval", "naive", 0.01, "mse", std::nullopt, 0.25, 3, "abc"};
  EXPECT_EQ(metric_csv_header(), "run_id,geometry,variant,epsilon_or_alpha,metric,t,value,seed,config_hash");
  EXPECT_EQ(to_csv(r), "run,interval,naive,0.01,mse,,0.25,3,abc");
  r.value = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(kind_of([&] { (void)to_csv(r); }), ErrorKind::Diverged);
}

TEST(Experiment, UnknownVariantIsRejected) {
  const ExperimentConfig cfg = preset("minimal");
  EXPECT_EQ(kind_of([&] { (void)build_variant("sphere_a", cfg, 1); }), ErrorKind::InvalidVariant);
  EXPECT_EQ(kind_of([&] { (void)build_variant("bogus", preset("table3-desk"), 1); }), ErrorKind::InvalidVariant);
}

TEST(Experiment, MinimalRunIsExactAndReproducible) {
  const auto dir = std::filesystem::temp_directory_path() / "spinn_eval_minimal";
  std::filesystem::remove_all(dir);
  ExperimentConfig cfg = preset("minimal");
  cfg.out = dir / "a";
  ::setenv("SPINN_CACHE_DIR", (dir / "cache").c_str(), 1);
  const ExperimentResult r1 = run_experiment(cfg);
  cfg.out = dir / "b";
  const ExperimentResult r2 = run_experiment(cfg);
  ::unsetenv("SPINN_CACHE_DIR");
  bool saw_mse = false;
  for (const auto& row : r1.rows)
    if (row.metric == "mse") {
      saw_mse = true;
      EXPECT_LE(row.value, 1e-12);
    }
  EXPECT_TRUE(saw_mse);
  EXPECT_EQ(slurp(r1.metrics_csv), slurp(r2.metrics_csv));
  EXPECT_TRUE(std::filesystem::exists(dir / "a" / "error_vs_time.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "a" / "config.txt"));
}

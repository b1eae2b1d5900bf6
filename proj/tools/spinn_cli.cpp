// Command-line front end: spinn <command> [--config f | --preset p] [--out d] [--seed s]
#include "spinn/bases/sine.hpp"
#include "spinn/bases/sphere.hpp"
#include "spinn/bases/torus.hpp"
#include "spinn/common/error.hpp"
#include "spinn/common/runtime.hpp"
#include "spinn/eval/experiment.hpp"
#include "spinn/theorem/theorem_nets.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>

using namespace spinn;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalFailure = 3;

struct Common {
  std::string config;
  std::string preset;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c) {
  auto* cfg = cmd->add_option("--config", c.config, "flat key = value config file");
  auto* pre = cmd->add_option("--preset", c.preset, "named preset")->check(CLI::IsMember(eval::preset_names()));
  cfg->excludes(pre);
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--seed", c.seed, "base seed");
  cmd->add_option("--set", c.sets, "extra key=value overrides")->take_all();
}

eval::ExperimentConfig resolve(const Common& c) {
  eval::ExperimentConfig cfg;
  if (!c.config.empty()) cfg = eval::load_config(c.config);
  else if (!c.preset.empty()) cfg = eval::preset(c.preset);
  else throw Error(ErrorKind::ConfigError, "pass --config <path> or --preset <name>");
  for (const std::string& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::ConfigError, "--set expects key=value, got '" + kv + "'");
    eval::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.out = c.out;
  cfg.validate();
  return cfg;
}

void print_rows(const std::vector<eval::MetricRow>& rows, const std::string& metric) {
  for (const auto& r : rows)
    if (metric.empty() || r.metric == metric) std::cout << eval::to_csv(r) << "\n";
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw Error(ErrorKind::IoError, "cannot write " + p.string());
  f.precision(17);
  return f;
}

int cmd_oracle(const eval::ExperimentConfig& cfg, int stride) {
  const train::Family test = train::sample_family(cfg.train_family(), cfg.test_n, model::mix_seed(cfg.seed, 2));
  const eval::EvalGrid grid = eval::default_eval_grid(cfg.train_family(), cfg.T, cfg.eval_steps);
  const eval::Tables truth = eval::oracle_truth(test, cfg.pde_spec(), grid, {cfg.oracle_dt, eval::cache_dir_for(cfg) / "oracle"});
  auto out = open_out(cfg.out / "oracle.csv");
  out << "ic,point,t,value\n";
  for (std::size_t i = 0; i < truth.size(); ++i)
    for (Eigen::Index n = 0; n < truth[i].cols(); n += stride)
      for (Eigen::Index p = 0; p < truth[i].rows(); ++p)
        out << i << "," << p << "," << grid.times[static_cast<std::size_t>(n)] << "," << truth[i](p, n) << "\n";
  std::cout << "oracle tables for " << truth.size() << " initial conditions written to " << (cfg.out / "oracle.csv")
            << "\n";
  return kOk;
}

int cmd_basis(const eval::ExperimentConfig& cfg) {
  const train::Family fam = train::sample_family(cfg.train_family(), cfg.test_n, model::mix_seed(cfg.seed, 2));
  auto eig = open_out(cfg.out / "basis.csv");
  eig << "index,eigenvalue\n";
  auto res = open_out(cfg.out / "residual_energy.csv");
  res << "ic,relative_residual\n";
  const int K = cfg.coefficient_width();
  switch (cfg.geometry) {
    case model::Geometry::interval: {
      const bases::SineTransform tr({K, 101});
      const Eigen::MatrixXd design = bases::sine_design({K, 101});
      for (int k = 1; k <= K; ++k) eig << k << "," << std::pow(2 * std::numbers::pi * k, 2) << "\n";
      for (int i = 0; i < fam.size(); ++i) {
        const Eigen::VectorXd f = fam.samples.col(i);
        res << i << "," << (design * (tr.matrix() * f) - f).norm() / f.norm() << "\n";
      }
      break;
    }
    case model::Geometry::sphere: {
      const bases::SphereTransform tr({cfg.degree, cfg.grid, cfg.grid});
      for (int i = 0; i < tr.spec().count(); ++i) {
        const auto [l, m] = bases::sph_degree_order(i);
        (void)m;
        eig << i << "," << l * (l + 1) << "\n";
      }
      for (int i = 0; i < fam.size(); ++i) {
        const Eigen::VectorXd f = fam.samples.col(i);
        res << i << "," << (tr.design() * (tr.matrix() * f) - f).norm() / f.norm() << "\n";
      }
      break;
    }
    case model::Geometry::torus: {
      const bases::EigenBasis b = bases::torus_eigenbasis({cfg.torus_R, cfg.torus_r, cfg.grid, cfg.grid}, K);
      for (int k = 0; k < b.count(); ++k) eig << k << "," << b.eigenvalues[k] << "\n";
      for (int i = 0; i < fam.size(); ++i) {
        const Eigen::VectorXd f = fam.samples.col(i);
        const Eigen::VectorXd r = f - b.vectors * b.project(f);
        res << i << "," << std::sqrt(r.dot(b.mass * r) / f.dot(b.mass * f)) << "\n";
      }
      break;
    }
  }
  std::cout << "basis.csv and residual_energy.csv written to " << cfg.out << "\n";
  return kOk;
}

int cmd_theorem(const std::filesystem::path& out, std::uint64_t seed) {
  using namespace spinn::theorem;
  bool ok = true;
  std::vector<LadderRow> rows;
  auto ladder = [&](ComponentNetSpec s, std::vector<int> ns) {
    const LadderReport r = verify_decay(s, ns, seed);
    rows.insert(rows.end(), r.rows.begin(), r.rows.end());
    std::cout << s.label() << ": monotone " << (r.monotone ? "yes" : "no") << ", tenfold decay "
              << (r.decayed_tenfold ? "yes" : "no") << "\n";
    ok = ok && r.monotone && r.decayed_tenfold;
    return r;
  };
  ComponentNetSpec s;
  s.target = TargetKind::sine;
  ladder(s, {4, 8, 16, 32});
  s.target = TargetKind::exp_decay;
  ladder(s, {4, 8, 16, 32});
  s.k = 5;
  ladder(s, {4, 8, 16, 32});
  s = ComponentNetSpec{};
  s.target = TargetKind::mul2;
  const LadderReport mul = ladder(s, {8, 16, 32, 64});
  const double mul_err = mul.rows.back().max_error;
  std::cout << "mul2 n=64 max error " << mul_err << (mul_err <= 1e-3 ? " (<= 1e-3)" : " (> 1e-3)") << "\n";
  ok = ok && mul_err <= 1e-3;
  write_ladder_csv(out / "ladder.csv", rows);

  // K = 5 assembly against its triangle bound on a dense grid.
  const int K = 5;
  TheoremComponents parts;
  s.n = 32;
  parts.mul_decay = as_component(fit_component_net(s, seed));
  for (int k = 1; k <= K; ++k) {
    ComponentNetSpec e;
    e.target = TargetKind::exp_decay;
    e.k = k;
    e.n = 16;
    parts.decays.emplace(k, as_component(fit_component_net(e, seed + k)));
  }
  const AssembledBlock blk = assemble_theorem_blocks(parts, K);
  double worst = 0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::array<double, K> c{};
    for (double& ci : c) ci = u(rng);
    for (int i = 0; i <= 1000; ++i) {
      const double t = i / 1000.0;
      worst = std::max(worst, (blk.decay(t, c) - exact_decay(t, c, 0.01)).cwiseAbs().maxCoeff());
    }
  }
  auto a = open_out(out / "assembly.csv");
  a << "K,measured_error,bound,decay_params\n" << K << "," << worst << "," << blk.decay_error_bound() << ","
    << blk.decay_param_count() << "\n";
  std::cout << "assembled decay K=5: error " << worst << ", bound " << blk.decay_error_bound() << "\n";
  ok = ok && worst <= blk.decay_error_bound();
  return ok ? kOk : kNumericalFailure;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Spectral PINN experiments"};
  app.require_subcommand(1);
  Common common;
  int stride = 50;
  std::string theorem_out = "out";
  std::uint64_t theorem_seed = 1;

  auto* train_cmd = app.add_subcommand("train", "train every variant of the config (weights are cached)");
  auto* eval_cmd = app.add_subcommand("evaluate", "train if needed and write all metrics");
  auto* oracle_cmd = app.add_subcommand("oracle", "solve the ground truth for the test family");
  auto* basis_cmd = app.add_subcommand("basis", "eigenvalues and projection residuals of the spectral basis");
  auto* stab_cmd = app.add_subcommand("stability", "noise stability metric only");
  auto* gen_cmd = app.add_subcommand("generalize", "generalization MSE only");
  for (auto* c : {train_cmd, eval_cmd, oracle_cmd, basis_cmd, stab_cmd, gen_cmd}) add_common(c, common);
  oracle_cmd->add_option("--stride", stride, "write every stride-th time step")->check(CLI::PositiveNumber);
  auto* thm_cmd = app.add_subcommand("theorem-check", "component-network ladders and the assembly bound");
  thm_cmd->add_option("--out", theorem_out, "output directory");
  thm_cmd->add_option("--seed", theorem_seed, "fit seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*thm_cmd) return cmd_theorem(theorem_out, theorem_seed);
    const eval::ExperimentConfig cfg = resolve(common);
    if (*oracle_cmd) return cmd_oracle(cfg, stride);
    if (*basis_cmd) return cmd_basis(cfg);
    eval::Stage stage = eval::Stage::evaluate;
    std::string only;
    if (*train_cmd) stage = eval::Stage::train, only = "param_count";
    if (*stab_cmd) stage = eval::Stage::stability, only = "stability";
    if (*gen_cmd) stage = eval::Stage::generalize, only = "generalization_mse";
    const eval::ExperimentResult r = eval::run_experiment(cfg, stage);
    print_rows(r.rows, *eval_cmd ? "mse" : only);
    if (*eval_cmd) print_rows(r.rows, "generalization_mse");
    std::cout << "metrics written to " << r.metrics_csv << "\n";
    return kOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::ConfigError || e.kind() == ErrorKind::InvalidVariant ? kConfigError
                                                                                         : kNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericalFailure;
  }
}

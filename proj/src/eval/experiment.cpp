#include "spinn/eval/experiment.hpp"

#include "spinn/bases/sine.hpp"
#include "spinn/bases/torus.hpp"
#include "spinn/common/binary_io.hpp"
#include "spinn/common/error.hpp"
#include "spinn/common/runtime.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace spinn::eval {

namespace {

std::string num(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool is_naive(const std::string& id) { return id == "naive"; }

model::BlockConfig block_config(const ExperimentConfig& cfg) {
  model::BlockConfig b;
  b.geometry = cfg.geometry;
  b.K = cfg.coefficient_width();
  b.samples = cfg.train_family().samples();
  b.alpha = cfg.coeff;
  b.sphere_degree = cfg.degree;
  if (cfg.geometry == model::Geometry::torus) {
    b.grid_h = cfg.grid;
    b.grid_w = cfg.grid;
  }
  b.step_layers = cfg.step_layers;
  b.step_hidden = cfg.step_hidden;
  b.d12_layers = cfg.d12_layers;
  b.d12_hidden = cfg.d12_hidden;
  b.d2_layers = cfg.d2_layers;
  b.d2_hidden = cfg.d2_hidden;
  b.recon_layers = cfg.recon_layers;
  b.recon_hidden = cfg.recon_hidden;
  return b;
}

bases::TorusGeometry torus_geom(const ExperimentConfig& cfg) { return {cfg.torus_R, cfg.torus_r, cfg.grid, cfg.grid}; }

std::uint64_t variant_seed(const ExperimentConfig& cfg, const std::string& id) {
  return model::mix_seed(cfg.seed, io::Fnv1a().add(id).value());
}

// Rethrows spinn errors with the stage name in front.
template <typename F>
auto staged(const char* stage, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("stage ") + stage + ": " + e.what());
  }
}

}  // namespace

std::string metric_csv_header() { return "run_id,geometry,variant,epsilon_or_alpha,metric,t,value,seed,config_hash"; }

std::string to_csv(const MetricRow& r) {
  if (!std::isfinite(r.value)) throw Error(ErrorKind::Diverged, "metric " + r.metric + " of " + r.variant + " is not finite");
  std::string s = r.run_id + "," + r.geometry + "," + r.variant + "," + num(r.epsilon_or_alpha) + "," + r.metric + ",";
  if (r.t) s += num(*r.t);
  s += "," + num(r.value) + "," + std::to_string(r.seed) + "," + r.config_hash;
  return s;
}

void write_metric_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows) {
  std::string text = metric_csv_header() + "\n";
  for (const MetricRow& r : rows) text += to_csv(r) + "\n";
  write_text(path, text);
}

std::unique_ptr<model::Model> build_variant(const std::string& id, const ExperimentConfig& cfg, std::uint64_t seed) {
  const model::ModelInfo info = cfg.train_family().model_info();
  if (is_naive(id)) {
    model::NaiveSpec ns;
    ns.layers = cfg.naive_layers > 0 ? cfg.naive_layers : (cfg.geometry == model::Geometry::interval ? 6 : 26);
    ns.hidden = cfg.naive_hidden;
    return std::make_unique<model::NaiveModel>(info, ns, seed);
  }
  model::SpectralSpec s;
  s.blocks = block_config(cfg);
  using TV = model::TransformVariant;
  using SV = model::StepVariant;
  using RV = model::ReconVariant;
  auto set = [&](TV t, SV st, RV r) {
    s.transform = t;
    s.step = st;
    s.recon = r;
  };
  switch (cfg.geometry) {
    case model::Geometry::interval:
      if (id == "exact") {
        set(TV::exact_operator, SV::realization_heat, RV::exact_sine);
        s.blocks.exact_operator = bases::SineTransform({s.blocks.K, s.blocks.samples}).matrix();
      } else if (id == "spectral_full") {
        set(TV::linear_trained, SV::realization_heat, RV::exact_sine);
      } else if (id == "spectral_step_mlp") {
        set(TV::linear_trained, SV::mlp_plain, RV::exact_sine);
      } else if (id == "spectral_recon_mlp") {
        set(TV::linear_trained, SV::realization_heat, RV::mlp_interval);
      } else {
        break;
      }
      return std::make_unique<model::SpectralPinnModel>(info, s, seed);
    case model::Geometry::sphere:
      if (id == "sphere_a") set(TV::linear_trained, SV::exp_nonlinear_a, RV::sphere_spectral_activations);
      else if (id == "sphere_b") set(TV::linear_trained, SV::exp_standard_b, RV::sphere_spectral_activations);
      else if (id == "sphere_c") set(TV::linear_trained, SV::naive_mlp_c, RV::sphere_spectral_activations);
      else break;
      return std::make_unique<model::SpectralPinnModel>(info, s, seed);
    case model::Geometry::torus:
      if (id == "torus_spectral_a") {
        set(TV::grid_conv_trained, SV::torus_a, RV::torus_mlp);
      } else if (id == "torus_spectral_b") {
        set(TV::grid_conv_trained, SV::torus_b, RV::torus_mlp);
      } else if (id == "torus_autoenc_a") {
        set(TV::encoder, SV::torus_a, RV::decoder);
        s.blocks.K = cfg.encoder_K > 0 ? cfg.encoder_K : std::max(1, (2 * s.blocks.samples) / 3);
      } else {
        break;
      }
      return std::make_unique<model::SpectralPinnModel>(info, s, seed);
  }
  throw Error(ErrorKind::InvalidVariant,
              "variant '" + id + "' is not defined for geometry " + std::string(model::to_string(cfg.geometry)));
}

train::ScheduleSpec variant_schedule(const std::string& id, const ExperimentConfig& cfg, model::Model& m) {
  train::ScheduleSpec s;
  s.pde = cfg.pde_spec();
  s.batch_size = cfg.batch_size;
  s.adam.learning_rate = cfg.lr;
  s.lr_final = cfg.lr_final;
  s.coef_loss = cfg.coef_loss;
  s.l0_points = cfg.l0_points;
  s.seed = variant_seed(cfg, id) ^ 0x5CED;
  if (m.param_count() == 0) return s;
  auto* sp = dynamic_cast<model::SpectralPinnModel*>(&m);
  if (!sp) {
    if (cfg.naive_epochs > 0) s.phases.push_back({train::PhaseKind::full, cfg.naive_epochs});
    return s;
  }
  const bool numerical = sp->transformation().variant() == model::TransformVariant::grid_conv_trained;
  const bool outer = sp->transformation().param_count() + sp->reconstruction().param_count() > 0;
  if (cfg.pretrain_epochs > 0 && outer) {
    if (numerical) {
      s.transform_target = bases::torus_eigenbasis(torus_geom(cfg), cfg.coefficient_width()).projector();
      s.phases.push_back({train::PhaseKind::fit_transform, cfg.pretrain_epochs});
      s.phases.push_back({train::PhaseKind::fit_recon, cfg.pretrain_epochs});
    } else {
      s.phases.push_back({train::PhaseKind::pretrain, cfg.pretrain_epochs});
    }
  }
  if (cfg.frozen_epochs > 0 && sp->time_stepping().param_count() > 0)
    s.phases.push_back({train::PhaseKind::frozen, cfg.frozen_epochs});
  if (cfg.full_epochs > 0) s.phases.push_back({train::PhaseKind::full, cfg.full_epochs});
  return s;
}

std::filesystem::path cache_dir_for(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("SPINN_CACHE_DIR"); env && *env) return env;
  return cfg.out / "cache";
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, Stage stage) {
  tune_allocator();
  staged("config", [&] {
    cfg.validate();
    return 0;
  });
  const std::filesystem::path cache = cache_dir_for(cfg);
  std::filesystem::create_directories(cache);
  std::filesystem::create_directories(cfg.out);
  const std::string chash = io::hex64(cfg.hash());
  const auto clock = std::chrono::steady_clock::now();
  auto log = [&](const std::string& msg) {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock).count();
    std::clog << "[" << cfg.name << " " << static_cast<long>(s) << "s] " << msg << std::endl;
  };

  const train::DataSpec dspec{cfg.train_family(), cfg.train_n, cfg.T};
  const train::TrainSet data = staged("dataset", [&] {
    const auto path = cache / ("data_" + io::hex64(train::data_key(dspec)) + ".bin");
    return train::load_or_make_train_set(path, dspec, model::mix_seed(cfg.seed, 1));
  });
  const train::Family test = train::sample_family(cfg.train_family(), cfg.test_n, model::mix_seed(cfg.seed, 2));
  const train::Family gen = train::sample_family(cfg.gen_family(), cfg.test_n, model::mix_seed(cfg.seed, 3));
  const EvalGrid grid = default_eval_grid(cfg.train_family(), cfg.T, cfg.eval_steps);
  const TruthOptions topt{cfg.oracle_dt, cache / "oracle"};
  const bool want_mse = stage == Stage::evaluate;
  const bool want_stab = stage == Stage::evaluate || stage == Stage::stability;
  const bool want_gen = stage == Stage::evaluate || stage == Stage::generalize;
  Tables truth, gen_truth;
  if (want_mse) truth = staged("oracle", [&] { return oracle_truth(test, cfg.pde_spec(), grid, topt); });
  if (want_gen) gen_truth = staged("oracle", [&] { return oracle_truth(gen, cfg.pde_spec(), grid, topt); });
  log("data and oracle ready");

  ExperimentResult res;
  std::string curve = "x,series,value\n";
  std::string losses = "variant,phase,epoch,loss\n";
  auto row = [&](const std::string& variant, const std::string& metric, std::optional<double> t, double v) {
    res.rows.push_back({cfg.name, std::string(model::to_string(cfg.geometry)), variant, cfg.coeff, metric, t, v,
                        cfg.seed, chash});
  };

  for (const std::string& id : cfg.variants) {
    std::unique_ptr<model::Model> m = staged("build", [&] { return build_variant(id, cfg, variant_seed(cfg, id)); });
    const std::string key = io::hex64(io::Fnv1a().add(chash).add(id).value());
    const auto ckpt = cache / ("model_" + key + ".bin");
    const auto trace_file = cache / ("trace_" + key + ".csv");
    if (std::filesystem::exists(ckpt) && std::filesystem::exists(trace_file)) {
      staged("train", [&] {
        model::load_model_params(ckpt, *m);
        return 0;
      });
      res.cache_hits.push_back(id);
      log(id + ": weights from cache");
    } else {
      const train::ScheduleSpec sched = variant_schedule(id, cfg, *m);
      const auto traces = staged("train", [&] { return train::run_schedule(*m, data, sched); });
      std::string t;
      for (const auto& tr : traces)
        for (std::size_t e = 0; e < tr.epoch_loss.size(); ++e)
          t += id + "," + std::string(train::to_string(tr.kind)) + "," + std::to_string(e) + "," + num(tr.epoch_loss[e]) +
               "\n";
      model::save_model(ckpt, *m, id + " " + m->describe());
      write_text(trace_file, t);
      log(id + ": trained");
    }
    losses += read_text(trace_file);
    row(id, "param_count", std::nullopt, static_cast<double>(m->param_count()));

    if (want_mse) {
      const Tables pred = staged("evaluate", [&] { return predict(*m, test, grid); });
      row(id, "mse", std::nullopt, mse_metric(pred, truth));
      const std::vector<double> e = error_vs_time(pred, truth);
      for (std::size_t n = 0; n < e.size(); ++n) {
        row(id, "error_vs_time", grid.times[n], e[n]);
        curve += num(grid.times[n]) + "," + id + "," + num(e[n]) + "\n";
      }
    }
    if (want_stab) {
      const std::vector<double> s = staged("stability", [&] {
        return stability_metric(*m, test, grid.points, cfg.stability_times, cfg.noise_variance,
                                model::mix_seed(cfg.seed, 4));
      });
      for (std::size_t n = 0; n < s.size(); ++n) row(id, "stability", cfg.stability_times[n], s[n]);
    }
    if (want_gen) {
      const Tables pred = staged("generalize", [&] { return predict(*m, gen, grid); });
      row(id, "generalization_mse", std::nullopt, mse_metric(pred, gen_truth));
    }
    log(id + ": metrics done");
  }

  res.metrics_csv = cfg.out / "metrics.csv";
  write_metric_csv(res.metrics_csv, res.rows);
  if (want_mse) write_text(cfg.out / "error_vs_time.csv", curve);
  write_text(cfg.out / "train_loss.csv", losses);
  write_text(cfg.out / "config.txt", cfg.serialize());
  return res;
}

}  // namespace spinn::eval

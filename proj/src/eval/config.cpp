#include "spinn/eval/config.hpp"

#include "spinn/common/binary_io.hpp"
#include "spinn/common/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace spinn::eval {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why) {
  throw Error(ErrorKind::ConfigError, "config key '" + key + "' = '" + value + "': " + why);
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad(key, v, "expected an integer");
  return out;
}

double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) bad(key, v, "expected a number");
    return d;
  } catch (const std::logic_error&) {
    bad(key, v, "expected a number");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  bad(key, v, "expected a boolean");
}

std::vector<std::string> split(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string real_str(double d) {
  std::ostringstream s;
  s.precision(17);
  s << d;
  return s.str();
}

struct Field {
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define INT_FIELD(name)                                                                                   \
  Field {                                                                                                 \
    #name, [](ExperimentConfig& c, const std::string& v) { c.name = static_cast<int>(to_int(#name, v)); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.name); }                                  \
  }
#define REAL_FIELD(name)                                                                      \
  Field {                                                                                     \
    #name, [](ExperimentConfig& c, const std::string& v) { c.name = to_real(#name, v); },     \
        [](const ExperimentConfig& c) { return real_str(c.name); }                            \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      {"name", [](ExperimentConfig& c, const std::string& v) { c.name = v; },
       [](const ExperimentConfig& c) { return c.name; }},
      {"geometry",
       [](ExperimentConfig& c, const std::string& v) {
         try {
           c.geometry = model::parse_geometry(v);
         } catch (const Error&) {
           bad("geometry", v, "expected interval, sphere or torus");
         }
       },
       [](const ExperimentConfig& c) { return std::string(model::to_string(c.geometry)); }},
      {"pde",
       [](ExperimentConfig& c, const std::string& v) {
         try {
           c.pde = oracle::parse_pde(v);
         } catch (const Error&) {
           bad("pde", v, "expected heat or allen_cahn");
         }
       },
       [](const ExperimentConfig& c) { return std::string(oracle::to_string(c.pde)); }},
      REAL_FIELD(coeff),
      REAL_FIELD(T),
      INT_FIELD(degree),
      INT_FIELD(gen_degree),
      INT_FIELD(grid),
      REAL_FIELD(torus_R),
      REAL_FIELD(torus_r),
      INT_FIELD(K),
      INT_FIELD(encoder_K),
      {"variants", [](ExperimentConfig& c, const std::string& v) { c.variants = split(v); },
       [](const ExperimentConfig& c) {
         std::string s;
         for (const auto& v : c.variants) s += (s.empty() ? "" : ",") + v;
         return s;
       }},
      INT_FIELD(train_n),
      INT_FIELD(test_n),
      {"seed",
       [](ExperimentConfig& c, const std::string& v) {
         const long long s = to_int("seed", v);
         if (s < 0) bad("seed", v, "expected a non-negative integer");
         c.seed = static_cast<std::uint64_t>(s);
       },
       [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
      INT_FIELD(pretrain_epochs),
      INT_FIELD(frozen_epochs),
      INT_FIELD(full_epochs),
      INT_FIELD(naive_epochs),
      INT_FIELD(batch_size),
      REAL_FIELD(lr),
      REAL_FIELD(lr_final),
      INT_FIELD(l0_points),
      {"coef_loss", [](ExperimentConfig& c, const std::string& v) { c.coef_loss = to_bool("coef_loss", v); },
       [](const ExperimentConfig& c) { return std::string(c.coef_loss ? "1" : "0"); }},
      REAL_FIELD(oracle_dt),
      INT_FIELD(eval_steps),
      REAL_FIELD(noise_variance),
      {"stability_times",
       [](ExperimentConfig& c, const std::string& v) {
         c.stability_times.clear();
         for (const auto& item : split(v)) c.stability_times.push_back(to_real("stability_times", item));
       },
       [](const ExperimentConfig& c) {
         std::string s;
         for (double t : c.stability_times) s += (s.empty() ? "" : ",") + real_str(t);
         return s;
       }},
      INT_FIELD(step_layers),
      INT_FIELD(step_hidden),
      INT_FIELD(d12_layers),
      INT_FIELD(d12_hidden),
      INT_FIELD(d2_layers),
      INT_FIELD(d2_hidden),
      INT_FIELD(recon_layers),
      INT_FIELD(recon_hidden),
      INT_FIELD(naive_layers),
      INT_FIELD(naive_hidden),
  };
  return f;
}

#undef INT_FIELD
#undef REAL_FIELD

}  // namespace

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "out") {
    cfg.out = value;
    return;
  }
  for (const Field& f : fields())
    if (key == f.key) {
      f.set(cfg, value);
      return;
    }
  throw Error(ErrorKind::ConfigError, "unknown config key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "preset") {
      const std::filesystem::path keep = base.out;
      base = preset(value);
      base.out = keep;
      continue;
    }
    apply_setting(base, key, value);
  }
  base.validate();
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorKind::ConfigError, what);
  };
  need(coeff > 0 && T > 0, "coeff and T must be positive");
  need(degree >= 1 && gen_degree >= degree, "need 1 <= degree <= gen_degree");
  need(train_n >= 1 && test_n >= 1, "train_n and test_n must be positive");
  need(pretrain_epochs >= 0 && frozen_epochs >= 0 && full_epochs >= 0 && naive_epochs >= 0,
       "epoch counts must be non-negative");
  need(lr > 0 && lr_final >= 0, "learning rates must be positive");
  need(oracle_dt > 0 && eval_steps >= 1, "oracle_dt and eval_steps must be positive");
  need(noise_variance > 0, "noise_variance must be positive");
  need(!variants.empty(), "at least one variant is required");
  for (double t : stability_times) need(t >= 0 && t <= T, "stability times must lie in [0, T]");
  // Every eval and stability time has to sit on the oracle's step grid.
  const double steps_per_eval = T / eval_steps / oracle_dt;
  need(std::abs(steps_per_eval - std::round(steps_per_eval)) < 1e-9 && std::round(steps_per_eval) >= 1,
       "T / eval_steps must be a multiple of oracle_dt");
  if (geometry == model::Geometry::interval) {
    need(pde == oracle::PdeKind::heat, "the interval experiment is the heat equation");
  } else {
    need(pde == oracle::PdeKind::allen_cahn, "sphere and torus experiments are Allen-Cahn");
    need(grid >= 4, "grid must be at least 4");
  }
  if (geometry == model::Geometry::torus) need(torus_R > torus_r && torus_r > 0, "torus radii must satisfy R > r > 0");
  train_family().validate();
  gen_family().validate();
}

std::string ExperimentConfig::serialize() const {
  std::string s;
  for (const Field& f : fields()) s += std::string(f.key) + " = " + f.get(*this) + "\n";
  return s;
}

std::uint64_t ExperimentConfig::hash() const { return io::Fnv1a().add(serialize()).value(); }

oracle::PdeSpec ExperimentConfig::pde_spec() const { return {pde, coeff, geometry, T}; }

train::FamilySpec ExperimentConfig::family(int deg) const {
  switch (geometry) {
    case model::Geometry::interval: return train::FamilySpec::interval(deg);
    case model::Geometry::sphere: return train::FamilySpec::sphere(deg, grid, grid);
    case model::Geometry::torus: return train::FamilySpec::torus_family(deg, {torus_R, torus_r, grid, grid});
  }
  throw Error(ErrorKind::ConfigError, "unknown geometry");
}

int ExperimentConfig::coefficient_width() const {
  if (K > 0) return K;
  switch (geometry) {
    case model::Geometry::interval: return degree;
    case model::Geometry::sphere: return (degree + 1) * (degree + 1);
    case model::Geometry::torus: return grid * grid;
  }
  return degree;
}

std::vector<std::string> preset_names() {
  return {"minimal", "table1-desk", "table3-desk", "table5-desk", "table1-paper", "table3-paper", "table5-paper"};
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  if (name == "minimal") {
    c.variants = {"exact"};
    c.train_n = 16;
    c.test_n = 4;
    c.full_epochs = 0;
    c.naive_epochs = 0;
    c.eval_steps = 50;
    return c;
  }
  if (name == "table1-desk" || name == "table1-paper") {
    c.variants = {"naive", "spectral_full", "spectral_step_mlp", "spectral_recon_mlp"};
    c.train_n = 5000;
    c.pretrain_epochs = 20;
    c.frozen_epochs = 20;
    c.full_epochs = 100;
    c.naive_epochs = 140;
    c.l0_points = 16;
    c.lr = 3e-3;
    c.lr_final = 1e-4;
    if (name == "table1-paper") {
      c.pretrain_epochs = 50;
      c.frozen_epochs = 50;
      c.full_epochs = 400;
      c.naive_epochs = 400;
      c.l0_points = 0;
    }
    return c;
  }
  if (name == "table3-desk" || name == "table3-paper") {
    c.geometry = model::Geometry::sphere;
    c.pde = oracle::PdeKind::allen_cahn;
    c.coeff = 0.1;
    c.T = 1.0;
    c.degree = 5;
    c.gen_degree = 7;
    c.variants = {"naive", "sphere_a", "sphere_b", "sphere_c"};
    c.stability_times = {0.4, 0.7, 1.0};
    c.pretrain_epochs = 20;
    c.frozen_epochs = 20;
    c.full_epochs = 100;
    c.naive_epochs = 140;
    c.l0_points = 40;
    c.d12_hidden = 40;
    c.d2_hidden = 40;
    c.step_hidden = 40;
    c.naive_layers = 8;
    c.naive_hidden = 64;
    if (name == "table3-paper") {
      c.degree = 9;
      c.gen_degree = 14;
      c.pretrain_epochs = 20;
      c.frozen_epochs = 20;
      c.full_epochs = 25;
      c.naive_epochs = 65;
      c.l0_points = 0;
      c.d12_hidden = 118;
      c.d2_hidden = 206;
      c.step_hidden = 0;
      c.naive_layers = 26;
      c.naive_hidden = 0;
    }
    return c;
  }
  if (name == "table5-desk" || name == "table5-paper") {
    c.geometry = model::Geometry::torus;
    c.pde = oracle::PdeKind::allen_cahn;
    c.coeff = 0.1;
    c.T = 1.0;
    c.degree = 3;
    c.gen_degree = 4;
    c.grid = 9;
    c.variants = {"naive", "torus_spectral_a", "torus_autoenc_a", "torus_spectral_b"};
    c.stability_times = {0.4, 0.7, 1.0};
    c.pretrain_epochs = 5;
    c.frozen_epochs = 5;
    c.full_epochs = 10;
    c.naive_epochs = 20;
    c.l0_points = 20;
    c.d12_hidden = 40;
    c.d2_hidden = 40;
    c.step_hidden = 40;
    c.recon_layers = 5;
    c.recon_hidden = 40;
    c.naive_layers = 8;
    c.naive_hidden = 64;
    if (name == "table5-paper") {
      c.degree = 5;
      c.gen_degree = 10;
      c.grid = 15;
      c.pretrain_epochs = 20;
      c.frozen_epochs = 20;
      c.full_epochs = 25;
      c.naive_epochs = 65;
      c.l0_points = 0;
      c.d12_hidden = 0;
      c.d2_hidden = 0;
      c.step_hidden = 0;
      c.recon_layers = 0;
      c.recon_hidden = 0;
      c.naive_layers = 26;
      c.naive_hidden = 0;
    }
    return c;
  }
  throw Error(ErrorKind::ConfigError, "unknown preset '" + name + "'");
}

}  // namespace spinn::eval

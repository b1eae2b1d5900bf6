#pragma once

#include "spinn/model/blocks.hpp"
#include "spinn/oracle/pde.hpp"
#include "spinn/train/family.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace spinn::eval {

/// Flat `key = value` experiment description. Lines starting with '#' are
/// comments; lists are comma separated. Unknown keys and malformed values throw
/// ConfigError. Every field ends up in the serialized form, so the hash of
/// `serialize()` identifies a run.
struct ExperimentConfig {
  std::string name = "experiment";
  model::Geometry geometry = model::Geometry::interval;
  oracle::PdeKind pde = oracle::PdeKind::heat;
  double coeff = 0.01;     // alpha (heat) or epsilon (Allen-Cahn)
  double T = 0.5;
  int degree = 20;         // training family
  int gen_degree = 30;     // generalization family
  int grid = 20;           // n_theta = n_phi for sphere and torus samples
  double torus_R = 2.0;
  double torus_r = 1.0;
  int K = 0;               // coefficient width; 0 = geometry default
  int encoder_K = 0;       // torus encoder width; 0 = 2/3 of the samples

  std::vector<std::string> variants{"naive", "spectral_full"};
  int train_n = 5000;
  int test_n = 20;
  std::uint64_t seed = 1;

  int pretrain_epochs = 0;
  int frozen_epochs = 0;
  int full_epochs = 10;
  int naive_epochs = 10;
  int batch_size = 64;
  double lr = 1e-3;
  double lr_final = 0.0;
  int l0_points = 0;
  bool coef_loss = true;

  double oracle_dt = 1e-3;
  int eval_steps = 500;
  double noise_variance = 0.3;
  std::vector<double> stability_times{0.2, 0.4, 0.5};

  // Layer sizes; 0 keeps the variant default.
  int step_layers = 0, step_hidden = 0;
  int d12_layers = 0, d12_hidden = 0;
  int d2_layers = 0, d2_hidden = 0;
  int recon_layers = 0, recon_hidden = 0;
  int naive_layers = 0, naive_hidden = 0;

  std::filesystem::path out = "out";

  /// Throws ConfigError on inconsistent values.
  void validate() const;
  /// Canonical `key = value` lines (the output directory is not part of it).
  [[nodiscard]] std::string serialize() const;
  [[nodiscard]] std::uint64_t hash() const;

  [[nodiscard]] oracle::PdeSpec pde_spec() const;
  [[nodiscard]] train::FamilySpec family(int deg) const;
  [[nodiscard]] train::FamilySpec train_family() const { return family(degree); }
  [[nodiscard]] train::FamilySpec gen_family() const { return family(gen_degree); }
  /// Coefficient width handed between blocks.
  [[nodiscard]] int coefficient_width() const;
};

/// Applies one `key = value` assignment.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Named presets: minimal, table1-desk, table3-desk, table5-desk, and the
/// long-running table1-paper, table3-paper, table5-paper.
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace spinn::eval

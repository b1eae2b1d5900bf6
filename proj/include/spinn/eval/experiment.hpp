#pragma once

#include "spinn/eval/config.hpp"
#include "spinn/eval/metrics.hpp"
#include "spinn/model/model.hpp"
#include "spinn/train/training.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace spinn::eval {

/// One output row. `t` is empty for time-independent metrics.
struct MetricRow {
  std::string run_id;
  std::string geometry;
  std::string variant;
  double epsilon_or_alpha = 0.0;
  std::string metric;  // mse, error_vs_time, stability, generalization_mse, param_count
  std::optional<double> t;
  double value = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;
};

std::string metric_csv_header();
std::string to_csv(const MetricRow& row);
/// Writes the header and rows. Throws IoError.
void write_metric_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows);

/// Variant ids per geometry:
///   interval: exact, naive, spectral_full, spectral_step_mlp, spectral_recon_mlp
///   sphere:   naive, sphere_a, sphere_b, sphere_c
///   torus:    naive, torus_spectral_a, torus_autoenc_a, torus_spectral_b
/// Throws InvalidVariant for ids unknown to the geometry.
std::unique_ptr<model::Model> build_variant(const std::string& id, const ExperimentConfig& cfg, std::uint64_t seed);

/// Training phases of a variant (empty for parameter-free models).
train::ScheduleSpec variant_schedule(const std::string& id, const ExperimentConfig& cfg, model::Model& m);

/// Cache directory: $SPINN_CACHE_DIR, else <out>/cache.
std::filesystem::path cache_dir_for(const ExperimentConfig& cfg);

enum class Stage { train, evaluate, stability, generalize };

struct ExperimentResult {
  std::vector<MetricRow> rows;
  std::filesystem::path metrics_csv;
  std::vector<std::string> cache_hits;  // variants whose weights came from the cache
};

/// Builds the datasets, trains (or reloads) every variant, solves the oracle and
/// computes the metrics `stage` asks for. Writes metrics.csv, error_vs_time.csv
/// (long form x, series, value), train_loss.csv and config.txt under cfg.out.
/// Stage errors are rethrown with the stage name prefixed.
ExperimentResult run_experiment(const ExperimentConfig& cfg, Stage stage = Stage::evaluate);

}  // namespace spinn::eval

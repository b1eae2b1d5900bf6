#pragma once

#include "spinn/model/model.hpp"
#include "spinn/oracle/oracle.hpp"
#include "spinn/train/family.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace spinn::eval {

/// Evaluation points (point_dim x P) and times.
struct EvalGrid {
  Eigen::MatrixXd points;
  std::vector<double> times;
};

/// The family's sample grid with times t_n = n T / steps, n = 0..steps.
EvalGrid default_eval_grid(const train::FamilySpec& family, double T, int steps);

/// One P x times table per initial condition.
using Tables = std::vector<Eigen::MatrixXd>;

struct TruthOptions {
  double dt = 1e-3;
  std::filesystem::path cache_dir;  // empty: no trajectory cache
};

/// Ground truth for every member of `family`:
///   interval heat:      closed-form solution
///   sphere Allen-Cahn:  IMEX-BDF4 on the harmonics of the family's degree
///   torus Allen-Cahn:   IMEX-BDF4 on the full FEM eigenbasis of the sample grid
/// Throws ConfigError for combinations without an oracle.
Tables oracle_truth(const train::Family& family, const oracle::PdeSpec& pde, const EvalGrid& grid,
                    const TruthOptions& opt = {});

/// Model tables for every member of `family`.
Tables predict(model::Model& m, const train::Family& family, const EvalGrid& grid);

/// Mean of |pred - truth|^2 over every (ic, point, time).
double mse_metric(const Tables& pred, const Tables& truth);

/// Per time: sum_i (1/P) sqrt(sum_p |pred - truth|^2).
std::vector<double> error_vs_time(const Tables& pred, const Tables& truth);

/// Per requested time: mean over the family of |u(f + d) - u(f)| / |d| with
/// d ~ N(0, variance) on every sample, seeded. Norms are over the eval points
/// and the sample vector. Throws ConfigError unless variance > 0.
std::vector<double> stability_metric(model::Model& m, const train::Family& family, const Eigen::MatrixXd& points,
                                     const std::vector<double>& times, double variance, std::uint64_t seed);

}  // namespace spinn::eval

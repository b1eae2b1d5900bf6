#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spinn::theorem {

enum class TargetKind { mul2, exp_decay, sine, constant };
std::string_view to_string(TargetKind k);

/// Scalar target of a component network.
///   mul2:      x1 * x2 on [-box, box]^2
///   exp_decay: exp(-4 pi^2 k^2 alpha t) on [0, 1]
///   sine:      sin(2 pi k x) on [0, 1]
///   constant:  `value` on [0, 1]
struct ComponentNetSpec {
  TargetKind target = TargetKind::mul2;
  int n = 16;  // hidden tanh units
  int k = 1;
  double alpha = 0.01;
  double box = 1.0;
  double value = 0.0;

  [[nodiscard]] int input_dim() const { return target == TargetKind::mul2 ? 2 : 1; }
  [[nodiscard]] double target_value(std::span<const double> x) const;
  [[nodiscard]] std::string label() const;
};

/// y(x) = sum_j a_j tanh(v_j . x + b_j) + c.
struct TanhNet {
  Eigen::MatrixXd v;  // n x d
  Eigen::VectorXd b;  // n
  Eigen::VectorXd a;  // n
  double c = 0.0;

  [[nodiscard]] double operator()(std::span<const double> x) const;
  /// n d + 2 n + 1.
  [[nodiscard]] std::size_t param_count() const;
};

/// Dense evaluation grid of the spec's domain: 10^4 points in 1-D, 100 x 100 in 2-D.
Eigen::MatrixXd dense_grid(const ComponentNetSpec& spec);

struct FittedComponent {
  ComponentNetSpec spec;
  TanhNet net;
  double max_error = 0.0;  // sup over the dense grid
};

/// Least-squares fit of the tanh net to dense target samples (output layer
/// initialised by linear least squares, then Levenberg-Marquardt on all weights).
/// `warm` (fewer or equal units) seeds the first hidden units.
/// Throws FitDiverged when n < 4 or the fit is not finite.
FittedComponent fit_component_net(const ComponentNetSpec& spec, std::uint64_t seed, const TanhNet* warm = nullptr);

/// Component used by the assembly: a callable with its measured error and weight count.
struct Component {
  ComponentNetSpec spec;
  std::function<double(std::span<const double>)> eval;
  double max_error = 0.0;
  std::size_t param_count = 0;
};
Component as_component(const FittedComponent& f);
/// The exact target itself (error 0, no weights).
Component exact_component(const ComponentNetSpec& spec);

struct TheoremComponents {
  std::optional<Component> mul_decay;   // M on the time-stepping side
  std::optional<Component> mul_recon;   // M on the reconstruction side
  std::map<int, Component> decays;      // E_k
  std::map<int, Component> sines;       // S_k
};

/// Wiring of the approximating blocks:
///   decay(t, c)_k     = M(c_k, E_k(t))
///   reconstruct(a, x) = sum_k M(a_k, S_k(x))
class AssembledBlock {
 public:
  AssembledBlock(TheoremComponents parts, int K) : parts_(std::move(parts)), K_(K) {}
  [[nodiscard]] int K() const { return K_; }
  [[nodiscard]] Eigen::VectorXd decay(double t, std::span<const double> c) const;
  [[nodiscard]] double reconstruct(std::span<const double> a, double x) const;
  /// K copies of M plus every E_k (resp. S_k).
  [[nodiscard]] std::size_t decay_param_count() const;
  [[nodiscard]] std::size_t recon_param_count() const;
  /// Bound from the triangle inequality: e_M + max_k e_{E_k}.
  [[nodiscard]] double decay_error_bound() const;
  /// K (e_M + max_k e_{S_k}) with a_k in [-1, 1].
  [[nodiscard]] double recon_error_bound() const;
  [[nodiscard]] const TheoremComponents& parts() const { return parts_; }

 private:
  TheoremComponents parts_;
  int K_;
};

/// Throws MissingComponent unless M and E_1..E_K are present (and, when any
/// sine is given, M_recon and S_1..S_K).
AssembledBlock assemble_theorem_blocks(TheoremComponents components, int K);

/// Exact decay vector: c_k exp(-4 pi^2 k^2 alpha t).
Eigen::VectorXd exact_decay(double t, std::span<const double> c, double alpha);

struct LadderRow {
  int n;
  std::string target;
  double max_error;
};
struct LadderReport {
  std::vector<LadderRow> rows;
  bool monotone = true;         // each error <= 1.1 x the previous one
  bool decayed_tenfold = true;  // last <= first / 10
};

/// Fits the target at each n (ascending, each level warm-started from the
/// previous one) and reports the error trend.
LadderReport verify_decay(const ComponentNetSpec& target, std::span<const int> ladder, std::uint64_t seed);

/// CSV with header n,target,max_error.
void write_ladder_csv(const std::filesystem::path& path, const std::vector<LadderRow>& rows);

}  // namespace spinn::theorem

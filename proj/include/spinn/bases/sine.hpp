#pragma once

#include <Eigen/Dense>

#include <span>

namespace spinn::bases {

/// sin(2 pi k x) on [0,1], k = 1..K, sampled at x_j = j/(L-1).
struct SineBasisSpec {
  int K = 20;
  int L = 101;
  void validate() const;
  [[nodiscard]] double node(int j) const { return static_cast<double>(j) / (L - 1); }
};

double sine_eval(int k, double x);

/// L x K matrix of sin(2 pi k x_j).
Eigen::MatrixXd sine_design(const SineBasisSpec& spec);

/// Least-squares sample-to-coefficient operator (K x L), built once.
class SineTransform {
 public:
  explicit SineTransform(const SineBasisSpec& spec);
  [[nodiscard]] Eigen::VectorXd apply(std::span<const double> samples) const;
  [[nodiscard]] const Eigen::MatrixXd& matrix() const { return pinv_; }
  [[nodiscard]] const SineBasisSpec& spec() const { return spec_; }

 private:
  SineBasisSpec spec_;
  Eigen::MatrixXd pinv_;
};

/// One-shot transform. Throws RankDeficient when the design loses column rank.
Eigen::VectorXd sine_transform(std::span<const double> samples, const SineBasisSpec& spec);

/// sum_k a_k sin(2 pi k x).
double sine_reconstruct(std::span<const double> coeffs, double x);

}  // namespace spinn::bases

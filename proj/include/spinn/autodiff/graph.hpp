#pragma once

#include "spinn/autodiff/jet.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace spinn::ad {

using Mat = Eigen::MatrixXd;

/// Views of one affine map's parameters inside a flat parameter vector.
/// W is column-major (out x in). Null gradient pointers mean "frozen": the
/// adjoint still flows to the input but nothing is accumulated for W or b.
struct LinearRef {
  const double* weights = nullptr;
  const double* bias = nullptr;
  double* weights_grad = nullptr;
  double* bias_grad = nullptr;
  int out = 0;
  int in = 0;
};

/// Periodic 3x3 convolution parameters. Kernel layout: [out][in][ky][kx].
struct ConvRef {
  const double* kernel = nullptr;
  const double* bias = nullptr;
  double* kernel_grad = nullptr;
  double* bias_grad = nullptr;
  int in_channels = 0;
  int out_channels = 0;
  int height = 0;
  int width = 0;
};

/// Batched define-by-run graph of second-order jets.
///
/// Each node holds a (features x batch) value matrix and, when it depends on a
/// seeded input, matching d1/d2 matrices. backward() applies the same rule as the
/// scalar Tape (local partials are jets) to whole matrices, so the gradient of
/// any jet component of any node can be taken with respect to the parameters
/// referenced by linear/conv nodes.
class Graph {
 public:
  using Id = int;

  struct Seed {
    Id node;
    Component component;
    Mat adjoint;
  };

  /// column_exact selects coefficient-ordered products so that every column is
  /// computed identically regardless of batch size. Training can turn it off.
  explicit Graph(bool column_exact = true) : column_exact_(column_exact) {}

  Id constant(Mat value);
  Id seeded(Mat value, Mat d1, Mat d2);
  /// Row vector `value` with d1 = 1, d2 = 0.
  Id variable(const Eigen::RowVectorXd& value);

  Id linear(const LinearRef& p, Id x);
  /// Fixed (non-trainable) affine map.
  Id linear_fixed(const Mat& weights, const Eigen::VectorXd& bias, Id x);
  Id conv2d_periodic(const ConvRef& p, Id x);

  Id unary(Op op, Id x, int exponent = 0);
  Id tanh(Id x) { return unary(Op::tanh, x); }
  Id exp(Id x) { return unary(Op::exp, x); }
  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);
  Id scale(Id x, double s);
  /// Multiplies row i by factors(i).
  Id scale_rows(Id x, const Eigen::VectorXd& factors);
  Id concat(std::span<const Id> parts);
  Id slice(Id x, int row0, int rows);
  Id sum_rows(Id x);
  /// Value-only copy. Cuts the jet but passes value adjoints through.
  Id value_of(Id x);
  /// out.col(j) = x.col(index[j]); backward scatter-adds.
  Id gather_cols(Id x, std::vector<int> index);
  /// Element-wise cube, x^3 (jet exact).
  Id cube(Id x) { return unary(Op::pow_int, x, 3); }

  [[nodiscard]] const Mat& value(Id id) const { return nodes_.at(id).v; }
  [[nodiscard]] const Mat& d1(Id id) const { return nodes_.at(id).d1; }
  [[nodiscard]] const Mat& d2(Id id) const { return nodes_.at(id).d2; }
  [[nodiscard]] const Mat& component(Id id, Component c) const;
  [[nodiscard]] bool is_jet(Id id) const { return nodes_.at(id).jet; }
  [[nodiscard]] int rows(Id id) const { return static_cast<int>(nodes_.at(id).v.rows()); }
  [[nodiscard]] int cols(Id id) const { return static_cast<int>(nodes_.at(id).v.cols()); }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

  /// Accumulates (+=) parameter gradients of sum_s <seed_s.adjoint, component>.
  void backward(std::span<const Seed> seeds);

 private:
  enum class Kind {
    leaf, linear, linear_fixed, conv, unary, add, sub, mul, scale, scale_rows,
    concat, slice, sum_rows, value_of, gather
  };

  struct Node {
    Kind kind = Kind::leaf;
    bool jet = false;
    Mat v, d1, d2;
    std::vector<Id> inputs;
    Op op = Op::add;
    int exponent = 0;
    double scalar = 0.0;
    int offset = 0;
    Eigen::VectorXd factors;
    Mat fixed;
    LinearRef lin;
    ConvRef conv;
    std::vector<int> index;
  };

  struct Adjoint {
    Mat a0, a1, a2;
    bool live = false;
  };

  Id push(Node n);
  void product(const Eigen::Map<const Mat>& w, const Mat& x, Mat& out) const;
  void product(const Mat& w, const Mat& x, Mat& out) const;
  static void ensure(Adjoint& a, const Node& n);

  bool column_exact_;
  std::vector<Node> nodes_;
};

}  // namespace spinn::ad

#include "spinn/autodiff/graph.hpp"

#include "spinn/common/error.hpp"

#include <string>
#include <utility>

namespace spinn::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require_same_shape(const Mat& a, const Mat& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorKind::ShapeMismatch,
                std::string(what) + ": " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                    " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

/// Element-wise g0..g3 of a unary op.
struct UnaryTables {
  Mat g0, g1, g2, g3;
};

UnaryTables tables(Op op, const Mat& x, int exponent, bool need_g3) {
  UnaryTables t;
  const auto xa = x.array();
  switch (op) {
    case Op::tanh: {
      t.g0 = xa.tanh().matrix();
      const auto y = t.g0.array();
      t.g1 = (1.0 - y * y).matrix();
      t.g2 = (-2.0 * y * t.g1.array()).matrix();
      if (need_g3) t.g3 = (t.g1.array() * (6.0 * y * y - 2.0)).matrix();
      return t;
    }
    case Op::exp:
      t.g0 = xa.exp().matrix();
      t.g1 = t.g0;
      t.g2 = t.g0;
      if (need_g3) t.g3 = t.g0;
      return t;
    case Op::sin:
      t.g0 = xa.sin().matrix();
      t.g1 = xa.cos().matrix();
      t.g2 = -t.g0;
      if (need_g3) t.g3 = -t.g1;
      return t;
    case Op::cos:
      t.g0 = xa.cos().matrix();
      t.g1 = -xa.sin().matrix();
      t.g2 = -t.g0;
      if (need_g3) t.g3 = -t.g1;
      return t;
    default: break;
  }
  t.g0.resize(x.rows(), x.cols());
  t.g1.resizeLike(t.g0);
  t.g2.resizeLike(t.g0);
  if (need_g3) t.g3.resizeLike(t.g0);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const UnaryDerivs d = unary_derivatives(op, x.data()[i], exponent);
    t.g0.data()[i] = d.g0;
    t.g1.data()[i] = d.g1;
    t.g2.data()[i] = d.g2;
    if (need_g3) t.g3.data()[i] = d.g3;
  }
  return t;
}

/// im2col for one sample: rows (c*9 + ky*3 + kx), cols (y*W + x).
void im2col(const double* in, int channels, int h, int w, Mat& patches) {
  patches.resize(channels * 9, h * w);
  for (int c = 0; c < channels; ++c)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        const int row = c * 9 + ky * 3 + kx;
        for (int y = 0; y < h; ++y) {
          const int sy = (y + ky - 1 + h) % h;
          for (int x = 0; x < w; ++x) {
            const int sx = (x + kx - 1 + w) % w;
            patches(row, y * w + x) = in[c * h * w + sy * w + sx];
          }
        }
      }
}

void col2im_add(const Mat& patches, int channels, int h, int w, double* out) {
  for (int c = 0; c < channels; ++c)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        const int row = c * 9 + ky * 3 + kx;
        for (int y = 0; y < h; ++y) {
          const int sy = (y + ky - 1 + h) % h;
          for (int x = 0; x < w; ++x) {
            const int sx = (x + kx - 1 + w) % w;
            out[c * h * w + sy * w + sx] += patches(row, y * w + x);
          }
        }
      }
}

}  // namespace

Graph::Id Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

const Mat& Graph::component(Id id, Component c) const {
  const Node& n = nodes_.at(id);
  switch (c) {
    case Component::value: return n.v;
    case Component::d1: return n.d1;
    case Component::d2: return n.d2;
  }
  return n.v;
}

namespace {
// out = w * x with every entry accumulated in k order, independent of the
// column's position or alignment.
template <class W>
void ordered_product(const W& w, const Mat& x, Mat& out) {
  out.setZero(w.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index k = 0; k < w.cols(); ++k) out.col(j) += w.col(k) * x(k, j);
}

Eigen::RowVectorXd ordered_column_sums(const Mat& m, bool exact) {
  if (!exact) return m.colwise().sum();
  Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) s[j] += m(i, j);
  return s;
}
}  // namespace

void Graph::product(const Eigen::Map<const Mat>& w, const Mat& x, Mat& out) const {
  if (column_exact_)
    ordered_product(w, x, out);
  else
    out.noalias() = w * x;
}

void Graph::product(const Mat& w, const Mat& x, Mat& out) const {
  if (column_exact_)
    ordered_product(w, x, out);
  else
    out.noalias() = w * x;
}

Graph::Id Graph::constant(Mat value) {
  Node n;
  n.v = std::move(value);
  return push(std::move(n));
}

Graph::Id Graph::seeded(Mat value, Mat d1, Mat d2) {
  require_same_shape(value, d1, "seeded d1");
  require_same_shape(value, d2, "seeded d2");
  Node n;
  n.jet = true;
  n.v = std::move(value);
  n.d1 = std::move(d1);
  n.d2 = std::move(d2);
  return push(std::move(n));
}

Graph::Id Graph::variable(const Eigen::RowVectorXd& value) {
  return seeded(Mat(value), Mat::Ones(1, value.size()), Mat::Zero(1, value.size()));
}

Graph::Id Graph::linear(const LinearRef& p, Id x) {
  const Node& in = nodes_.at(x);
  if (in.v.rows() != p.in)
    throw Error(ErrorKind::ShapeMismatch, "linear expects " + std::to_string(p.in) +
                                              " inputs, got " + std::to_string(in.v.rows()));
  Node n;
  n.kind = Kind::linear;
  n.inputs = {x};
  n.lin = p;
  n.jet = in.jet;
  const Eigen::Map<const Mat> w(p.weights, p.out, p.in);
  product(w, in.v, n.v);
  if (p.bias) n.v.colwise() += Eigen::Map<const Eigen::VectorXd>(p.bias, p.out);
  if (n.jet) {
    product(w, in.d1, n.d1);
    product(w, in.d2, n.d2);
  }
  return push(std::move(n));
}

Graph::Id Graph::linear_fixed(const Mat& weights, const Eigen::VectorXd& bias, Id x) {
  const Node& in = nodes_.at(x);
  if (in.v.rows() != weights.cols())
    throw Error(ErrorKind::ShapeMismatch, "fixed linear input width");
  Node n;
  n.kind = Kind::linear_fixed;
  n.inputs = {x};
  n.fixed = weights;
  n.jet = in.jet;
  product(weights, in.v, n.v);
  if (bias.size() > 0) n.v.colwise() += bias;
  if (n.jet) {
    product(weights, in.d1, n.d1);
    product(weights, in.d2, n.d2);
  }
  return push(std::move(n));
}

Graph::Id Graph::conv2d_periodic(const ConvRef& p, Id x) {
  const Node& in = nodes_.at(x);
  if (in.jet) throw Error(ErrorKind::InvalidShape, "convolution is value-only");
  const int hw = p.height * p.width;
  if (in.v.rows() != p.in_channels * hw)
    throw Error(ErrorKind::ShapeMismatch, "convolution input size");
  Node n;
  n.kind = Kind::conv;
  n.inputs = {x};
  n.conv = p;
  const Eigen::Map<const RowMat> k(p.kernel, p.out_channels, p.in_channels * 9);
  n.v.resize(static_cast<Eigen::Index>(p.out_channels) * hw, in.v.cols());
  Mat patches;
  RowMat out(p.out_channels, hw);
  for (Eigen::Index j = 0; j < in.v.cols(); ++j) {
    im2col(in.v.col(j).data(), p.in_channels, p.height, p.width, patches);
    out.noalias() = k.lazyProduct(patches);
    if (p.bias) out.colwise() += Eigen::Map<const Eigen::VectorXd>(p.bias, p.out_channels);
    n.v.col(j) = Eigen::Map<const Eigen::VectorXd>(out.data(), out.size());
  }
  return push(std::move(n));
}

Graph::Id Graph::unary(Op op, Id x, int exponent) {
  if (arity(op) != 1) throw Error(ErrorKind::DomainError, "unary() needs a unary op");
  const Node& in = nodes_.at(x);
  Node n;
  n.kind = Kind::unary;
  n.op = op;
  n.exponent = exponent;
  n.inputs = {x};
  n.jet = in.jet;
  if (op == Op::neg) {
    n.v = -in.v;
    if (n.jet) {
      n.d1 = -in.d1;
      n.d2 = -in.d2;
    }
    return push(std::move(n));
  }
  UnaryTables t = tables(op, in.v, exponent, false);
  n.v = std::move(t.g0);
  if (n.jet) {
    n.d1 = (t.g1.array() * in.d1.array()).matrix();
    n.d2 = (t.g1.array() * in.d2.array() + t.g2.array() * in.d1.array().square()).matrix();
  }
  return push(std::move(n));
}

Graph::Id Graph::add(Id a, Id b) {
  const Node& x = nodes_.at(a);
  const Node& y = nodes_.at(b);
  require_same_shape(x.v, y.v, "add");
  Node n;
  n.kind = Kind::add;
  n.inputs = {a, b};
  n.jet = x.jet || y.jet;
  n.v = x.v + y.v;
  if (n.jet) {
    n.d1 = x.jet ? (y.jet ? Mat(x.d1 + y.d1) : x.d1) : y.d1;
    n.d2 = x.jet ? (y.jet ? Mat(x.d2 + y.d2) : x.d2) : y.d2;
  }
  return push(std::move(n));
}

Graph::Id Graph::sub(Id a, Id b) {
  const Node& x = nodes_.at(a);
  const Node& y = nodes_.at(b);
  require_same_shape(x.v, y.v, "sub");
  Node n;
  n.kind = Kind::sub;
  n.inputs = {a, b};
  n.jet = x.jet || y.jet;
  n.v = x.v - y.v;
  if (n.jet) {
    n.d1 = x.jet ? (y.jet ? Mat(x.d1 - y.d1) : x.d1) : Mat(-y.d1);
    n.d2 = x.jet ? (y.jet ? Mat(x.d2 - y.d2) : x.d2) : Mat(-y.d2);
  }
  return push(std::move(n));
}

Graph::Id Graph::mul(Id a, Id b) {
  const Node& x = nodes_.at(a);
  const Node& y = nodes_.at(b);
  require_same_shape(x.v, y.v, "mul");
  Node n;
  n.kind = Kind::mul;
  n.inputs = {a, b};
  n.jet = x.jet || y.jet;
  const auto xv = x.v.array();
  const auto yv = y.v.array();
  n.v = (xv * yv).matrix();
  if (n.jet) {
    if (x.jet && y.jet) {
      n.d1 = (x.d1.array() * yv + xv * y.d1.array()).matrix();
      n.d2 = (x.d2.array() * yv + 2.0 * x.d1.array() * y.d1.array() + xv * y.d2.array()).matrix();
    } else if (x.jet) {
      n.d1 = (x.d1.array() * yv).matrix();
      n.d2 = (x.d2.array() * yv).matrix();
    } else {
      n.d1 = (xv * y.d1.array()).matrix();
      n.d2 = (xv * y.d2.array()).matrix();
    }
  }
  return push(std::move(n));
}

Graph::Id Graph::scale(Id x, double s) {
  const Node& in = nodes_.at(x);
  Node n;
  n.kind = Kind::scale;
  n.inputs = {x};
  n.scalar = s;
  n.jet = in.jet;
  n.v = s * in.v;
  if (n.jet) {
    n.d1 = s * in.d1;
    n.d2 = s * in.d2;
  }
  return push(std::move(n));
}

Graph::Id Graph::scale_rows(Id x, const Eigen::VectorXd& factors) {
  const Node& in = nodes_.at(x);
  if (factors.size() != in.v.rows()) throw Error(ErrorKind::ShapeMismatch, "scale_rows length");
  Node n;
  n.kind = Kind::scale_rows;
  n.inputs = {x};
  n.factors = factors;
  n.jet = in.jet;
  n.v = factors.asDiagonal() * in.v;
  if (n.jet) {
    n.d1 = factors.asDiagonal() * in.d1;
    n.d2 = factors.asDiagonal() * in.d2;
  }
  return push(std::move(n));
}

Graph::Id Graph::concat(std::span<const Id> parts) {
  if (parts.empty()) throw Error(ErrorKind::InvalidShape, "concat of nothing");
  Node n;
  n.kind = Kind::concat;
  Eigen::Index rows = 0;
  const Eigen::Index cols = nodes_.at(parts[0]).v.cols();
  for (Id p : parts) {
    const Node& in = nodes_.at(p);
    if (in.v.cols() != cols) throw Error(ErrorKind::ShapeMismatch, "concat column count");
    rows += in.v.rows();
    n.jet = n.jet || in.jet;
    n.inputs.push_back(p);
  }
  n.v.resize(rows, cols);
  if (n.jet) {
    n.d1 = Mat::Zero(rows, cols);
    n.d2 = Mat::Zero(rows, cols);
  }
  Eigen::Index r = 0;
  for (Id p : parts) {
    const Node& in = nodes_.at(p);
    n.v.middleRows(r, in.v.rows()) = in.v;
    if (in.jet) {
      n.d1.middleRows(r, in.v.rows()) = in.d1;
      n.d2.middleRows(r, in.v.rows()) = in.d2;
    }
    r += in.v.rows();
  }
  return push(std::move(n));
}

Graph::Id Graph::slice(Id x, int row0, int rows) {
  const Node& in = nodes_.at(x);
  if (row0 < 0 || rows < 0 || row0 + rows > in.v.rows())
    throw Error(ErrorKind::ShapeMismatch, "slice out of range");
  Node n;
  n.kind = Kind::slice;
  n.inputs = {x};
  n.offset = row0;
  n.jet = in.jet;
  n.v = in.v.middleRows(row0, rows);
  if (n.jet) {
    n.d1 = in.d1.middleRows(row0, rows);
    n.d2 = in.d2.middleRows(row0, rows);
  }
  return push(std::move(n));
}

Graph::Id Graph::sum_rows(Id x) {
  const Node& in = nodes_.at(x);
  Node n;
  n.kind = Kind::sum_rows;
  n.inputs = {x};
  n.jet = in.jet;
  n.v = ordered_column_sums(in.v, column_exact_);
  if (n.jet) {
    n.d1 = ordered_column_sums(in.d1, column_exact_);
    n.d2 = ordered_column_sums(in.d2, column_exact_);
  }
  return push(std::move(n));
}

Graph::Id Graph::value_of(Id x) {
  Node n;
  n.kind = Kind::value_of;
  n.inputs = {x};
  n.v = nodes_.at(x).v;
  return push(std::move(n));
}

Graph::Id Graph::gather_cols(Id x, std::vector<int> index) {
  const Node& in = nodes_.at(x);
  Node n;
  n.kind = Kind::gather;
  n.inputs = {x};
  n.jet = in.jet;
  const auto cols = static_cast<Eigen::Index>(index.size());
  n.v.resize(in.v.rows(), cols);
  if (n.jet) {
    n.d1.resize(in.v.rows(), cols);
    n.d2.resize(in.v.rows(), cols);
  }
  for (Eigen::Index j = 0; j < cols; ++j) {
    const int src = index[static_cast<std::size_t>(j)];
    if (src < 0 || src >= in.v.cols()) throw Error(ErrorKind::ShapeMismatch, "gather index");
    n.v.col(j) = in.v.col(src);
    if (n.jet) {
      n.d1.col(j) = in.d1.col(src);
      n.d2.col(j) = in.d2.col(src);
    }
  }
  n.index = std::move(index);
  return push(std::move(n));
}

void Graph::ensure(Adjoint& a, const Node& n) {
  if (a.live) return;
  a.a0 = Mat::Zero(n.v.rows(), n.v.cols());
  if (n.jet) {
    a.a1 = Mat::Zero(n.v.rows(), n.v.cols());
    a.a2 = Mat::Zero(n.v.rows(), n.v.cols());
  }
  a.live = true;
}

void Graph::backward(std::span<const Seed> seeds) {
  std::vector<Adjoint> adj(nodes_.size());
  Id last = -1;
  for (const Seed& s : seeds) {
    const Node& n = nodes_.at(s.node);
    require_same_shape(n.v, s.adjoint, "seed adjoint");
    if (s.component != Component::value && !n.jet) continue;  // derivative of a constant
    Adjoint& a = adj[s.node];
    ensure(a, n);
    switch (s.component) {
      case Component::value: a.a0 += s.adjoint; break;
      case Component::d1: a.a1 += s.adjoint; break;
      case Component::d2: a.a2 += s.adjoint; break;
    }
    last = std::max(last, s.node);
  }

  for (Id i = last; i >= 0; --i) {
    Adjoint& a = adj[i];
    if (!a.live) continue;
    const Node& n = nodes_[i];
    const bool jet = n.jet;

    // Accumulates "transpose of multiplication by a jet partial (p0, p1, p2)"
    // into the adjoint of input `x`. Missing p1/p2 mean a value-only partial.
    auto input_adj = [&](Id x) -> Adjoint& {
      Adjoint& t = adj[x];
      ensure(t, nodes_[x]);
      return t;
    };

    switch (n.kind) {
      case Kind::leaf: break;
      case Kind::linear: {
        const Node& in = nodes_[n.inputs[0]];
        const LinearRef& p = n.lin;
        if (p.weights_grad) {
          Eigen::Map<Mat> gw(p.weights_grad, p.out, p.in);
          gw.noalias() += a.a0 * in.v.transpose();
          if (jet) {
            gw.noalias() += a.a1 * in.d1.transpose();
            gw.noalias() += a.a2 * in.d2.transpose();
          }
        }
        if (p.bias_grad) Eigen::Map<Eigen::VectorXd>(p.bias_grad, p.out) += a.a0.rowwise().sum();
        if (in.kind == Kind::leaf && !in.jet) break;  // nothing upstream needs it
        Adjoint& t = input_adj(n.inputs[0]);
        const Eigen::Map<const Mat> w(p.weights, p.out, p.in);
        t.a0.noalias() += w.transpose() * a.a0;
        if (jet) {
          t.a1.noalias() += w.transpose() * a.a1;
          t.a2.noalias() += w.transpose() * a.a2;
        }
        break;
      }
      case Kind::linear_fixed: {
        const Node& in = nodes_[n.inputs[0]];
        if (in.kind == Kind::leaf) break;
        Adjoint& t = input_adj(n.inputs[0]);
        t.a0.noalias() += n.fixed.transpose() * a.a0;
        if (jet) {
          t.a1.noalias() += n.fixed.transpose() * a.a1;
          t.a2.noalias() += n.fixed.transpose() * a.a2;
        }
        break;
      }
      case Kind::conv: {
        const Node& in = nodes_[n.inputs[0]];
        const ConvRef& p = n.conv;
        const int hw = p.height * p.width;
        const Eigen::Map<const RowMat> k(p.kernel, p.out_channels, p.in_channels * 9);
        const bool upstream = in.kind != Kind::leaf;
        Adjoint* t = upstream ? &input_adj(n.inputs[0]) : nullptr;
        Mat patches;
        RowMat gk = RowMat::Zero(p.out_channels, p.in_channels * 9);
        for (Eigen::Index j = 0; j < n.v.cols(); ++j) {
          const Eigen::Map<const RowMat> g(a.a0.col(j).data(), p.out_channels, hw);
          if (p.kernel_grad) {
            im2col(in.v.col(j).data(), p.in_channels, p.height, p.width, patches);
            gk.noalias() += g * patches.transpose();
          }
          if (p.bias_grad)
            Eigen::Map<Eigen::VectorXd>(p.bias_grad, p.out_channels) += g.rowwise().sum();
          if (t) {
            const Mat dp = k.transpose() * g;
            col2im_add(dp, p.in_channels, p.height, p.width, t->a0.col(j).data());
          }
        }
        if (p.kernel_grad)
          Eigen::Map<RowMat>(p.kernel_grad, p.out_channels, p.in_channels * 9) += gk;
        break;
      }
      case Kind::unary: {
        const Node& in = nodes_[n.inputs[0]];
        if (in.kind == Kind::leaf && !in.jet) break;
        Adjoint& t = input_adj(n.inputs[0]);
        if (n.op == Op::neg) {
          t.a0 -= a.a0;
          if (jet) {
            t.a1 -= a.a1;
            t.a2 -= a.a2;
          }
          break;
        }
        const UnaryTables g = tables(n.op, in.v, n.exponent, jet);
        if (!jet) {
          t.a0.array() += g.g1.array() * a.a0.array();
          break;
        }
        const auto d1 = in.d1.array();
        const auto d2 = in.d2.array();
        // partial jet p = (g1, g2 d1, g3 d1^2 + g2 d2)
        const Eigen::ArrayXXd p1 = g.g2.array() * d1;
        t.a0.array() += g.g1.array() * a.a0.array() + p1 * a.a1.array() +
                        (g.g3.array() * d1.square() + g.g2.array() * d2) * a.a2.array();
        t.a1.array() += g.g1.array() * a.a1.array() + 2.0 * p1 * a.a2.array();
        t.a2.array() += g.g1.array() * a.a2.array();
        break;
      }
      case Kind::add:
      case Kind::sub: {
        const double sign_b = n.kind == Kind::add ? 1.0 : -1.0;
        for (int k = 0; k < 2; ++k) {
          const Node& in = nodes_[n.inputs[k]];
          if (in.kind == Kind::leaf) continue;
          Adjoint& t = input_adj(n.inputs[k]);
          const double s = k == 0 ? 1.0 : sign_b;
          t.a0 += s * a.a0;
          if (in.jet) {
            t.a1 += s * a.a1;
            t.a2 += s * a.a2;
          }
        }
        break;
      }
      case Kind::mul: {
        for (int k = 0; k < 2; ++k) {
          const Node& in = nodes_[n.inputs[k]];
          if (in.kind == Kind::leaf) continue;
          const Node& other = nodes_[n.inputs[1 - k]];
          Adjoint& t = input_adj(n.inputs[k]);
          const auto p0 = other.v.array();
          if (!jet) {
            t.a0.array() += p0 * a.a0.array();
            continue;
          }
          if (other.jet) {
            t.a0.array() += p0 * a.a0.array() + other.d1.array() * a.a1.array() +
                            other.d2.array() * a.a2.array();
            if (in.jet) {
              t.a1.array() += p0 * a.a1.array() + 2.0 * other.d1.array() * a.a2.array();
              t.a2.array() += p0 * a.a2.array();
            }
          } else {
            t.a0.array() += p0 * a.a0.array();
            if (in.jet) {
              t.a1.array() += p0 * a.a1.array();
              t.a2.array() += p0 * a.a2.array();
            }
          }
        }
        break;
      }
      case Kind::scale: {
        const Node& in = nodes_[n.inputs[0]];
        if (in.kind == Kind::leaf) break;
        Adjoint& t = input_adj(n.inputs[0]);
        t.a0 += n.scalar * a.a0;
        if (jet) {
          t.a1 += n.scalar * a.a1;
          t.a2 += n.scalar * a.a2;
        }
        break;
      }
      case Kind::scale_rows: {
        const Node& in = nodes_[n.inputs[0]];
        if (in.kind == Kind::leaf) break;
        Adjoint& t = input_adj(n.inputs[0]);
        t.a0 += n.factors.asDiagonal() * a.a0;
        if (jet) {
          t.a1 += n.factors.asDiagonal() * a.a1;
          t.a2 += n.factors.asDiagonal() * a.a2;
        }
        break;
      }
      case Kind::concat: {
        Eigen::Index r = 0;
        for (Id p : n.inputs) {
          const Node& in = nodes_[p];
          const Eigen::Index rows = in.v.rows();
          if (in.kind != Kind::leaf) {
            Adjoint& t = input_adj(p);
            t.a0 += a.a0.middleRows(r, rows);
            if (in.jet) {
              t.a1 += a.a1.middleRows(r, rows);
              t.a2 += a.a2.middleRows(r, rows);
            }
          }
          r += rows;
        }
        break;
      }
      case Kind::slice: {
        const Node& in = nodes_[n.inputs[0]];
        if (in.kind == Kind::leaf) break;
        Adjoint& t = input_adj(n.inputs[0]);
        const Eigen::Index rows = n.v.rows();
        t.a0.middleRows(n.offset, rows) += a.a0;
        if (jet) {
          t.a1.middleRows(n.offset, rows) += a.a1;
          t.a2.middleRows(n.offset, rows) += a.a2;
        }
        break;
      }
      case Kind::sum_rows: {
        const Node& in = nodes_[n.inputs[0]];
        if (in.kind == Kind::leaf) break;
        Adjoint& t = input_adj(n.inputs[0]);
        t.a0.rowwise() += a.a0.row(0);
        if (jet) {
          t.a1.rowwise() += a.a1.row(0);
          t.a2.rowwise() += a.a2.row(0);
        }
        break;
      }
      case Kind::value_of: {
        const Node& in = nodes_[n.inputs[0]];
        if (in.kind == Kind::leaf) break;
        input_adj(n.inputs[0]).a0 += a.a0;
        break;
      }
      case Kind::gather: {
        const Node& in = nodes_[n.inputs[0]];
        if (in.kind == Kind::leaf) break;
        Adjoint& t = input_adj(n.inputs[0]);
        for (Eigen::Index j = 0; j < n.v.cols(); ++j) {
          const int src = n.index[static_cast<std::size_t>(j)];
          t.a0.col(src) += a.a0.col(j);
          if (jet) {
            t.a1.col(src) += a.a1.col(j);
            t.a2.col(src) += a.a2.col(j);
          }
        }
        break;
      }
    }
    // Free adjoint memory of nodes that are done.
    a = Adjoint{};
  }
}

}  // namespace spinn::ad

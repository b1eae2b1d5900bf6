#include "spinn/nn/mlp.hpp"

#include "spinn/common/error.hpp"

#include <cmath>
#include <random>

namespace spinn::nn {

std::string to_string(const Activation& a) {
  switch (a.kind) {
    case ActivationKind::identity: return "identity";
    case ActivationKind::tanh: return "tanh";
    case ActivationKind::exp: return "exp";
    case ActivationKind::sin_pow: return "sin_pow(" + std::to_string(a.power) + ")";
    case ActivationKind::cos_pow: return "cos_pow(" + std::to_string(a.power) + ")";
    case ActivationKind::elementwise_sin: return "sin";
  }
  return "?";
}

Mlp::Mlp(const MlpShape& shape) {
  if (shape.widths.size() < 2) throw Error(ErrorKind::InvalidShape, "an MLP needs at least two widths");
  for (int w : shape.widths)
    if (w < 1) throw Error(ErrorKind::InvalidShape, "layer widths must be >= 1");
  for (std::size_t i = 1; i < shape.widths.size(); ++i) {
    DenseLayer l;
    l.in = shape.widths[i - 1];
    l.out = shape.widths[i];
    l.bias = shape.bias;
    l.activation = i + 1 == shape.widths.size() ? shape.output : shape.hidden;
    layers_.push_back(l);
  }
  layout();
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].in < 1 || layers_[i].out < 1) throw Error(ErrorKind::InvalidShape, "layer width < 1");
    if (i > 0 && layers_[i].in != layers_[i - 1].out)
      throw Error(ErrorKind::InvalidShape, "consecutive layer widths disagree");
  }
  layout();
}

void Mlp::layout() {
  std::size_t offset = 0;
  for (DenseLayer& l : layers_) {
    l.offset = offset;
    offset += l.param_count();
  }
  params.resize(static_cast<Eigen::Index>(offset));
}

Eigen::Map<const ad::Mat> Mlp::weights(std::size_t layer) const {
  const DenseLayer& l = layers_.at(layer);
  return {params.values.data() + l.offset, l.out, l.in};
}
Eigen::Map<ad::Mat> Mlp::weights(std::size_t layer) {
  const DenseLayer& l = layers_.at(layer);
  return {params.values.data() + l.offset, l.out, l.in};
}
Eigen::Map<const Eigen::VectorXd> Mlp::bias(std::size_t layer) const {
  const DenseLayer& l = layers_.at(layer);
  if (!l.bias) throw Error(ErrorKind::InvalidShape, "layer has no bias");
  return {params.values.data() + l.offset + static_cast<std::size_t>(l.in) * l.out, l.out};
}
Eigen::Map<Eigen::VectorXd> Mlp::bias(std::size_t layer) {
  const DenseLayer& l = layers_.at(layer);
  if (!l.bias) throw Error(ErrorKind::InvalidShape, "layer has no bias");
  return {params.values.data() + l.offset + static_cast<std::size_t>(l.in) * l.out, l.out};
}

ad::Jet2 apply_activation(const ad::Jet2& x, const Activation& a) {
  switch (a.kind) {
    case ActivationKind::identity: return x;
    case ActivationKind::tanh: return ad::tanh(x);
    case ActivationKind::exp: return ad::exp(x);
    case ActivationKind::elementwise_sin: return ad::sin(x);
    case ActivationKind::sin_pow: return ad::pow_int(ad::sin(x), a.power);
    case ActivationKind::cos_pow: return ad::pow_int(ad::cos(x), a.power);
  }
  return x;
}

ad::Graph::Id apply_activation(ad::Graph& g, ad::Graph::Id x, const Activation& a) {
  switch (a.kind) {
    case ActivationKind::identity: return x;
    case ActivationKind::tanh: return g.tanh(x);
    case ActivationKind::exp: return g.exp(x);
    case ActivationKind::elementwise_sin: return g.unary(ad::Op::sin, x);
    case ActivationKind::sin_pow: return g.unary(ad::Op::pow_int, g.unary(ad::Op::sin, x), a.power);
    case ActivationKind::cos_pow: return g.unary(ad::Op::pow_int, g.unary(ad::Op::cos, x), a.power);
  }
  return x;
}

namespace {
ad::Tape::NodeId tape_activation(ad::Tape& t, ad::Tape::NodeId x, const Activation& a) {
  switch (a.kind) {
    case ActivationKind::identity: return x;
    case ActivationKind::tanh: return t.unary(ad::Op::tanh, x);
    case ActivationKind::exp: return t.unary(ad::Op::exp, x);
    case ActivationKind::elementwise_sin: return t.unary(ad::Op::sin, x);
    case ActivationKind::sin_pow: return t.unary(ad::Op::pow_int, t.unary(ad::Op::sin, x), a.power);
    case ActivationKind::cos_pow: return t.unary(ad::Op::pow_int, t.unary(ad::Op::cos, x), a.power);
  }
  return x;
}
}  // namespace

std::vector<ad::Jet2> Mlp::forward(std::span<const ad::Jet2> input, ad::Tape* tape,
                                   ad::ParamId param_id_base) const {
  if (static_cast<int>(input.size()) != input_width())
    throw Error(ErrorKind::ShapeMismatch, "MLP expects " + std::to_string(input_width()) +
                                              " inputs, got " + std::to_string(input.size()));
  if (!tape) {
    std::vector<ad::Jet2> x(input.begin(), input.end());
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      const DenseLayer& l = layers_[li];
      const auto w = weights(li);
      std::vector<ad::Jet2> y(static_cast<std::size_t>(l.out));
      for (int i = 0; i < l.out; ++i) {
        ad::Jet2 acc = l.bias ? ad::Jet2(bias(li)(i)) : ad::Jet2(0.0);
        for (int j = 0; j < l.in; ++j) acc += ad::Jet2(w(i, j)) * x[static_cast<std::size_t>(j)];
        y[static_cast<std::size_t>(i)] = apply_activation(acc, l.activation);
      }
      x = std::move(y);
    }
    return x;
  }

  std::vector<ad::Tape::NodeId> x;
  for (const ad::Jet2& v : input) x.push_back(tape->constant(v));
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const DenseLayer& l = layers_[li];
    std::vector<ad::Tape::NodeId> y;
    for (int i = 0; i < l.out; ++i) {
      ad::Tape::NodeId acc = 0;
      bool have = false;
      if (l.bias) {
        const std::size_t idx = l.offset + static_cast<std::size_t>(l.in) * l.out + i;
        acc = tape->parameter(param_id_base + idx, params.values(static_cast<Eigen::Index>(idx)));
        have = true;
      }
      for (int j = 0; j < l.in; ++j) {
        const std::size_t idx = l.offset + static_cast<std::size_t>(j) * l.out + i;
        const auto w = tape->parameter(param_id_base + idx, params.values(static_cast<Eigen::Index>(idx)));
        const auto term = tape->mul(w, x[static_cast<std::size_t>(j)]);
        acc = have ? tape->add(acc, term) : term;
        have = true;
      }
      y.push_back(tape_activation(*tape, acc, l.activation));
    }
    x = std::move(y);
  }
  std::vector<ad::Jet2> out;
  for (auto id : x) out.push_back(tape->value(id));
  return out;
}

ad::Graph::Id Mlp::forward(ad::Graph& g, ad::Graph::Id x) {
  for (const DenseLayer& l : layers_) {
    ad::LinearRef ref;
    ref.weights = params.values.data() + l.offset;
    ref.bias = l.bias ? ref.weights + static_cast<std::size_t>(l.in) * l.out : nullptr;
    ref.weights_grad = params.grad_at(l.offset);
    ref.bias_grad = (l.bias && ref.weights_grad) ? ref.weights_grad + static_cast<std::size_t>(l.in) * l.out
                                                 : nullptr;
    ref.out = l.out;
    ref.in = l.in;
    x = apply_activation(g, g.linear(ref, x), l.activation);
  }
  return x;
}

ad::Mat Mlp::evaluate(const ad::Mat& x) const {
  if (x.rows() != input_width()) throw Error(ErrorKind::ShapeMismatch, "MLP input width");
  ad::Mat cur = x;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const DenseLayer& l = layers_[li];
    ad::Mat y = weights(li) * cur;
    if (l.bias) y.colwise() += bias(li);
    switch (l.activation.kind) {
      case ActivationKind::identity: break;
      case ActivationKind::tanh: y = y.array().tanh().matrix(); break;
      case ActivationKind::exp: y = y.array().exp().matrix(); break;
      case ActivationKind::elementwise_sin: y = y.array().sin().matrix(); break;
      case ActivationKind::sin_pow: y = y.array().sin().pow(l.activation.power).matrix(); break;
      case ActivationKind::cos_pow: y = y.array().cos().pow(l.activation.power).matrix(); break;
    }
    cur = std::move(y);
  }
  return cur;
}

Mlp init_params(const MlpShape& shape, std::uint64_t seed) {
  Mlp net(shape);
  std::mt19937_64 rng(seed);
  for (std::size_t li = 0; li < net.layers().size(); ++li) {
    const DenseLayer& l = net.layers()[li];
    const double limit = std::sqrt(6.0 / (l.in + l.out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    auto w = net.weights(li);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  }
  return net;
}

}  // namespace spinn::nn

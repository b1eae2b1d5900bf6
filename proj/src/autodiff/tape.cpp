#include "spinn/autodiff/tape.hpp"

#include "spinn/common/error.hpp"

#include <string>

namespace spinn::ad {

Tape::NodeId Tape::constant(const Jet2& value) {
  Node n;
  n.kind = Kind::constant;
  n.payload = value;
  nodes_.push_back(n);
  return nodes_.size() - 1;
}

Tape::NodeId Tape::parameter(ParamId id, double value) {
  Node n;
  n.kind = Kind::parameter;
  n.payload = Jet2(value);
  nodes_.push_back(n);
  param_index_[id] = nodes_.size() - 1;
  return nodes_.size() - 1;
}

Tape::NodeId Tape::record(Op op, std::span<const NodeId> args, int exponent) {
  if (static_cast<int>(args.size()) != arity(op))
    throw Error(ErrorKind::DomainError, "wrong operand count for tape op");
  for (NodeId a : args)
    if (a >= nodes_.size())
      throw Error(ErrorKind::DomainError, "operand " + std::to_string(a) + " not on tape");

  Node n;
  n.kind = Kind::op;
  n.op = op;
  n.exponent = exponent;
  n.n_operands = static_cast<int>(args.size());
  for (std::size_t i = 0; i < args.size(); ++i) n.operands[i] = args[i];

  if (n.n_operands == 2) {
    const Jet2& a = nodes_[args[0]].payload;
    const Jet2& b = nodes_[args[1]].payload;
    const Jet2 ab[2] = {a, b};
    n.payload = apply_elementary(op, ab);
    switch (op) {
      case Op::add: n.partials = {Jet2(1.0), Jet2(1.0)}; break;
      case Op::sub: n.partials = {Jet2(1.0), Jet2(-1.0)}; break;
      case Op::mul: n.partials = {b, a}; break;
      case Op::div: {
        const Jet2 inv = Jet2(1.0) / b;
        n.partials = {inv, -(a * inv * inv)};
        break;
      }
      default: break;
    }
  } else {
    const Jet2& x = nodes_[args[0]].payload;
    const Jet2 xs[1] = {x};
    n.payload = apply_elementary(op, xs, exponent);
    n.partials[0] = unary_partial(op, x, exponent);
  }
  nodes_.push_back(n);
  return nodes_.size() - 1;
}

GradReport Tape::backward(NodeId output, Component output_component) const {
  GradReport report;
  if (nodes_.empty()) return report;
  if (output >= nodes_.size()) throw Error(ErrorKind::DomainError, "backward from unknown node");

  // adjoint[i] = d(selected output component) / d(component j of node i)
  std::vector<std::array<double, 3>> adj(output + 1, {0.0, 0.0, 0.0});
  adj[output][static_cast<int>(output_component)] = 1.0;

  for (std::size_t i = output + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    if (n.kind != Kind::op) continue;
    const auto& a = adj[i];
    if (a[0] == 0.0 && a[1] == 0.0 && a[2] == 0.0) continue;
    for (int k = 0; k < n.n_operands; ++k) {
      const Jet2& p = n.partials[k];
      auto& x = adj[n.operands[k]];
      // transpose of "multiply by jet p"
      x[0] += p.v * a[0] + p.d1 * a[1] + p.d2 * a[2];
      x[1] += p.v * a[1] + 2.0 * p.d1 * a[2];
      x[2] += p.v * a[2];
    }
  }

  for (const auto& [id, node] : param_index_)
    report.grads[id] = node <= output ? adj[node][0] : 0.0;
  return report;
}

}  // namespace spinn::ad

#pragma once

#include "spinn/autodiff/jet.hpp"

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace spinn::ad {

using ParamId = std::size_t;

struct GradReport {
  std::map<ParamId, double> grads;
  std::optional<double> checked_against_fd;
};

/// Scalar reverse-mode tape over Jet2 values.
///
/// Every node stores the jet it evaluated to plus, per operand, the local partial
/// as a jet. The reverse sweep propagates a three-component adjoint (one entry per
/// jet component), so backward on the d2 component of the output yields the
/// gradient of a second spatial derivative with respect to the parameters.
class Tape {
 public:
  using NodeId = std::size_t;

  enum class Kind { constant, parameter, op };

  struct Node {
    Kind kind = Kind::constant;
    Op op = Op::add;
    int exponent = 0;
    std::array<NodeId, 2> operands{};
    std::array<Jet2, 2> partials{};
    int n_operands = 0;
    Jet2 payload;
  };

  NodeId constant(const Jet2& value);
  /// Registers parameter `id` as a leaf holding (value, 0, 0). Re-registering an id
  /// rebinds it to the new node.
  NodeId parameter(ParamId id, double value);
  /// Appends `op(args...)`. Operands must already be on the tape.
  NodeId record(Op op, std::span<const NodeId> args, int exponent = 0);

  NodeId add(NodeId a, NodeId b) { return record2(Op::add, a, b); }
  NodeId sub(NodeId a, NodeId b) { return record2(Op::sub, a, b); }
  NodeId mul(NodeId a, NodeId b) { return record2(Op::mul, a, b); }
  NodeId div(NodeId a, NodeId b) { return record2(Op::div, a, b); }
  NodeId unary(Op op, NodeId x, int exponent = 0) {
    const NodeId a[1] = {x};
    return record(op, a, exponent);
  }

  [[nodiscard]] const Jet2& value(NodeId id) const { return nodes_.at(id).payload; }
  [[nodiscard]] const Node& node(NodeId id) const { return nodes_.at(id); }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] bool empty() const { return nodes_.empty(); }
  [[nodiscard]] const std::map<ParamId, NodeId>& param_index() const { return param_index_; }

  /// Gradient of the selected component of `output` with respect to every
  /// registered parameter (unreachable ones report 0). An empty tape yields an
  /// empty report.
  [[nodiscard]] GradReport backward(NodeId output, Component output_component) const;

 private:
  NodeId record2(Op op, NodeId a, NodeId b) {
    const NodeId args[2] = {a, b};
    return record(op, args);
  }

  std::vector<Node> nodes_;
  std::map<ParamId, NodeId> param_index_;
};

}  // namespace spinn::ad

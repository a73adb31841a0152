#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ebgame/errors.hpp"
#include "ebgame/numerics/tensor.hpp"

namespace ebgame {

using NodeId = std::size_t;

class Graph;

// Handle to a node of a Graph. Cheap to copy; only valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  NodeId id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  std::size_t size() const { return value().size(); }
};

/// Reverse-mode tape.
///
/// Nodes are appended in execution order, so the node list is already a
/// topological order and backward() simply walks it in reverse. Each node
/// owns its forward value and a lazily allocated gradient buffer. Parameter
/// leaves reference a caller-owned Tensor instead of copying it; their
/// gradients are added to that tensor's grad buffer when backward finishes.
class Graph {
 public:
  // Called once per node during backward. Reads grad(self) and accumulates
  // into the gradients of the node's inputs that need them.
  using BackwardFn = std::function<void(Graph&, NodeId self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value) {
    Node n;
    n.owned = std::move(value);
    return push(std::move(n));
  }

  // Tracks gradients iff the tensor requires grad.
  Var parameter(Tensor& p) {
    Node n;
    n.ref = &p;
    n.sink = p.requires_grad() ? &p : nullptr;
    n.needs_grad = n.sink != nullptr;
    return push(std::move(n));
  }

  // Read-only parameter: participates in the forward pass, never receives gradients.
  Var parameter(const Tensor& p) {
    Node n;
    n.ref = &p;
    return push(std::move(n));
  }

  // Records an op result. The node needs a gradient iff any input does; when
  // none does the backward closure is dropped.
  Var record(Tensor value, std::vector<NodeId> inputs, BackwardFn backward) {
    Node n;
    n.owned = std::move(value);
    for (auto id : inputs) n.needs_grad = n.needs_grad || nodes_.at(id).needs_grad;
    if (n.needs_grad) {
      n.inputs = std::move(inputs);
      n.backward = std::move(backward);
    }
    return push(std::move(n));
  }

  const Tensor& value(NodeId id) const {
    const Node& n = nodes_[id];
    return n.ref ? *n.ref : n.owned;
  }

  bool needs_grad(NodeId id) const { return nodes_[id].needs_grad; }

  std::vector<double>& grad(NodeId id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad.assign(value(id).size(), 0.0);
    return n.grad;
  }

  std::size_t size() const noexcept { return nodes_.size(); }

  /// Runs the backward pass from a scalar loss and adds the resulting
  /// parameter gradients to the parameters' grad buffers.
  void backward(Var loss) {
    if (loss.graph != this) throw ContractError("backward: loss belongs to another graph");
    if (value(loss.id).size() != 1) {
      throw ContractError("backward: loss must be scalar, got shape " +
                          shape_string(value(loss.id).shape()));
    }
    if (!nodes_[loss.id].needs_grad) return;
    for (auto& n : nodes_) std::fill(n.grad.begin(), n.grad.end(), 0.0);
    grad(loss.id)[0] = 1.0;
    for (NodeId id = loss.id + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (!n.needs_grad || n.grad.empty()) continue;
      if (n.backward) n.backward(*this, id);
    }
    for (auto& n : nodes_) {
      if (!n.sink || n.grad.empty()) continue;
      auto g = n.sink->grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
  }

 private:
  struct Node {
    Tensor owned;
    const Tensor* ref = nullptr;
    Tensor* sink = nullptr;
    bool needs_grad = false;
    std::vector<NodeId> inputs;
    BackwardFn backward;
    std::vector<double> grad;
  };

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
  }

  // deque keeps node addresses stable while ops append.
  std::deque<Node> nodes_;
};

inline const Tensor& Var::value() const { return graph->value(id); }

}  // namespace ebgame

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "loadcast/core/errors.hpp"
#include "loadcast/core/tensor.hpp"

namespace loadcast {

namespace detail {

struct Node {
  Tensor value;
  Tensor grad;  // empty until something flows into it
  std::string kind = "leaf";
  bool requires_grad = false;
  bool leaf = true;
  bool released = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this->grad and accumulates into inputs[i]->grad.
  std::function<void(Node&)> backward;

  Tensor& grad_buffer() {
    if (grad.empty()) grad = Tensor(value.shape(), 0.0);
    return grad;
  }
};

inline bool& grad_mode_flag() {
  thread_local bool enabled = true;
  return enabled;
}

}  // namespace detail

/// Disables graph recording for its lifetime (inference paths).
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode_flag()) { detail::grad_mode_flag() = false; }
  ~NoGradGuard() { detail::grad_mode_flag() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

inline bool grad_enabled() { return detail::grad_mode_flag(); }

/// Handle to a tensor participating in a reverse-mode graph. Copies share the
/// underlying node.
class Variable {
 public:
  Variable() = default;

  explicit Variable(Tensor value, bool requires_grad = false) : node_(std::make_shared<detail::Node>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t size() const { return node_->value.size(); }
  std::size_t dim(std::size_t axis) const { return node_->value.dim(axis); }
  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->leaf; }
  const std::string& kind() const { return node_->kind; }

  bool has_grad() const { return !node_->grad.empty(); }
  const Tensor& grad() const { return node_->grad; }
  void zero_grad() { node_->grad = Tensor(); }

  const std::shared_ptr<detail::Node>& node() const { return node_; }

  /// Wraps the result of a forward computation. The node is linked into the
  /// graph only if some input requires a gradient and recording is enabled.
  static Variable make_result(std::string_view kind, Tensor value, const std::vector<Variable>& inputs,
                              std::function<void(detail::Node&)> backward) {
    if (!value.all_finite()) {
      throw NumericError("non-finite output from op '" + std::string(kind) + "'");
    }
    Variable out(std::move(value), false);
    out.node_->kind = std::string(kind);
    out.node_->leaf = false;
    bool needs = false;
    for (const auto& in : inputs) needs = needs || in.requires_grad();
    if (needs && grad_enabled()) {
      out.node_->requires_grad = true;
      out.node_->backward = std::move(backward);
      out.node_->inputs.reserve(inputs.size());
      for (const auto& in : inputs) out.node_->inputs.push_back(in.node_);
    }
    return out;
  }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Topologically ordered view (inputs before consumers) of the recorded
/// nodes that lead to `root`.
struct Graph {
  std::vector<std::shared_ptr<detail::Node>> nodes;

  static Graph trace(const Variable& root) {
    Graph g;
    if (!root.defined() || !root.requires_grad()) return g;
    std::unordered_set<const detail::Node*> seen;
    // Iterative post-order DFS.
    std::vector<std::pair<std::shared_ptr<detail::Node>, std::size_t>> stack;
    stack.emplace_back(root.node(), 0);
    seen.insert(root.node().get());
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->inputs.size()) {
        auto child = node->inputs[next++];
        if (child->released) throw Error("graph contains nodes released by an earlier backward");
        if (child->requires_grad && seen.insert(child.get()).second) stack.emplace_back(child, 0);
      } else {
        g.nodes.push_back(node);
        stack.pop_back();
      }
    }
    return g;
  }
};

/// Fills the gradient of every requires-grad leaf reachable from `loss`.
/// Intermediate nodes are released afterwards; a second call on the same
/// graph throws.
inline void backward(const Variable& loss) {
  if (!loss.defined()) throw Error("backward on undefined variable");
  if (loss.size() != 1) {
    throw ShapeError("backward requires a scalar root, got " + to_string(loss.shape()));
  }
  if (!loss.requires_grad()) throw Error("backward root does not require grad");
  const auto& root = loss.node();
  if (root->released) throw Error("backward called twice on the same graph; rerun forward first");

  Graph g = Graph::trace(loss);
  root->grad_buffer()[0] += 1.0;
  for (auto it = g.nodes.rbegin(); it != g.nodes.rend(); ++it) {
    detail::Node& node = **it;
    if (node.leaf) continue;
    if (!node.grad.empty() && node.backward) node.backward(node);
    node.backward = nullptr;
    node.inputs.clear();
    node.grad = Tensor();
    node.released = true;
  }
}

}  // namespace loadcast

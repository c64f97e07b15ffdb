#pragma once

// Reverse-mode autodiff over dense double tensors. Small tape, no views:
// every op materializes its output. Sized for animation-scale models.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace bpmr::ad {

using Shape = std::vector<int>;

inline int numel(const Shape& s) {
  int n = 1;
  for (int d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

struct ShapeMismatch : std::runtime_error {
  explicit ShapeMismatch(const std::string& msg) : std::runtime_error("ShapeMismatch: " + msg) {}
};

// Set to false to run forward passes without recording the tape.
inline bool& grad_enabled() {
  thread_local bool enabled = true;
  return enabled;
}

struct NoGradGuard {
  NoGradGuard() : prev_(grad_enabled()) { grad_enabled() = false; }
  ~NoGradGuard() { grad_enabled() = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
  bool prev_;
};

struct Node {
  Shape shape;
  std::vector<double> val;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;  // accumulate into inputs' grad
  std::uint64_t id = 0;

  void ensure_grad() {
    if (grad.size() != val.size()) grad.assign(val.size(), 0.0);
  }
};

inline std::uint64_t next_node_id() {
  static std::uint64_t counter = 0;
  return ++counter;
}

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> n) : n_(std::move(n)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return filled(std::move(shape), 0.0, requires_grad);
  }

  static Tensor filled(Shape shape, double v, bool requires_grad = false) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->val.assign(static_cast<size_t>(numel(n->shape)), v);
    n->requires_grad = requires_grad;
    n->id = next_node_id();
    return Tensor(n);
  }

  static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false) {
    if (static_cast<int>(data.size()) != numel(shape))
      throw ShapeMismatch("from: data size does not match shape " + shape_str(shape));
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->val = std::move(data);
    n->requires_grad = requires_grad;
    n->id = next_node_id();
    return Tensor(n);
  }

  static Tensor scalar(double v, bool requires_grad = false) {
    return from({1}, {v}, requires_grad);
  }

  bool defined() const { return n_ != nullptr; }
  const Shape& shape() const { return n_->shape; }
  int size() const { return static_cast<int>(n_->val.size()); }
  int dim(int i) const { return n_->shape[static_cast<size_t>(i)]; }
  std::vector<double>& data() { return n_->val; }
  const std::vector<double>& data() const { return n_->val; }
  std::vector<double>& grad() { n_->ensure_grad(); return n_->grad; }
  void zero_grad() { n_->grad.assign(n_->val.size(), 0.0); }
  bool requires_grad() const { return n_->requires_grad; }
  std::shared_ptr<Node> node() const { return n_; }

  double item() const {
    if (n_->val.size() != 1) throw ShapeMismatch("item() on non-scalar tensor");
    return n_->val[0];
  }

  double& at(int i) { return n_->val[static_cast<size_t>(i)]; }
  double at(int i) const { return n_->val[static_cast<size_t>(i)]; }
  // 2-D accessor, row-major
  double& at(int r, int c) { return n_->val[static_cast<size_t>(r * n_->shape[1] + c)]; }
  double at(int r, int c) const { return n_->val[static_cast<size_t>(r * n_->shape[1] + c)]; }
  // 3-D accessor
  double& at(int a, int b, int c) {
    return n_->val[static_cast<size_t>((a * n_->shape[1] + b) * n_->shape[2] + c)];
  }
  double at(int a, int b, int c) const {
    return n_->val[static_cast<size_t>((a * n_->shape[1] + b) * n_->shape[2] + c)];
  }

  // Leaf copy of the value, cut off from the tape.
  Tensor detach() const {
    auto n = std::make_shared<Node>();
    n->shape = n_->shape;
    n->val = n_->val;
    n->requires_grad = false;
    n->id = next_node_id();
    return Tensor(n);
  }

  // Backpropagate from this scalar.
  void backward() {
    if (n_->val.size() != 1) throw ShapeMismatch("backward() requires a scalar");
    std::vector<std::shared_ptr<Node>> order;
    std::unordered_set<std::uint64_t> visited;
    std::vector<std::shared_ptr<Node>> work{n_};
    while (!work.empty()) {
      auto cur = work.back();
      work.pop_back();
      if (!visited.insert(cur->id).second) continue;
      order.push_back(cur);
      for (auto& in : cur->inputs) work.push_back(in);
    }
    // Node ids are monotone in creation order, so descending id is a valid
    // reverse-topological order of the tape.
    std::sort(order.begin(), order.end(),
              [](const auto& a, const auto& b) { return a->id > b->id; });
    for (auto& node : order) node->ensure_grad();
    n_->grad[0] = 1.0;
    for (auto& node : order)
      if (node->backward) node->backward(*node);
  }

 private:
  std::shared_ptr<Node> n_;
};

// Helper used by op implementations: wire up a result node.
inline Tensor make_op(Shape shape, std::vector<double> val,
                      std::vector<Tensor> inputs,
                      std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->val = std::move(val);
  n->id = next_node_id();
  bool track = false;
  if (grad_enabled()) {
    for (const auto& t : inputs)
      if (t.node()->requires_grad || !t.node()->inputs.empty()) track = true;
  }
  if (track) {
    n->requires_grad = true;
    for (auto& t : inputs) n->inputs.push_back(t.node());
    n->backward = std::move(backward);
  }
  return Tensor(n);
}

}  // namespace bpmr::ad

#pragma once

#include <deque>
#include <functional>
#include <initializer_list>
#include <vector>

#include "tglrn/diff/tensor.hpp"

namespace tglrn::diff {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Reverse-mode recorder. Every op appends a node holding its value and a
// closure that pushes the output gradient onto its inputs. Nodes are
// topologically ordered by construction, so backward is a reverse sweep.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Matrix& out_grad)>;

  explicit Tape(const ParameterStore* params = nullptr) : params_(params) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // Differentiable leaf that is not a parameter (gradient readable via grad()).
  Var leaf(Matrix value);
  // Leaf bound to a stored parameter; repeated calls return the same node.
  Var param(ParamId id);

  Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Matrix value, const std::vector<Var>& inputs, BackwardFn backward);

  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  bool requires_grad(Var v) const { return requires_grad(v.id()); }

  template <typename Derived>
  void add_grad(Var v, const Eigen::MatrixBase<Derived>& g) {
    auto& node = nodes_[static_cast<std::size_t>(v.id())];
    if (!node.requires_grad) return;
    if (node.grad.size() == 0)
      node.grad = g;
    else
      node.grad += g;
  }

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape once. Loss must be 1x1.
  void backward(Var loss);
  bool has_backward() const { return backward_done_; }

  // Zero matrix when the node received no gradient.
  Matrix grad(Var v) const;
  void accumulate_param_grads(GradientSet& out) const;

  std::size_t size() const { return nodes_.size(); }
  const ParameterStore* params() const { return params_; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    bool requires_grad = false;
    ParamId param = -1;
  };

  Var push(Node node);

  const ParameterStore* params_;
  std::deque<Node> nodes_;  // deque: values keep their address as the tape grows
  std::vector<int> param_nodes_;
  bool backward_done_ = false;
};

}  // namespace tglrn::diff

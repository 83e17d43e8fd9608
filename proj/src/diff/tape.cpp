#include "tglrn/diff/tape.hpp"

#include "tglrn/error.hpp"

namespace tglrn::diff {

const Matrix& Var::value() const {
  if (!tape_) throw StateError("var: use of an unbound variable");
  return tape_->value(id_);
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::leaf(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::param(ParamId id) {
  if (!params_) throw StateError("tape: parameter requested on a tape without a parameter store");
  if (id < 0 || id >= params_->size()) throw StateError("tape: parameter id out of range");
  if (param_nodes_.size() < static_cast<std::size_t>(params_->size()))
    param_nodes_.resize(static_cast<std::size_t>(params_->size()), -1);
  auto& slot = param_nodes_[static_cast<std::size_t>(id)];
  if (slot >= 0) return Var(this, slot);
  Node n;
  n.value = (*params_)[id].value.matrix();
  n.requires_grad = true;
  n.param = id;
  Var v = push(std::move(n));
  slot = v.id();
  return v;
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Var Tape::record(Matrix value, const std::vector<Var>& inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape() != this) throw StateError("tape: input recorded on a different tape");
    n.requires_grad = n.requires_grad || requires_grad(in);
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

void Tape::backward(Var loss) {
  if (loss.tape() != this || nodes_.empty()) throw StateError("backward: no forward pass recorded on this tape");
  if (backward_done_) throw StateError("backward: tape already differentiated");
  const auto& lv = value(loss.id());
  if (lv.rows() != 1 || lv.cols() != 1)
    throw StateError("backward: loss must be scalar, got " + std::to_string(lv.rows()) + "x" +
                     std::to_string(lv.cols()));
  backward_done_ = true;
  if (!requires_grad(loss)) return;
  nodes_[static_cast<std::size_t>(loss.id())].grad = Matrix::Ones(1, 1);
  for (int i = loss.id(); i >= 0; --i) {
    auto& node = nodes_[static_cast<std::size_t>(i)];
    if (!node.backward || node.grad.size() == 0) continue;
    // Intermediate gradients are released once propagated; leaves keep theirs.
    const Matrix g = std::move(node.grad);
    node.backward(*this, g);
    node.grad.resize(0, 0);
  }
}

Matrix Tape::grad(Var v) const {
  const auto& n = nodes_[static_cast<std::size_t>(v.id())];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate_param_grads(GradientSet& out) const {
  if (!backward_done_) throw StateError("tape: gradients requested before backward");
  for (std::size_t id = 0; id < param_nodes_.size(); ++id) {
    const int node = param_nodes_[id];
    if (node < 0) continue;
    const auto& g = nodes_[static_cast<std::size_t>(node)].grad;
    if (g.size() != 0) out[static_cast<ParamId>(id)] += g;
  }
}

}  // namespace tglrn::diff

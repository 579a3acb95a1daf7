#include "adamoge/tape.hpp"

#include <stdexcept>

namespace adamoge {

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var{this, nodes_.size() - 1};
}

Var Tape::parameter(Parameter& p) {
  nodes_.push_back(Node{p.value, {}, {}, &p, p.trainable});
  return Var{this, nodes_.size() - 1};
}

Var Tape::push(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
  bool needs = false;
  for (const auto& in : inputs) {
    if (!in.valid()) continue;
    if (in.tape != this) throw std::invalid_argument("op mixes values from different tapes");
    needs = needs || nodes_[in.id].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : Backward{}, nullptr, needs});
  return Var{this, nodes_.size() - 1};
}

Tensor& Tape::grad(std::size_t id) {
  auto& node = nodes_[id];
  if (node.grad.empty()) node.grad = Tensor(node.value.shape());
  return node.grad;
}

void Tape::backward(Var root) {
  if (root.tape != this) throw std::invalid_argument("backward root belongs to another tape");
  if (nodes_[root.id].value.size() != 1) throw std::invalid_argument("backward root must be a scalar");
  if (!nodes_[root.id].requires_grad) return;
  grad(root.id)[0] = 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    auto& node = nodes_[i];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.backward) node.backward(*this, i);
    if (node.param) {
      auto& g = node.param->grad;
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += node.grad[k];
    }
  }
}

}  // namespace adamoge

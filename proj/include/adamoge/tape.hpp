#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "adamoge/parameter.hpp"
#include "adamoge/tensor.hpp"

namespace adamoge {

class Tape;

// Handle to a value recorded on a Tape.
struct Var {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  Tape* tape = nullptr;
  std::size_t id = kNone;

  bool valid() const noexcept { return tape != nullptr && id != kNone; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

struct CVar {
  Var re;
  Var im;
};

// Define-by-run record of one forward pass. Each node keeps its value and an
// adjoint closure; backward() replays the closures in reverse creation order.
// Gradients of parameter leaves are added into Parameter::grad. A tape is
// single-threaded; concurrent tapes over a shared store must hold the store's
// write_lock() around backward().
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Var constant(Tensor value);
  Var parameter(Parameter& p);

  // Records an op. The node needs a gradient if any input does.
  Var push(Tensor value, std::initializer_list<Var> inputs, Backward backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return v.valid() && nodes_[v.id].requires_grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  // Adjoint buffer of a node, allocated as zeros on first use.
  Tensor& grad(std::size_t id);
  Tensor& grad(Var v) { return grad(v.id); }
  bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }

  // Seeds d(root)/d(root) = 1 for a single-element root and propagates.
  void backward(Var root);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Backward backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape->value(id); }

}  // namespace adamoge

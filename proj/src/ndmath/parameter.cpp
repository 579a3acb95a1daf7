#include "adamoge/parameter.hpp"

#include <cmath>
#include <stdexcept>

namespace adamoge {

std::string shape_string(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Parameter& ParameterStore::add(std::string name, Tensor value, bool trainable) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  Tensor grad(value.shape());
  index_.emplace(name, params_.size());
  params_.push_back(Parameter{std::move(name), std::move(value), std::move(grad), trainable});
  return params_.back();
}

Parameter* ParameterStore::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

const Parameter* ParameterStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

Parameter& ParameterStore::at(const std::string& name) {
  if (auto* p = find(name)) return *p;
  throw std::out_of_range("no parameter named " + name);
}

const Parameter& ParameterStore::at(const std::string& name) const {
  if (const auto* p = find(name)) return *p;
  throw std::out_of_range("no parameter named " + name);
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

std::size_t ParameterStore::trainable_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p.trainable) n += p.value.size();
  }
  return n;
}

void ParameterStore::copy_values_from(const ParameterStore& other) {
  if (other.size() != size()) throw std::invalid_argument("parameter stores differ in layout");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name != other.params_[i].name ||
        params_[i].value.shape() != other.params_[i].value.shape()) {
      throw std::invalid_argument("parameter stores differ at " + params_[i].name);
    }
    params_[i].value = other.params_[i].value;
  }
}

}  // namespace adamoge

#pragma once

#include <deque>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "adamoge/tensor.hpp"

namespace adamoge {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;  // same shape as value
  bool trainable = true;
};

// Named learnable arrays in registration order. References returned by add()
// stay valid for the lifetime of the store. Writers (optimizer steps, gradient
// accumulation from concurrent tapes) take write_lock(); readers read_lock().
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;

  Parameter& add(std::string name, Tensor value, bool trainable = true);

  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;

  std::size_t size() const noexcept { return params_.size(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad();
  std::size_t trainable_scalars() const;

  // Copies values (not gradients) from another store with the same layout.
  void copy_values_from(const ParameterStore& other);

  std::unique_lock<std::shared_mutex> write_lock() const { return std::unique_lock(mutex_); }
  std::shared_lock<std::shared_mutex> read_lock() const { return std::shared_lock(mutex_); }

 private:
  std::deque<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
  mutable std::shared_mutex mutex_;
};

}  // namespace adamoge

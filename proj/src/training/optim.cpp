#include <cmath>
#include <numbers>
#include <stdexcept>

#include "adamoge/errors.hpp"
#include "adamoge/training.hpp"

namespace adamoge::training {

namespace {

void check_same_shape(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) {
    throw std::invalid_argument("metric shape mismatch: " + shape_string(pred.shape()) + " vs " +
                                shape_string(target.shape()));
  }
}

}  // namespace

double mse(const Tensor& pred, const Tensor& target) {
  check_same_shape(pred, target);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

double mae(const Tensor& pred, const Tensor& target) {
  check_same_shape(pred, target);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - target[i]);
  return s / static_cast<double>(pred.size());
}

Adam::Adam(ParameterStore& store, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (auto& p : store) {
    if (!p.trainable) continue;
    params_.push_back(&p);
    m_.emplace_back(p.value.shape());
    v_.emplace_back(p.value.shape());
  }
}

void Adam::step(double lr) {
  for (const auto* p : params_) {
    if (!p->grad.all_finite()) throw NumericError("non-finite gradient", p->name);
  }
  ++step_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j];
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g;
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g * g;
      const double mh = m[j] / c1;
      const double vh = v[j] / c2;
      p.value[j] -= lr * mh / (std::sqrt(vh) + eps_);
    }
    p.grad.fill(0.0);
  }
}

double cosine_lr(std::size_t step, std::size_t total_steps, double base_lr, double min_lr) {
  if (total_steps == 0) return base_lr;
  if (step > total_steps) throw std::invalid_argument("cosine_lr: step beyond total_steps");
  const double t = static_cast<double>(step) / static_cast<double>(total_steps);
  return min_lr + 0.5 * (base_lr - min_lr) * (1.0 + std::cos(std::numbers::pi * t));
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("train.epochs must be positive");
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (!(base_lr > 0.0) || !(min_lr > 0.0)) throw ConfigError("learning rates must be positive");
  if (min_lr > base_lr) throw ConfigError("train.min_lr exceeds train.base_lr");
  if (grid_e_max.empty() || grid_depth.empty() || grid_feature_dim.empty()) {
    throw ConfigError("grid lists must be nonempty");
  }
  for (auto v : grid_e_max)
    if (v == 0) throw ConfigError("grid.e_max entries must be positive");
  for (auto v : grid_depth)
    if (v == 0) throw ConfigError("grid.depth entries must be positive");
  for (auto v : grid_feature_dim)
    if (v == 0) throw ConfigError("grid.feature_dim entries must be positive");
}

}  // namespace adamoge::training

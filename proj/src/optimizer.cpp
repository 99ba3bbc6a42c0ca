#include "reddiff/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace reddiff {

OptimizerConfig OptimizerConfig::adam(double lr, int steps, double beta1, double beta2, double eps_hat) {
  OptimizerConfig c;
  c.kind = Kind::kAdam;
  c.lr = lr;
  c.steps = steps;
  c.beta1 = beta1;
  c.beta2 = beta2;
  c.eps_hat = eps_hat;
  return c;
}

OptimizerConfig OptimizerConfig::sgd(double lr, int steps, double momentum) {
  OptimizerConfig c;
  c.kind = Kind::kSgd;
  c.lr = lr;
  c.steps = steps;
  c.momentum = momentum;
  return c;
}

void OptimizerConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("learning rate must be positive");
  if (steps < 1) throw std::invalid_argument("optimizer needs at least one step");
  if (kind == Kind::kAdam) {
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
      throw std::invalid_argument("Adam betas must lie in (0, 1)");
    }
    if (!(eps_hat > 0.0)) throw std::invalid_argument("Adam epsilon must be positive");
  } else if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("SGD momentum must lie in [0, 1)");
  }
}

Adam::Adam(Eigen::Index size, double lr, double beta1, double beta2, double eps_hat)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_hat_(eps_hat), m_(Vector::Zero(size)), v_(Vector::Zero(size)) {}

void Adam::step(Vector& params, const Vector& grad) {
  beta1_pow_ *= beta1_;
  beta2_pow_ *= beta2_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - beta1_pow_;
  const double c2 = 1.0 - beta2_pow_;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_hat_);
  }
}

Sgd::Sgd(Eigen::Index size, double lr, double momentum)
    : lr_(lr), momentum_(momentum), velocity_(Vector::Zero(size)) {}

void Sgd::step(Vector& params, const Vector& grad) {
  velocity_ = momentum_ * velocity_ + grad;
  params -= lr_ * velocity_;
}

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& config, Eigen::Index size) {
  config.validate();
  if (config.kind == OptimizerConfig::Kind::kAdam) {
    return std::make_unique<Adam>(size, config.lr, config.beta1, config.beta2, config.eps_hat);
  }
  return std::make_unique<Sgd>(size, config.lr, config.momentum);
}

}  // namespace reddiff

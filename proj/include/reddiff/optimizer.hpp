#pragma once

#include <memory>

#include "reddiff/types.hpp"

namespace reddiff {

struct OptimizerConfig {
  enum class Kind { kAdam, kSgd };

  Kind kind = Kind::kAdam;
  double lr = 0.1;
  int steps = 1000;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps_hat = 1e-8;
  double momentum = 0.0;

  static OptimizerConfig adam(double lr, int steps, double beta1 = 0.9, double beta2 = 0.99,
                              double eps_hat = 1e-8);
  static OptimizerConfig sgd(double lr, int steps, double momentum = 0.0);

  void validate() const;
};

/// First-order optimizer over a flat parameter vector. No weight decay.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(Vector& params, const Vector& grad) = 0;
};

class Adam final : public Optimizer {
 public:
  Adam(Eigen::Index size, double lr, double beta1, double beta2, double eps_hat);
  void step(Vector& params, const Vector& grad) override;

 private:
  double lr_, beta1_, beta2_, eps_hat_;
  Vector m_, v_;
  double beta1_pow_ = 1.0;
  double beta2_pow_ = 1.0;
};

/// Heavy-ball SGD: v <- momentum * v + g; x <- x - lr * v.
class Sgd final : public Optimizer {
 public:
  Sgd(Eigen::Index size, double lr, double momentum);
  void step(Vector& params, const Vector& grad) override;

 private:
  double lr_, momentum_;
  Vector velocity_;
};

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& config, Eigen::Index size);

}  // namespace reddiff

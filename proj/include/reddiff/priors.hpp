#pragma once

#include <random>
#include <vector>

#include "reddiff/schedule.hpp"
#include "reddiff/types.hpp"

namespace reddiff {

/// Anything that predicts the injected noise eps_theta(x_t; t) = -sigma_t * grad log p_t(x_t).
/// Implementations must be pure: same (x_t, t) gives the same output.
class ScorePrior {
 public:
  virtual ~ScorePrior() = default;
  virtual int dim() const = 0;
  virtual Vector predict_eps(const Vector& x_t, int t, const NoiseSchedule& schedule) const = 0;
};

/// Isotropic Gaussian data distribution N(mean, variance * I).
class GaussianPrior final : public ScorePrior {
 public:
  GaussianPrior(Vector mean, double variance);

  int dim() const override { return static_cast<int>(mean_.size()); }
  Vector predict_eps(const Vector& x_t, int t, const NoiseSchedule& schedule) const override;

  const Vector& mean() const { return mean_; }
  double variance() const { return variance_; }

  Vector sample(std::mt19937_64& rng) const;

 private:
  Vector mean_;
  double variance_;
};

/// Mixture of isotropic Gaussians. Diffusing it keeps it a mixture, so the
/// score at every t is available in closed form.
class GaussianMixturePrior final : public ScorePrior {
 public:
  GaussianMixturePrior(std::vector<double> weights, std::vector<Vector> means,
                       std::vector<double> variances);

  int dim() const override { return static_cast<int>(means_.front().size()); }
  Vector predict_eps(const Vector& x_t, int t, const NoiseSchedule& schedule) const override;

  int num_components() const { return static_cast<int>(weights_.size()); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<Vector>& means() const { return means_; }
  const std::vector<double>& variances() const { return variances_; }

  /// Score of the diffused mixture at time t (responsibilities in log space).
  Vector diffused_score(const Vector& x_t, int t, const NoiseSchedule& schedule) const;

  Vector sample(std::mt19937_64& rng) const;

 private:
  std::vector<double> weights_;
  std::vector<Vector> means_;
  std::vector<double> variances_;
  std::vector<double> log_weights_;
};

Vector gaussian_eps(const GaussianPrior& prior, const Vector& x_t, int t, const NoiseSchedule& schedule);
Vector gmm_eps(const GaussianMixturePrior& prior, const Vector& x_t, int t, const NoiseSchedule& schedule);

/// Tweedie/MMSE denoiser (x_t - sigma_t * eps_pred) / alpha_t.
/// Throws std::domain_error when alpha_t has underflowed to zero.
Vector mmse_estimate(const Vector& x_t, int t, const Vector& eps_pred, const NoiseSchedule& schedule);

}  // namespace reddiff

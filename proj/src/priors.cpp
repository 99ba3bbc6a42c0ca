#include "reddiff/priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace reddiff {

namespace {

void require_dim(const Vector& x, int dim, const char* what) {
  if (x.size() != dim) {
    throw std::invalid_argument(std::string(what) + ": expected dimension " + std::to_string(dim) +
                                ", got " + std::to_string(x.size()));
  }
}

Vector standard_normal(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = normal(rng);
  return out;
}

}  // namespace

GaussianPrior::GaussianPrior(Vector mean, double variance) : mean_(std::move(mean)), variance_(variance) {
  if (mean_.size() == 0) {
    throw std::invalid_argument("Gaussian prior needs a nonempty mean");
  }
  if (!(variance_ > 0.0)) {
    throw std::invalid_argument("Gaussian prior variance must be positive");
  }
}

Vector GaussianPrior::predict_eps(const Vector& x_t, int t, const NoiseSchedule& schedule) const {
  require_dim(x_t, dim(), "GaussianPrior::predict_eps");
  const double a = schedule.alpha(t);
  const double s = schedule.sigma(t);
  const double var = a * a * variance_ + s * s;
  return (s / var) * (x_t - a * mean_);
}

Vector GaussianPrior::sample(std::mt19937_64& rng) const {
  return mean_ + std::sqrt(variance_) * standard_normal(rng, mean_.size());
}

GaussianMixturePrior::GaussianMixturePrior(std::vector<double> weights, std::vector<Vector> means,
                                           std::vector<double> variances)
    : weights_(std::move(weights)), means_(std::move(means)), variances_(std::move(variances)) {
  if (weights_.empty()) {
    throw std::invalid_argument("mixture needs at least one component");
  }
  if (means_.size() != weights_.size() || variances_.size() != weights_.size()) {
    throw std::invalid_argument("mixture weights, means and variances must have equal length");
  }
  const Eigen::Index d = means_.front().size();
  if (d == 0) {
    throw std::invalid_argument("mixture components need a nonempty mean");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    if (!(weights_[k] > 0.0)) throw std::invalid_argument("mixture weights must be positive");
    if (!(variances_[k] > 0.0)) throw std::invalid_argument("mixture variances must be positive");
    if (means_[k].size() != d) throw std::invalid_argument("mixture means must share one dimension");
    total += weights_[k];
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("mixture weights must sum to 1");
  }
  log_weights_.resize(weights_.size());
  std::transform(weights_.begin(), weights_.end(), log_weights_.begin(),
                 [](double w) { return std::log(w); });
}

Vector GaussianMixturePrior::diffused_score(const Vector& x_t, int t, const NoiseSchedule& schedule) const {
  require_dim(x_t, dim(), "GaussianMixturePrior");
  const double a = schedule.alpha(t);
  const double s = schedule.sigma(t);
  const double d = static_cast<double>(dim());
  const std::size_t K = weights_.size();

  std::vector<double> log_resp(K);
  std::vector<double> var(K);
  for (std::size_t k = 0; k < K; ++k) {
    var[k] = a * a * variances_[k] + s * s;
    const double sq = (x_t - a * means_[k]).squaredNorm();
    log_resp[k] = log_weights_[k] - 0.5 * sq / var[k] - 0.5 * d * std::log(var[k]);
  }
  const double top = *std::max_element(log_resp.begin(), log_resp.end());
  double norm = 0.0;
  for (double& lr : log_resp) {
    lr = std::exp(lr - top);
    norm += lr;
  }

  Vector score = Vector::Zero(x_t.size());
  for (std::size_t k = 0; k < K; ++k) {
    score -= (log_resp[k] / norm / var[k]) * (x_t - a * means_[k]);
  }
  return score;
}

Vector GaussianMixturePrior::predict_eps(const Vector& x_t, int t, const NoiseSchedule& schedule) const {
  return -schedule.sigma(t) * diffused_score(x_t, t, schedule);
}

Vector GaussianMixturePrior::sample(std::mt19937_64& rng) const {
  std::discrete_distribution<std::size_t> pick(weights_.begin(), weights_.end());
  const std::size_t k = pick(rng);
  return means_[k] + std::sqrt(variances_[k]) * standard_normal(rng, means_[k].size());
}

Vector gaussian_eps(const GaussianPrior& prior, const Vector& x_t, int t, const NoiseSchedule& schedule) {
  return prior.predict_eps(x_t, t, schedule);
}

Vector gmm_eps(const GaussianMixturePrior& prior, const Vector& x_t, int t, const NoiseSchedule& schedule) {
  return prior.predict_eps(x_t, t, schedule);
}

Vector mmse_estimate(const Vector& x_t, int t, const Vector& eps_pred, const NoiseSchedule& schedule) {
  if (x_t.size() != eps_pred.size()) {
    throw std::invalid_argument("mmse_estimate: dimension mismatch");
  }
  const double a = schedule.alpha(t);
  if (!(a > 0.0)) {
    throw std::domain_error("mmse_estimate: alpha_t underflowed to zero at t=" + std::to_string(t));
  }
  return (x_t - schedule.sigma(t) * eps_pred) / a;
}

}  // namespace reddiff

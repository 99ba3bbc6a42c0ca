#include "reddiff/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace reddiff {

namespace {

void check_same_size(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
}

}  // namespace

NoiseSchedule NoiseSchedule::linear(double beta_min, double beta_max, int num_steps) {
  if (num_steps < 1) {
    throw std::invalid_argument("noise schedule needs at least one step");
  }
  if (!(beta_min > 0.0) || !(beta_max < 1.0) || beta_min > beta_max) {
    throw std::invalid_argument("noise schedule requires 0 < beta_min <= beta_max < 1");
  }
  std::vector<double> betas(static_cast<std::size_t>(num_steps));
  const double denom = static_cast<double>(std::max(num_steps - 1, 1));
  for (int i = 0; i < num_steps; ++i) {
    betas[static_cast<std::size_t>(i)] = beta_min + (static_cast<double>(i) / denom) * (beta_max - beta_min);
  }
  return NoiseSchedule(std::move(betas));
}

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas) {
  if (betas.empty()) {
    throw std::invalid_argument("noise schedule needs at least one step");
  }
  for (double b : betas) {
    if (!(b > 0.0 && b < 1.0)) {
      throw std::invalid_argument("every beta must lie in (0, 1)");
    }
  }
  return NoiseSchedule(std::move(betas));
}

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : beta_(std::move(betas)) {
  const std::size_t n = beta_.size();
  log_alpha_bar_.resize(n);
  alpha_.resize(n);
  sigma_.resize(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += std::log1p(-beta_[i]);
    log_alpha_bar_[i] = acc;
    alpha_[i] = std::exp(0.5 * acc);
    sigma_[i] = std::sqrt(-std::expm1(acc));
  }
}

std::size_t NoiseSchedule::index(int t) const {
  if (t < 1 || t > num_steps()) {
    throw std::out_of_range("timestep " + std::to_string(t) + " outside [1, " +
                            std::to_string(num_steps()) + "]");
  }
  return static_cast<std::size_t>(t - 1);
}

double NoiseSchedule::snr(int t) const {
  const std::size_t i = index(t);
  return alpha_[i] / sigma_[i];
}

Vector diffuse(const NoiseSchedule& schedule, const Vector& x0, int t, const Vector& eps) {
  check_same_size(x0, eps, "diffuse");
  return schedule.alpha(t) * x0 + schedule.sigma(t) * eps;
}

Vector variational_marginal_score(const NoiseSchedule& schedule, const Vector& mu, double sigma_q,
                                  const Vector& x_t, int t) {
  check_same_size(mu, x_t, "variational_marginal_score");
  if (sigma_q < 0.0) {
    throw std::invalid_argument("variational dispersion must be nonnegative");
  }
  const double a = schedule.alpha(t);
  const double s = schedule.sigma(t);
  const double var = a * a * sigma_q * sigma_q + s * s;
  return -(x_t - a * mu) / var;
}

}  // namespace reddiff

#pragma once

#include <vector>

#include "reddiff/types.hpp"

namespace reddiff {

/// Discrete variance-preserving diffusion schedule. Timesteps are 1-indexed,
/// t = 1..T, and x_t = alpha_t * x_0 + sigma_t * eps with alpha_t^2 + sigma_t^2 = 1.
///
/// The cumulative product of (1 - beta_i) is accumulated as a sum of log1p
/// terms so that alpha_T does not underflow for long schedules.
class NoiseSchedule {
 public:
  /// Linear beta ramp from beta_min to beta_max over T steps.
  /// Throws std::invalid_argument for T = 0 or betas outside (0, 1).
  static NoiseSchedule linear(double beta_min, double beta_max, int num_steps);

  /// Schedule from an explicit beta table (entry i is beta_{i+1}).
  static NoiseSchedule from_betas(std::vector<double> betas);

  int num_steps() const { return static_cast<int>(beta_.size()); }

  double beta(int t) const { return beta_[index(t)]; }
  double alpha(int t) const { return alpha_[index(t)]; }
  double sigma(int t) const { return sigma_[index(t)]; }
  /// log of the cumulative product alpha_bar_t = alpha_t^2.
  double log_alpha_bar(int t) const { return log_alpha_bar_[index(t)]; }

  /// Signal-to-noise ratio alpha_t / sigma_t.
  double snr(int t) const;

 private:
  explicit NoiseSchedule(std::vector<double> betas);
  std::size_t index(int t) const;

  std::vector<double> beta_;
  std::vector<double> log_alpha_bar_;
  std::vector<double> alpha_;
  std::vector<double> sigma_;
};

/// Forward diffusion: alpha_t * x0 + sigma_t * eps.
Vector diffuse(const NoiseSchedule& schedule, const Vector& x0, int t, const Vector& eps);

/// Score of the diffused variational marginal q(x_t | y) = N(alpha_t mu, (alpha_t^2 s^2 + sigma_t^2) I),
/// where s is the variational dispersion.
Vector variational_marginal_score(const NoiseSchedule& schedule, const Vector& mu, double sigma_q,
                                  const Vector& x_t, int t);

}  // namespace reddiff

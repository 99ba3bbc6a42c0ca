#pragma once

#include <vector>

#include "reddiff/schedule.hpp"

namespace reddiff {

/// Per-timestep regularization weight lambda_t.
///
///   kConstant       lambda_t = lambda
///   kInvSnrPower    lambda_t = lambda / SNR_t^p   (p = 1 is the signal-domain weighting)
///   kMaxLikelihood  lambda_t = 2 T sigma_v^2 (alpha_t / sigma_t) omega'(t), omega' tabulated by the caller
struct WeightSchedule {
  enum class Kind { kConstant, kInvSnrPower, kMaxLikelihood };

  Kind kind = Kind::kInvSnrPower;
  double lambda = 0.25;
  double power = 1.0;
  std::vector<double> omega_prime;  // kMaxLikelihood only; one entry per timestep
  double sigma_v = 0.0;             // kMaxLikelihood only

  static WeightSchedule constant(double lambda);
  static WeightSchedule inv_snr_power(double lambda, double power);
  static WeightSchedule max_likelihood(std::vector<double> omega_prime, double sigma_v);

  /// Throws std::invalid_argument if parameters violate the family's constraints
  /// or, for kMaxLikelihood, if the table length differs from schedule.num_steps().
  void validate(const NoiseSchedule& schedule) const;
};

double lambda_at(const WeightSchedule& w, const NoiseSchedule& s, int t);

}  // namespace reddiff

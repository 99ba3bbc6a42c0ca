#include "reddiff/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace reddiff {

WeightSchedule WeightSchedule::constant(double lambda) {
  WeightSchedule w;
  w.kind = Kind::kConstant;
  w.lambda = lambda;
  return w;
}

WeightSchedule WeightSchedule::inv_snr_power(double lambda, double power) {
  WeightSchedule w;
  w.kind = Kind::kInvSnrPower;
  w.lambda = lambda;
  w.power = power;
  return w;
}

WeightSchedule WeightSchedule::max_likelihood(std::vector<double> omega_prime, double sigma_v) {
  WeightSchedule w;
  w.kind = Kind::kMaxLikelihood;
  w.omega_prime = std::move(omega_prime);
  w.sigma_v = sigma_v;
  return w;
}

void WeightSchedule::validate(const NoiseSchedule& schedule) const {
  switch (kind) {
    case Kind::kConstant:
    case Kind::kInvSnrPower:
      // lambda = 0 switches the regularizer off.
      if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("weighting lambda must be finite and nonnegative");
      }
      if (kind == Kind::kInvSnrPower && !(power >= 0.0)) {
        throw std::invalid_argument("inverse-SNR power must be nonnegative");
      }
      break;
    case Kind::kMaxLikelihood: {
      if (static_cast<int>(omega_prime.size()) != schedule.num_steps()) {
        throw std::invalid_argument("omega' table needs one entry per timestep");
      }
      if (!(sigma_v >= 0.0)) throw std::invalid_argument("sigma_v must be nonnegative");
      // omega(0) = 0 and the first cumulative value must be the smallest one.
      double cum = 0.0;
      const double first = omega_prime.front();
      for (double d : omega_prime) {
        cum += d;
        if (cum < first) throw std::invalid_argument("omega' table violates omega(0) = 0 minimality");
      }
      break;
    }
  }
}

double lambda_at(const WeightSchedule& w, const NoiseSchedule& s, int t) {
  switch (w.kind) {
    case WeightSchedule::Kind::kConstant:
      s.alpha(t);  // range check
      return w.lambda;
    case WeightSchedule::Kind::kInvSnrPower:
      return w.power == 0.0 ? w.lambda : w.lambda / std::pow(s.snr(t), w.power);
    case WeightSchedule::Kind::kMaxLikelihood: {
      const double sv = std::max(w.sigma_v, 1e-3);
      return 2.0 * s.num_steps() * sv * sv * s.snr(t) * w.omega_prime.at(static_cast<std::size_t>(t - 1));
    }
  }
  return 0.0;
}

}  // namespace reddiff

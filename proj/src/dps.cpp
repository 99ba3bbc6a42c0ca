#include <cmath>
#include <random>
#include <string>

#include "reddiff/sampler.hpp"

namespace reddiff {

namespace {

constexpr double kFiniteDiffStep = 1e-5;

double guidance_objective(const Measurement& m, const ScorePrior& prior, const NoiseSchedule& s,
                          const Vector& x, int t) {
  const Vector x0 = mmse_estimate(x, t, prior.predict_eps(x, t, s), s);
  return (m.y - m.op->apply(x0)).squaredNorm();
}

}  // namespace

Vector dps_baseline_sample(const Measurement& m, const ScorePrior& prior, const NoiseSchedule& s, int steps,
                           double zeta_scale, std::uint64_t seed) {
  if (steps < 1) throw std::invalid_argument("DPS needs at least one step");
  if (prior.dim() != m.op->in_dim()) throw std::invalid_argument("prior/operator dimension mismatch");
  if (steps > s.num_steps()) throw std::invalid_argument("DPS steps exceed the schedule length");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto noise = [&](Eigen::Index n) {
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(rng);
    return z;
  };

  const auto grid = descending_grid(s.num_steps(), steps);
  Vector x = noise(prior.dim());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const int t = grid[i];
    const Vector eps_pred = prior.predict_eps(x, t, s);
    const Vector x0 = mmse_estimate(x, t, eps_pred, s);

    Vector next;
    if (i + 1 < grid.size()) {
      const int tn = grid[i + 1];
      const double sn = s.sigma(tn);
      const double st = s.sigma(t);
      const double alpha_bar_ratio = std::exp(s.log_alpha_bar(t) - s.log_alpha_bar(tn));
      const double c2 = (sn * sn) / (st * st) * (1.0 - alpha_bar_ratio);
      const double c = std::sqrt(std::max(c2, 0.0));
      next = s.alpha(tn) * x0 + std::sqrt(std::max(sn * sn - c2, 0.0)) * eps_pred + c * noise(x.size());
    } else {
      next = x0;
    }

    if (zeta_scale != 0.0) {
      const double residual = (m.y - m.op->apply(x0)).norm();
      if (residual > 0.0) {
        Vector grad(x.size());
        Vector probe = x;
        for (Eigen::Index j = 0; j < x.size(); ++j) {
          const double h = kFiniteDiffStep * std::max(1.0, std::abs(x[j]));
          probe[j] = x[j] + h;
          const double up = guidance_objective(m, prior, s, probe, t);
          probe[j] = x[j] - h;
          const double down = guidance_objective(m, prior, s, probe, t);
          probe[j] = x[j];
          grad[j] = (up - down) / (2.0 * h);
        }
        next -= (zeta_scale / residual) * grad;
      }
    }
    if (!next.allFinite()) {
      throw NonFiniteError("DPS guidance became non-finite at t=" + std::to_string(t));
    }
    x = std::move(next);
  }
  return x;
}

}  // namespace reddiff

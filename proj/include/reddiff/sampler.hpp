#pragma once

#include <cstdint>
#include <stdexcept>

#include "reddiff/operators.hpp"
#include "reddiff/optimizer.hpp"
#include "reddiff/priors.hpp"
#include "reddiff/schedule.hpp"
#include "reddiff/timestep_plan.hpp"
#include "reddiff/trace.hpp"
#include "reddiff/weighting.hpp"

namespace reddiff {

/// Raised when a loss or update becomes NaN/inf; the message names the step and timestep.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Variational posterior q = N(mu, sigma_q^2 I).
struct VariationalState {
  Vector mu;
  double sigma_q = 0.0;
};

struct StepLoss {
  double loss = 0.0;
  Vector grad_mu;
  TraceRecord record;
};

/// Per-timestep RED-diff loss ||y - f(mu)||^2 + lambda_t * sg[eps_theta(x_t; t) - eps]^T mu
/// with x_t = alpha_t mu + sigma_t eps. The residual is a constant for differentiation, so
/// grad_mu = 2 J_f(mu)^T (f(mu) - y) + lambda_t * (eps_theta - eps).
/// Requires state.sigma_q == 0.
StepLoss red_diff_step_loss(const VariationalState& state, const Measurement& m, const ScorePrior& prior,
                            const NoiseSchedule& s, const WeightSchedule& w, int t, const Vector& eps);

struct DispersionStep {
  double loss = 0.0;
  Vector grad_mu;
  double grad_sigma = 0.0;
  TraceRecord record;
};

/// Step with nonzero dispersion: x_t = alpha_t mu + eta_t sigma_t eps,
/// eta_t = sqrt(1 + sigma^2 (alpha_t / sigma_t)^2).
///   grad_mu    = 2 J_f(mu)^T (f(mu) - y) + lambda_t * eps_theta
///   grad_sigma = sigma * lambda_t * eta_t^-1 (alpha_t / sigma_t) * eps^T (eps_theta - eta_t^-1 eps)
/// The trace residual is eps_theta - eta_t eps, which keeps mu - mu_hat = (sigma_t/alpha_t) * residual.
DispersionStep dispersion_step_loss(const VariationalState& state, const Measurement& m,
                                    const ScorePrior& prior, const NoiseSchedule& s, const WeightSchedule& w,
                                    int t, const Vector& eps);

double dispersion_eta(const NoiseSchedule& s, int t, double sigma_q);

struct SampleResult {
  Vector mu;
  double sigma_q = 0.0;
  RunTrace trace;
};

/// RED-diff variational sampler. mu starts at the operator's initial estimate; every
/// optimizer step draws its timesteps from the plan and fresh noise from a PRNG seeded
/// with `seed`, so the result is a deterministic function of the arguments.
SampleResult sample(const Measurement& m, const ScorePrior& prior, const NoiseSchedule& s,
                    const WeightSchedule& w, const TimestepPlan& plan, const OptimizerConfig& opt,
                    std::uint64_t seed);

/// Same loop as sample() but also optimizes the dispersion, starting at sigma_init and
/// clamped at zero after every update.
SampleResult sample_with_dispersion(const Measurement& m, const ScorePrior& prior, const NoiseSchedule& s,
                                    const WeightSchedule& w, const TimestepPlan& plan,
                                    const OptimizerConfig& opt, std::uint64_t seed, double sigma_init);

/// DPS-style guided reverse diffusion used as a baseline. Starts from pure noise,
/// runs an ancestral pass over `steps` uniformly spaced timesteps and subtracts
/// zeta_i * grad_{x_t} ||y - f(x0_hat(x_t))||^2 with zeta_i = zeta_scale / ||y - f(x0_hat)||.
/// The gradient is taken by central differences through the denoiser.
Vector dps_baseline_sample(const Measurement& m, const ScorePrior& prior, const NoiseSchedule& s, int steps,
                           double zeta_scale, std::uint64_t seed);

}  // namespace reddiff

#include "reddiff/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace reddiff {

namespace {

constexpr std::uint64_t kPlanStream = 0x706c616eULL;
constexpr std::uint64_t kNoiseStream = 0x6e6f6973ULL;

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

Vector draw_normal(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = normal(rng);
  return out;
}

void check_problem(const Measurement& m, const ScorePrior& prior) {
  if (prior.dim() != m.op->in_dim()) {
    throw std::invalid_argument("prior dimension " + std::to_string(prior.dim()) +
                                " does not match operator input " + std::to_string(m.op->in_dim()));
  }
}

struct Recon {
  double value;
  Vector grad;
};

Recon reconstruction(const Measurement& m, const Vector& mu) {
  const Vector residual = m.op->apply(mu) - m.y;
  return {residual.squaredNorm(), 2.0 * m.op->vjp(mu, residual)};
}

void require_finite(double v, int step, int t, const char* what) {
  if (!std::isfinite(v)) {
    throw NonFiniteError(std::string(what) + " became non-finite at step " + std::to_string(step) +
                         " (t=" + std::to_string(t) + ")");
  }
}

void validate_run(const Measurement& m, const ScorePrior& prior, const NoiseSchedule& s, const WeightSchedule& w,
                  const TimestepPlan& plan, const OptimizerConfig& opt) {
  check_problem(m, prior);
  w.validate(s);
  opt.validate();
  if (plan.steps != opt.steps) {
    throw std::invalid_argument("timestep plan and optimizer disagree on the number of steps");
  }
}

}  // namespace

StepLoss red_diff_step_loss(const VariationalState& state, const Measurement& m, const ScorePrior& prior,
                            const NoiseSchedule& s, const WeightSchedule& w, int t, const Vector& eps) {
  check_problem(m, prior);
  if (state.sigma_q != 0.0) {
    throw std::invalid_argument("red_diff_step_loss handles the zero-dispersion case only");
  }
  if (state.mu.size() != prior.dim() || eps.size() != prior.dim()) {
    throw std::invalid_argument("red_diff_step_loss: mu/eps dimension mismatch");
  }

  const Vector x_t = diffuse(s, state.mu, t, eps);
  const Vector eps_pred = prior.predict_eps(x_t, t, s);
  const Vector residual = eps_pred - eps;  // stopped gradient
  const double lam = lambda_at(w, s, t);

  Recon recon = reconstruction(m, state.mu);
  StepLoss out;
  out.record.t = t;
  out.record.recon = recon.value;
  out.record.reg_inner = lam * residual.dot(state.mu);
  out.loss = out.record.recon + out.record.reg_inner;
  out.record.loss = out.loss;
  out.record.eps_residual_norm = residual.norm();
  out.record.signal_residual_norm = (mmse_estimate(x_t, t, eps_pred, s) - state.mu).norm();
  out.grad_mu = std::move(recon.grad);
  out.grad_mu += lam * residual;
  return out;
}

double dispersion_eta(const NoiseSchedule& s, int t, double sigma_q) {
  const double ratio = sigma_q * s.snr(t);
  return std::sqrt(1.0 + ratio * ratio);
}

DispersionStep dispersion_step_loss(const VariationalState& state, const Measurement& m,
                                    const ScorePrior& prior, const NoiseSchedule& s, const WeightSchedule& w,
                                    int t, const Vector& eps) {
  check_problem(m, prior);
  if (!(state.sigma_q >= 0.0)) throw std::invalid_argument("dispersion must be nonnegative");
  if (state.mu.size() != prior.dim() || eps.size() != prior.dim()) {
    throw std::invalid_argument("dispersion_step_loss: mu/eps dimension mismatch");
  }

  const double a = s.alpha(t);
  const double sig = s.sigma(t);
  const double eta = dispersion_eta(s, t, state.sigma_q);
  const Vector x_t = a * state.mu + (eta * sig) * eps;
  const Vector eps_pred = prior.predict_eps(x_t, t, s);
  const double lam = lambda_at(w, s, t);
  const Vector residual = eps_pred - eta * eps;

  Recon recon = reconstruction(m, state.mu);
  DispersionStep out;
  out.record.t = t;
  out.record.recon = recon.value;
  out.record.reg_inner = lam * residual.dot(state.mu);
  out.loss = out.record.recon + out.record.reg_inner;
  out.record.loss = out.loss;
  out.record.eps_residual_norm = residual.norm();
  out.record.signal_residual_norm = (mmse_estimate(x_t, t, eps_pred, s) - state.mu).norm();
  out.grad_mu = std::move(recon.grad);
  out.grad_mu += lam * eps_pred;
  out.grad_sigma = state.sigma_q * lam * (a / sig) / eta * eps.dot(eps_pred - eps / eta);
  return out;
}

SampleResult sample(const Measurement& m, const ScorePrior& prior, const NoiseSchedule& s,
                    const WeightSchedule& w, const TimestepPlan& plan, const OptimizerConfig& opt,
                    std::uint64_t seed) {
  validate_run(m, prior, s, w, plan, opt);
  auto plan_rng = make_stream(seed, kPlanStream);
  auto noise_rng = make_stream(seed, kNoiseStream);
  const auto timesteps = materialize_plan(plan, s.num_steps(), plan_rng);

  VariationalState state{m.op->initial_estimate(m.y), 0.0};
  auto optimizer = make_optimizer(opt, state.mu.size());
  SampleResult result;
  result.trace.records.reserve(timesteps.size());

  Vector grad(state.mu.size());
  for (std::size_t l = 0; l < timesteps.size(); ++l) {
    const auto& batch = timesteps[l];
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    grad.setZero();
    TraceRecord record;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const Vector eps = draw_normal(noise_rng, state.mu.size());
      StepLoss sl = red_diff_step_loss(state, m, prior, s, w, batch[b], eps);
      if (b == 0) record = sl.record;
      if (b > 0) {
        record.loss += sl.record.loss;
        record.recon += sl.record.recon;
        record.reg_inner += sl.record.reg_inner;
      }
      grad += sl.grad_mu;
    }
    record.step = static_cast<int>(l) + 1;
    record.loss *= inv_batch;
    record.recon *= inv_batch;
    record.reg_inner *= inv_batch;
    require_finite(record.loss, record.step, record.t, "loss");
    grad *= inv_batch;
    optimizer->step(state.mu, grad);
    result.trace.records.push_back(record);
  }
  result.mu = std::move(state.mu);
  return result;
}

SampleResult sample_with_dispersion(const Measurement& m, const ScorePrior& prior, const NoiseSchedule& s,
                                    const WeightSchedule& w, const TimestepPlan& plan,
                                    const OptimizerConfig& opt, std::uint64_t seed, double sigma_init) {
  validate_run(m, prior, s, w, plan, opt);
  if (!(sigma_init >= 0.0)) throw std::invalid_argument("initial dispersion must be nonnegative");
  auto plan_rng = make_stream(seed, kPlanStream);
  auto noise_rng = make_stream(seed, kNoiseStream);
  const auto timesteps = materialize_plan(plan, s.num_steps(), plan_rng);

  const Vector mu0 = m.op->initial_estimate(m.y);
  const Eigen::Index n = mu0.size();
  // Optimized jointly: entries [0, n) hold mu, entry n holds sigma.
  Vector params(n + 1);
  params.head(n) = mu0;
  params[n] = sigma_init;
  auto optimizer = make_optimizer(opt, n + 1);

  SampleResult result;
  result.trace.records.reserve(timesteps.size());
  Vector grad(n + 1);
  for (std::size_t l = 0; l < timesteps.size(); ++l) {
    const auto& batch = timesteps[l];
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    const VariationalState state{params.head(n), params[n]};
    grad.setZero();
    TraceRecord record;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const Vector eps = draw_normal(noise_rng, n);
      DispersionStep ds = dispersion_step_loss(state, m, prior, s, w, batch[b], eps);
      if (b == 0) {
        record = ds.record;
      } else {
        record.loss += ds.record.loss;
        record.recon += ds.record.recon;
        record.reg_inner += ds.record.reg_inner;
      }
      grad.head(n) += ds.grad_mu;
      grad[n] += ds.grad_sigma;
    }
    record.step = static_cast<int>(l) + 1;
    record.loss *= inv_batch;
    record.recon *= inv_batch;
    record.reg_inner *= inv_batch;
    require_finite(record.loss, record.step, record.t, "loss");
    grad *= inv_batch;
    optimizer->step(params, grad);
    params[n] = std::max(params[n], 0.0);
    result.trace.records.push_back(record);
  }
  result.mu = params.head(n);
  result.sigma_q = params[n];
  return result;
}

}  // namespace reddiff

#pragma once

#include <functional>
#include <vector>

#include "reddiff/operators.hpp"
#include "reddiff/priors.hpp"
#include "reddiff/schedule.hpp"
#include "reddiff/types.hpp"

/// Ground-truth computations for tests and the verification suite. Nothing in
/// here calls into the sampler or the priors' score code.
namespace reddiff::oracle {

/// y = A x + v, v ~ N(0, sigma_v^2 I), x ~ N(prior_mean, prior_var I).
struct LinearGaussianProblem {
  Matrix A;
  double sigma_v = 1.0;
  Vector prior_mean;
  double prior_var = 1.0;
};

/// (A^T A / sigma_v^2 + I / tau^2)^{-1} (A^T y / sigma_v^2 + prior_mean / tau^2), via Cholesky.
Vector analytic_map(const LinearGaussianProblem& p, const Vector& y);

/// lambda* = 2 sigma_v^2 / mean_t(sigma_t^2): with lambda_t = lambda / SNR_t the expected
/// RED-diff stationarity condition then matches the MAP condition. Standard-normal prior only.
double calibrated_lambda(const LinearGaussianProblem& p, const NoiseSchedule& s);
double calibrated_lambda(double sigma_v, double mean_noise_power);

/// mean over t = 1..T of sigma_t^2, summed directly.
double mean_noise_power(const NoiseSchedule& s);

/// Central differences, one coordinate at a time.
Vector finite_diff_grad(const std::function<double(const Vector&)>& fun, const Vector& x, double h = 1e-5);

/// log of the clean mixture density at x.
double mixture_log_density(const GaussianMixturePrior& prior, const Vector& x);

/// log density of the mixture after forward diffusion to time t:
/// sum_k w_k N(x; alpha_t m_k, (alpha_t^2 tau_k^2 + sigma_t^2) I), evaluated in long double.
double diffused_mixture_log_density(const GaussianMixturePrior& prior, const Vector& x, int t,
                                    const NoiseSchedule& s);

/// KL(N(a, va I) || N(b, vb I)) in closed form.
double gaussian_kl(const Vector& a, double va, const Vector& b, double vb);

/// KL between the diffused variational marginal N(alpha_t mu, alpha_t^2 sigma_q^2 + sigma_t^2)
/// and the diffused Gaussian prior N(alpha_t m, alpha_t^2 tau^2 + sigma_t^2) at time t.
double diffused_gaussian_kl(const Vector& mu, double sigma_q, const GaussianPrior& prior, int t,
                            const NoiseSchedule& s);

/// alpha_bar_t = prod_{i<=t} (1 - beta_i) accumulated as a log-sum in 50-digit arithmetic,
/// with the betas rebuilt by the linear ramp formula. Returned as alpha_t = sqrt(alpha_bar_t).
double extended_precision_alpha(double beta_min, double beta_max, int num_steps, int t);

struct GridSpec {
  double lo = -5.0;
  double hi = 5.0;
  int n = 1001;
};

struct GridPosterior {
  std::vector<double> points;
  std::vector<double> density;  // normalized by the trapezoid rule
  std::size_t argmax = 0;
  double cell() const { return points.size() > 1 ? points[1] - points[0] : 0.0; }
  double mode() const { return points.at(argmax); }
};

/// Brute-force 1-D posterior p(x) exp(-||y - f(x)||^2 / (2 sigma_v^2)) on a uniform grid.
GridPosterior grid_posterior_1d(const GaussianMixturePrior& prior, const Measurement& m, GridSpec grid);

/// Trapezoid integral over the grid.
double trapezoid(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace reddiff::oracle

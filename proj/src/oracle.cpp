#include "reddiff/oracle.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace reddiff::oracle {

Vector analytic_map(const LinearGaussianProblem& p, const Vector& y) {
  const Eigen::Index n = p.A.cols();
  if (p.A.rows() != y.size() || p.prior_mean.size() != n) {
    throw std::invalid_argument("analytic_map: inconsistent shapes");
  }
  if (!(p.sigma_v > 0.0) || !(p.prior_var > 0.0)) {
    throw std::invalid_argument("analytic_map: sigma_v and prior variance must be positive");
  }
  const double prec_v = 1.0 / (p.sigma_v * p.sigma_v);
  const double prec_p = 1.0 / p.prior_var;
  const Matrix H = prec_v * (p.A.transpose() * p.A) + prec_p * Matrix::Identity(n, n);
  const Vector rhs = prec_v * (p.A.transpose() * y) + prec_p * p.prior_mean;
  Eigen::LLT<Matrix> llt(H);
  if (llt.info() != Eigen::Success) throw std::runtime_error("analytic_map: system is not SPD");
  return llt.solve(rhs);
}

double mean_noise_power(const NoiseSchedule& s) {
  double total = 0.0;
  for (int t = 1; t <= s.num_steps(); ++t) total += s.sigma(t) * s.sigma(t);
  return total / s.num_steps();
}

double calibrated_lambda(double sigma_v, double mean_power) {
  if (!(mean_power > 0.0)) throw std::invalid_argument("mean noise power must be positive");
  return 2.0 * sigma_v * sigma_v / mean_power;
}

double calibrated_lambda(const LinearGaussianProblem& p, const NoiseSchedule& s) {
  if (p.prior_var != 1.0 || !p.prior_mean.isZero(0.0)) {
    throw std::invalid_argument("calibrated_lambda requires a standard-normal prior");
  }
  return calibrated_lambda(std::max(p.sigma_v, ForwardOperator::kSigmaFloor), mean_noise_power(s));
}

Vector finite_diff_grad(const std::function<double(const Vector&)>& fun, const Vector& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite difference step must be positive");
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = fun(probe);
    probe[i] = x[i] - h;
    const double down = fun(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

namespace {

long double log_mixture(const GaussianMixturePrior& prior, const Vector& x, long double a, long double s2) {
  const std::size_t K = static_cast<std::size_t>(prior.num_components());
  const long double d = static_cast<long double>(x.size());
  std::vector<long double> terms(K);
  for (std::size_t k = 0; k < K; ++k) {
    const long double var = a * a * prior.variances()[k] + s2;
    long double sq = 0.0L;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const long double diff = static_cast<long double>(x[i]) - a * prior.means()[k][i];
      sq += diff * diff;
    }
    terms[k] = std::log(static_cast<long double>(prior.weights()[k])) - 0.5L * sq / var -
               0.5L * d * std::log(2.0L * std::numbers::pi_v<long double> * var);
  }
  const long double top = *std::max_element(terms.begin(), terms.end());
  long double acc = 0.0L;
  for (long double v : terms) acc += std::exp(v - top);
  return top + std::log(acc);
}

}  // namespace

double mixture_log_density(const GaussianMixturePrior& prior, const Vector& x) {
  if (x.size() != prior.dim()) throw std::invalid_argument("mixture_log_density: dimension mismatch");
  return static_cast<double>(log_mixture(prior, x, 1.0L, 0.0L));
}

double diffused_mixture_log_density(const GaussianMixturePrior& prior, const Vector& x, int t,
                                    const NoiseSchedule& s) {
  if (x.size() != prior.dim()) throw std::invalid_argument("diffused_mixture_log_density: dimension mismatch");
  // alpha^2 and sigma^2 rebuilt from the log cumulative product in long double.
  const long double log_ab = s.log_alpha_bar(t);
  const long double a = std::exp(0.5L * log_ab);
  const long double s2 = -std::expm1(log_ab);
  return static_cast<double>(log_mixture(prior, x, a, s2));
}

double gaussian_kl(const Vector& a, double va, const Vector& b, double vb) {
  if (a.size() != b.size()) throw std::invalid_argument("gaussian_kl: dimension mismatch");
  if (!(va > 0.0) || !(vb > 0.0)) throw std::invalid_argument("gaussian_kl: variances must be positive");
  const double d = static_cast<double>(a.size());
  const double ratio = va / vb;
  return 0.5 * d * (ratio - 1.0 - std::log(ratio)) + 0.5 * (a - b).squaredNorm() / vb;
}

double diffused_gaussian_kl(const Vector& mu, double sigma_q, const GaussianPrior& prior, int t,
                            const NoiseSchedule& s) {
  const double a = s.alpha(t);
  const double s2 = s.sigma(t) * s.sigma(t);
  return gaussian_kl(a * mu, a * a * sigma_q * sigma_q + s2, a * prior.mean(), a * a * prior.variance() + s2);
}

double extended_precision_alpha(double beta_min, double beta_max, int num_steps, int t) {
  using Real = boost::multiprecision::cpp_bin_float_50;
  if (t < 1 || t > num_steps) throw std::out_of_range("extended_precision_alpha: t out of range");
  const double denom = static_cast<double>(std::max(num_steps - 1, 1));
  Real log_sum = 0;
  for (int i = 0; i < t; ++i) {
    // Same double-precision betas as the library; only the accumulation differs.
    const double beta = beta_min + (static_cast<double>(i) / denom) * (beta_max - beta_min);
    log_sum += boost::multiprecision::log1p(-Real(beta));
  }
  return static_cast<double>(boost::multiprecision::exp(log_sum / 2));
}

double trapezoid(const std::vector<double>& xs, const std::vector<double>& ys) {
  double total = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) total += 0.5 * (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]);
  return total;
}

GridPosterior grid_posterior_1d(const GaussianMixturePrior& prior, const Measurement& m, GridSpec grid) {
  if (prior.dim() != 1 || m.op->in_dim() != 1) throw std::invalid_argument("grid posterior needs a 1-D problem");
  if (grid.n < 100) throw std::invalid_argument("grid posterior needs at least 100 points");
  if (!(grid.hi > grid.lo)) throw std::invalid_argument("grid posterior needs hi > lo");

  const double sv = m.op->effective_sigma_v();
  GridPosterior out;
  out.points.resize(static_cast<std::size_t>(grid.n));
  std::vector<double> log_post(out.points.size());
  Vector x(1);
  for (int i = 0; i < grid.n; ++i) {
    const double xi = grid.lo + (grid.hi - grid.lo) * i / (grid.n - 1);
    out.points[static_cast<std::size_t>(i)] = xi;
    x[0] = xi;
    const double misfit = (m.y - m.op->apply(x)).squaredNorm();
    log_post[static_cast<std::size_t>(i)] = mixture_log_density(prior, x) - misfit / (2.0 * sv * sv);
  }
  const auto top_it = std::max_element(log_post.begin(), log_post.end());
  const double top = *top_it;
  if (!std::isfinite(top)) throw std::runtime_error("grid posterior has zero total mass (log density underflowed everywhere)");
  out.argmax = static_cast<std::size_t>(top_it - log_post.begin());
  out.density.resize(log_post.size());
  std::transform(log_post.begin(), log_post.end(), out.density.begin(),
                 [top](double v) { return std::exp(v - top); });
  const double mass = trapezoid(out.points, out.density);
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw std::runtime_error("grid posterior has zero total mass; widen the grid or rescale");
  }
  for (double& d : out.density) d /= mass;
  return out;
}

}  // namespace reddiff::oracle

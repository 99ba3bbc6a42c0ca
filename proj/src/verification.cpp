#include "reddiff/verification.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "reddiff/experiment.hpp"
#include "reddiff/oracle.hpp"
#include "reddiff/sampler.hpp"

namespace reddiff {

namespace fs = std::filesystem;

namespace {

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), pattern, args...);
  return buf;
}

// budget <= 0 means no per-check time limit.
template <class F>
CheckResult timed(int id, std::string name, double budget, F&& body) {
  CheckResult r;
  r.id = id;
  r.name = std::move(name);
  const auto start = std::chrono::steady_clock::now();
  try {
    body(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (budget > 0.0 && r.seconds > budget) {
    r.passed = false;
    r.detail += fmt(" (took %.2f s, budget %.0f s)", r.seconds, budget);
  }
  return r;
}

NoiseSchedule standard_schedule() { return NoiseSchedule::linear(1e-4, 0.02, 1000); }

Vector standard_normal(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

/// Returns eps_theta = c + k (x_t - anchor): the value at the anchor does not depend on k.
class AffineStubPrior final : public ScorePrior {
 public:
  AffineStubPrior(Vector c, Vector anchor, double k) : c_(std::move(c)), anchor_(std::move(anchor)), k_(k) {}
  int dim() const override { return static_cast<int>(c_.size()); }
  Vector predict_eps(const Vector& x_t, int, const NoiseSchedule&) const override {
    return c_ + k_ * (x_t - anchor_);
  }

 private:
  Vector c_;
  Vector anchor_;
  double k_;
};

/// Forwards everything to the wrapped operator but flips the sign of the vjp.
class CorruptedVjp final : public ForwardOperator {
 public:
  explicit CorruptedVjp(OperatorPtr inner) : ForwardOperator(inner->sigma_v()), inner_(std::move(inner)) {}
  std::string name() const override { return inner_->name(); }
  int in_dim() const override { return inner_->in_dim(); }
  int out_dim() const override { return inner_->out_dim(); }
  bool is_linear() const override { return inner_->is_linear(); }
  Vector apply(const Vector& x) const override { return inner_->apply(x); }
  Vector vjp(const Vector& x, const Vector& u) const override { return -inner_->vjp(x, u); }
  Vector initial_estimate(const Vector& y) const override { return inner_->initial_estimate(y); }

 private:
  OperatorPtr inner_;
};

SampleResult adam_run(const Measurement& m, const ScorePrior& prior, const NoiseSchedule& s, double lambda,
                      TimestepPlan::Kind kind, int steps, std::uint64_t seed) {
  TimestepPlan plan;
  plan.kind = kind;
  plan.steps = steps;
  return sample(m, prior, s, WeightSchedule::inv_snr_power(lambda, 1.0), plan, OptimizerConfig::adam(0.1, steps),
                seed);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

CheckResult check_schedule_exactness() {
  return timed(1, "schedule exactness", 1.0, [](CheckResult& r) {
    const auto s = standard_schedule();
    double worst = 0.0;
    for (int t = 1; t <= s.num_steps(); ++t) {
      worst = std::max(worst, std::abs(s.alpha(t) * s.alpha(t) + s.sigma(t) * s.sigma(t) - 1.0));
    }
    const double reference = oracle::extended_precision_alpha(1e-4, 0.02, 1000, 1000);
    const double rel = std::abs(s.alpha(1000) - reference) / reference;
    r.passed = worst <= 1e-12 && rel <= 1e-10;
    r.detail = fmt("max|a^2+s^2-1|=%.3g alpha_1000=%.17g oracle=%.17g rel=%.3g", worst, s.alpha(1000), reference, rel);
  });
}

CheckResult check_gmm_score() {
  return timed(2, "GMM diffused score vs finite differences", 10.0, [](CheckResult& r) {
    const auto s = standard_schedule();
    std::mt19937_64 rng(2024);
    const int dim = 3;
    std::vector<Vector> means = {standard_normal(rng, dim) * 2.0, standard_normal(rng, dim) * 2.0,
                                 standard_normal(rng, dim) * 2.0};
    const GaussianMixturePrior prior({0.2, 0.5, 0.3}, means, {0.3, 0.6, 1.2});
    std::uniform_int_distribution<int> pick_t(1, s.num_steps());
    double worst = 0.0;
    int worst_t = 0;
    for (int probe = 0; probe < 100; ++probe) {
      const int t = pick_t(rng);
      const Vector x0 = prior.sample(rng);
      const Vector x = diffuse(s, x0, t, standard_normal(rng, dim));
      const Vector score = prior.diffused_score(x, t, s);
      const double spread = std::sqrt(s.alpha(t) * s.alpha(t) * 0.3 + s.sigma(t) * s.sigma(t));
      const Vector fd = oracle::finite_diff_grad(
          [&](const Vector& z) { return oracle::diffused_mixture_log_density(prior, z, t, s); }, x, 1e-4 * spread);
      const double rel = (score - fd).norm() / fd.norm();
      if (rel > worst) {
        worst = rel;
        worst_t = t;
      }
    }
    r.passed = worst <= 1e-6;
    r.detail = fmt("100 probes, worst relative error %.3g (t=%d)", worst, worst_t);
  });
}

CheckResult check_residual_identity() {
  return timed(3, "residual identity and amplification", 0.0, [](CheckResult& r) {
    const auto s = standard_schedule();
    bool increasing = true;
    for (int t = 2; t <= s.num_steps(); ++t) {
      if (!(s.sigma(t) / s.alpha(t) > s.sigma(t - 1) / s.alpha(t - 1))) increasing = false;
    }

    const GaussianMixturePrior prior({0.5, 0.5}, {Vector::Constant(4, 1.0), Vector::Constant(4, -1.0)}, {0.2, 0.2});
    const auto op = make_inpainting_mask({true, false, true, false}, 0.05);
    const Measurement m(Vector::Constant(2, 0.8), op);

    double worst = 0.0;
    std::size_t records = 0;
    for (auto kind : {TimestepPlan::Kind::kDescending, TimestepPlan::Kind::kRandom}) {
      const auto result = adam_run(m, prior, s, 0.25, kind, 1000, 7);
      for (const auto& rec : result.trace.records) {
        const double predicted = s.sigma(rec.t) / s.alpha(rec.t) * rec.eps_residual_norm;
        worst = std::max(worst, std::abs(rec.signal_residual_norm - predicted) / std::max(1.0, predicted));
        ++records;
      }
    }
    std::mt19937_64 rng(3);
    const Vector mu = standard_normal(rng, 4);
    const WeightSchedule w = WeightSchedule::inv_snr_power(0.25, 1.0);
    for (int t = 1; t <= s.num_steps(); ++t) {
      const auto step = red_diff_step_loss({mu, 0.0}, m, prior, s, w, t, standard_normal(rng, 4));
      const double predicted = s.sigma(t) / s.alpha(t) * step.record.eps_residual_norm;
      worst = std::max(worst, std::abs(step.record.signal_residual_norm - predicted) / std::max(1.0, predicted));
      ++records;
    }
    r.passed = increasing && worst <= 1e-10;
    r.detail = fmt("%zu records, worst deviation %.3g; sigma/alpha increasing: %s (%.4g at t=1, %.4g at t=1000)",
                   records, worst, increasing ? "yes" : "no", s.sigma(1) / s.alpha(1), s.sigma(1000) / s.alpha(1000));
  });
}

CheckResult check_expected_gradient() {
  return timed(4, "expected regularizer gradient", 0.0, [](CheckResult& r) {
    const auto s = standard_schedule();
    const int dim = 2;
    const GaussianPrior prior(Vector::Zero(dim), 1.0);
    const auto op = make_dense_linear(Matrix::Zero(1, dim), 0.0);
    const Measurement m(Vector::Zero(1), op);
    const double lambda = 0.25;
    const WeightSchedule w = WeightSchedule::inv_snr_power(lambda, 1.0);
    Vector mu(dim);
    mu << 0.7, -1.3;

    std::mt19937_64 rng(4);
    const int draws = 100000;
    double worst_z = 0.0;
    for (int t : {1, 250, 500, 750, 1000}) {
      Vector sum = Vector::Zero(dim);
      Vector sum_sq = Vector::Zero(dim);
      for (int i = 0; i < draws; ++i) {
        const Vector g = red_diff_step_loss({mu, 0.0}, m, prior, s, w, t, standard_normal(rng, dim)).grad_mu;
        sum += g;
        sum_sq += g.cwiseProduct(g);
      }
      const Vector mean = sum / draws;
      const Vector var = (sum_sq / draws - mean.cwiseProduct(mean)) * (draws / (draws - 1.0));
      const Vector expected = lambda * s.sigma(t) * s.sigma(t) * mu;
      for (int j = 0; j < dim; ++j) {
        const double se = std::sqrt(var[j] / draws);
        worst_z = std::max(worst_z, std::abs(mean[j] - expected[j]) / se);
      }
    }
    r.passed = worst_z <= 3.0;
    r.detail = fmt("5 timesteps x %d coords, 1e5 draws each, worst |z| = %.3f", dim, worst_z);
  });
}

CheckResult check_map_recovery() {
  return timed(5, "MAP recovery with calibrated lambda", 30.0, [](CheckResult& r) {
    const auto s = standard_schedule();
    const int dim = 16;
    std::mt19937_64 rng(5);

    // Well-conditioned random operator: random orthogonal factors, singular values in [0.5, 1.5].
    Eigen::HouseholderQR<Matrix> qr_u(Matrix::NullaryExpr(dim, dim, [&] { return standard_normal(rng, 1)[0]; }));
    Eigen::HouseholderQR<Matrix> qr_v(Matrix::NullaryExpr(dim, dim, [&] { return standard_normal(rng, 1)[0]; }));
    const Matrix U = qr_u.householderQ();
    const Matrix V = qr_v.householderQ();
    const Vector sv = Vector::LinSpaced(dim, 0.5, 1.5);
    const Matrix A = U * sv.asDiagonal() * V.transpose();

    const double sigma_v = 0.5;
    const oracle::LinearGaussianProblem problem{A, sigma_v, Vector::Zero(dim), 1.0};
    const Vector truth = standard_normal(rng, dim);
    const Vector y = A * truth + sigma_v * standard_normal(rng, dim);
    const Vector map = oracle::analytic_map(problem, y);
    const double lambda = oracle::calibrated_lambda(problem, s);

    const GaussianPrior prior(Vector::Zero(dim), 1.0);
    const Measurement m(y, make_dense_linear(A, sigma_v));
    const auto desc = adam_run(m, prior, s, lambda, TimestepPlan::Kind::kDescending, 2000, 5);
    const auto rand = adam_run(m, prior, s, lambda, TimestepPlan::Kind::kRandom, 2000, 5);
    const Vector ls = A.colPivHouseholderQr().solve(y);
    const double gap = (desc.mu - map).norm() / map.norm();
    const double rand_gap = (rand.mu - map).norm() / map.norm();
    const double ls_gap = (ls - map).norm() / map.norm();

    // 1-D instance: grid posterior mode against the closed form.
    const GaussianMixturePrior prior_1d({1.0}, {Vector::Zero(1)}, {1.0});
    const oracle::LinearGaussianProblem problem_1d{Matrix::Constant(1, 1, 1.0), 1.0, Vector::Zero(1), 1.0};
    const Vector y_1d = Vector::Constant(1, 2.0);
    const Measurement m_1d(y_1d, make_dense_linear(problem_1d.A, 1.0));
    const auto grid = oracle::grid_posterior_1d(prior_1d, m_1d, {});
    const double map_1d = oracle::analytic_map(problem_1d, y_1d)[0];
    const bool grid_ok = std::abs(grid.mode() - map_1d) <= grid.cell();

    r.passed = gap <= 0.02 && grid_ok;
    r.detail = fmt("lambda*=%.6g descending gap %.4f (random plan %.4f, least squares %.4f); 1-D grid mode %.4f vs map %.4f",
                   lambda, gap, rand_gap, ls_gap, grid.mode(), map_1d);
  });
}

CheckResult check_stopped_gradient() {
  return timed(6, "stopped-gradient contract", 0.0, [](CheckResult& r) {
    const auto s = NoiseSchedule::linear(1e-4, 0.02, 1000);
    const int dim = 5;
    std::mt19937_64 rng(6);
    const Matrix A = Matrix::NullaryExpr(3, dim, [&] { return standard_normal(rng, 1)[0]; });
    const Measurement m(standard_normal(rng, 3), make_dense_linear(A, 0.1));
    const Vector mu = standard_normal(rng, dim);
    const Vector eps = standard_normal(rng, dim);
    const Vector c = standard_normal(rng, dim);
    const WeightSchedule w = WeightSchedule::inv_snr_power(0.25, 1.0);

    double worst_formula = 0.0;
    double worst_spread = 0.0;
    for (int t : {1, 10, 200, 700, 1000}) {
      const Vector anchor = diffuse(s, mu, t, eps);
      const Vector expected = 2.0 * A.transpose() * (A * mu - m.y) + lambda_at(w, s, t) * (c - eps);
      Vector first;
      for (double k : {0.0, 1.0, -3.0, 50.0}) {
        const AffineStubPrior stub(c, anchor, k);
        const Vector g = red_diff_step_loss({mu, 0.0}, m, stub, s, w, t, eps).grad_mu;
        worst_formula = std::max(worst_formula, (g - expected).lpNorm<Eigen::Infinity>() /
                                                    std::max(1.0, expected.lpNorm<Eigen::Infinity>()));
        if (first.size() == 0) first = g;
        worst_spread = std::max(worst_spread, (g - first).lpNorm<Eigen::Infinity>());
      }
    }
    r.passed = worst_formula <= 1e-14 && worst_spread == 0.0;
    r.detail = fmt("max deviation from recon + lambda_t(eps_theta - eps): %.3g; spread across stub slopes: %.3g",
                   worst_formula, worst_spread);
  });
}

CheckResult check_plan_ordering() {
  return timed(7, "descending vs random timestep plan", 0.0, [](CheckResult& r) {
    const auto s = standard_schedule();
    const GaussianMixturePrior prior({0.5, 0.5}, {Vector::Constant(2, 2.0), Vector::Constant(2, -2.0)}, {0.25, 0.25});
    const Measurement m(Vector::Constant(1, 1.9), make_inpainting_mask({true, false}, 0.05));
    std::vector<double> desc;
    std::vector<double> rand;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      for (auto kind : {TimestepPlan::Kind::kDescending, TimestepPlan::Kind::kRandom}) {
        const auto res = adam_run(m, prior, s, 0.25, kind, 1000, seed);
        const auto& last = res.trace.records.back();
        (kind == TimestepPlan::Kind::kDescending ? desc : rand).push_back(last.recon + last.reg_inner);
      }
    }
    const double md = median(desc);
    const double mr = median(rand);
    r.passed = md <= mr;
    r.detail = fmt("median final recon+reg over 20 seeds: descending %.4g, random %.4g", md, mr);
  });
}

CheckResult check_dispersion_gradient() {
  return timed(8, "dispersion gradient vs weighted KL", 0.0, [](CheckResult& r) {
    const auto s = standard_schedule();
    const int dim = 16;
    std::mt19937_64 rng(8);
    const GaussianPrior prior(0.3 * standard_normal(rng, dim), 0.7);
    const Vector mu = prior.mean() + 0.2 * standard_normal(rng, dim);
    const Measurement m(Vector::Zero(1), make_dense_linear(Matrix::Zero(1, dim), 0.0));
    const WeightSchedule w = WeightSchedule::inv_snr_power(0.25, 1.0);
    const double sigma = 0.6;
    const int draws = 1000000;

    double worst = 0.0;
    double worst_se = 0.0;
    double at_zero = 0.0;
    for (int t : {100, 400, 800}) {
      double sum = 0.0;
      double sum_sq = 0.0;
      for (int i = 0; i < draws; ++i) {
        const double g = dispersion_step_loss({mu, sigma}, m, prior, s, w, t, standard_normal(rng, dim)).grad_sigma;
        sum += g;
        sum_sq += g * g;
      }
      const double mc = sum / draws;
      worst_se = std::max(worst_se, std::sqrt((sum_sq / draws - mc * mc) / (draws - 1.0)) / std::abs(mc));
      const double weight = lambda_at(w, s, t) * s.sigma(t) / s.alpha(t);
      const double h = 1e-5;
      const double fd = weight *
                        (oracle::diffused_gaussian_kl(mu, sigma + h, prior, t, s) -
                         oracle::diffused_gaussian_kl(mu, sigma - h, prior, t, s)) /
                        (2.0 * h);
      worst = std::max(worst, std::abs(mc - fd) / std::abs(fd));
      at_zero = std::max(at_zero,
                         std::abs(dispersion_step_loss({mu, 0.0}, m, prior, s, w, t, standard_normal(rng, dim)).grad_sigma));
    }
    r.passed = worst <= 0.02 && at_zero == 0.0;
    r.detail = fmt("worst relative MC/FD mismatch %.4f (MC relative SE up to %.4f) over t in {100,400,800}; "
                   "|grad| at sigma=0: %.3g",
                   worst, worst_se, at_zero);
  });
}

CheckResult check_operator_contracts(const CheckOptions& options) {
  return timed(9, "operator adjoint and vjp contracts", 0.0, [&](CheckResult& r) {
    std::mt19937_64 rng(9);
    const ImageShape img{1, 8, 8};
    const ImageShape rgb{3, 6, 6};
    std::vector<bool> mask(64);
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = (i * 7) % 3 != 0;

    std::vector<OperatorPtr> ops = {
        make_inpainting_mask(mask, 0.05),
        make_downsample_avg(2, img, 0.05),
        make_downsample_avg(3, rgb, 0.05),
        make_gaussian_blur(1.2, 5, img, 0.05),
        make_gaussian_blur(0.8, 3, rgb, 0.05),
        make_dense_linear(Matrix::NullaryExpr(10, 16, [&] { return standard_normal(rng, 1)[0]; }), 0.05),
        make_hdr_clip(64, 0.05),
        make_dft_magnitude(16, 2, 0.05),
    };
    if (options.corrupt_vjp) {
      for (auto& op : ops) op = std::make_shared<CorruptedVjp>(op);
    }

    std::string failures;
    double worst_adjoint = 0.0;
    double worst_fd = 0.0;
    for (const auto& op : ops) {
      for (int trial = 0; trial < 5; ++trial) {
        const Vector x = standard_normal(rng, op->in_dim());
        const Vector u = standard_normal(rng, op->out_dim());
        const Vector g = op->vjp(x, u);
        if (op->is_linear()) {
          const double lhs = op->apply(x).dot(u);
          const double rhs = x.dot(g);
          const double rel = std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs)});
          worst_adjoint = std::max(worst_adjoint, rel);
          if (rel > 1e-12) failures += " " + op->name() + "(adjoint)";
        } else {
          const Vector fd =
              oracle::finite_diff_grad([&](const Vector& z) { return op->apply(z).dot(u); }, x, 1e-6);
          // Coordinates within h of a kink of the clip have no usable finite difference.
          double rel = 0.0;
          double scale = std::max(1.0, fd.lpNorm<Eigen::Infinity>());
          for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (op->name().find("hdr") != std::string::npos && std::abs(std::abs(2.0 * x[i]) - 1.0) < 1e-4) continue;
            rel = std::max(rel, std::abs(g[i] - fd[i]) / scale);
          }
          worst_fd = std::max(worst_fd, rel);
          if (rel > 1e-6) failures += " " + op->name() + "(vjp)";
        }
      }
    }

    // HDR clip: derivative is exactly 2 inside |2x| < 1 and exactly 0 outside.
    bool hdr_exact = true;
    {
      OperatorPtr hdr = make_hdr_clip(41, 0.0);
      if (options.corrupt_vjp) hdr = std::make_shared<CorruptedVjp>(hdr);
      const Vector x = Vector::LinSpaced(41, -1.0, 1.0);
      const Vector d = hdr->vjp(x, Vector::Ones(41));
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double expected = std::abs(2.0 * x[i]) < 1.0 ? 2.0 : 0.0;
        if (d[i] != expected) hdr_exact = false;
      }
    }
    if (!hdr_exact) failures += " hdr(derivative)";

    r.passed = failures.empty();
    r.detail = fmt("%zu operators, worst adjoint mismatch %.3g, worst vjp/FD mismatch %.3g, hdr derivative {2,0}: %s",
                   ops.size(), worst_adjoint, worst_fd, hdr_exact ? "yes" : "no");
    if (!failures.empty()) r.detail += "; failed:" + failures;
  });
}

CheckResult check_determinism() {
  return timed(10, "determinism and output formats", 0.0, [](CheckResult& r) {
    const fs::path root = fs::temp_directory_path() / fmt("reddiff-check-%lld", static_cast<long long>(
        std::chrono::steady_clock::now().time_since_epoch().count()));
    const std::string text = R"({
  "image": {"channels": 1, "height": 4, "width": 4},
  "prior": {"kind": "gmm", "weights": [0.5, 0.5],
            "means": [[1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1], [-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1]],
            "variances": [0.3, 0.3]},
  "operator": {"kind": "downsample", "factor": 2, "sigma_v": 0.05},
  "truth": {"seed": 11},
  "sampler": {"method": "reddiff", "seed": 3, "plan": {"kind": "random"}, "optimizer": {"steps": 200}}
})";
    const ExperimentConfig config = parse_config(text);
    auto read = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      std::stringstream buf;
      buf << in.rdbuf();
      return buf.str();
    };
    RunOptions a;
    a.out_dir = root / "a";
    RunOptions b;
    b.out_dir = root / "b";
    run_experiment(config, a);
    run_experiment(config, b);
    const std::string trace_a = read(root / "a" / "trace.csv");
    const bool same_trace = trace_a == read(root / "b" / "trace.csv");
    const bool same_mu = read(root / "a" / "mu.bin") == read(root / "b" / "mu.bin");
    const std::string header = trace_a.substr(0, trace_a.find('\n'));
    const bool header_ok = header == "step,t,loss,recon,reg_inner,eps_residual_norm,signal_residual_norm";
    const bool files_ok = fs::file_size(root / "a" / "mu.bin") == 16 * sizeof(double) &&
                          fs::exists(root / "a" / "mu.json") && fs::exists(root / "a" / "summary.json") &&
                          fs::exists(root / "a" / "config.json");
    fs::remove_all(root);
    r.passed = same_trace && same_mu && header_ok && files_ok;
    r.detail = fmt("trace.csv identical: %s, mu.bin identical: %s, header: %s, artifacts: %s",
                   same_trace ? "yes" : "no", same_mu ? "yes" : "no", header_ok ? "ok" : "wrong",
                   files_ok ? "ok" : "missing");
  });
}

std::vector<CheckResult> run_check_suite(const CheckOptions& options,
                                         const std::function<void(const CheckResult&)>& on_result) {
  using Check = std::function<CheckResult()>;
  const std::vector<Check> checks = {
      check_schedule_exactness, check_gmm_score,      check_residual_identity,
      check_expected_gradient,  check_map_recovery,   check_stopped_gradient,
      check_plan_ordering,      check_dispersion_gradient,
      [&] { return check_operator_contracts(options); },
      check_determinism,
  };
  std::vector<CheckResult> results;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!options.only.empty() && std::find(options.only.begin(), options.only.end(), id) == options.only.end()) {
      continue;
    }
    CheckResult r = checks[i]();
    if (on_result) on_result(r);
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace reddiff

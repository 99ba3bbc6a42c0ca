#include "reddiff/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "reddiff/metrics.hpp"
#include "reddiff/oracle.hpp"
#include "reddiff/sampler.hpp"
#include "reddiff/tensor_io.hpp"
#include "reddiff/trace.hpp"

namespace reddiff {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Largest problem for which the analytic MAP is formed densely in summaries.
constexpr int kMaxMapDim = 1024;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError("config " + (path.empty() ? std::string("/") : path) + ": " + message);
}

const json& require_object(const json& parent, const std::string& key, const std::string& path) {
  if (!parent.contains(key)) fail(path + "/" + key, "missing section");
  const json& node = parent.at(key);
  if (!node.is_object()) fail(path + "/" + key, "expected an object");
  return node;
}

template <class T>
T get(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) fail(path + "/" + key, "missing required field");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(path + "/" + key, std::string("wrong type (") + e.what() + ")");
  }
}

template <class T>
T get_or(const json& obj, const std::string& key, const std::string& path, T fallback) {
  if (!obj.contains(key)) return fallback;
  return get<T>(obj, key, path);
}

Vector to_vector(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  // nlohmann reports the byte just past the offending token.
  if (col > 1) --col;
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

WeightSchedule parse_weighting(const json& j, const std::string& path, double sigma_v) {
  const auto kind = get_or<std::string>(j, "kind", path, "inv_snr");
  if (kind == "constant") return WeightSchedule::constant(get<double>(j, "lambda", path));
  if (kind == "inv_snr") {
    return WeightSchedule::inv_snr_power(get_or<double>(j, "lambda", path, 0.25), get_or<double>(j, "power", path, 1.0));
  }
  if (kind == "max_likelihood") {
    return WeightSchedule::max_likelihood(get<std::vector<double>>(j, "omega_prime", path), sigma_v);
  }
  fail(path + "/kind", "unknown weighting '" + kind + "' (constant, inv_snr, max_likelihood)");
}

TimestepPlan::Kind parse_plan_kind(const std::string& kind, const std::string& path) {
  if (kind == "descending") return TimestepPlan::Kind::kDescending;
  if (kind == "ascending") return TimestepPlan::Kind::kAscending;
  if (kind == "random") return TimestepPlan::Kind::kRandom;
  if (kind == "minibatch_random") return TimestepPlan::Kind::kMinibatchRandom;
  if (kind == "minibatch_descending") return TimestepPlan::Kind::kMinibatchDescending;
  fail(path, "unknown timestep plan '" + kind + "'");
}

OptimizerConfig parse_optimizer(const json& j, const std::string& path) {
  const auto kind = get_or<std::string>(j, "kind", path, "adam");
  const double lr = get_or<double>(j, "lr", path, 0.1);
  const int steps = get_or<int>(j, "steps", path, 1000);
  if (kind == "adam") {
    return OptimizerConfig::adam(lr, steps, get_or<double>(j, "beta1", path, 0.9), get_or<double>(j, "beta2", path, 0.99),
                                 get_or<double>(j, "eps", path, 1e-8));
  }
  if (kind == "sgd") return OptimizerConfig::sgd(lr, steps, get_or<double>(j, "momentum", path, 0.0));
  fail(path + "/kind", "unknown optimizer '" + kind + "' (adam, sgd)");
}

PriorSpec parse_prior(const json& j, const std::string& path) {
  PriorSpec p;
  const auto kind = get<std::string>(j, "kind", path);
  if (kind == "gaussian") {
    p.kind = PriorSpec::Kind::kGaussian;
    p.variance = get_or<double>(j, "variance", path, 1.0);
    if (j.contains("mean") && j.at("mean").is_array()) {
      p.mean = to_vector(get<std::vector<double>>(j, "mean", path));
    } else {
      const int dim = get<int>(j, "dim", path);
      if (dim < 1) fail(path + "/dim", "must be positive");
      p.mean = Vector::Constant(dim, get_or<double>(j, "mean", path, 0.0));
    }
  } else if (kind == "gmm") {
    p.kind = PriorSpec::Kind::kGmm;
    p.weights = get<std::vector<double>>(j, "weights", path);
    for (const auto& m : get<std::vector<std::vector<double>>>(j, "means", path)) p.means.push_back(to_vector(m));
    p.variances = get<std::vector<double>>(j, "variances", path);
  } else {
    fail(path + "/kind", "unknown prior '" + kind + "' (gaussian, gmm)");
  }
  return p;
}

OperatorSpec parse_operator(const json& j, const std::string& path, const fs::path& base_dir) {
  OperatorSpec op;
  op.kind = get<std::string>(j, "kind", path);
  op.sigma_v = get_or<double>(j, "sigma_v", path, 0.0);
  if (op.kind == "identity" || op.kind == "hdr") {
  } else if (op.kind == "dense") {
    if (j.contains("matrix")) {
      const auto rows = get<std::vector<std::vector<double>>>(j, "matrix", path);
      if (rows.empty() || rows.front().empty()) fail(path + "/matrix", "empty matrix");
      op.matrix.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.front().size()) fail(path + "/matrix", "ragged rows");
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
          op.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
      }
    } else {
      const json& rnd = require_object(j, "random", path);
      const int rows = get<int>(rnd, "rows", path + "/random");
      const int cols = get<int>(rnd, "cols", path + "/random");
      if (rows < 1 || cols < 1) fail(path + "/random", "rows and cols must be positive");
      std::mt19937_64 rng(get_or<std::uint64_t>(rnd, "seed", path + "/random", 0));
      std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(rows)));
      op.matrix.resize(rows, cols);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) op.matrix(r, c) = normal(rng);
    }
  } else if (op.kind == "inpaint") {
    if (j.contains("mask_file")) {
      fs::path p = get<std::string>(j, "mask_file", path);
      if (p.is_relative()) p = base_dir / p;
      try {
        op.mask = load_mask_file(p);
      } catch (const std::runtime_error& e) {
        fail(path + "/mask_file", e.what());
      }
    } else if (j.contains("mask")) {
      for (int v : get<std::vector<int>>(j, "mask", path)) op.mask.push_back(v != 0);
      if (op.mask.empty()) fail(path + "/mask", "empty mask");
    } else {
      op.keep_fraction = get<double>(j, "keep_fraction", path);
      op.mask_seed = get_or<std::uint64_t>(j, "mask_seed", path, 0);
      if (!(op.keep_fraction > 0.0 && op.keep_fraction <= 1.0)) fail(path + "/keep_fraction", "must be in (0, 1]");
    }
  } else if (op.kind == "downsample") {
    op.factor = get<int>(j, "factor", path);
  } else if (op.kind == "blur") {
    op.kernel_std = get<double>(j, "kernel_std", path);
    op.kernel_size = get<int>(j, "kernel_size", path);
  } else if (op.kind == "phase") {
    op.oversample = get_or<int>(j, "oversample", path, 2);
  } else {
    fail(path + "/kind", "unknown operator '" + op.kind + "' (identity, dense, inpaint, downsample, blur, hdr, phase)");
  }
  return op;
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json real_json(double v) {
  if (std::isfinite(v)) return v;
  return format_real(v);
}

json report_json(const MetricReport& r) {
  json out;
  out["mse"] = real_json(r.mse);
  out["psnr_db"] = real_json(r.psnr_db);
  out["ssim"] = r.ssim ? real_json(*r.ssim) : json(nullptr);
  return out;
}

std::vector<std::int64_t> tensor_shape(const ExperimentConfig& c, Eigen::Index n) {
  if (c.image) return {c.image->channels, c.image->height, c.image->width};
  return {static_cast<std::int64_t>(n)};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-') ? c : '_';
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error at " + line_col(text, e.byte) + ": " + e.what());
  }
  if (!root.is_object()) fail("", "top level must be an object");

  ExperimentConfig c;
  c.source_text = text;

  if (root.contains("schedule")) {
    const json& s = require_object(root, "schedule", "");
    c.beta_min = get_or<double>(s, "beta_min", "/schedule", c.beta_min);
    c.beta_max = get_or<double>(s, "beta_max", "/schedule", c.beta_max);
    c.num_timesteps = get_or<int>(s, "T", "/schedule", c.num_timesteps);
  }
  if (root.contains("image")) {
    const json& im = require_object(root, "image", "");
    c.image = ImageShape{get_or<int>(im, "channels", "/image", 1), get<int>(im, "height", "/image"),
                         get<int>(im, "width", "/image")};
  }
  c.prior = parse_prior(require_object(root, "prior", ""), "/prior");
  c.op = parse_operator(require_object(root, "operator", ""), "/operator", base_dir);

  if (root.contains("truth")) {
    const json& t = require_object(root, "truth", "");
    const auto source = get_or<std::string>(t, "source", "/truth", "prior_sample");
    c.truth.seed = get_or<std::uint64_t>(t, "seed", "/truth", 0);
    if (source == "prior_sample") {
      c.truth.source = TruthSpec::Source::kPriorSample;
    } else if (source == "file") {
      c.truth.source = TruthSpec::Source::kFile;
      c.truth.path = get<std::string>(t, "path", "/truth");
      if (c.truth.path.is_relative()) c.truth.path = base_dir / c.truth.path;
    } else {
      fail("/truth/source", "unknown truth source '" + source + "' (prior_sample, file)");
    }
  }

  if (root.contains("sampler")) {
    const json& s = require_object(root, "sampler", "");
    const auto method = get_or<std::string>(s, "method", "/sampler", "reddiff");
    if (method == "reddiff") {
      c.sampler.method = SamplerSpec::Method::kRedDiff;
    } else if (method == "reddiff_dispersion") {
      c.sampler.method = SamplerSpec::Method::kRedDiffDispersion;
    } else if (method == "dps") {
      c.sampler.method = SamplerSpec::Method::kDps;
    } else {
      fail("/sampler/method", "unknown method '" + method + "' (reddiff, reddiff_dispersion, dps)");
    }
    c.sampler.seed = get_or<std::uint64_t>(s, "seed", "/sampler", 0);
    c.sampler.sigma_init = get_or<double>(s, "sigma_init", "/sampler", 0.0);
    if (s.contains("weighting")) {
      c.sampler.weighting = parse_weighting(require_object(s, "weighting", "/sampler"), "/sampler/weighting", c.op.sigma_v);
    }
    if (s.contains("optimizer")) {
      c.sampler.optimizer = parse_optimizer(require_object(s, "optimizer", "/sampler"), "/sampler/optimizer");
    }
    if (s.contains("plan")) {
      const json& p = require_object(s, "plan", "/sampler");
      c.sampler.plan.kind = parse_plan_kind(get_or<std::string>(p, "kind", "/sampler/plan", "descending"), "/sampler/plan/kind");
      c.sampler.plan.batch = get_or<int>(p, "batch", "/sampler/plan", 1);
    }
    if (s.contains("dps")) {
      const json& d = require_object(s, "dps", "/sampler");
      c.sampler.dps_steps = get_or<int>(d, "steps", "/sampler/dps", c.sampler.dps_steps);
      c.sampler.zeta_scale = get_or<double>(d, "zeta_scale", "/sampler/dps", c.sampler.zeta_scale);
    }
  }
  c.sampler.plan.steps = c.sampler.optimizer.steps;

  if (root.contains("output")) {
    const json& o = require_object(root, "output", "");
    c.output.directory = get_or<std::string>(o, "directory", "/output", "out");
    c.output.emit_images = get_or<bool>(o, "emit_images", "/output", false);
    c.output.image_format = get_or<std::string>(o, "image_format", "/output", "");
    if (o.contains("range")) {
      const auto r = get<std::vector<double>>(o, "range", "/output");
      if (r.size() != 2 || !(r[1] > r[0])) fail("/output/range", "expected [lo, hi] with hi > lo");
      c.output.range_lo = r[0];
      c.output.range_hi = r[1];
    }
  }
  if (root.contains("metrics")) {
    const json& m = require_object(root, "metrics", "");
    c.peak = get_or<double>(m, "peak", "/metrics", c.peak);
    c.ssim_window = get_or<int>(m, "ssim_window", "/metrics", c.ssim_window);
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

Problem build_problem(const ExperimentConfig& c) {
  std::shared_ptr<const ScorePrior> prior;
  std::shared_ptr<const GaussianPrior> gaussian;
  std::shared_ptr<const GaussianMixturePrior> gmm;
  try {
    if (c.prior.kind == PriorSpec::Kind::kGaussian) {
      gaussian = std::make_shared<GaussianPrior>(c.prior.mean, c.prior.variance);
      prior = gaussian;
    } else {
      gmm = std::make_shared<GaussianMixturePrior>(c.prior.weights, c.prior.means, c.prior.variances);
      prior = gmm;
    }
  } catch (const std::invalid_argument& e) {
    fail("/prior", e.what());
  }
  const int dim = prior->dim();
  if (c.image && c.image->size() != dim) {
    fail("/image", "image holds " + std::to_string(c.image->size()) + " values but the prior has dimension " +
                       std::to_string(dim));
  }

  auto need_image = [&]() -> ImageShape {
    if (!c.image) fail("/image", "operator '" + c.op.kind + "' needs an image shape");
    return *c.image;
  };

  OperatorPtr op;
  try {
    const auto& s = c.op;
    if (s.kind == "identity") {
      op = make_dense_linear(Matrix::Identity(dim, dim), s.sigma_v);
    } else if (s.kind == "dense") {
      op = make_dense_linear(s.matrix, s.sigma_v);
    } else if (s.kind == "inpaint") {
      std::vector<bool> mask = s.mask;
      if (mask.empty()) {
        std::mt19937_64 rng(s.mask_seed);
        std::bernoulli_distribution keep(s.keep_fraction);
        mask.resize(static_cast<std::size_t>(dim));
        for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = keep(rng);
      }
      op = make_inpainting_mask(std::move(mask), s.sigma_v);
    } else if (s.kind == "downsample") {
      op = make_downsample_avg(s.factor, need_image(), s.sigma_v);
    } else if (s.kind == "blur") {
      op = make_gaussian_blur(s.kernel_std, s.kernel_size, need_image(), s.sigma_v);
    } else if (s.kind == "hdr") {
      op = make_hdr_clip(dim, s.sigma_v);
    } else if (s.kind == "phase") {
      op = make_dft_magnitude(dim, s.oversample, s.sigma_v);
    }
  } catch (const std::invalid_argument& e) {
    fail("/operator", e.what());
  }
  if (op->in_dim() != dim) {
    fail("/operator", "operator input dimension " + std::to_string(op->in_dim()) +
                          " does not match prior dimension " + std::to_string(dim));
  }

  NoiseSchedule schedule = [&] {
    try {
      return NoiseSchedule::linear(c.beta_min, c.beta_max, c.num_timesteps);
    } catch (const std::invalid_argument& e) {
      fail("/schedule", e.what());
    }
  }();

  std::mt19937_64 rng(c.truth.seed);
  Vector truth;
  if (c.truth.source == TruthSpec::Source::kFile) {
    truth = read_tensor(c.truth.path).data;
    if (truth.size() != dim) fail("/truth/path", "tensor length does not match prior dimension");
  } else {
    truth = gaussian ? gaussian->sample(rng) : gmm->sample(rng);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector y = op->apply(truth);
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += op->sigma_v() * normal(rng);

  return Problem{std::move(schedule), prior, gaussian, op, std::move(truth), std::move(y)};
}

fs::path resolve_output_dir(const ExperimentConfig& config, const RunOptions& options) {
  if (options.out_dir) return *options.out_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return env;
  return config.output.directory;
}

RunSummary run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  Problem problem = build_problem(config);
  const fs::path dir = resolve_output_dir(config, options);
  fs::create_directories(dir);

  const std::uint64_t seed = options.seed.value_or(config.sampler.seed);
  const Measurement measurement(problem.y, problem.op);
  const auto& sp = config.sampler;

  SampleResult result;
  json summary;
  switch (sp.method) {
    case SamplerSpec::Method::kRedDiff:
      summary["method"] = "reddiff";
      result = sample(measurement, *problem.prior, problem.schedule, sp.weighting, sp.plan, sp.optimizer, seed);
      break;
    case SamplerSpec::Method::kRedDiffDispersion:
      summary["method"] = "reddiff_dispersion";
      result = sample_with_dispersion(measurement, *problem.prior, problem.schedule, sp.weighting, sp.plan,
                                      sp.optimizer, seed, sp.sigma_init);
      summary["sigma_q"] = real_json(result.sigma_q);
      break;
    case SamplerSpec::Method::kDps:
      summary["method"] = "dps";
      result.mu = dps_baseline_sample(measurement, *problem.prior, problem.schedule, sp.dps_steps, sp.zeta_scale, seed);
      break;
  }

  RunSummary out;
  out.directory = dir;
  out.final_loss = result.trace.records.empty() ? (problem.op->apply(result.mu) - problem.y).squaredNorm()
                                                : result.trace.records.back().loss;

  const MetricReport vs_truth = evaluate(result.mu, problem.truth, config.peak, config.image, config.ssim_window);
  out.psnr_truth = vs_truth.psnr_db;
  summary["seed"] = seed;
  summary["steps"] = static_cast<int>(result.trace.records.size());
  summary["final_loss"] = real_json(out.final_loss);
  summary["vs_truth"] = report_json(vs_truth);
  if (problem.op->out_dim() == problem.op->in_dim()) {
    summary["vs_observation"] = report_json(evaluate(result.mu, problem.y, config.peak, config.image, config.ssim_window));
  }
  summary["vs_map"] = nullptr;
  summary["map_gap"] = nullptr;
  if (problem.gaussian && problem.op->is_linear() && problem.op->in_dim() <= kMaxMapDim) {
    const oracle::LinearGaussianProblem lg{materialize(*problem.op), problem.op->effective_sigma_v(),
                                           problem.gaussian->mean(), problem.gaussian->variance()};
    const Vector map = oracle::analytic_map(lg, problem.y);
    out.map_gap = (result.mu - map).norm() / std::max(map.norm(), 1e-300);
    summary["vs_map"] = report_json(evaluate(result.mu, map, config.peak, config.image, config.ssim_window));
    summary["map_gap"] = real_json(*out.map_gap);
  }

  write_text(dir / "config.json", config.source_text);
  write_text(dir / "trace.csv", trace_to_csv(result.trace));
  write_tensor(dir / "mu.bin", result.mu, tensor_shape(config, result.mu.size()));
  write_text(dir / "summary.json", summary.dump(2) + "\n");

  if (config.output.emit_images) {
    if (!config.image) fail("/output/emit_images", "images need an image shape");
    const std::string ext = config.output.image_format.empty() ? (config.image->channels == 3 ? "ppm" : "pgm")
                                                                : config.output.image_format;
    if ((ext == "pgm" && config.image->channels != 1) || (ext == "ppm" && config.image->channels != 3) ||
        (ext != "pgm" && ext != "ppm")) {
      fail("/output/image_format", "'" + ext + "' does not fit a " + std::to_string(config.image->channels) +
                                       "-channel image");
    }
    const double lo = config.output.range_lo;
    const double hi = config.output.range_hi;
    write_image(dir / ("mu." + ext), result.mu, *config.image, lo, hi);
    write_image(dir / ("truth." + ext), problem.truth, *config.image, lo, hi);
    write_image(dir / ("initial." + ext), problem.op->initial_estimate(problem.y), *config.image, lo, hi);
  }
  return out;
}

SweepParam parse_sweep_param(const std::string& name) {
  if (name == "lambda") return SweepParam::kLambda;
  if (name == "lr") return SweepParam::kLr;
  if (name == "steps") return SweepParam::kSteps;
  if (name == "weighting") return SweepParam::kWeighting;
  if (name == "plan") return SweepParam::kPlan;
  throw std::invalid_argument("unknown sweep parameter '" + name + "' (lambda, lr, steps, weighting, plan)");
}

ExperimentConfig apply_sweep_value(const ExperimentConfig& config, SweepParam param, const std::string& value) {
  ExperimentConfig c = config;
  auto number = [&](const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != text.size() || text.empty()) throw std::invalid_argument("sweep value '" + text + "' is not a number");
    return v;
  };
  switch (param) {
    case SweepParam::kLambda:
      c.sampler.weighting.lambda = number(value);
      break;
    case SweepParam::kLr:
      c.sampler.optimizer.lr = number(value);
      break;
    case SweepParam::kSteps: {
      const double v = number(value);
      if (v != std::floor(v) || v < 1) throw std::invalid_argument("sweep steps must be positive integers");
      c.sampler.optimizer.steps = static_cast<int>(v);
      c.sampler.plan.steps = c.sampler.optimizer.steps;
      break;
    }
    case SweepParam::kWeighting:
      // "constant", "p=<power>" or "inv_snr:<power>"; the config's lambda is kept.
      if (value == "constant") {
        c.sampler.weighting = WeightSchedule::constant(config.sampler.weighting.lambda);
      } else if (value.rfind("p=", 0) == 0) {
        c.sampler.weighting = WeightSchedule::inv_snr_power(config.sampler.weighting.lambda, number(value.substr(2)));
      } else if (value.rfind("inv_snr:", 0) == 0) {
        c.sampler.weighting = WeightSchedule::inv_snr_power(config.sampler.weighting.lambda, number(value.substr(8)));
      } else {
        throw std::invalid_argument("weighting sweep values are constant, p=<power> or inv_snr:<power>");
      }
      break;
    case SweepParam::kPlan: {
      // "<kind>" or "<kind>:<batch>"
      const auto colon = value.find(':');
      c.sampler.plan.kind = parse_plan_kind(value.substr(0, colon), "sweep value");
      if (colon != std::string::npos) {
        const double b = number(value.substr(colon + 1));
        if (b != std::floor(b) || b < 1) throw std::invalid_argument("plan batch must be a positive integer");
        c.sampler.plan.batch = static_cast<int>(b);
      }
      break;
    }
  }
  return c;
}

std::vector<RunSummary> run_sweep(const ExperimentConfig& config, const std::string& param,
                                  const std::vector<std::string>& values, const RunOptions& options) {
  const SweepParam which = parse_sweep_param(param);
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");

  std::vector<ExperimentConfig> configs;
  configs.reserve(values.size());
  for (const auto& v : values) configs.push_back(apply_sweep_value(config, which, v));

  const fs::path root = resolve_output_dir(config, options);
  fs::create_directories(root);

  std::vector<RunSummary> results(values.size());
  std::vector<std::exception_ptr> errors(values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < values.size(); i = next++) {
      try {
        RunOptions run_opts;
        run_opts.seed = options.seed;
        run_opts.out_dir = root / (param + "-" + sanitize(values[i]));
        results[i] = run_experiment(configs[i], run_opts);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, values.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::ostringstream csv;
  csv << "value,final_loss,psnr,map_gap\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    csv << values[i] << ',' << format_real(results[i].final_loss) << ',' << format_real(results[i].psnr_truth) << ','
        << (results[i].map_gap ? format_real(*results[i].map_gap) : std::string("nan")) << '\n';
  }
  write_text(root / "sweep.csv", csv.str());
  return results;
}

}  // namespace reddiff

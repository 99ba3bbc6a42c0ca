#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "reddiff/operators.hpp"
#include "reddiff/optimizer.hpp"
#include "reddiff/priors.hpp"
#include "reddiff/schedule.hpp"
#include "reddiff/timestep_plan.hpp"
#include "reddiff/weighting.hpp"

namespace reddiff {

/// Malformed or inconsistent experiment configuration. The message carries the
/// line/column for syntax errors and the JSON pointer for semantic ones.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PriorSpec {
  enum class Kind { kGaussian, kGmm };
  Kind kind = Kind::kGaussian;
  Vector mean;
  double variance = 1.0;
  std::vector<double> weights;
  std::vector<Vector> means;
  std::vector<double> variances;
};

struct OperatorSpec {
  std::string kind = "identity";  // identity | dense | inpaint | downsample | blur | hdr | phase
  double sigma_v = 0.0;
  Matrix matrix;                  // dense
  std::vector<bool> mask;         // inpaint; empty means a random mask
  double keep_fraction = 0.5;     // inpaint, random mask
  std::uint64_t mask_seed = 0;    // inpaint, random mask
  int factor = 1;                 // downsample
  double kernel_std = 1.0;        // blur
  int kernel_size = 5;            // blur
  int oversample = 2;             // phase
};

struct TruthSpec {
  enum class Source { kPriorSample, kFile };
  Source source = Source::kPriorSample;
  std::uint64_t seed = 0;  // also seeds the observation noise
  std::filesystem::path path;
};

struct SamplerSpec {
  enum class Method { kRedDiff, kRedDiffDispersion, kDps };
  Method method = Method::kRedDiff;
  WeightSchedule weighting = WeightSchedule::inv_snr_power(0.25, 1.0);
  TimestepPlan plan;
  OptimizerConfig optimizer = OptimizerConfig::adam(0.1, 1000);
  std::uint64_t seed = 0;
  double sigma_init = 0.0;
  int dps_steps = 1000;
  double zeta_scale = 0.1;
};

struct OutputSpec {
  std::filesystem::path directory = "out";
  bool emit_images = false;
  std::string image_format;  // "pgm" or "ppm"; empty picks by channel count
  double range_lo = -1.0;
  double range_hi = 1.0;
};

struct ExperimentConfig {
  double beta_min = 1e-4;
  double beta_max = 0.02;
  int num_timesteps = 1000;
  std::optional<ImageShape> image;
  PriorSpec prior;
  OperatorSpec op;
  TruthSpec truth;
  SamplerSpec sampler;
  OutputSpec output;
  double peak = 2.0;
  int ssim_window = 7;

  std::string source_text;  // raw config bytes, copied into each run directory
};

/// Parses a JSON config document. Relative paths resolve against base_dir.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Objects built from a config: schedule, prior, operator, truth and observation.
struct Problem {
  NoiseSchedule schedule;
  std::shared_ptr<const ScorePrior> prior;
  std::shared_ptr<const GaussianPrior> gaussian;  // set when the prior is Gaussian
  OperatorPtr op;
  Vector truth;
  Vector y;
};

Problem build_problem(const ExperimentConfig& config);

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
};

struct RunSummary {
  std::filesystem::path directory;
  double final_loss = 0.0;
  double psnr_truth = 0.0;
  std::optional<double> map_gap;
};

/// Environment variable that overrides output.directory (a --out flag still wins).
inline constexpr const char* kOutputDirEnv = "REDDIFF_OUTPUT_DIR";

std::filesystem::path resolve_output_dir(const ExperimentConfig& config, const RunOptions& options);

/// Runs one experiment and writes config.json, trace.csv, mu.bin, mu.json,
/// summary.json and, if requested, images into the output directory.
RunSummary run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

enum class SweepParam { kLambda, kLr, kSteps, kWeighting, kPlan };

SweepParam parse_sweep_param(const std::string& name);

/// Returns a copy of `config` with one swept value applied.
ExperimentConfig apply_sweep_value(const ExperimentConfig& config, SweepParam param, const std::string& value);

/// One run directory per value under the output directory plus sweep.csv with
/// columns value,final_loss,psnr,map_gap. Runs go to a small worker pool.
std::vector<RunSummary> run_sweep(const ExperimentConfig& config, const std::string& param,
                                  const std::vector<std::string>& values, const RunOptions& options = {});

}  // namespace reddiff

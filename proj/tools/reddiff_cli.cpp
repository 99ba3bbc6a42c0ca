#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "reddiff/experiment.hpp"
#include "reddiff/verification.hpp"

namespace {

std::vector<std::string> split_values(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw std::invalid_argument("empty entry in --values list");
    out.push_back(item);
  }
  if (out.empty()) throw std::invalid_argument("--values needs at least one entry");
  return out;
}

int run_check(const reddiff::CheckOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  bool all = true;
  reddiff::run_check_suite(options, [&](const reddiff::CheckResult& r) {
    all = all && r.passed;
    std::printf("[%s] %2d %-44s %7.2fs  %s\n", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds,
                r.detail.c_str());
    std::fflush(stdout);
  });
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_budget = total < reddiff::kSuiteBudgetSeconds;
  std::printf("total %.1fs (budget %.0fs)%s\n", total, reddiff::kSuiteBudgetSeconds, in_budget ? "" : " exceeded");
  return all && in_budget ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RED-diff variational posterior sampling with analytic diffusion priors"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;

  auto* run = app.add_subcommand("run", "run one experiment from a config file");
  run->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "override sampler.seed");
  run->add_option("--out", out_dir, "output directory (overrides config and " + std::string(reddiff::kOutputDirEnv) + ")");

  std::string param;
  std::string values;
  auto* sweep = app.add_subcommand("sweep", "run one experiment per value of a parameter");
  sweep->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
  sweep->add_option("--param", param, "lambda, lr, steps, weighting or plan")->required();
  sweep->add_option("--values", values, "comma-separated values")->required();
  sweep->add_option("--seed", seed, "override sampler.seed");
  sweep->add_option("--out", out_dir, "root output directory");

  reddiff::CheckOptions check_options;
  auto* check = app.add_subcommand("check", "run the built-in verification suite");
  check->add_flag("--corrupt-vjp", check_options.corrupt_vjp, "flip the sign of every operator vjp; the suite must then fail");
  check->add_option("--only", check_options.only, "run only these check ids (1-10)")->delimiter(',')->check(
      CLI::Range(1, 10));

  CLI11_PARSE(app, argc, argv);

  try {
    reddiff::RunOptions options;
    options.seed = seed;
    if (out_dir) options.out_dir = *out_dir;

    if (*run) {
      const auto config = reddiff::load_config(config_path);
      const auto summary = reddiff::run_experiment(config, options);
      std::printf("wrote %s  final_loss=%.6g  psnr=%.3f dB", summary.directory.string().c_str(), summary.final_loss,
                  summary.psnr_truth);
      if (summary.map_gap) std::printf("  map_gap=%.4g", *summary.map_gap);
      std::printf("\n");
      return 0;
    }
    if (*sweep) {
      const auto config = reddiff::load_config(config_path);
      const auto list = split_values(values);
      const auto results = reddiff::run_sweep(config, param, list, options);
      for (std::size_t i = 0; i < results.size(); ++i) {
        std::printf("%s=%s  final_loss=%.6g  psnr=%.3f dB\n", param.c_str(), list[i].c_str(), results[i].final_loss,
                    results[i].psnr_truth);
      }
      return 0;
    }
    if (*check) return run_check(check_options);
  } catch (const reddiff::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

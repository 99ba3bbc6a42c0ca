#pragma once

#include <random>
#include <vector>

namespace reddiff {

/// Order in which diffusion times are visited during optimization.
/// Minibatch kinds visit `batch` timesteps per optimizer step.
struct TimestepPlan {
  enum class Kind { kDescending, kAscending, kRandom, kMinibatchRandom, kMinibatchDescending };

  Kind kind = Kind::kDescending;
  int steps = 1000;
  int batch = 1;

  int per_step() const;
};

/// Uniformly spaced descending grid of `count` timesteps over {1..T}:
/// entry l is T - floor(l * T / count).
std::vector<int> descending_grid(int num_timesteps, int count);

/// Timesteps for every optimizer step (outer size = plan.steps). Random kinds draw from `rng`.
std::vector<std::vector<int>> materialize_plan(const TimestepPlan& plan, int num_timesteps,
                                               std::mt19937_64& rng);

}  // namespace reddiff

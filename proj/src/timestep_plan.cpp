#include "reddiff/timestep_plan.hpp"

#include <algorithm>
#include <stdexcept>

namespace reddiff {

int TimestepPlan::per_step() const {
  return (kind == Kind::kMinibatchRandom || kind == Kind::kMinibatchDescending) ? batch : 1;
}

std::vector<int> descending_grid(int num_timesteps, int count) {
  std::vector<int> grid(static_cast<std::size_t>(count));
  for (int l = 0; l < count; ++l) {
    const long long offset = static_cast<long long>(l) * num_timesteps / count;
    grid[static_cast<std::size_t>(l)] = num_timesteps - static_cast<int>(offset);
  }
  return grid;
}

std::vector<std::vector<int>> materialize_plan(const TimestepPlan& plan, int num_timesteps,
                                               std::mt19937_64& rng) {
  if (plan.steps < 1) throw std::invalid_argument("timestep plan needs at least one step");
  if (plan.batch < 1) throw std::invalid_argument("timestep plan batch must be >= 1");
  if (num_timesteps < 1) throw std::invalid_argument("schedule has no timesteps");

  const auto L = static_cast<std::size_t>(plan.steps);
  std::vector<std::vector<int>> out(L);
  std::uniform_int_distribution<int> uniform(1, num_timesteps);

  switch (plan.kind) {
    case TimestepPlan::Kind::kDescending: {
      const auto grid = descending_grid(num_timesteps, plan.steps);
      for (std::size_t l = 0; l < L; ++l) out[l] = {grid[l]};
      break;
    }
    case TimestepPlan::Kind::kAscending: {
      auto grid = descending_grid(num_timesteps, plan.steps);
      std::reverse(grid.begin(), grid.end());
      for (std::size_t l = 0; l < L; ++l) out[l] = {grid[l]};
      break;
    }
    case TimestepPlan::Kind::kRandom:
      for (auto& ts : out) ts = {uniform(rng)};
      break;
    case TimestepPlan::Kind::kMinibatchRandom:
      for (auto& ts : out) {
        ts.resize(static_cast<std::size_t>(plan.batch));
        for (int& t : ts) t = uniform(rng);
      }
      break;
    case TimestepPlan::Kind::kMinibatchDescending: {
      const auto B = static_cast<std::size_t>(plan.batch);
      const auto grid = descending_grid(num_timesteps, plan.steps * plan.batch);
      for (std::size_t l = 0; l < L; ++l) {
        out[l].assign(grid.begin() + static_cast<std::ptrdiff_t>(l * B),
                      grid.begin() + static_cast<std::ptrdiff_t>((l + 1) * B));
      }
      break;
    }
  }
  return out;
}

}  // namespace reddiff

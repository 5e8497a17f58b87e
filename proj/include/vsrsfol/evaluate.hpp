#pragma once

// Collision-test harness: runs a controller over a density x occlusion matrix
// of seeded episodes and reduces the outcomes to one metrics row per cell.

#include <cstdint>
#include <string>
#include <vector>

#include "vsrsfol/sim.hpp"

namespace vsrsfol {

// Per-episode seed for episode `index` of a run with master seed `seed`. The
// same list is used in every cell, so cells and controllers see the same draws.
std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t index) noexcept;

// Runs the episodes on `threads` workers. Results are indexed like `seeds`
// whatever the worker count.
std::vector<EpisodeOutcome> run_episodes(const ControllerSpec& controller,
                                         const ScenarioConfig& cfg,
                                         const std::vector<std::uint64_t>& seeds,
                                         const EpisodeOptions& opts = {}, unsigned threads = 1);

// Minimum TTC values are capped here before averaging (+inf would swamp the mean).
inline constexpr double kTtcCap = 10.0;

// Higher is better for every field; see normalize().
struct NormalizedMetrics {
  double rms_speed = 0.0;
  double rms_accel = 0.0;     // inverted
  double rms_jerk = 0.0;      // inverted
  double min_ttc = 0.0;
  double impact_speed = 0.0;  // inverted
  double near_miss = 0.0;     // inverted
  double false_brake = 0.0;   // inverted
  double ttg = 0.0;           // inverted
};

struct CellMetrics {
  Density density = Density::Low;
  Occlusion occlusion = Occlusion::Partial;
  int episodes = 0;
  int successes = 0;
  int collisions = 0;
  int timeouts = 0;
  double success_pct = 0.0;
  double collision_pct = 0.0;
  double timeout_pct = 0.0;
  double mean_sd = 0.0;  // over episodes with a yielding stop
  int sd_count = 0;
  double rms_speed = 0.0;
  double rms_accel = 0.0;
  double rms_jerk = 0.0;
  double min_ttc = 0.0;       // mean of per-episode min TTC capped at kTtcCap
  double impact_speed = 0.0;  // mean over collision episodes
  double near_miss_rate = 0.0;
  double false_brake_rate = 0.0;
  double ttg = 0.0;  // timeouts and collisions count as the full timeout
  NormalizedMetrics normalized;
};

// Reduces outcomes (in seed order) to one row. Throws on an empty list.
CellMetrics aggregate(Density density, Occlusion occlusion,
                      const std::vector<EpisodeOutcome>& outcomes, const ScenarioConfig& cfg);

// Scales by physical bounds (v_max, a_max, the largest one-step jerk
// 2 a_max / dt, kTtcCap, timeout) and inverts the lower-is-better metrics.
NormalizedMetrics normalize(const CellMetrics& m, const ScenarioConfig& cfg) noexcept;

struct EvaluationConfig {
  ControllerSpec controller;
  std::vector<Density> densities{Density::Low, Density::Medium, Density::High};
  std::vector<Occlusion> occlusions{Occlusion::Partial, Occlusion::Full};
  int episodes = 100;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  ScenarioConfig scenario;  // density and occlusion are overridden per cell
  EpisodeOptions options;

  void validate() const;
};

struct EvaluationTable {
  std::string controller;  // "sfol", "fixed", ...
  std::string variant;     // "ce_cs", ... (empty unless sfol)
  std::vector<CellMetrics> cells;
};

EvaluationTable evaluate(const EvaluationConfig& cfg);

std::string table_to_csv(const EvaluationTable& t);
std::string table_to_json(const EvaluationTable& t);

}  // namespace vsrsfol

#include "vsrsfol/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <mutex>
#include <nlohmann/json.hpp>
#include <thread>

#include "vsrsfol/seeding.hpp"

namespace vsrsfol {

std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return stream_seed(seed, index, 0x65706973ULL);
}

std::vector<EpisodeOutcome> run_episodes(const ControllerSpec& controller,
                                         const ScenarioConfig& cfg,
                                         const std::vector<std::uint64_t>& seeds,
                                         const EpisodeOptions& opts, unsigned threads) {
  cfg.validate();
  std::vector<EpisodeOutcome> out(seeds.size());
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(seeds.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      out[i] = run_episode(controller, cfg, seeds[i], opts).outcome;
    }
    return out;
  }
  // Workers pull indices; each result lands in its own slot.
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < seeds.size(); i = next++) {
        try {
          out[i] = run_episode(controller, cfg, seeds[i], opts).outcome;
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

namespace {

double clamp01(double x) noexcept { return std::clamp(x, 0.0, 1.0); }

double mean(double sum, int n) noexcept { return n > 0 ? sum / n : 0.0; }

}  // namespace

NormalizedMetrics normalize(const CellMetrics& m, const ScenarioConfig& cfg) noexcept {
  const double max_jerk = 2.0 * cfg.a_max / cfg.dt;
  NormalizedMetrics n;
  n.rms_speed = clamp01(m.rms_speed / cfg.v_max);
  n.rms_accel = 1.0 - clamp01(m.rms_accel / cfg.a_max);
  n.rms_jerk = 1.0 - clamp01(m.rms_jerk / max_jerk);
  n.min_ttc = clamp01(m.min_ttc / kTtcCap);
  n.impact_speed = 1.0 - clamp01(m.impact_speed / cfg.v_max);
  n.near_miss = 1.0 - clamp01(m.near_miss_rate);
  n.false_brake = 1.0 - clamp01(m.false_brake_rate);
  n.ttg = 1.0 - clamp01(m.ttg / cfg.timeout);
  return n;
}

CellMetrics aggregate(Density density, Occlusion occlusion,
                      const std::vector<EpisodeOutcome>& outcomes, const ScenarioConfig& cfg) {
  if (outcomes.empty()) throw std::invalid_argument("aggregate: no episodes");
  CellMetrics m;
  m.density = density;
  m.occlusion = occlusion;
  m.episodes = static_cast<int>(outcomes.size());
  double sd = 0.0, speed = 0.0, accel = 0.0, jerk = 0.0, ttc_sum = 0.0, impact = 0.0;
  double false_brake = 0.0, ttg = 0.0;
  int near = 0;
  for (const auto& o : outcomes) {
    switch (o.result) {
      case EpisodeResult::Success:
        ++m.successes;
        break;
      case EpisodeResult::Collision:
        ++m.collisions;
        impact += o.impact_speed;
        break;
      case EpisodeResult::Timeout:
        ++m.timeouts;
        break;
    }
    if (o.stopped) {
      sd += o.stopping_distance;
      ++m.sd_count;
    }
    speed += o.rms_speed;
    accel += o.rms_accel;
    jerk += o.rms_jerk;
    ttc_sum += std::min(o.min_ttc, kTtcCap);
    near += o.near_miss ? 1 : 0;
    false_brake += o.false_brake_rate;
    ttg += o.ttg;
  }
  const int n = m.episodes;
  m.success_pct = 100.0 * m.successes / n;
  m.collision_pct = 100.0 * m.collisions / n;
  m.timeout_pct = 100.0 * m.timeouts / n;
  m.mean_sd = mean(sd, m.sd_count);
  m.rms_speed = speed / n;
  m.rms_accel = accel / n;
  m.rms_jerk = jerk / n;
  m.min_ttc = ttc_sum / n;
  m.impact_speed = mean(impact, m.collisions);
  m.near_miss_rate = static_cast<double>(near) / n;
  m.false_brake_rate = false_brake / n;
  m.ttg = ttg / n;
  m.normalized = normalize(m, cfg);
  return m;
}

void EvaluationConfig::validate() const {
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
  if (densities.empty() || occlusions.empty()) {
    throw std::invalid_argument("evaluate: empty density or occlusion list");
  }
  scenario.validate();
}

EvaluationTable evaluate(const EvaluationConfig& cfg) {
  cfg.validate();
  EvaluationTable t;
  t.controller = std::string(to_string(cfg.controller.kind));
  if (cfg.controller.kind == ControllerKind::Sfol) t.variant = cfg.controller.variant.name();
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(cfg.episodes));
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = episode_seed(cfg.seed, i);
  for (Density d : cfg.densities) {
    for (Occlusion o : cfg.occlusions) {
      ScenarioConfig sc = cfg.scenario;
      sc.density = density_profile(d);
      sc.occlusion = o;
      const auto outcomes = run_episodes(cfg.controller, sc, seeds, cfg.options, cfg.threads);
      t.cells.push_back(aggregate(d, o, outcomes, sc));
    }
  }
  return t;
}

namespace {

// Shortest round-trip form, so equal tables give equal bytes.
std::string num(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

const char* const kColumns[] = {
    "controller",     "variant",        "density",         "occlusion",
    "episodes",       "S",              "C",               "T",
    "SD",             "sd_count",       "rms_speed",       "rms_accel",
    "rms_jerk",       "min_ttc",        "impact_speed",    "near_miss",
    "false_brake",    "ttg",            "n_rms_speed",     "n_rms_accel_inv",
    "n_rms_jerk_inv", "n_min_ttc",      "n_impact_speed_inv", "n_near_miss_inv",
    "n_false_brake_inv", "n_ttg_inv"};

std::vector<std::string> row_values(const EvaluationTable& t, const CellMetrics& c) {
  const auto& n = c.normalized;
  return {t.controller,
          t.variant,
          std::string(to_string(c.density)),
          std::string(to_string(c.occlusion)),
          std::to_string(c.episodes),
          num(c.success_pct),
          num(c.collision_pct),
          num(c.timeout_pct),
          num(c.mean_sd),
          std::to_string(c.sd_count),
          num(c.rms_speed),
          num(c.rms_accel),
          num(c.rms_jerk),
          num(c.min_ttc),
          num(c.impact_speed),
          num(c.near_miss_rate),
          num(c.false_brake_rate),
          num(c.ttg),
          num(n.rms_speed),
          num(n.rms_accel),
          num(n.rms_jerk),
          num(n.min_ttc),
          num(n.impact_speed),
          num(n.near_miss),
          num(n.false_brake),
          num(n.ttg)};
}

}  // namespace

std::string table_to_csv(const EvaluationTable& t) {
  std::string s;
  for (std::size_t i = 0; i < std::size(kColumns); ++i) {
    if (i) s += ',';
    s += kColumns[i];
  }
  s += '\n';
  for (const auto& c : t.cells) {
    const auto vals = row_values(t, c);
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (i) s += ',';
      s += vals[i];
    }
    s += '\n';
  }
  return s;
}

std::string table_to_json(const EvaluationTable& t) {
  using nlohmann::json;
  json rows = json::array();
  for (const auto& c : t.cells) {
    const auto& n = c.normalized;
    rows.push_back({{"density", to_string(c.density)},
                    {"occlusion", to_string(c.occlusion)},
                    {"episodes", c.episodes},
                    {"S", c.success_pct},
                    {"C", c.collision_pct},
                    {"T", c.timeout_pct},
                    {"SD", c.mean_sd},
                    {"sd_count", c.sd_count},
                    {"rms_speed", c.rms_speed},
                    {"rms_accel", c.rms_accel},
                    {"rms_jerk", c.rms_jerk},
                    {"min_ttc", c.min_ttc},
                    {"impact_speed", c.impact_speed},
                    {"near_miss", c.near_miss_rate},
                    {"false_brake", c.false_brake_rate},
                    {"ttg", c.ttg},
                    {"normalized",
                     {{"rms_speed", n.rms_speed},
                      {"rms_accel_inv", n.rms_accel},
                      {"rms_jerk_inv", n.rms_jerk},
                      {"min_ttc", n.min_ttc},
                      {"impact_speed_inv", n.impact_speed},
                      {"near_miss_inv", n.near_miss},
                      {"false_brake_inv", n.false_brake},
                      {"ttg_inv", n.ttg}}}});
  }
  return json{{"controller", t.controller}, {"variant", t.variant}, {"cells", rows}}.dump(2) + "\n";
}

}  // namespace vsrsfol

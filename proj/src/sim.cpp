#include "vsrsfol/sim.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>

#include "vsrsfol/seeding.hpp"

namespace vsrsfol {

std::string_view to_string(Density d) noexcept {
  switch (d) {
    case Density::Medium:
      return "med";
    case Density::High:
      return "high";
    case Density::Low:
      break;
  }
  return "low";
}

std::string_view to_string(Occlusion o) noexcept {
  return o == Occlusion::Full ? "full" : "partial";
}

std::string_view to_string(PedBehavior b) noexcept {
  return b == PedBehavior::BrieflyVisible ? "brief" : "sudden";
}

Density parse_density(std::string_view s) {
  if (s == "low") return Density::Low;
  if (s == "med" || s == "medium") return Density::Medium;
  if (s == "high") return Density::High;
  throw SimError("unknown density '" + std::string(s) + "'");
}

Occlusion parse_occlusion(std::string_view s) {
  if (s == "partial") return Occlusion::Partial;
  if (s == "full") return Occlusion::Full;
  throw SimError("unknown occlusion level '" + std::string(s) + "'");
}

PedBehavior parse_behavior(std::string_view s) {
  if (s == "brief") return PedBehavior::BrieflyVisible;
  if (s == "sudden") return PedBehavior::FullyOccluded;
  throw SimError("unknown pedestrian behavior '" + std::string(s) + "'");
}

DensityProfile density_profile(Density d) noexcept {
  switch (d) {
    case Density::Medium:
      return {25, 0.2, 0.2};
    case Density::High:
      return {50, 0.4, 0.4};
    case Density::Low:
      break;
  }
  return {10, 0.0, 0.0};
}

void ScenarioConfig::validate() const {
  if (!(crosswalk_position > 0.0 && crosswalk_position + crosswalk_depth < goal)) {
    throw SimError("crosswalk must lie strictly between start and goal");
  }
  if (!(crosswalk_depth > 0 && lane_half_width > 0 && sidewalk_width > 0)) {
    throw SimError("road geometry must be positive");
  }
  if (density.count < 0) throw SimError("pedestrian count must be nonnegative");
  const auto in01 = [](double f) { return f >= 0.0 && f <= 1.0; };
  if (!in01(density.running_fraction) || !in01(density.unexpected_fraction)) {
    throw SimError("behavior fractions must lie in [0, 1]");
  }
  if (!(timeout > 0 && dt > 0 && a_max > 0 && v_max > 0)) {
    throw SimError("timeout, dt, a_max and v_max must be positive");
  }
  if (!(ego_length > 0 && ego_half_width > 0 && ped_radius > 0 && walk_speed > 0 && run_speed > 0)) {
    throw SimError("body sizes and speeds must be positive");
  }
  if (!(trigger_min > 0 && trigger_min <= trigger_max)) throw SimError("bad trigger range");
}

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Exactly k of the candidate ids, chosen by a seeded shuffle.
std::vector<bool> choose(std::vector<int> candidates, int k, int n, std::mt19937_64& rng) {
  for (std::size_t i = candidates.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(candidates[i - 1], candidates[std::min(j, i - 1)]);
  }
  std::vector<bool> out(static_cast<std::size_t>(n), false);
  for (int i = 0; i < k && i < static_cast<int>(candidates.size()); ++i) {
    out[static_cast<std::size_t>(candidates[static_cast<std::size_t>(i)])] = true;
  }
  return out;
}

constexpr double kCurbSetback = 1.2;

int count_of(double fraction, int n) { return static_cast<int>(std::lround(fraction * n)); }

}  // namespace

EpisodeState init_episode(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  EpisodeState s;
  s.seed = seed;
  std::mt19937_64 rng(stream_seed(seed, "scenario"));

  const double cw = cfg.crosswalk_position;
  const double lw = cfg.lane_half_width;
  const double outer = lw + cfg.sidewalk_width;
  // Pedestrians keep off the curb edge while standing or walking so the camera
  // does not read them as being in the lane.
  const double inner = lw + kCurbSetback;
  Occluder& o = s.occluder;
  o.van = cfg.occlusion == Occlusion::Full;
  const double len = o.van ? 5.5 : 4.5;
  o.height = o.van ? 2.5 : 1.5;
  // Parked half on the curb just before the crosswalk.
  o.x1 = cw - 0.2;
  o.x0 = o.x1 - len;
  o.y0 = lw - 0.45;
  o.y1 = o.y0 + (o.van ? 2.0 : 1.8);

  const int n = cfg.density.count;
  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  std::vector<int> not_key(all.begin() + (n > 0 ? 1 : 0), all.end());
  const auto running = choose(all, count_of(cfg.density.running_fraction, n), n, rng);
  const auto unexpected = choose(not_key, count_of(cfg.density.unexpected_fraction, n), n, rng);

  const double far_side = -(lw + 1.5);
  for (int i = 0; i < n; ++i) {
    Pedestrian p;
    p.id = i;
    p.running = running[static_cast<std::size_t>(i)];
    p.speed = p.running ? cfg.run_speed : cfg.walk_speed;
    if (i == 0) {
      p.role = PedRole::Key;
      p.target_x = cw + 0.3;
      p.target_y = far_side;
      p.trigger = uniform(rng, 10.0, 25.0);
      if (cfg.behavior == PedBehavior::FullyOccluded) {
        p.phase = PedPhase::Waiting;
        p.x = p.target_x;
        p.y = (o.y0 + o.y1) / 2.0;
      } else {
        p.phase = PedPhase::Approaching;
        p.x = o.x0 - 6.0;
        p.y = o.y1 + 0.4;
      }
    } else if (unexpected[static_cast<std::size_t>(i)]) {
      p.role = PedRole::Unexpected;
      p.x = uniform(rng, cw - 12.0, cw + cfg.crosswalk_depth);
      const bool right = uniform01(rng) < 0.75;
      double y = uniform(rng, inner, outer - 0.3);
      if (right && p.x > o.x0 - 0.5 && p.x < o.x1 + 0.5) y = std::max(y, o.y1 + 0.3);
      p.y = right ? y : -y;
      p.target_y = (right ? -1.0 : 1.0) * uniform(rng, inner, outer - 0.3);
      p.trigger = uniform(rng, cfg.trigger_min, cfg.trigger_max);
    } else if (uniform01(rng) < 0.2) {
      p.role = PedRole::CrosswalkUser;
      p.x = cw + uniform(rng, 0.5, cfg.crosswalk_depth - 0.5);
      const bool right = uniform01(rng) < 0.5;
      const double y = std::max(uniform(rng, inner, outer - 0.3), o.y1 + 0.3);
      p.y = right ? y : -y;
      p.target_y = -p.y;
      p.trigger = uniform(rng, 0.0, cfg.timeout);
    } else {
      p.role = PedRole::Walker;
      p.phase = PedPhase::Crossing;  // walkers move along the sidewalk from the start
      p.x = uniform(rng, 0.0, cfg.goal + 20.0);
      const bool right = uniform01(rng) < 0.5;
      const double y = uniform(rng, std::max(inner, right ? o.y1 + 0.3 : 0.0), outer - 0.3);
      p.y = right ? y : -y;
      p.heading = uniform01(rng) < 0.5 ? 1.0 : -1.0;
    }
    s.pedestrians.push_back(p);
  }
  return s;
}

namespace {

// Moves toward the target coordinate; returns true on arrival.
bool move_toward(double& pos, double target, double dist) {
  if (std::abs(target - pos) <= dist) {
    pos = target;
    return true;
  }
  pos += target > pos ? dist : -dist;
  return false;
}

void advance_pedestrian(Pedestrian& p, const EpisodeState& s, const ScenarioConfig& cfg) {
  const double dist = p.speed * cfg.dt;
  const double cw_gap = cfg.crosswalk_position - s.ego_x;
  switch (p.role) {
    case PedRole::Walker:
      p.x += p.heading * dist;
      return;
    case PedRole::Key:
      if (p.phase == PedPhase::Approaching) {
        if (move_toward(p.x, p.target_x, dist)) p.phase = PedPhase::Waiting;
      } else if (p.phase == PedPhase::Waiting) {
        if (cw_gap <= p.trigger && cw_gap > 0.0) p.phase = PedPhase::Crossing;
      } else if (p.phase == PedPhase::Crossing) {
        if (move_toward(p.y, p.target_y, dist)) p.phase = PedPhase::Done;
      }
      return;
    case PedRole::Unexpected:
      if (p.phase == PedPhase::Waiting) {
        const double gap = p.x - s.ego_x;
        if (gap > 0.0 && gap <= p.trigger) p.phase = PedPhase::Crossing;
      } else if (p.phase == PedPhase::Crossing) {
        if (move_toward(p.y, p.target_y, dist)) p.phase = PedPhase::Done;
      }
      return;
    case PedRole::CrosswalkUser:
      // Crosses once at a random time.
      if (p.phase == PedPhase::Waiting) {
        if (s.t >= p.trigger) p.phase = PedPhase::Crossing;
      } else if (p.phase == PedPhase::Crossing) {
        if (move_toward(p.y, p.target_y, dist)) p.phase = PedPhase::Done;
      }
      return;
  }
}

}  // namespace

EpisodeState step(const EpisodeState& s, double action, const ScenarioConfig& cfg) {
  EpisodeState n = s;
  if (!(action >= -1.0 && action <= 1.0)) {
    ++n.clamped_actions;
    action = std::isnan(action) ? 0.0 : std::clamp(action, -1.0, 1.0);
  }
  n.action = action;
  const double v_new = std::clamp(s.v + action * cfg.a_max * cfg.dt, 0.0, cfg.v_max);
  n.accel = (v_new - s.v) / cfg.dt;
  n.ego_x = s.ego_x + 0.5 * (s.v + v_new) * cfg.dt;
  n.v = v_new;

  for (auto& p : n.pedestrians) advance_pedestrian(p, s, cfg);

  if (!n.collided) {
    const double rear = s.ego_x - cfg.ego_length;
    const double reach = cfg.ego_half_width + cfg.ped_radius;
    for (const auto& p : n.pedestrians) {
      if (std::abs(p.y) < reach && p.x + cfg.ped_radius >= rear &&
          p.x - cfg.ped_radius <= n.ego_x) {
        n.collided = true;
        n.collided_with = p.id;
        n.impact_speed = v_new;
        break;
      }
    }
  }
  n.t = s.t + cfg.dt;
  n.step = s.step + 1;
  return n;
}

bool pedestrian_on_road(const Pedestrian& p, const ScenarioConfig& cfg) noexcept {
  return std::abs(p.y) <= cfg.lane_half_width;
}

namespace {

bool on_crosswalk(const Pedestrian& p, const ScenarioConfig& cfg) noexcept {
  return pedestrian_on_road(p, cfg) && p.x >= cfg.crosswalk_position &&
         p.x <= cfg.crosswalk_position + cfg.crosswalk_depth;
}

}  // namespace

bool crosswalk_occupied(const EpisodeState& s, const ScenarioConfig& cfg) noexcept {
  return std::any_of(s.pedestrians.begin(), s.pedestrians.end(),
                     [&](const Pedestrian& p) { return on_crosswalk(p, cfg); });
}

double nearest_road_pedestrian_gap(const EpisodeState& s, const ScenarioConfig& cfg) noexcept {
  double best = kInfinity;
  for (const auto& p : s.pedestrians) {
    if (!pedestrian_on_road(p, cfg)) continue;
    const double gap = p.x - cfg.ped_radius - s.ego_x;
    if (gap >= -cfg.ped_radius) best = std::min(best, std::max(gap, 0.0));
  }
  return best;
}

double nearest_crosswalk_pedestrian_gap(const EpisodeState& s,
                                        const ScenarioConfig& cfg) noexcept {
  double best = kInfinity;
  for (const auto& p : s.pedestrians) {
    if (on_crosswalk(p, cfg)) best = std::min(best, std::max(p.x - s.ego_x, 0.0));
  }
  return best;
}

double ttc(double gap, double closing_speed) noexcept {
  if (gap <= 0.0) return 0.0;
  if (!(closing_speed > 0.0) || std::isinf(gap)) return kInfinity;
  return gap / closing_speed;
}

double ttc(const EpisodeState& s, const ScenarioConfig& cfg) noexcept {
  if (s.collided) return 0.0;
  return ttc(nearest_road_pedestrian_gap(s, cfg), s.v);
}

namespace {

enum Layer : std::uint8_t { kPed = 0, kVeh = 1, kTruck = 2, kRoad = 3, kCross = 4, kSide = 5, kBack = 6 };

struct Box {
  double x0, x1, y0, y1, height;
  std::uint8_t label;
  int key;  // confidence stream key
};

}  // namespace

SemanticMap render_semantic_map(const EpisodeState& s, const ScenarioConfig& cfg,
                                const RenderConfig& rc) {
  const int w = rc.width;
  const int h = rc.height;
  const double f = rc.focal_length_px;
  const double cx = w / 2.0;
  const double cy = h / 2.0;
  const double cam_h = rc.camera_height;
  const double cam_x = s.ego_x - rc.camera_setback;

  // One hash per (step, entity); seeding a full engine per entity is too slow here.
  const auto conf_for = [&](int key) {
    const std::uint64_t bits = stream_seed(s.seed, static_cast<std::uint64_t>(s.step),
                                           static_cast<std::uint64_t>(key) + 1);
    const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
    return static_cast<float>(rc.min_confidence + (1.0 - rc.min_confidence) * u);
  };
  float ground_conf[7];
  for (int k = 0; k < 7; ++k) ground_conf[k] = conf_for(100000 + k);

  std::vector<std::uint8_t> labels(static_cast<std::size_t>(w) * h, kBack);
  std::vector<float> conf(labels.size(), ground_conf[kBack]);

  const double cw0 = cfg.crosswalk_position;
  const double cw1 = cw0 + cfg.crosswalk_depth;
  const double lw = cfg.lane_half_width;
  const double outer = lw + cfg.sidewalk_width;
  // Ground by inverse projection: per row, the lateral bands map to column spans.
  const auto fill = [&](int r, double half_width_px, std::uint8_t lab) {
    // Columns whose centers satisfy |c + 0.5 - cx| <= half_width_px.
    const int c0 = std::max(0, static_cast<int>(std::ceil(cx - half_width_px - 0.5)));
    const int c1 = std::min(w - 1, static_cast<int>(std::floor(cx + half_width_px - 0.5)));
    for (int c = c0; c <= c1; ++c) {
      const auto idx = static_cast<std::size_t>(r) * w + c;
      labels[idx] = lab;
      conf[idx] = ground_conf[lab];
    }
  };
  // A row covers the depth interval between its lower and upper pixel edges;
  // ground classes take the widest (nearest) extent inside the row.
  const double z_cw0 = cw0 - cam_x;
  const double z_cw1 = cw1 - cam_x;
  for (int r = 0; r < h; ++r) {
    const double dy_near = r + 1.0 - cy;
    if (dy_near <= 0.0) continue;
    const double z_near = f * cam_h / dy_near;
    if (z_near > rc.max_range) continue;
    const double dy_far = r - cy;
    const double z_far = dy_far > 0.0 ? f * cam_h / dy_far : kInfinity;
    fill(r, outer * f / z_near, kSide);
    fill(r, lw * f / z_near, kRoad);
    if (z_near <= z_cw1 && z_far >= z_cw0) {
      fill(r, lw * f / std::max(z_near, z_cw0), kCross);
    }
  }

  std::vector<Box> boxes;
  const Occluder& o = s.occluder;
  boxes.push_back({o.x0, o.x1, o.y0, o.y1, o.height, kVeh, 0});
  const double half = rc.pedestrian_width / 2.0;
  for (const auto& p : s.pedestrians) {
    boxes.push_back(
        {p.x - half, p.x + half, p.y - half, p.y + half, rc.pedestrian_height, kPed, p.id + 1});
  }
  constexpr double kNear = 0.5;
  std::stable_sort(boxes.begin(), boxes.end(),
                   [](const Box& a, const Box& b) { return a.x0 > b.x0; });
  for (const auto& b : boxes) {
    const double zf = b.x1 - cam_x;
    if (zf <= kNear) continue;
    const double zn = std::max(b.x0 - cam_x, kNear);
    if (zf > (b.label == kPed ? rc.pedestrian_range : rc.max_range)) continue;
    double cmin = 1e18, cmax = -1e18, rmin = 1e18, rmax = -1e18;
    for (double z : {zn, zf}) {
      for (double y : {b.y0, b.y1}) {
        const double col = cx + f * y / z;
        cmin = std::min(cmin, col);
        cmax = std::max(cmax, col);
      }
      for (double ht : {0.0, b.height}) {
        const double row = cy + f * (cam_h - ht) / z;
        rmin = std::min(rmin, row);
        rmax = std::max(rmax, row);
      }
    }
    const int c0 = std::max(0, static_cast<int>(std::ceil(cmin - 0.5)));
    const int c1 = std::min(w - 1, static_cast<int>(std::floor(cmax - 0.5)));
    const int r0 = std::max(0, static_cast<int>(std::ceil(rmin - 0.5)));
    const int r1 = std::min(h - 1, static_cast<int>(std::floor(rmax - 0.5)));
    if (c0 > c1 || r0 > r1) continue;
    const float cf = conf_for(b.key);
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        const auto idx = static_cast<std::size_t>(r) * w + c;
        // Crosswalk extent comes from the map prior, so vehicles never mask it.
        if (b.label == kVeh && labels[idx] == kCross) continue;
        labels[idx] = b.label;
        conf[idx] = cf;
      }
    }
  }
  return SemanticMap(h, w, default_classes(), std::move(labels), std::move(conf));
}

Perception perceive(const SemanticMap& map, const std::vector<Rule>& rules,
                    const ExtractorConfig& ecfg) {
  Perception p;
  p.facts = extract_facts(map, ecfg).facts;
  p.inference = infer(rules, p.facts);
  p.confidences = rule_confidences(p.inference.heads, rules);
  if (!p.confidences.efficiency.empty()) p.weights.efficiency = reward_weight(p.confidences.efficiency);
  if (!p.confidences.safety.empty()) p.weights.safety = reward_weight(p.confidences.safety);
  return p;
}

double sfol_action(const RewardWeights& w, double v, double v_max, double gain) noexcept {
  if (w.safety > 0.5) return -1.0;
  const double target = v_max * w.efficiency * (1.0 - w.safety);
  return std::clamp(gain * (target - v), -1.0, 1.0);
}

std::string_view to_string(ControllerKind k) noexcept {
  switch (k) {
    case ControllerKind::Fixed:
      return "fixed";
    case ControllerKind::FullThrottle:
      return "full_throttle";
    case ControllerKind::FullBrake:
      return "full_brake";
    case ControllerKind::Sfol:
      break;
  }
  return "sfol";
}

ControllerKind parse_controller(std::string_view s) {
  if (s == "sfol") return ControllerKind::Sfol;
  if (s == "fixed") return ControllerKind::Fixed;
  if (s == "full_throttle") return ControllerKind::FullThrottle;
  if (s == "full_brake") return ControllerKind::FullBrake;
  throw SimError("unknown controller '" + std::string(s) + "'");
}

std::string_view to_string(EpisodeResult r) noexcept {
  switch (r) {
    case EpisodeResult::Success:
      return "success";
    case EpisodeResult::Collision:
      return "collision";
    case EpisodeResult::Timeout:
      break;
  }
  return "timeout";
}

namespace {

nlohmann::json finite_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

}  // namespace

std::string step_record_to_json(const StepRecord& rec) {
  using nlohmann::json;
  json facts = json::array();
  for (const auto& f : rec.facts) {
    facts.push_back({{"pred", f.predicate}, {"args", f.args}, {"l", f.bounds.lower},
                     {"u", f.bounds.upper}});
  }
  json heads = json::array();
  for (const auto& hd : rec.heads) {
    heads.push_back({{"head", hd.predicate}, {"args", hd.args}, {"l", hd.bounds.lower},
                     {"u", hd.bounds.upper}});
  }
  json j = {{"t", rec.t},
            {"v", rec.v},
            {"a", rec.a},
            {"d_ped", finite_or_null(rec.d_ped)},
            {"d_cross", finite_or_null(rec.d_cross)},
            {"facts", facts},
            {"heads", heads},
            {"w_saf", rec.w_saf},
            {"w_eff", rec.w_eff},
            {"r", rec.r}};
  return j.dump();
}

double rms(const std::vector<double>& xs) noexcept {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x * x;
  return std::sqrt(s / static_cast<double>(xs.size()));
}

MotionRms motion_rms(const std::vector<double>& speeds, double dt, double v0) {
  if (!(dt > 0.0)) throw SimError("dt must be positive");
  std::vector<double> acc;
  acc.reserve(speeds.size());
  double prev = v0;
  for (double v : speeds) {
    acc.push_back((v - prev) / dt);
    prev = v;
  }
  std::vector<double> jerk;
  for (std::size_t i = 1; i < acc.size(); ++i) jerk.push_back((acc[i] - acc[i - 1]) / dt);
  return {rms(speeds), rms(acc), rms(jerk)};
}

Episode run_episode(const ControllerSpec& controller, const ScenarioConfig& cfg,
                    std::uint64_t seed, const EpisodeOptions& opts) {
  Episode ep;
  EpisodeOutcome& out = ep.outcome;
  const std::vector<Rule> control_rules = apply_variant(opts.rules, controller.variant);
  EpisodeState s = init_episode(cfg, seed);

  std::vector<double> speeds;
  int false_brakes = 0;
  bool moved = false;
  const int max_steps = static_cast<int>(std::ceil(cfg.timeout / cfg.dt - 1e-9));
  out.result = EpisodeResult::Timeout;

  while (s.step < max_steps) {
    const SemanticMap map = render_semantic_map(s, cfg, opts.render);
    // The complete rule set drives the false-brake metric for every controller.
    const Perception full = perceive(map, opts.rules, opts.extractor);
    const Perception* used = &full;
    Perception variant_perception;
    if (controller.kind == ControllerKind::Sfol && control_rules != opts.rules) {
      variant_perception.facts = full.facts;
      variant_perception.inference = infer(control_rules, full.facts);
      // Removed rules still count in the weight average with zero confidence, so
      // dropping a rule lowers its tag weight instead of renormalizing it.
      variant_perception.confidences = rule_confidences(variant_perception.inference.heads,
                                                        opts.rules);
      const auto& c = variant_perception.confidences;
      if (!c.efficiency.empty()) variant_perception.weights.efficiency = reward_weight(c.efficiency);
      if (!c.safety.empty()) variant_perception.weights.safety = reward_weight(c.safety);
      used = &variant_perception;
    }

    double action = 0.0;
    RewardWeights w = used->weights;
    switch (controller.kind) {
      case ControllerKind::Sfol:
        action = sfol_action(w, s.v, cfg.v_max, controller.gain);
        break;
      case ControllerKind::Fixed:
        w = {controller.fixed_weight, controller.fixed_weight};
        action = sfol_action(w, s.v, cfg.v_max, controller.gain);
        break;
      case ControllerKind::FullThrottle:
        action = 1.0;
        break;
      case ControllerKind::FullBrake:
        action = -1.0;
        break;
    }

    s = step(s, action, cfg);
    speeds.push_back(s.v);
    if (s.v > opts.stop_speed) moved = true;

    double max_safety = 0.0;
    for (const auto& rc : full.confidences.safety) max_safety = std::max(max_safety, rc.confidence);
    if (s.accel < -opts.false_brake_decel && max_safety <= opts.false_brake_conf) ++false_brakes;

    const double d_ped = nearest_road_pedestrian_gap(s, cfg);
    out.min_ttc = std::min(out.min_ttc, ttc(s, cfg));
    // A yielding stop: at rest before an occupied crosswalk with no other
    // pedestrian on the road in between.
    if (!out.stopped && moved && s.v < opts.stop_speed) {
      const double d_cw = nearest_crosswalk_pedestrian_gap(s, cfg);
      if (std::isfinite(d_cw) && d_ped >= d_cw - cfg.ped_radius) {
        out.stopped = true;
        out.stopping_distance = d_cw;
      }
    }

    const auto rw = compute_reward(s.v, s.collided ? 0.0 : d_ped, s.accel, s.collided, w, opts.reward);
    out.total_reward += rw.r_final;
    if (opts.record_log) {
      StepRecord rec;
      rec.t = s.t;
      rec.v = s.v;
      rec.a = s.accel;
      rec.d_ped = d_ped;
      rec.d_cross = cfg.crosswalk_position - s.ego_x;
      rec.facts = used->facts;
      rec.heads = used->inference.heads;
      rec.w_saf = w.safety;
      rec.w_eff = w.efficiency;
      rec.r = rw.r_final;
      ep.log.push_back(std::move(rec));
    }

    if (s.collided) {
      out.result = EpisodeResult::Collision;
      out.impact_speed = s.impact_speed;
      break;
    }
    if (s.ego_x >= cfg.goal) {
      out.result = EpisodeResult::Success;
      break;
    }
  }

  const auto m = motion_rms(speeds, cfg.dt);
  out.rms_speed = m.speed;
  out.rms_accel = m.accel;
  out.rms_jerk = m.jerk;
  out.steps = s.step;
  out.near_miss = is_near_miss(out.min_ttc, opts.near_miss_ttc);
  out.false_brake_rate = speeds.empty() ? 0.0 : static_cast<double>(false_brakes) / speeds.size();
  out.ttg = out.result == EpisodeResult::Success ? s.t : cfg.timeout;
  return ep;
}

}  // namespace vsrsfol

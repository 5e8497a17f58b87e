#pragma once

// Longitudinal simulator of an occluded pedestrian crossing: ego point-mass
// kinematics, pedestrians with scripted behaviors, a schematic pinhole
// semantic-map renderer and per-episode safety/comfort metrics.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vsrsfol/predicates.hpp"
#include "vsrsfol/reward.hpp"
#include "vsrsfol/scene.hpp"
#include "vsrsfol/sfol.hpp"

namespace vsrsfol {

class SimError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Density { Low, Medium, High };
enum class Occlusion { Partial, Full };
enum class PedBehavior { BrieflyVisible, FullyOccluded };

std::string_view to_string(Density d) noexcept;
std::string_view to_string(Occlusion o) noexcept;
std::string_view to_string(PedBehavior b) noexcept;
Density parse_density(std::string_view s);      // low | med | high
Occlusion parse_occlusion(std::string_view s);  // partial | full
PedBehavior parse_behavior(std::string_view s);  // brief | sudden

struct DensityProfile {
  int count = 10;
  double running_fraction = 0.0;
  double unexpected_fraction = 0.0;
};

DensityProfile density_profile(Density d) noexcept;

struct ScenarioConfig {
  // Road frame: x along the road from the ego start, y lateral (right > 0).
  double goal = 120.0;                // ego front position that ends the episode
  double crosswalk_position = 80.0;   // near edge
  double crosswalk_depth = 6.0;
  double lane_half_width = 1.75;
  double sidewalk_width = 3.0;
  Occlusion occlusion = Occlusion::Partial;
  PedBehavior behavior = PedBehavior::FullyOccluded;
  DensityProfile density = density_profile(Density::Low);
  double timeout = 60.0;  // s
  double dt = 0.1;        // s
  double a_max = 4.0;     // m/s^2
  double v_max = 14.0;    // m/s
  double ego_length = 4.5;
  double ego_half_width = 0.9;
  double ped_radius = 0.3;
  double walk_speed = 1.4;
  double run_speed = 6.0 / 3.6;
  // Gap from the ego front at which an unexpected crosser steps off the curb.
  double trigger_min = 8.0;
  double trigger_max = 25.0;

  void validate() const;
};

struct Occluder {
  double x0 = 0.0;
  double x1 = 0.0;
  double y0 = 0.0;
  double y1 = 0.0;
  double height = 1.5;
  bool van = false;
};

enum class PedRole { Key, Unexpected, CrosswalkUser, Walker };
enum class PedPhase { Waiting, Approaching, Crossing, Done };

struct Pedestrian {
  int id = 0;
  PedRole role = PedRole::Walker;
  PedPhase phase = PedPhase::Waiting;
  bool running = false;
  double x = 0.0;
  double y = 0.0;
  double speed = 1.4;
  double heading = 1.0;    // +1 / -1 along x for walkers, across y for crossers
  double trigger = 0.0;    // ego gap (Unexpected, Key) or start time (CrosswalkUser)
  double target_x = 0.0;   // Key / CrosswalkUser walk to this x before crossing
  double target_y = 0.0;   // far side of the crossing
};

struct EpisodeState {
  std::uint64_t seed = 0;
  int step = 0;
  double t = 0.0;
  double ego_x = 0.0;  // front bumper
  double v = 0.0;
  double accel = 0.0;  // realized over the last step
  double action = 0.0;
  std::vector<Pedestrian> pedestrians;
  Occluder occluder;
  bool collided = false;
  int collided_with = -1;
  double impact_speed = 0.0;
  int clamped_actions = 0;  // out-of-range actions seen
};

EpisodeState init_episode(const ScenarioConfig& cfg, std::uint64_t seed);

// Advances one step. Actions outside [-1, 1] are clamped and counted.
EpisodeState step(const EpisodeState& s, double action, const ScenarioConfig& cfg);

bool pedestrian_on_road(const Pedestrian& p, const ScenarioConfig& cfg) noexcept;
bool crosswalk_occupied(const EpisodeState& s, const ScenarioConfig& cfg) noexcept;

// Longitudinal gap from the ego front to the nearest pedestrian on the road
// ahead, +inf when there is none.
double nearest_road_pedestrian_gap(const EpisodeState& s, const ScenarioConfig& cfg) noexcept;
// Same, restricted to pedestrians on the crosswalk.
double nearest_crosswalk_pedestrian_gap(const EpisodeState& s, const ScenarioConfig& cfg) noexcept;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// gap / closing speed; 0 when the gap is 0, +inf when not closing.
double ttc(double gap, double closing_speed) noexcept;
double ttc(const EpisodeState& s, const ScenarioConfig& cfg) noexcept;

// The threshold itself counts as a near miss.
inline bool is_near_miss(double min_ttc, double threshold = 2.0) noexcept {
  return min_ttc <= threshold;
}

struct RenderConfig {
  int width = 224;
  int height = 224;
  double focal_length_px = 400.0;
  double camera_height = 1.5;
  double camera_setback = 2.0;  // camera behind the front bumper
  double pedestrian_height = 1.7;
  double pedestrian_width = 0.5;
  double max_range = 55.0;         // scenery beyond this is background
  double pedestrian_range = 30.0;  // pedestrians farther away are not segmented
  double min_confidence = 0.85;
};

// Deterministic in (state, cfg, rc).
SemanticMap render_semantic_map(const EpisodeState& s, const ScenarioConfig& cfg,
                                const RenderConfig& rc = {});

// Per-step perception output handed to controllers.
struct Perception {
  std::vector<Fact> facts;
  InferenceResult inference;
  RuleConfidences confidences;
  RewardWeights weights;
};

Perception perceive(const SemanticMap& map, const std::vector<Rule>& rules,
                    const ExtractorConfig& ecfg = {});

// Proportional speed tracking toward v_max * w_eff * (1 - w_saf); full brake
// when w_saf exceeds 0.5.
double sfol_action(const RewardWeights& w, double v, double v_max, double gain) noexcept;

enum class ControllerKind { Sfol, Fixed, FullThrottle, FullBrake };

std::string_view to_string(ControllerKind k) noexcept;
ControllerKind parse_controller(std::string_view s);  // sfol | fixed | full_throttle | full_brake

struct ControllerSpec {
  ControllerKind kind = ControllerKind::Sfol;
  RuleVariant variant;
  double gain = 1.0;          // action per m/s of speed error
  double fixed_weight = 0.5;  // w_saf = w_eff for the fixed baseline
};

enum class EpisodeResult { Success, Collision, Timeout };

std::string_view to_string(EpisodeResult r) noexcept;

struct EpisodeOutcome {
  EpisodeResult result = EpisodeResult::Timeout;
  double stopping_distance = 0.0;  // 0 when the episode has no qualifying stop
  bool stopped = false;            // a qualifying stop happened
  double rms_speed = 0.0;
  double rms_accel = 0.0;
  double rms_jerk = 0.0;
  double min_ttc = kInfinity;
  double impact_speed = 0.0;
  bool near_miss = false;
  double false_brake_rate = 0.0;
  double ttg = 0.0;
  double total_reward = 0.0;
  int steps = 0;
};

struct StepRecord {
  double t = 0.0;
  double v = 0.0;
  double a = 0.0;
  double d_ped = kInfinity;
  double d_cross = kInfinity;
  std::vector<Fact> facts;
  std::vector<GroundHead> heads;
  double w_saf = 0.0;
  double w_eff = 0.0;
  double r = 0.0;
};

std::string step_record_to_json(const StepRecord& rec);

struct Episode {
  EpisodeOutcome outcome;
  std::vector<StepRecord> log;  // empty unless requested
};

struct EpisodeOptions {
  RenderConfig render;
  ExtractorConfig extractor;
  RewardParams reward;
  std::vector<Rule> rules = default_rules();
  bool record_log = false;
  double false_brake_decel = 2.0;
  double false_brake_conf = 0.1;
  double near_miss_ttc = 2.0;
  double stop_speed = 0.1;
};

Episode run_episode(const ControllerSpec& controller, const ScenarioConfig& cfg,
                    std::uint64_t seed, const EpisodeOptions& opts = {});

// Root mean square; 0 for an empty series.
double rms(const std::vector<double>& xs) noexcept;

// Metrics from a realized speed series sampled every dt starting from rest:
// accel_t = (v_t - v_{t-1}) / dt, jerk_t = (a_t - a_{t-1}) / dt.
struct MotionRms {
  double speed = 0.0;
  double accel = 0.0;
  double jerk = 0.0;
};
MotionRms motion_rms(const std::vector<double>& speeds, double dt, double v0 = 0.0);

}  // namespace vsrsfol

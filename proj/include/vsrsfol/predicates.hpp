#pragma once

// Turns a semantic map into uncertainty-bounded ground facts: semantic class
// membership, ego-relative and pedestrian-relative spatial relations,
// crosswalk approach state, occlusion, and the explicit-negation predicates.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vsrsfol/scene.hpp"

namespace vsrsfol {

class PredicateError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Truth interval [lower, upper] within [0, 1].
struct Bounds {
  double lower = 0.0;
  double upper = 0.0;

  [[nodiscard]] double midpoint() const noexcept { return (lower + upper) / 2.0; }
  [[nodiscard]] bool valid() const noexcept {
    return lower >= 0.0 && lower <= upper && upper <= 1.0;
  }
  friend bool operator==(const Bounds&, const Bounds&) = default;
};

Bounds elementwise_max(const Bounds& a, const Bounds& b) noexcept;
Bounds elementwise_min(const Bounds& a, const Bounds& b) noexcept;

// [0.95 t, 1.05 t] clamped into [0, 1].
Bounds confidence_bounds(double confidence) noexcept;

struct Fact {
  std::string predicate;
  std::vector<std::string> args;
  Bounds bounds;

  friend bool operator==(const Fact&, const Fact&) = default;
};

// Sort key for deterministic fact lists.
bool fact_less(const Fact& a, const Fact& b);

// Declared arity for the scene predicates; nullopt for unknown names.
std::optional<int> predicate_arity(std::string_view predicate);

// {"pred":"OnCrosswalk","args":["p0"],"l":0.855,"u":0.945}
std::string fact_to_json(const Fact& f);
Fact fact_from_json(std::string_view line);

inline constexpr std::string_view kEgo = "ego";

struct CameraModel {
  double focal_length_px = 400.0;
  double crosswalk_width_m = 3.5;

  void validate() const;
};

struct ExtractorConfig {
  CameraModel camera;
  int band_depth = 15;
  Connectivity connectivity = Connectivity::Four;
  double approach_min_m = 50.0;
  double approach_max_m = 200.0;
};

// An extracted entity with its fact-level name ("p0", "v1", "t0", "c0") and
// semantic bounds.
struct SceneEntity {
  std::string name;
  Entity entity;
  Bounds bounds;
};

struct SceneEntities {
  std::vector<SceneEntity> pedestrians;
  std::vector<SceneEntity> vehicles;
  std::vector<SceneEntity> trucks;
  std::vector<SceneEntity> crosswalks;

  // Pedestrians, vehicles and trucks.
  [[nodiscard]] std::vector<const SceneEntity*> dynamic() const;
  [[nodiscard]] std::vector<const SceneEntity*> all() const;
};

SceneEntities extract_entities(const SemanticMap& map,
                               Connectivity connectivity = Connectivity::Four);

// Class(e) facts for pedestrian, vehicle, truck and crosswalk entities.
std::vector<Fact> semantic_facts(const SemanticMap& map);
std::vector<Fact> semantic_facts(const SceneEntities& entities);

enum class Third { Left, Center, Right };

// x is a continuous image column in [0, width]; points exactly on a third
// boundary classify as Center.
Third image_third(double x, double width) noexcept;

std::vector<Fact> ego_relative_facts(const SceneEntities& entities, int map_width);

// Pinhole range from the crosswalk's bbox column extent.
double crosswalk_distance(const Entity& crosswalk, const CameraModel& camera);

// Approaching(ego, c) for min <= d <= max, IsAt(ego, c) for d < min.
std::vector<Fact> approach_facts(double distance_m, const SceneEntity& crosswalk,
                                 const ExtractorConfig& cfg = {});

enum class Surface { None, Sidewalk, Road, Crosswalk };

struct PedestrianContext {
  Surface surface = Surface::None;
  std::optional<std::string> crosswalk;  // crosswalk the pedestrian stands on
  std::vector<Fact> facts;
};

// Majority surface in the band below the pedestrian among {road, crosswalk,
// sidewalk}; ties resolve crosswalk > road > sidewalk.
Surface pedestrian_surface(const SemanticMap& map, const Entity& pedestrian, int band_depth);

PedestrianContext pedestrian_context_facts(const SceneEntity& pedestrian, const SemanticMap& map,
                                           const SceneEntities& entities, int band_depth = 15);

// Occludes(X, Y) when column extents overlap and X's bbox bottom is strictly
// lower in the image.
std::vector<Fact> occlusion_facts(const SceneEntities& entities);

// IsClear(c) for crosswalks nobody stands on, NoCrosswalk(ego) without any
// crosswalk, EmptyLane(ego) when no vehicle or truck is CenterOf ego.
std::vector<Fact> negation_facts(const std::vector<Fact>& facts, const SceneEntities& entities,
                                 const std::map<std::string, std::string>& pedestrian_crosswalk);

struct Extraction {
  SceneEntities entities;
  std::vector<Fact> facts;  // sorted by fact_less
  std::map<std::string, Surface> surfaces;
  std::map<std::string, double> crosswalk_distances;
};

// Full pipeline over one map.
Extraction extract_facts(const SemanticMap& map, const ExtractorConfig& cfg = {});

}  // namespace vsrsfol

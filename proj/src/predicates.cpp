#include "vsrsfol/predicates.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <nlohmann/json.hpp>

namespace vsrsfol {

Bounds elementwise_max(const Bounds& a, const Bounds& b) noexcept {
  return {std::max(a.lower, b.lower), std::max(a.upper, b.upper)};
}

Bounds elementwise_min(const Bounds& a, const Bounds& b) noexcept {
  return {std::min(a.lower, b.lower), std::min(a.upper, b.upper)};
}

Bounds confidence_bounds(double confidence) noexcept {
  return {std::clamp(0.95 * confidence, 0.0, 1.0), std::clamp(1.05 * confidence, 0.0, 1.0)};
}

bool fact_less(const Fact& a, const Fact& b) {
  return std::tie(a.predicate, a.args) < std::tie(b.predicate, b.args);
}

std::optional<int> predicate_arity(std::string_view predicate) {
  static const std::map<std::string, int, std::less<>> arity = {
      {"Vehicle", 1},     {"Truck", 1},       {"Pedestrian", 1}, {"Crosswalk", 1},
      {"LeftOf", 2},      {"RightOf", 2},     {"CenterOf", 2},   {"IsNear", 2},
      {"Approaching", 2}, {"IsAt", 2},        {"OnRoad", 1},     {"OnCrosswalk", 1},
      {"Occludes", 2},    {"IsClear", 1},     {"NoCrosswalk", 1}, {"EmptyLane", 1},
  };
  if (auto it = arity.find(predicate); it != arity.end()) return it->second;
  return std::nullopt;
}

std::string fact_to_json(const Fact& f) {
  nlohmann::json j;
  j["pred"] = f.predicate;
  j["args"] = f.args;
  j["l"] = f.bounds.lower;
  j["u"] = f.bounds.upper;
  return j.dump();
}

Fact fact_from_json(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    Fact f{j.at("pred").get<std::string>(), j.at("args").get<std::vector<std::string>>(),
           {j.at("l").get<double>(), j.at("u").get<double>()}};
    if (!f.bounds.valid()) throw PredicateError("fact json: bounds must satisfy 0 <= l <= u <= 1");
    if (auto a = predicate_arity(f.predicate); a && *a != static_cast<int>(f.args.size())) {
      throw PredicateError("fact json: arity mismatch for " + f.predicate);
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw PredicateError(std::string("fact json: ") + e.what());
  }
}

void CameraModel::validate() const {
  if (!(focal_length_px > 0.0)) throw PredicateError("camera: focal length must be positive");
  if (!(crosswalk_width_m > 0.0)) throw PredicateError("camera: crosswalk width must be positive");
}

std::vector<const SceneEntity*> SceneEntities::dynamic() const {
  std::vector<const SceneEntity*> out;
  for (const auto* group : {&pedestrians, &vehicles, &trucks}) {
    for (const auto& e : *group) out.push_back(&e);
  }
  return out;
}

std::vector<const SceneEntity*> SceneEntities::all() const {
  auto out = dynamic();
  for (const auto& e : crosswalks) out.push_back(&e);
  return out;
}

namespace {

std::vector<SceneEntity> named_entities(const SemanticMap& map, std::string_view class_name,
                                        std::string_view prefix, Connectivity connectivity) {
  std::vector<SceneEntity> out;
  if (!map.find_class(class_name)) return out;
  for (auto& e : label_entities(map, class_name, connectivity)) {
    const Bounds b = confidence_bounds(entity_confidence(map, e));
    out.push_back({std::string(prefix) + std::to_string(e.id), std::move(e), b});
  }
  return out;
}

std::string class_predicate(std::string_view class_name) {
  std::string p(class_name);
  if (!p.empty()) p[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(p[0])));
  return p;
}

}  // namespace

SceneEntities extract_entities(const SemanticMap& map, Connectivity connectivity) {
  SceneEntities s;
  s.pedestrians = named_entities(map, cls::kPedestrian, "p", connectivity);
  s.vehicles = named_entities(map, cls::kVehicle, "v", connectivity);
  s.trucks = named_entities(map, cls::kTruck, "t", connectivity);
  s.crosswalks = named_entities(map, cls::kCrosswalk, "c", connectivity);
  return s;
}

std::vector<Fact> semantic_facts(const SceneEntities& entities) {
  std::vector<Fact> facts;
  for (const auto* e : entities.all()) {
    facts.push_back({class_predicate(e->entity.class_name), {e->name}, e->bounds});
  }
  std::sort(facts.begin(), facts.end(), fact_less);
  return facts;
}

std::vector<Fact> semantic_facts(const SemanticMap& map) {
  return semantic_facts(extract_entities(map));
}

Third image_third(double x, double width) noexcept {
  if (x < width / 3.0) return Third::Left;
  if (x > 2.0 * width / 3.0) return Third::Right;
  return Third::Center;
}

std::vector<Fact> ego_relative_facts(const SceneEntities& entities, int map_width) {
  std::vector<Fact> facts;
  for (const auto* e : entities.dynamic()) {
    // Pixel centers sit at col + 0.5, which makes the thirds mirror-symmetric.
    const Third t = image_third(e->entity.centroid_col + 0.5, map_width);
    const char* pred = t == Third::Left ? "LeftOf" : t == Third::Right ? "RightOf" : "CenterOf";
    facts.push_back({pred, {e->name, std::string(kEgo)}, e->bounds});
  }
  std::sort(facts.begin(), facts.end(), fact_less);
  return facts;
}

double crosswalk_distance(const Entity& crosswalk, const CameraModel& camera) {
  camera.validate();
  const int pixel_width = crosswalk.mask.empty() ? 0 : crosswalk.bbox.width();
  if (pixel_width <= 0) throw PredicateError("crosswalk_distance: zero pixel width");
  return camera.focal_length_px * camera.crosswalk_width_m / pixel_width;
}

std::vector<Fact> approach_facts(double distance_m, const SceneEntity& crosswalk,
                                 const ExtractorConfig& cfg) {
  if (!(distance_m >= 0.0)) throw PredicateError("approach_facts: negative distance");
  if (distance_m < cfg.approach_min_m) {
    return {{"IsAt", {std::string(kEgo), crosswalk.name}, crosswalk.bounds}};
  }
  if (distance_m <= cfg.approach_max_m) {
    return {{"Approaching", {std::string(kEgo), crosswalk.name}, crosswalk.bounds}};
  }
  return {};
}

Surface pedestrian_surface(const SemanticMap& map, const Entity& pedestrian, int band_depth) {
  BBox band = band_below(pedestrian.bbox, band_depth, map.height(), map.width());
  std::vector<int> hist = class_histogram(map, band);
  auto count = [&](std::string_view name) {
    auto k = map.find_class(name);
    return k ? hist[*k] : 0;
  };
  int cw = count(cls::kCrosswalk);
  int road = count(cls::kRoad);
  int side = count(cls::kSidewalk);
  if (cw + road + side == 0) {
    // Pedestrian at the bottom edge: fall back to the beside bands.
    for (const BBox& b : {band_left(pedestrian.bbox, band_depth, map.height(), map.width()),
                          band_right(pedestrian.bbox, band_depth, map.height(), map.width())}) {
      hist = class_histogram(map, b);
      cw += count(cls::kCrosswalk);
      road += count(cls::kRoad);
      side += count(cls::kSidewalk);
    }
  }
  if (cw + road + side == 0) return Surface::None;
  if (cw >= road && cw >= side) return Surface::Crosswalk;
  if (road >= side) return Surface::Road;
  return Surface::Sidewalk;
}

PedestrianContext pedestrian_context_facts(const SceneEntity& pedestrian, const SemanticMap& map,
                                           const SceneEntities& entities, int band_depth) {
  PedestrianContext ctx;
  const Entity& e = pedestrian.entity;
  ctx.surface = pedestrian_surface(map, e, band_depth);
  const BBox below = band_below(e.bbox, band_depth, map.height(), map.width());
  if (ctx.surface == Surface::Road) {
    ctx.facts.push_back({"OnRoad", {pedestrian.name}, pedestrian.bounds});
  } else if (ctx.surface == Surface::Crosswalk) {
    ctx.facts.push_back({"OnCrosswalk", {pedestrian.name}, pedestrian.bounds});
    std::size_t best = 0;
    for (const auto& c : entities.crosswalks) {
      const auto overlap = static_cast<std::size_t>(std::count_if(
          c.entity.mask.begin(), c.entity.mask.end(), [&](Pixel p) { return below.contains(p); }));
      if (overlap > best) {
        best = overlap;
        ctx.crosswalk = c.name;
      }
    }
  }
  const BBox bands[] = {below, band_left(e.bbox, band_depth, map.height(), map.width()),
                        band_right(e.bbox, band_depth, map.height(), map.width())};
  for (const auto* group : {&entities.vehicles, &entities.trucks}) {
    for (const auto& v : *group) {
      if (std::any_of(std::begin(bands), std::end(bands),
                      [&](const BBox& b) { return mask_intersects(v.entity, b); })) {
        ctx.facts.push_back({"IsNear", {pedestrian.name, v.name}, pedestrian.bounds});
      }
    }
  }
  std::sort(ctx.facts.begin(), ctx.facts.end(), fact_less);
  return ctx;
}

std::vector<Fact> occlusion_facts(const SceneEntities& entities) {
  std::vector<Fact> facts;
  const auto all = entities.all();
  for (const auto* x : all) {
    for (const auto* y : all) {
      if (x == y) continue;
      const BBox& a = x->entity.bbox;
      const BBox& b = y->entity.bbox;
      const bool columns_overlap = a.min_col <= b.max_col && b.min_col <= a.max_col;
      if (columns_overlap && a.max_row > b.max_row) {
        facts.push_back({"Occludes", {x->name, y->name}, elementwise_min(x->bounds, y->bounds)});
      }
    }
  }
  std::sort(facts.begin(), facts.end(), fact_less);
  return facts;
}

std::vector<Fact> negation_facts(const std::vector<Fact>& facts, const SceneEntities& entities,
                                 const std::map<std::string, std::string>& pedestrian_crosswalk) {
  std::vector<Fact> out;
  const Bounds certain{1.0, 1.0};
  for (const auto& c : entities.crosswalks) {
    const bool occupied = std::any_of(facts.begin(), facts.end(), [&](const Fact& f) {
      if (f.predicate != "OnCrosswalk") return false;
      auto it = pedestrian_crosswalk.find(f.args.at(0));
      // An OnCrosswalk fact without a known crosswalk blocks every crosswalk.
      return it == pedestrian_crosswalk.end() || it->second == c.name;
    });
    if (!occupied) out.push_back({"IsClear", {c.name}, certain});
  }
  if (entities.crosswalks.empty()) out.push_back({"NoCrosswalk", {std::string(kEgo)}, certain});
  const bool lane_blocked = std::any_of(facts.begin(), facts.end(), [&](const Fact& f) {
    if (f.predicate != "CenterOf" || f.args.size() != 2 || f.args[1] != kEgo) return false;
    const auto& n = f.args[0];
    auto is_named = [&](const std::vector<SceneEntity>& group) {
      return std::any_of(group.begin(), group.end(),
                         [&](const SceneEntity& e) { return e.name == n; });
    };
    return is_named(entities.vehicles) || is_named(entities.trucks);
  });
  if (!lane_blocked) out.push_back({"EmptyLane", {std::string(kEgo)}, certain});
  std::sort(out.begin(), out.end(), fact_less);
  return out;
}

Extraction extract_facts(const SemanticMap& map, const ExtractorConfig& cfg) {
  cfg.camera.validate();
  Extraction x;
  x.entities = extract_entities(map, cfg.connectivity);
  auto append = [&](std::vector<Fact> more) {
    x.facts.insert(x.facts.end(), std::make_move_iterator(more.begin()),
                   std::make_move_iterator(more.end()));
  };
  append(semantic_facts(x.entities));
  append(ego_relative_facts(x.entities, map.width()));
  for (const auto& c : x.entities.crosswalks) {
    const double d = crosswalk_distance(c.entity, cfg.camera);
    x.crosswalk_distances[c.name] = d;
    append(approach_facts(d, c, cfg));
  }
  std::map<std::string, std::string> on_crosswalk;
  for (const auto& p : x.entities.pedestrians) {
    auto ctx = pedestrian_context_facts(p, map, x.entities, cfg.band_depth);
    x.surfaces[p.name] = ctx.surface;
    if (ctx.crosswalk) on_crosswalk[p.name] = *ctx.crosswalk;
    append(std::move(ctx.facts));
  }
  append(occlusion_facts(x.entities));
  append(negation_facts(x.facts, x.entities, on_crosswalk));
  std::sort(x.facts.begin(), x.facts.end(), fact_less);
  return x;
}

}  // namespace vsrsfol

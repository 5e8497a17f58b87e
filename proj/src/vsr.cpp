#include "vsrsfol/vsr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <random>

#include "vsrsfol/seeding.hpp"

namespace vsrsfol {

namespace {

constexpr std::string_view kRelevantClasses[] = {cls::kPedestrian, cls::kVehicle, cls::kTruck,
                                                 cls::kRoad,       cls::kCrosswalk, cls::kSidewalk};

bool is_dynamic(std::string_view name) {
  return name == cls::kPedestrian || name == cls::kVehicle || name == cls::kTruck;
}

// Grid cell index of a pixel row (or column) along an axis of `extent` pixels.
std::size_t cell_of(int pos, int extent, std::size_t grid) {
  return static_cast<std::size_t>(pos) * grid / static_cast<std::size_t>(extent);
}

Hypervector maybe_normalized(const Hypervector& v, bool on) {
  return on && !v.is_zero() ? normalized(v) : v;
}

}  // namespace

std::string_view to_string(FusionMode mode) noexcept {
  switch (mode) {
    case FusionMode::Multiply:
      return "multiply";
    case FusionMode::SsiOnly:
      return "ssi_only";
    case FusionMode::SfOnly:
      return "sf_only";
    case FusionMode::Add:
      break;
  }
  return "add";
}

FusionMode parse_fusion_mode(std::string_view name) {
  if (name == "add") return FusionMode::Add;
  if (name == "multiply") return FusionMode::Multiply;
  if (name == "ssi_only") return FusionMode::SsiOnly;
  if (name == "sf_only") return FusionMode::SfOnly;
  throw VsrError("unknown fusion mode '" + std::string(name) + "'");
}

void VsrConfig::validate() const {
  if (dim < 2) throw VsrError("dim must be at least 2");
  if (grid_size == 0) throw VsrError("grid_size must be positive");
  if (neighbor_window <= 0) throw VsrError("neighbor_window must be positive");
  const auto& w = weights;
  if (w.pedestrian_on_road < 0 || w.pedestrian_on_sidewalk < 0 || w.vehicle < 0 || w.truck < 0) {
    throw VsrError("class weights must be nonnegative");
  }
}

std::vector<double> occupancy_grid(const Entity& e, int map_height, int map_width,
                                   std::size_t grid) {
  if (map_height <= 0 || map_width <= 0 || grid == 0) throw VsrError("bad occupancy grid shape");
  if (static_cast<std::size_t>(map_height) < grid || static_cast<std::size_t>(map_width) < grid) {
    throw VsrError("map smaller than the grid");
  }
  // Pixels per cell along each axis; exact for maps that do not divide evenly.
  std::vector<int> rows_in(grid, 0);
  std::vector<int> cols_in(grid, 0);
  for (int r = 0; r < map_height; ++r) ++rows_in[cell_of(r, map_height, grid)];
  for (int c = 0; c < map_width; ++c) ++cols_in[cell_of(c, map_width, grid)];

  std::vector<double> counts(grid * grid, 0.0);
  for (const auto& p : e.mask) {
    if (p.row < 0 || p.row >= map_height || p.col < 0 || p.col >= map_width) {
      throw VsrError("entity pixel outside the map");
    }
    counts[cell_of(p.row, map_height, grid) * grid + cell_of(p.col, map_width, grid)] += 1.0;
  }
  for (std::size_t i = 0; i < grid; ++i) {
    for (std::size_t j = 0; j < grid; ++j) {
      counts[i * grid + j] /= static_cast<double>(rows_in[i]) * cols_in[j];
    }
  }
  return counts;
}

StubSfProvider::StubSfProvider(std::uint64_t seed, std::size_t dim, std::size_t grid_size)
    : dim_(dim), grid_(grid_size), projection_(dim * grid_size * grid_size) {
  if (dim == 0 || grid_size == 0) throw VsrError("stub SF provider needs positive sizes");
  std::mt19937_64 rng(stream_seed(seed, "sf_projection"));
  for (std::size_t i = 0; i < projection_.size(); i += 2) {
    const auto [a, b] = box_muller(rng);
    projection_[i] = a;
    if (i + 1 < projection_.size()) projection_[i + 1] = b;
  }
}

std::vector<double> StubSfProvider::embed(const SemanticMap& map, const Entity& entity) const {
  const auto occ = occupancy_grid(entity, map.height(), map.width(), grid_);
  std::vector<double> out(dim_, 0.0);
  const std::size_t cells = grid_ * grid_;
  for (std::size_t i = 0; i < dim_; ++i) {
    const double* row = projection_.data() + i * cells;
    double s = 0.0;
    for (std::size_t j = 0; j < cells; ++j) s += row[j] * occ[j];
    out[i] = s;
  }
  double n2 = 0.0;
  for (double x : out) n2 += x * x;
  if (n2 > 0.0) {
    const double inv = 1.0 / std::sqrt(n2);
    for (double& x : out) x *= inv;
  }
  return out;
}

Hypervector class_vector(const Entity& e, const Codebook& cb) { return cb.at(e.class_name); }

Hypervector neighbor_vector(const Entity& e, const SemanticMap& map, const Codebook& cb,
                            const VsrConfig& cfg) {
  const Hypervector& ce = cb.at(e.class_name);
  const int h = map.height();
  const int w = map.width();
  const int depth = cfg.neighbor_window;
  const std::pair<std::string_view, BBox> bands[] = {
      {"left_of", band_left(e.bbox, depth, h, w)},
      {"right_of", band_right(e.bbox, depth, h, w)},
      {"below_of", band_below(e.bbox, depth, h, w)},
  };
  std::vector<Hypervector> terms;
  for (const auto& [direction, band] : bands) {
    if (band.empty()) continue;
    const auto hist = class_histogram(map, band);
    const Hypervector d_e = bind(cb.at(direction), ce);
    for (auto name : kRelevantClasses) {
      const auto k = map.find_class(name);
      if (!k || hist[static_cast<std::size_t>(*k)] == 0) continue;
      terms.push_back(bind(cb.at(name), d_e));
    }
  }
  if (terms.empty()) return unit_impulse(cb.dim());
  return bundle(terms);
}

Hypervector shape_location_vector(const Entity& e, const SemanticMap& map, const Codebook& cb,
                                  const VsrConfig& cfg) {
  const auto occ = occupancy_grid(e, map.height(), map.width(), cfg.grid_size);
  std::vector<std::pair<Hypervector, double>> terms;
  for (std::size_t r = 0; r < cfg.grid_size; ++r) {
    for (std::size_t c = 0; c < cfg.grid_size; ++c) {
      const double rho = occ[r * cfg.grid_size + c];
      if (rho > 0.0) terms.emplace_back(cb.at(grid_symbol(r, c)), rho);
    }
  }
  if (terms.empty()) return Hypervector(cb.dim());
  return weighted_bundle(terms);
}

Hypervector ssi(const Entity& e, const SemanticMap& map, const Codebook& cb, const VsrConfig& cfg) {
  const Hypervector n = maybe_normalized(neighbor_vector(e, map, cb, cfg), cfg.normalize_constituents);
  const Hypervector s =
      maybe_normalized(shape_location_vector(e, map, cb, cfg), cfg.normalize_constituents);
  return bind(class_vector(e, cb), bind(n, s));
}

Hypervector entity_vector(const Hypervector& ssi_v, const std::vector<double>& sf_v,
                          FusionMode mode) {
  if (ssi_v.dim() != sf_v.size()) {
    throw VsrError("SSI and SF lengths differ: " + std::to_string(ssi_v.dim()) + " vs " +
                   std::to_string(sf_v.size()));
  }
  switch (mode) {
    case FusionMode::SsiOnly:
      return ssi_v;
    case FusionMode::SfOnly:
      return Hypervector(sf_v);
    case FusionMode::Multiply: {
      std::vector<double> out(sf_v.size());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = ssi_v[i] * sf_v[i];
      return Hypervector(std::move(out));
    }
    case FusionMode::Add:
      break;
  }
  std::vector<double> out(sf_v.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ssi_v[i] + sf_v[i];
  return Hypervector(std::move(out));
}

double entity_weight(const Entity& e, const SemanticMap& map, const VsrConfig& cfg) {
  if (e.class_name == cls::kVehicle) return cfg.weights.vehicle;
  if (e.class_name == cls::kTruck) return cfg.weights.truck;
  if (e.class_name == cls::kPedestrian) {
    const Surface s = pedestrian_surface(map, e, cfg.neighbor_window);
    return s == Surface::Road || s == Surface::Crosswalk ? cfg.weights.pedestrian_on_road
                                                         : cfg.weights.pedestrian_on_sidewalk;
  }
  throw VsrError("no VSR weight for class '" + e.class_name + "'");
}

SceneEncoding encode_entities(const SemanticMap& map, const std::vector<Entity>& entities,
                              const Codebook& cb, const VsrConfig& cfg, const SfProvider& sf) {
  cfg.validate();
  if (cb.dim() != cfg.dim || sf.dim() != cfg.dim) {
    throw VsrError("dimension mismatch between codebook, SF provider and config");
  }
  SceneEncoding out;
  std::vector<KeyedTerm> terms;
  for (const auto& e : entities) {
    if (!is_dynamic(e.class_name)) continue;
    Hypervector s = maybe_normalized(ssi(e, map, cb, cfg), cfg.normalize_ssi);
    Hypervector ev = entity_vector(s, sf.embed(map, e), cfg.fusion);
    char key[96];
    std::snprintf(key, sizeof(key), "%s/%06d/%06d/%08zu", e.class_name.c_str(), e.bbox.min_row,
                  e.bbox.min_col, e.mask.size());
    const double w = entity_weight(e, map, cfg);
    terms.push_back(KeyedTerm{key, ev, w});
    out.entities.push_back(EncodedEntity{key, e, w, std::move(ev)});
  }
  std::stable_sort(out.entities.begin(), out.entities.end(),
                   [](const EncodedEntity& a, const EncodedEntity& b) { return a.key < b.key; });
  out.empty = terms.empty();
  out.vsr = out.empty ? Hypervector(cfg.dim) : keyed_bundle(std::move(terms));
  return out;
}

SceneEncoding encode_scene(const SemanticMap& map, const Codebook& cb, const VsrConfig& cfg,
                           const SfProvider& sf, Connectivity connectivity) {
  std::vector<Entity> all;
  for (auto name : {cls::kPedestrian, cls::kVehicle, cls::kTruck}) {
    if (!map.find_class(name)) continue;
    for (auto& e : label_entities(map, name, connectivity)) all.push_back(std::move(e));
  }
  return encode_entities(map, all, cb, cfg, sf);
}

SceneEncoding encode_scene_seeded(const SemanticMap& map, const VsrConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const Codebook cb = Codebook::for_scenes(cfg.dim, seed, cfg.grid_size);
  const StubSfProvider sf(stream_seed(seed, "sf"), cfg.dim, cfg.grid_size);
  return encode_scene(map, cb, cfg, sf);
}

std::string vsr_to_json(const Hypervector& v, FusionMode mode) {
  nlohmann::json j;
  j["dim"] = v.dim();
  j["mode"] = std::string(to_string(mode));
  j["vector"] = std::vector<double>(v.values().begin(), v.values().end());
  return j.dump();
}

Hypervector vsr_from_json(std::string_view text, FusionMode* mode) {
  const auto j = nlohmann::json::parse(text);
  auto values = j.at("vector").get<std::vector<double>>();
  if (values.size() != j.at("dim").get<std::size_t>()) throw VsrError("VSR dim does not match vector");
  if (mode) *mode = parse_fusion_mode(j.at("mode").get<std::string>());
  return Hypervector(std::move(values));
}

}  // namespace vsrsfol

#pragma once

// Scene hypervector encoding: per-entity class/neighbor/shape-location
// binding, fusion with a spatial-feature embedding and a weighted bundle over
// the dynamic entities of a scene.

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "vsrsfol/hdc.hpp"
#include "vsrsfol/predicates.hpp"
#include "vsrsfol/scene.hpp"

namespace vsrsfol {

class VsrError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class FusionMode { Add, Multiply, SsiOnly, SfOnly };

std::string_view to_string(FusionMode mode) noexcept;
FusionMode parse_fusion_mode(std::string_view name);  // add | multiply | ssi_only | sf_only

struct ClassWeights {
  double pedestrian_on_road = 1.0;  // also on crosswalk
  double pedestrian_on_sidewalk = 0.5;
  double vehicle = 0.5;
  double truck = 0.75;
};

struct VsrConfig {
  std::size_t dim = 2048;
  std::size_t grid_size = 16;
  int neighbor_window = 15;  // band depth in pixels
  ClassWeights weights;
  FusionMode fusion = FusionMode::Add;
  bool normalize_constituents = false;  // unit-norm N and S before binding
  bool normalize_ssi = false;           // unit-norm SSI before fusion

  void validate() const;
};

// Spatial-feature embedding of one entity.
class SfProvider {
 public:
  virtual ~SfProvider() = default;
  [[nodiscard]] virtual std::size_t dim() const noexcept = 0;
  [[nodiscard]] virtual std::vector<double> embed(const SemanticMap& map,
                                                  const Entity& entity) const = 0;
};

// Seeded Gaussian projection of the entity's occupancy grid, unit norm.
class StubSfProvider final : public SfProvider {
 public:
  StubSfProvider(std::uint64_t seed, std::size_t dim, std::size_t grid_size = 16);

  [[nodiscard]] std::size_t dim() const noexcept override { return dim_; }
  [[nodiscard]] std::vector<double> embed(const SemanticMap& map,
                                          const Entity& entity) const override;

 private:
  std::size_t dim_;
  std::size_t grid_;
  std::vector<double> projection_;  // dim x grid^2, row-major
};

// Fraction of each grid cell covered by the entity, row-major grid^2 values.
std::vector<double> occupancy_grid(const Entity& e, int map_height, int map_width,
                                   std::size_t grid_size);

Hypervector class_vector(const Entity& e, const Codebook& cb);
Hypervector neighbor_vector(const Entity& e, const SemanticMap& map, const Codebook& cb,
                            const VsrConfig& cfg = {});
Hypervector shape_location_vector(const Entity& e, const SemanticMap& map, const Codebook& cb,
                                  const VsrConfig& cfg = {});
Hypervector ssi(const Entity& e, const SemanticMap& map, const Codebook& cb,
                const VsrConfig& cfg = {});
Hypervector entity_vector(const Hypervector& ssi_v, const std::vector<double>& sf_v,
                          FusionMode mode);

double entity_weight(const Entity& e, const SemanticMap& map, const VsrConfig& cfg = {});

struct EncodedEntity {
  std::string key;  // summation key: class, min row, min col
  Entity entity;
  double weight = 0.0;
  Hypervector vector;
};

struct SceneEncoding {
  Hypervector vsr;
  bool empty = true;  // no dynamic entities; vsr is the zero vector
  std::vector<EncodedEntity> entities;
};

// Encodes the given entities in any order; the result is bit-identical for
// every permutation.
SceneEncoding encode_entities(const SemanticMap& map, const std::vector<Entity>& entities,
                              const Codebook& cb, const VsrConfig& cfg, const SfProvider& sf);

// All pedestrians, vehicles and trucks of the map.
SceneEncoding encode_scene(const SemanticMap& map, const Codebook& cb, const VsrConfig& cfg,
                           const SfProvider& sf, Connectivity connectivity = Connectivity::Four);

// Codebook::for_scenes(cfg.dim, seed) with a StubSfProvider seeded from
// stream_seed(seed, "sf"): the setup the command-line encoder uses.
SceneEncoding encode_scene_seeded(const SemanticMap& map, const VsrConfig& cfg, std::uint64_t seed);

// {"dim":2048,"mode":"add","vector":[...]}
std::string vsr_to_json(const Hypervector& v, FusionMode mode);
Hypervector vsr_from_json(std::string_view text, FusionMode* mode = nullptr);

}  // namespace vsrsfol

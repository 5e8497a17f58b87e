#pragma once

// Semantic-map data model: per-pixel class probabilities, synthetic scene
// construction from rectangles, connected-component entity extraction and
// per-entity confidence.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vsrsfol {

class SceneError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace cls {
inline constexpr std::string_view kPedestrian = "pedestrian";
inline constexpr std::string_view kVehicle = "vehicle";
inline constexpr std::string_view kTruck = "truck";
inline constexpr std::string_view kRoad = "road";
inline constexpr std::string_view kCrosswalk = "crosswalk";
inline constexpr std::string_view kSidewalk = "sidewalk";
inline constexpr std::string_view kBackground = "background";
}  // namespace cls

// The six scenario classes, a background class and inert padding up to 28
// channels.
const std::vector<std::string>& default_classes();

struct Pixel {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

// Inclusive pixel rectangle; empty when max < min.
struct BBox {
  int min_row = 0;
  int min_col = 0;
  int max_row = -1;
  int max_col = -1;

  [[nodiscard]] bool empty() const noexcept { return max_row < min_row || max_col < min_col; }
  [[nodiscard]] int height() const noexcept { return empty() ? 0 : max_row - min_row + 1; }
  [[nodiscard]] int width() const noexcept { return empty() ? 0 : max_col - min_col + 1; }
  [[nodiscard]] bool contains(Pixel p) const noexcept {
    return p.row >= min_row && p.row <= max_row && p.col >= min_col && p.col <= max_col;
  }
  [[nodiscard]] BBox clipped(int height, int width) const noexcept;
  friend bool operator==(const BBox&, const BBox&) = default;
};

class SemanticMap {
 public:
  // Peaked form: each pixel carries probability `confidence` on `label`, the
  // remainder spread uniformly over the other classes.
  SemanticMap(int height, int width, std::vector<std::string> classes,
              std::vector<std::uint8_t> labels, std::vector<float> confidence);

  // Dense class-major tensor probs[k][row][col]. Per-pixel sums must be 1
  // within 1e-6.
  static SemanticMap from_dense(int height, int width, std::vector<std::string> classes,
                                std::vector<float> probs);

  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] int num_classes() const noexcept { return static_cast<int>(classes_.size()); }
  [[nodiscard]] const std::vector<std::string>& classes() const noexcept { return classes_; }

  // Throws SceneError for unknown class names.
  [[nodiscard]] int class_index(std::string_view name) const;
  [[nodiscard]] std::optional<int> find_class(std::string_view name) const noexcept;

  [[nodiscard]] int argmax(int row, int col) const noexcept {
    return argmax_[static_cast<std::size_t>(row) * width_ + col];
  }
  [[nodiscard]] double prob(int row, int col, int k) const noexcept;
  [[nodiscard]] const std::vector<std::uint8_t>& argmax_plane() const noexcept { return argmax_; }

  // Dense class-major float32 copy of the probabilities.
  [[nodiscard]] std::vector<float> dense() const;

  // JSON header line + '\n' + little-endian float32 class-major tensor.
  [[nodiscard]] std::string to_binary() const;
  static SemanticMap from_binary(std::string_view bytes);

 private:
  SemanticMap() = default;
  void compute_argmax();

  int height_ = 0;
  int width_ = 0;
  std::vector<std::string> classes_;
  std::vector<std::uint8_t> labels_;
  std::vector<float> confidence_;
  std::vector<float> dense_;  // empty in peaked form
  std::vector<std::uint8_t> argmax_;
};

struct Entity {
  int id = 0;
  std::string class_name;
  std::vector<Pixel> mask;  // row-major sorted
  BBox bbox;
  double centroid_row = 0.0;
  double centroid_col = 0.0;

  // Builds bbox and centroid from the mask (sorted in place).
  static Entity from_mask(int id, std::string class_name, std::vector<Pixel> mask);
};

struct ShapeSpec {
  std::string class_name;
  int row = 0;
  int col = 0;
  int h = 0;
  int w = 0;
  double confidence = 1.0;
};

struct SceneSpec {
  int height = 224;
  int width = 224;
  std::string background{cls::kRoad};
  std::vector<ShapeSpec> shapes;
  std::vector<std::string> classes = default_classes();

  static SceneSpec from_json(std::string_view text);
  [[nodiscard]] std::string to_json() const;
};

SemanticMap build_semantic_map(const SceneSpec& spec);

enum class Connectivity { Four = 4, Eight = 8 };

// Connected components of the argmax pixels of `class_name`, ordered by
// (min_row, min_col); ids follow that order.
std::vector<Entity> label_entities(const SemanticMap& map, std::string_view class_name,
                                   Connectivity connectivity = Connectivity::Four);

// Mean probability of the entity's class over its mask.
double entity_confidence(const SemanticMap& map, const Entity& e);

// Bands adjacent to a bbox edge, clipped to the map. Below and beside bands
// span the bbox's perpendicular extent.
BBox band_below(const BBox& b, int depth, int height, int width);
BBox band_left(const BBox& b, int depth, int height, int width);
BBox band_right(const BBox& b, int depth, int height, int width);

// Argmax pixel counts per class index inside a rectangle.
std::vector<int> class_histogram(const SemanticMap& map, const BBox& region);

bool mask_intersects(const Entity& e, const BBox& region);

}  // namespace vsrsfol

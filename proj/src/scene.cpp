#include "vsrsfol/scene.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <tuple>

#include <nlohmann/json.hpp>

namespace vsrsfol {

const std::vector<std::string>& default_classes() {
  static const std::vector<std::string> classes = {
      "pedestrian", "vehicle",   "truck",      "road",       "crosswalk",     "sidewalk",
      "background", "building",  "fence",      "pole",       "traffic_light", "traffic_sign",
      "vegetation", "terrain",   "sky",        "rider",      "bus",           "train",
      "motorcycle", "bicycle",   "static",     "dynamic",    "other",         "water",
      "road_line",  "ground",    "bridge",     "guard_rail",
  };
  return classes;
}

BBox BBox::clipped(int height, int width) const noexcept {
  BBox b{std::max(min_row, 0), std::max(min_col, 0), std::min(max_row, height - 1),
         std::min(max_col, width - 1)};
  return b;
}

namespace {

void validate_shape(int height, int width, const std::vector<std::string>& classes) {
  if (height <= 0 || width <= 0) throw SceneError("semantic map: dimensions must be positive");
  if (classes.size() < 2 || classes.size() > 255) {
    throw SceneError("semantic map: class count must be in [2, 255]");
  }
}

}  // namespace

SemanticMap::SemanticMap(int height, int width, std::vector<std::string> classes,
                         std::vector<std::uint8_t> labels, std::vector<float> confidence)
    : height_(height), width_(width), classes_(std::move(classes)), labels_(std::move(labels)),
      confidence_(std::move(confidence)) {
  validate_shape(height_, width_, classes_);
  const auto n = static_cast<std::size_t>(height_) * width_;
  if (labels_.size() != n || confidence_.size() != n) {
    throw SceneError("semantic map: plane size does not match dimensions");
  }
  // Branch-free reduction first; the exact message is only looked up on failure.
  const auto k_count = static_cast<unsigned>(classes_.size());
  unsigned bad = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const float c = confidence_[i];
    bad |= static_cast<unsigned>(labels_[i] >= k_count);
    bad |= static_cast<unsigned>(!(c > 0.0f)) | static_cast<unsigned>(!(c <= 1.0f));
  }
  if (bad) {
    for (std::size_t i = 0; i < n; ++i) {
      if (labels_[i] >= k_count) throw SceneError("semantic map: label out of range");
      if (!(confidence_[i] > 0.0f && confidence_[i] <= 1.0f)) {
        throw SceneError("semantic map: confidence must be in (0, 1]");
      }
    }
  }
  compute_argmax();
}

SemanticMap SemanticMap::from_dense(int height, int width, std::vector<std::string> classes,
                                    std::vector<float> probs) {
  validate_shape(height, width, classes);
  const auto n = static_cast<std::size_t>(height) * width;
  if (probs.size() != n * classes.size()) {
    throw SceneError("semantic map: tensor size does not match dimensions");
  }
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < classes.size(); ++k) {
      const float p = probs[k * n + i];
      if (!(p >= 0.0f && p <= 1.0f)) throw SceneError("semantic map: probability outside [0, 1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw SceneError("semantic map: pixel probabilities do not sum to 1");
    }
  }
  SemanticMap m;
  m.height_ = height;
  m.width_ = width;
  m.classes_ = std::move(classes);
  m.dense_ = std::move(probs);
  m.compute_argmax();
  return m;
}

void SemanticMap::compute_argmax() {
  const auto n = static_cast<std::size_t>(height_) * width_;
  const int k_count = num_classes();
  argmax_.assign(n, 0);
  if (!dense_.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      float best_p = dense_[i];
      for (int k = 1; k < k_count; ++k) {
        const float p = dense_[static_cast<std::size_t>(k) * n + i];
        if (p > best_p) {
          best = k;
          best_p = p;
        }
      }
      argmax_[i] = static_cast<std::uint8_t>(best);
    }
    return;
  }
  // Above 0.5 the label always beats the residual share.
  bool all_peaked = true;
  for (std::size_t i = 0; i < n; ++i) all_peaked &= confidence_[i] > 0.5f;
  if (all_peaked) {
    argmax_ = labels_;
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double c = confidence_[i];
    const int label = labels_[i];
    if (c > 0.5) {
      argmax_[i] = static_cast<std::uint8_t>(label);
      continue;
    }
    const double residual = (1.0 - c) / (k_count - 1);
    if (c > residual) {
      argmax_[i] = static_cast<std::uint8_t>(label);
    } else {
      // Residual classes tie; the lowest index wins (label too, on equality).
      const int other = label == 0 ? 1 : 0;
      argmax_[i] = static_cast<std::uint8_t>(c == residual ? std::min(label, other) : other);
    }
  }
}

int SemanticMap::class_index(std::string_view name) const {
  if (auto k = find_class(name)) return *k;
  throw SceneError("unknown class '" + std::string(name) + "'");
}

std::optional<int> SemanticMap::find_class(std::string_view name) const noexcept {
  for (std::size_t k = 0; k < classes_.size(); ++k) {
    if (classes_[k] == name) return static_cast<int>(k);
  }
  return std::nullopt;
}

double SemanticMap::prob(int row, int col, int k) const noexcept {
  const auto n = static_cast<std::size_t>(height_) * width_;
  const auto i = static_cast<std::size_t>(row) * width_ + col;
  if (!dense_.empty()) return dense_[static_cast<std::size_t>(k) * n + i];
  const double c = confidence_[i];
  return labels_[i] == k ? c : (1.0 - c) / (num_classes() - 1);
}

std::vector<float> SemanticMap::dense() const {
  if (!dense_.empty()) return dense_;
  const auto n = static_cast<std::size_t>(height_) * width_;
  const int k_count = num_classes();
  std::vector<float> out(n * k_count);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = confidence_[i];
    const auto residual = static_cast<float>((1.0 - c) / (k_count - 1));
    for (int k = 0; k < k_count; ++k) out[static_cast<std::size_t>(k) * n + i] = residual;
    out[static_cast<std::size_t>(labels_[i]) * n + i] = static_cast<float>(c);
  }
  return out;
}

std::string SemanticMap::to_binary() const {
  static_assert(std::endian::native == std::endian::little, "binary export assumes little-endian");
  nlohmann::json header;
  header["format"] = "semantic_map";
  header["dtype"] = "float32";
  header["layout"] = "class_row_col";
  header["height"] = height_;
  header["width"] = width_;
  header["classes"] = classes_;
  std::string out = header.dump();
  out.push_back('\n');
  const auto data = dense();
  const auto offset = out.size();
  out.resize(offset + data.size() * sizeof(float));
  std::memcpy(out.data() + offset, data.data(), data.size() * sizeof(float));
  return out;
}

SemanticMap SemanticMap::from_binary(std::string_view bytes) {
  const auto nl = bytes.find('\n');
  if (nl == std::string_view::npos) throw SceneError("semantic map binary: missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(0, nl));
  } catch (const nlohmann::json::exception& e) {
    throw SceneError(std::string("semantic map binary: bad header: ") + e.what());
  }
  if (header.value("format", "") != "semantic_map" || header.value("dtype", "") != "float32") {
    throw SceneError("semantic map binary: unsupported format");
  }
  const int height = header.at("height").get<int>();
  const int width = header.at("width").get<int>();
  auto classes = header.at("classes").get<std::vector<std::string>>();
  const auto payload = bytes.substr(nl + 1);
  const auto count = static_cast<std::size_t>(height) * width * classes.size();
  if (payload.size() != count * sizeof(float)) {
    throw SceneError("semantic map binary: payload size mismatch");
  }
  std::vector<float> probs(count);
  std::memcpy(probs.data(), payload.data(), payload.size());
  return from_dense(height, width, std::move(classes), std::move(probs));
}

Entity Entity::from_mask(int id, std::string class_name, std::vector<Pixel> mask) {
  if (mask.empty()) throw SceneError("entity: empty mask");
  if (!std::is_sorted(mask.begin(), mask.end())) std::sort(mask.begin(), mask.end());
  Entity e;
  e.id = id;
  e.class_name = std::move(class_name);
  e.bbox = BBox{mask.front().row, mask.front().col, mask.front().row, mask.front().col};
  double sr = 0.0;
  double sc = 0.0;
  for (const auto& p : mask) {
    e.bbox.min_row = std::min(e.bbox.min_row, p.row);
    e.bbox.max_row = std::max(e.bbox.max_row, p.row);
    e.bbox.min_col = std::min(e.bbox.min_col, p.col);
    e.bbox.max_col = std::max(e.bbox.max_col, p.col);
    sr += p.row;
    sc += p.col;
  }
  e.centroid_row = sr / static_cast<double>(mask.size());
  e.centroid_col = sc / static_cast<double>(mask.size());
  e.mask = std::move(mask);
  return e;
}

SceneSpec SceneSpec::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    SceneSpec spec;
    spec.height = j.value("height", 224);
    spec.width = j.value("width", 224);
    spec.background = j.value("background", std::string(cls::kRoad));
    if (j.contains("classes")) spec.classes = j.at("classes").get<std::vector<std::string>>();
    for (const auto& s : j.value("shapes", nlohmann::json::array())) {
      ShapeSpec shape;
      shape.class_name = s.at("class").get<std::string>();
      const auto rect = s.at("rect").get<std::vector<int>>();
      if (rect.size() != 4) throw SceneError("scene json: rect must be [row, col, h, w]");
      shape.row = rect[0];
      shape.col = rect[1];
      shape.h = rect[2];
      shape.w = rect[3];
      shape.confidence = s.value("confidence", 1.0);
      spec.shapes.push_back(std::move(shape));
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw SceneError(std::string("scene json: ") + e.what());
  }
}

std::string SceneSpec::to_json() const {
  nlohmann::json j;
  j["height"] = height;
  j["width"] = width;
  j["background"] = background;
  if (classes != default_classes()) j["classes"] = classes;
  auto shapes_json = nlohmann::json::array();
  for (const auto& s : shapes) {
    shapes_json.push_back({{"class", s.class_name},
                           {"rect", {s.row, s.col, s.h, s.w}},
                           {"confidence", s.confidence}});
  }
  j["shapes"] = shapes_json;
  return j.dump();
}

SemanticMap build_semantic_map(const SceneSpec& spec) {
  validate_shape(spec.height, spec.width, spec.classes);
  auto index_of = [&](const std::string& name) {
    auto it = std::find(spec.classes.begin(), spec.classes.end(), name);
    if (it == spec.classes.end()) throw SceneError("scene: unknown class '" + name + "'");
    return static_cast<std::uint8_t>(it - spec.classes.begin());
  };
  const auto n = static_cast<std::size_t>(spec.height) * spec.width;
  std::vector<std::uint8_t> labels(n, index_of(spec.background));
  std::vector<float> confidence(n, 1.0f);
  for (const auto& s : spec.shapes) {
    if (!(s.confidence > 0.0 && s.confidence <= 1.0)) {
      throw SceneError("scene: confidence must be in (0, 1]");
    }
    if (s.h <= 0 || s.w <= 0 || s.row < 0 || s.col < 0 || s.row + s.h > spec.height ||
        s.col + s.w > spec.width) {
      throw SceneError("scene: rectangle out of bounds for class '" + s.class_name + "'");
    }
    const auto k = index_of(s.class_name);
    for (int r = s.row; r < s.row + s.h; ++r) {
      for (int c = s.col; c < s.col + s.w; ++c) {
        const auto i = static_cast<std::size_t>(r) * spec.width + c;
        labels[i] = k;
        confidence[i] = static_cast<float>(s.confidence);
      }
    }
  }
  return SemanticMap(spec.height, spec.width, spec.classes, std::move(labels),
                     std::move(confidence));
}

std::vector<Entity> label_entities(const SemanticMap& map, std::string_view class_name,
                                   Connectivity connectivity) {
  const int k = map.class_index(class_name);
  const int h = map.height();
  const int w = map.width();
  const auto& plane = map.argmax_plane();
  static constexpr int kOffsets[8][2] = {{-1, 0}, {0, -1}, {0, 1}, {1, 0},
                                         {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
  const int n_offsets = connectivity == Connectivity::Four ? 4 : 8;
  // Component stamp per pixel, 0 = unvisited.
  std::vector<std::uint32_t> stamp(plane.size(), 0);
  std::vector<Entity> entities;
  std::vector<Pixel> stack;
  const std::uint8_t* base = plane.data();
  const std::size_t total = plane.size();
  std::uint32_t next_id = 0;
  for (std::size_t i = 0; i < total; ++i) {
    // memchr skips runs of other classes much faster than a per-pixel loop.
    const void* hit = std::memchr(base + i, k, total - i);
    if (hit == nullptr) break;
    i = static_cast<std::size_t>(static_cast<const std::uint8_t*>(hit) - base);
    if (stamp[i]) {
      // The rest of this run belongs to the same component.
      while (i + 1 < total && base[i + 1] == k && (i + 1) % static_cast<std::size_t>(w) != 0) ++i;
      continue;
    }
    const std::uint32_t id = ++next_id;
    BBox box{static_cast<int>(i / static_cast<std::size_t>(w)),
             static_cast<int>(i % static_cast<std::size_t>(w)), 0, 0};
    box.max_row = box.min_row;
    box.max_col = box.min_col;
    std::size_t count = 0;
    stack.push_back({box.min_row, box.min_col});
    stamp[i] = id;
    while (!stack.empty()) {
      const Pixel p = stack.back();
      stack.pop_back();
      ++count;
      box.min_row = std::min(box.min_row, p.row);
      box.max_row = std::max(box.max_row, p.row);
      box.min_col = std::min(box.min_col, p.col);
      box.max_col = std::max(box.max_col, p.col);
      for (int o = 0; o < n_offsets; ++o) {
        const int nr = p.row + kOffsets[o][0];
        const int nc = p.col + kOffsets[o][1];
        if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
        const auto j = static_cast<std::size_t>(nr) * w + nc;
        if (base[j] == k && !stamp[j]) {
          stamp[j] = id;
          stack.push_back({nr, nc});
        }
      }
    }
    // Collect in raster order so the mask comes out sorted.
    std::vector<Pixel> mask;
    mask.reserve(count);
    for (int r = box.min_row; r <= box.max_row; ++r) {
      const std::uint32_t* row = stamp.data() + static_cast<std::size_t>(r) * w;
      for (int c = box.min_col; c <= box.max_col; ++c) {
        if (row[c] == id) mask.push_back({r, c});
      }
    }
    entities.push_back(Entity::from_mask(0, std::string(class_name), std::move(mask)));
  }
  std::stable_sort(entities.begin(), entities.end(), [](const Entity& a, const Entity& b) {
    return std::tie(a.bbox.min_row, a.bbox.min_col) < std::tie(b.bbox.min_row, b.bbox.min_col);
  });
  for (std::size_t i = 0; i < entities.size(); ++i) entities[i].id = static_cast<int>(i);
  return entities;
}

double entity_confidence(const SemanticMap& map, const Entity& e) {
  if (e.mask.empty()) throw SceneError("entity_confidence: empty mask");
  const int k = map.class_index(e.class_name);
  const std::vector<Pixel>* pixels = &e.mask;
  std::vector<Pixel> sorted;
  if (!std::is_sorted(e.mask.begin(), e.mask.end())) {
    sorted = e.mask;
    std::sort(sorted.begin(), sorted.end());
    pixels = &sorted;
  }
  double sum = 0.0;
  for (const auto& p : *pixels) sum += map.prob(p.row, p.col, k);
  return sum / static_cast<double>(pixels->size());
}

BBox band_below(const BBox& b, int depth, int height, int width) {
  return BBox{b.max_row + 1, b.min_col, b.max_row + depth, b.max_col}.clipped(height, width);
}

BBox band_left(const BBox& b, int depth, int height, int width) {
  return BBox{b.min_row, b.min_col - depth, b.max_row, b.min_col - 1}.clipped(height, width);
}

BBox band_right(const BBox& b, int depth, int height, int width) {
  return BBox{b.min_row, b.max_col + 1, b.max_row, b.max_col + depth}.clipped(height, width);
}

std::vector<int> class_histogram(const SemanticMap& map, const BBox& region) {
  std::vector<int> counts(map.num_classes(), 0);
  if (region.empty()) return counts;
  for (int r = region.min_row; r <= region.max_row; ++r) {
    for (int c = region.min_col; c <= region.max_col; ++c) ++counts[map.argmax(r, c)];
  }
  return counts;
}

bool mask_intersects(const Entity& e, const BBox& region) {
  if (region.empty()) return false;
  return std::any_of(e.mask.begin(), e.mask.end(), [&](Pixel p) { return region.contains(p); });
}

}  // namespace vsrsfol

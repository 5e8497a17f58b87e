#include <gtest/gtest.h>

#include <random>

#include "vsrsfol/scene.hpp"

using namespace vsrsfol;

namespace {

SceneSpec spec_with(std::vector<ShapeSpec> shapes, std::string background = "background") {
  SceneSpec s;
  s.background = std::move(background);
  s.shapes = std::move(shapes);
  return s;
}

// Reference labeling: BFS from every unvisited pixel, no shortcuts.
int count_components(const SemanticMap& map, int k, int conn) {
  const int h = map.height(), w = map.width();
  std::vector<char> seen(static_cast<std::size_t>(h) * w, 0);
  int n = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (map.argmax(r, c) != k || seen[r * w + c]) continue;
      ++n;
      std::vector<std::pair<int, int>> stack{{r, c}};
      seen[r * w + c] = 1;
      while (!stack.empty()) {
        auto [y, x] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if ((dy == 0 && dx == 0) || (conn == 4 && dy != 0 && dx != 0)) continue;
            const int yy = y + dy, xx = x + dx;
            if (yy < 0 || xx < 0 || yy >= h || xx >= w) continue;
            if (map.argmax(yy, xx) != k || seen[yy * w + xx]) continue;
            seen[yy * w + xx] = 1;
            stack.push_back({yy, xx});
          }
        }
      }
    }
  }
  return n;
}

}  // namespace

TEST(Scene, EmptySpecIsAllBackground) {
  const auto map = build_semantic_map(spec_with({}));
  const int bg = map.class_index("background");
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) ASSERT_EQ(map.argmax(r, c), bg);
  }
}

TEST(Scene, RectanglePaintsExactlyItsPixels) {
  const auto map = build_semantic_map(spec_with({{"pedestrian", 10, 20, 5, 3, 1.0}}));
  const int k = map.class_index("pedestrian");
  int n = 0;
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      const bool inside = r >= 10 && r < 15 && c >= 20 && c < 23;
      EXPECT_EQ(map.argmax(r, c) == k, inside);
      n += inside;
    }
  }
  EXPECT_EQ(n, 15);
}

TEST(Scene, LaterShapeWinsOverlap) {
  const auto map = build_semantic_map(
      spec_with({{"road", 0, 0, 10, 10, 1.0}, {"pedestrian", 5, 5, 10, 10, 1.0}}));
  EXPECT_EQ(map.argmax(7, 7), map.class_index("pedestrian"));
  EXPECT_EQ(map.argmax(2, 2), map.class_index("road"));
}

TEST(Scene, PeakedProbabilitiesSumToOne) {
  const auto map = build_semantic_map(spec_with({{"vehicle", 0, 0, 4, 4, 0.7}}));
  double sum = 0.0;
  for (int k = 0; k < map.num_classes(); ++k) sum += map.prob(1, 1, k);
  EXPECT_NEAR(sum, 1.0, 1e-6);
  EXPECT_NEAR(map.prob(1, 1, map.class_index("vehicle")), 0.7, 1e-6);
}

TEST(Scene, ComponentsAndBoundingBoxes) {
  const auto map = build_semantic_map(
      spec_with({{"pedestrian", 10, 10, 4, 3, 1.0}, {"pedestrian", 40, 50, 6, 2, 1.0}}));
  const auto es = label_entities(map, "pedestrian");
  ASSERT_EQ(es.size(), 2u);
  EXPECT_EQ(es[0].bbox, (BBox{10, 10, 13, 12}));
  EXPECT_EQ(es[1].bbox, (BBox{40, 50, 45, 51}));
  EXPECT_EQ(es[0].mask.size(), 12u);
  EXPECT_EQ(es[0].id, 0);
  EXPECT_EQ(es[1].id, 1);
  EXPECT_DOUBLE_EQ(es[0].centroid_row, 11.5);
  EXPECT_DOUBLE_EQ(es[0].centroid_col, 11.0);
}

TEST(Scene, CornerContactSplitsUnderFourConnectivity) {
  const auto map = build_semantic_map(
      spec_with({{"pedestrian", 0, 0, 2, 2, 1.0}, {"pedestrian", 2, 2, 2, 2, 1.0}}));
  EXPECT_EQ(label_entities(map, "pedestrian", Connectivity::Four).size(), 2u);
  EXPECT_EQ(label_entities(map, "pedestrian", Connectivity::Eight).size(), 1u);
}

TEST(Scene, LabelingMatchesBfsOracleOnRandomScenes) {
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> pos(0, 60), ext(1, 8);
  for (int trial = 0; trial < 30; ++trial) {
    SceneSpec s;
    s.height = 64;
    s.width = 64;
    s.background = "road";
    for (int i = 0; i < 12; ++i) {
      const int r = pos(rng), c = pos(rng);
      const int h = std::min(ext(rng), 64 - r), w = std::min(ext(rng), 64 - c);
      s.shapes.push_back({i % 3 ? "pedestrian" : "sidewalk", r, c, h, w, 1.0});
    }
    const auto map = build_semantic_map(s);
    const int k = map.class_index("pedestrian");
    for (int conn : {4, 8}) {
      const auto es = label_entities(map, "pedestrian", static_cast<Connectivity>(conn));
      EXPECT_EQ(static_cast<int>(es.size()), count_components(map, k, conn));
      std::size_t px = 0;
      for (std::size_t i = 0; i < es.size(); ++i) {
        px += es[i].mask.size();
        if (i > 0) {
          const auto& a = es[i - 1].bbox;
          const auto& b = es[i].bbox;
          EXPECT_TRUE(a.min_row < b.min_row || (a.min_row == b.min_row && a.min_col <= b.min_col));
        }
      }
      std::size_t expect_px = 0;
      for (auto v : map.argmax_plane()) expect_px += v == k;
      EXPECT_EQ(px, expect_px);
    }
  }
}

TEST(Scene, EntityConfidenceIsMaskMean) {
  auto map = build_semantic_map(spec_with({{"pedestrian", 0, 0, 2, 2, 0.9}}));
  EXPECT_NEAR(entity_confidence(map, label_entities(map, "pedestrian")[0]), 0.9, 1e-6);
  map = build_semantic_map(
      spec_with({{"pedestrian", 0, 0, 2, 1, 0.8}, {"pedestrian", 0, 1, 2, 1, 1.0}}));
  const auto es = label_entities(map, "pedestrian");
  ASSERT_EQ(es.size(), 1u);
  EXPECT_NEAR(entity_confidence(map, es[0]), 0.9, 1e-6);
  map = build_semantic_map(spec_with({{"truck", 3, 3, 2, 2, 1.0}}));
  EXPECT_DOUBLE_EQ(entity_confidence(map, label_entities(map, "truck")[0]), 1.0);
}

TEST(Scene, DenseRoundTripAndBinary) {
  const auto map = build_semantic_map(spec_with({{"crosswalk", 5, 5, 10, 20, 0.85}}));
  const auto dense = SemanticMap::from_dense(map.height(), map.width(), map.classes(), map.dense());
  EXPECT_EQ(dense.argmax_plane(), map.argmax_plane());
  const auto back = SemanticMap::from_binary(map.to_binary());
  EXPECT_EQ(back.argmax_plane(), map.argmax_plane());
  EXPECT_NEAR(back.prob(6, 6, back.class_index("crosswalk")), 0.85, 1e-6);
}

TEST(Scene, InvalidInputsThrow) {
  EXPECT_THROW(build_semantic_map(spec_with({{"pedestrian", 220, 0, 10, 1, 1.0}})), SceneError);
  EXPECT_THROW(build_semantic_map(spec_with({{"dragon", 0, 0, 1, 1, 1.0}})), SceneError);
  EXPECT_THROW(build_semantic_map(spec_with({{"pedestrian", 0, 0, 1, 1, 0.0}})), SceneError);
  EXPECT_THROW(SceneSpec::from_json("{\"shapes\": [{\"class\": \"road\"}]}"), SceneError);
  std::vector<float> bad(2 * 2 * 2, 0.3f);
  EXPECT_THROW(SemanticMap::from_dense(2, 2, {"road", "sidewalk"}, bad), SceneError);
}

TEST(Scene, SpecJsonRoundTrip) {
  const auto s = spec_with({{"vehicle", 1, 2, 3, 4, 0.9}}, "road");
  const auto back = SceneSpec::from_json(s.to_json());
  EXPECT_EQ(back.background, "road");
  ASSERT_EQ(back.shapes.size(), 1u);
  EXPECT_EQ(back.shapes[0].w, 4);
  EXPECT_DOUBLE_EQ(back.shapes[0].confidence, 0.9);
}

TEST(Scene, BandsClipToMap) {
  const BBox b{10, 0, 20, 5};
  EXPECT_TRUE(band_left(b, 15, 224, 224).empty());
  EXPECT_EQ(band_right(b, 15, 224, 224), (BBox{10, 6, 20, 20}));
  EXPECT_EQ(band_below(b, 15, 224, 224), (BBox{21, 0, 35, 5}));
  EXPECT_EQ(band_below(BBox{210, 0, 223, 5}, 15, 224, 224).empty(), true);
}

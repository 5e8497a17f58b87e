// End-to-end acceptance checks. One PASS/FAIL line per criterion; exit 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "vsrsfol/cli.hpp"
#include "vsrsfol/evaluate.hpp"
#include "vsrsfol/hdc.hpp"
#include "vsrsfol/seeding.hpp"
#include "vsrsfol/sfol.hpp"
#include "vsrsfol/sim.hpp"
#include "vsrsfol/vsr.hpp"

using namespace vsrsfol;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Check {
  bool ok = true;
  std::ostringstream why;

  void expect(bool cond, const std::string& msg) {
    if (!cond) {
      if (!ok) why << "; ";
      why << msg;
      ok = false;
    }
  }
};

int failures = 0;

void report(int n, const std::string& title, const Check& c, const std::string& detail, double secs) {
  std::printf("%s criterion %d: %s | %s | %.2fs%s%s\n", c.ok ? "PASS" : "FAIL", n, title.c_str(),
              detail.c_str(), secs, c.ok ? "" : " | ", c.ok ? "" : c.why.str().c_str());
  std::fflush(stdout);
  if (!c.ok) ++failures;
}

void run(int n, const std::string& title, const std::function<std::string(Check&)>& body) {
  const auto t0 = Clock::now();
  Check c;
  std::string detail;
  try {
    detail = body(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  report(n, title, c, detail, seconds_since(t0));
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Circular convolution by definition.
std::vector<double> direct_convolution(const Hypervector& a, const Hypervector& b) {
  const std::size_t d = a.dim();
  std::vector<double> c(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < d; ++i) s += static_cast<long double>(a[i]) * b[(k + d - i) % d];
    c[k] = static_cast<double>(s);
  }
  return c;
}

// 1. Binding algebra.
std::string criterion1(Check& c) {
  const auto t0 = Clock::now();
  constexpr std::size_t d = 2048;
  double sum = 0.0, worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_vector(1, "a" + std::to_string(i), d);
    const auto b = random_vector(1, "b" + std::to_string(i), d);
    const double x = std::abs(cosine(a, b));
    sum += x;
    worst = std::max(worst, x);
  }
  const double mean = sum / 1000.0;
  c.expect(mean < 0.05, fmt("mean |cos| %.4f", mean));
  c.expect(worst < 0.12, fmt("max |cos| %.4f", worst));

  const auto x = random_vector(2, "x", d);
  c.expect(bind(x, unit_impulse(d)) == x, "impulse binding not exact");

  double fft_err = 0.0;
  for (std::size_t n : {16u, 64u, 128u, 256u}) {
    const auto a = random_vector(3, "fa", n);
    const auto b = random_vector(3, "fb", n);
    const auto fast = bind(a, b);
    const auto slow = direct_convolution(a, b);
    for (std::size_t k = 0; k < n; ++k) fft_err = std::max(fft_err, std::abs(fast[k] - slow[k]));
  }
  c.expect(fft_err <= 1e-9, fmt("fft vs direct %.3g", fft_err));

  int recovered = 0;
  constexpr int trials = 1000;
  for (int i = 0; i < trials; ++i) {
    const auto a = random_vector(4, "ua" + std::to_string(i), d);
    const auto b = random_vector(4, "ub" + std::to_string(i), d);
    recovered += cosine(unbind(bind(a, b), a), b) >= 0.5;
  }
  c.expect(recovered >= 990, "unbind recovered " + std::to_string(recovered) + "/1000");
  const double secs = seconds_since(t0);
  c.expect(secs < 30.0, fmt("took %.1fs", secs));
  std::ostringstream o;
  o << "mean|cos|=" << fmt("%.4f", mean) << " max|cos|=" << fmt("%.4f", worst)
    << " fft_err=" << fmt("%.2g", fft_err) << " unbind=" << recovered << "/1000";
  return o.str();
}

// 2. Bundle retrieval.
std::string criterion2(Check& c) {
  constexpr std::size_t d = 2048;
  std::vector<Hypervector> book;
  for (int i = 0; i < 100; ++i) book.push_back(random_vector(11, "item" + std::to_string(i), d));
  std::mt19937_64 rng(12);
  int good = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<int> idx(100);
    for (int i = 0; i < 100; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<Hypervector> members;
    for (int i = 0; i < 10; ++i) members.push_back(book[idx[i]]);
    const auto s = bundle(members);
    double worst_member = 1e9, best_other = -1e9;
    for (int i = 0; i < 100; ++i) {
      const double x = cosine(s, book[idx[i]]);
      if (i < 10) worst_member = std::min(worst_member, x);
      else best_other = std::max(best_other, x);
    }
    good += worst_member > best_other;
  }
  c.expect(good >= 99, "separated " + std::to_string(good) + "/100");
  return "members ranked first in " + std::to_string(good) + "/100 trials";
}

// 3. Scene encoding: road pedestrian dominates, order does not matter.
std::string criterion3(Check& c) {
  constexpr std::size_t d = 2048;
  int wins = 0, exact = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(stream_seed(seed, "scene"));
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    const int h = pick(16, 30), w = pick(5, 10);
    SceneSpec spec;
    spec.background = "road";
    // Sidewalk strip on the right; both pedestrians share one mask shape.
    spec.shapes.push_back({"sidewalk", 0, 150, 224, 74, 1.0});
    const int road_row = pick(20, 170), road_col = pick(10, 130 - w);
    const int side_row = pick(20, 170), side_col = pick(160, 214 - w);
    spec.shapes.push_back({"pedestrian", road_row, road_col, h, w, 1.0});
    spec.shapes.push_back({"pedestrian", side_row, side_col, h, w, 1.0});
    const auto map = build_semantic_map(spec);
    const auto cb = Codebook::for_scenes(d, seed);
    const StubSfProvider sf(stream_seed(seed, "sf"), d);
    const VsrConfig cfg;
    const auto enc = encode_scene(map, cb, cfg, sf);
    if (enc.entities.size() != 2) {
      c.expect(false, "seed " + std::to_string(seed) + ": entity count");
      continue;
    }
    const auto& a = enc.entities[0];
    const auto& b = enc.entities[1];
    // The road pedestrian is the one left of the sidewalk.
    const auto& road = a.entity.centroid_col < b.entity.centroid_col ? a : b;
    const auto& side = a.entity.centroid_col < b.entity.centroid_col ? b : a;
    wins += cosine(enc.vsr, road.vector) > cosine(enc.vsr, side.vector);

    std::vector<Entity> es{side.entity, road.entity};
    exact += encode_entities(map, es, cb, cfg, sf).vsr == enc.vsr;
  }
  c.expect(wins == 100, "road dominates " + std::to_string(wins) + "/100");
  c.expect(exact == 100, "permutation exact " + std::to_string(exact) + "/100");
  return "road>sidewalk " + std::to_string(wins) + "/100, permutation bit-exact " +
         std::to_string(exact) + "/100";
}

const GroundHead* head(const InferenceResult& r, std::string_view name) {
  for (const auto& h : r.heads) {
    if (h.predicate == name) return &h;
  }
  return nullptr;
}

Bounds mean_bounds(std::initializer_list<Bounds> bs) {
  double lo = 0.0, hi = 0.0;
  for (const auto& b : bs) {
    lo += b.lower;
    hi += b.upper;
  }
  return {lo / bs.size(), hi / bs.size()};
}

// 4. Inference semantics.
std::string criterion4(Check& c) {
  const auto rules = default_rules();
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto rb = [&] {
    const double x = u(rng), y = u(rng);
    return Bounds{std::min(x, y), std::max(x, y)};
  };
  const Bounds one{1.0, 1.0};
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    // safe1 on p0, safe2 on p0 and p1, efficiency1 on ego.
    const Bounds p0 = rb(), p1 = rb(), road = rb(), center = rb(), cw0 = rb(), cw1 = rb(),
                 nocw = rb(), empty = rb();
    std::vector<Fact> facts = {{"Pedestrian", {"p0"}, p0},        {"Pedestrian", {"p1"}, p1},
                               {"OnRoad", {"p0"}, road},          {"CenterOf", {"p0", "ego"}, center},
                               {"OnCrosswalk", {"p0"}, cw0},      {"OnCrosswalk", {"p1"}, cw1},
                               {"NoCrosswalk", {"ego"}, nocw},    {"EmptyLane", {"ego"}, empty}};
    std::shuffle(facts.begin(), facts.end(), rng);
    const auto r = infer(rules, facts);
    const std::map<std::string, Bounds> want = {
        {"safe1", mean_bounds({one, p0, road, center})},
        {"safe2", elementwise_max(mean_bounds({one, p0, cw0}), mean_bounds({one, p1, cw1}))},
        {"efficiency1", mean_bounds({one, nocw, empty})},
        {"efficiency2", {0.0, 0.0}},
        {"efficiency3", {0.0, 0.0}},
        {"safe3", {0.0, 0.0}},
    };
    for (const auto& [name, b] : want) {
      const auto* h = head(r, name);
      if (!h) {
        c.expect(false, "missing head " + name);
        continue;
      }
      worst = std::max({worst, std::abs(h->bounds.lower - b.lower), std::abs(h->bounds.upper - b.upper)});
    }
  }
  c.expect(worst <= 1e-12, fmt("closed form error %.3g", worst));

  // Two safe3 groundings through different directions: element-wise max.
  const Bounds lo{0.4, 0.5}, hi{0.7, 0.8};
  const std::vector<Fact> dual = {
      {"Vehicle", {"v0"}, lo},        {"Vehicle", {"v1"}, hi},      {"Crosswalk", {"c0"}, lo},
      {"Crosswalk", {"c1"}, hi},      {"RightOf", {"v0", "ego"}, lo}, {"LeftOf", {"v1", "ego"}, hi},
      {"Occludes", {"v0", "c0"}, lo}, {"Occludes", {"v1", "c1"}, hi},
  };
  const auto* s3 = head(infer(rules, dual), "safe3");
  c.expect(s3 && std::abs(s3->bounds.lower - (1.0 + 4 * 0.7) / 5.0) <= 1e-12 &&
               std::abs(s3->bounds.upper - (1.0 + 4 * 0.8) / 5.0) <= 1e-12,
           "safe3 disjunction is not the element-wise max");

  // Negation as failure: deleting one body fact turns safe1 off.
  std::vector<Fact> f1 = {{"Pedestrian", {"p0"}, one}, {"OnRoad", {"p0"}, one}, {"CenterOf", {"p0", "ego"}, one}};
  const bool on = head(infer(rules, f1), "safe1")->confidence() > 0.0;
  f1.pop_back();
  const bool off = head(infer(rules, f1), "safe1")->confidence() == 0.0;
  c.expect(on && off, "negation by deletion");

  // Rule file round trip and shape.
  c.expect(parse_rules(format_rules(rules)) == rules, "rule round trip");
  std::vector<std::string> safety, efficiency;
  int safe3 = 0;
  for (const auto& r : rules) {
    auto& list = r.tag == RuleTag::Safety ? safety : efficiency;
    if (std::find(list.begin(), list.end(), r.head.predicate) == list.end()) list.push_back(r.head.predicate);
    safe3 += r.head.predicate == "safe3";
  }
  c.expect(safety.size() == 3 && efficiency.size() == 3, "expected 3 safety and 3 efficiency heads");
  c.expect(safe3 == 3, "safe3 should have 3 clauses");
  return fmt("50 random sets max err %.2g", worst) + ", disjunction max, negation, round trip";
}

// 5. Reward arithmetic against a table written out by hand.
std::string criterion5(Check& c) {
  struct Row {
    double v, d, a;
    bool hit;
    double we, ws;
  };
  const Row rows[] = {
      {0, 10, 0, false, 0.5, 0.5},      {1, 1, 1, false, 1, 0},          {2, 5, -2, false, 0, 1},
      {3, 0.5, 4, false, 0.2, 0.8},     {4, 100, -4, false, 1, 1},       {5, 0, 0, true, 0, 1},
      {6, 2, 3, false, 1.0 / 3, 0.25},  {7, 7, -1, false, 0.75, 0.25},   {8, 30, 0.5, false, 0.6, 0.1},
      {9, 3, -3.5, true, 0.3, 0.9},     {10, 20, 0, false, 0, 0},        {11, 1e-3, 2, false, 0.5, 0.5},
      {12, 60, -0.1, false, 0.9, 0.05}, {13, 4, 1, true, 0.4, 0.6},      {14, 14, -4, false, 1, 0.5},
      {0.5, 0.2, 0.2, false, 0.1, 0.7}, {1.5, 40, 0, false, 0.8, 0},     {2.5, 2.5, -2.5, false, 0.5, 0.5},
      {3.5, 10, 3, true, 1, 1},         {4.5, 8, -1.5, false, 0.2, 0.2}, {5.5, 16, 0.7, false, 0.33, 0.66},
      {6.5, 1, -0.7, false, 0.25, 1},   {7.5, 5, 0, true, 0, 0},         {8.5, 9, 4, false, 0.45, 0.55},
      {9.5, 12, -2, false, 0.7, 0.3},   {10.5, 0, 0, false, 1, 1},       {11.5, 25, 1.2, false, 0.1, 0.1},
      {12.5, 3, -3, true, 0.6, 0.4},    {13.5, 70, 0, false, 1, 0},      {14, 0.1, -4, false, 0, 1},
  };
  double worst = 0.0;
  for (const auto& r : rows) {
    const double gs = -(0.5 * r.v * r.v / (r.d + 0.1) + (r.hit ? 100.0 : 0.0));
    const double gm = -0.1 * (r.a * 0.1) * (r.a * 0.1);
    const auto got = compute_reward(r.v, r.d, r.a, r.hit, {r.we, r.ws});
    worst = std::max({worst, std::abs(got.g_saf - gs), std::abs(got.g_eff - r.v),
                      std::abs(got.g_smooth - gm), std::abs(got.r_final - (r.ws * gs + r.we * r.v + gm))});
  }
  c.expect(worst <= 1e-12, fmt("table error %.3g", worst));
  const double hit = g_saf(5, 0, true);
  c.expect(std::abs(hit + 225.0) <= 1e-12, fmt("collision at 5 m/s gave %.6f", hit));
  const double third = reward_weight({{"e1", 1.0, 1.0}, {"e2", 0.0, 0.75}, {"e3", 0.0, 0.75}});
  c.expect(std::abs(third - 1.0 / 3.0) <= 1e-12, fmt("one firing head gave %.6f", third));
  return fmt("30 rows max err %.2g", worst) + ", collision -225, single head 1/3";
}

// 6. Scripted occupied crosswalk. A pedestrian stands on the crosswalk until
// the ego has stopped for it, then crosses away.
std::string criterion6(Check& c) {
  const auto t0 = Clock::now();
  ScenarioConfig cfg;
  cfg.density.count = 0;
  cfg.occlusion = Occlusion::Partial;
  auto s = init_episode(cfg, 1);
  s.occluder.x0 = s.occluder.x1 = -1000.0;
  Pedestrian p;
  p.id = 0;
  p.role = PedRole::CrosswalkUser;
  p.phase = PedPhase::Waiting;
  p.x = cfg.crosswalk_position + cfg.crosswalk_depth / 2.0;
  p.y = 0.5;
  p.speed = cfg.walk_speed;
  p.trigger = 1e9;
  p.target_x = p.x;
  p.target_y = -(cfg.lane_half_width + cfg.sidewalk_width / 2.0);
  s.pedestrians.push_back(p);

  const auto rules = default_rules();
  int first_detect = -1, first_occupied = -1, last_occupied = -1, recovered = -1;
  int pre_ok = 0, pre_steps = 0, occ_ok = 0, occ_steps = 0;
  double stopped_for = 0.0;
  bool released = false;
  const int max_steps = static_cast<int>(cfg.timeout / cfg.dt);
  int k = 0;
  for (; k < max_steps && s.ego_x < cfg.goal && !s.collided; ++k) {
    const auto per = perceive(render_semantic_map(s, cfg), rules);
    auto has = [&](std::string_view pred) {
      return std::any_of(per.facts.begin(), per.facts.end(), [&](const Fact& f) { return f.predicate == pred; });
    };
    double best = 0.0;
    for (const auto& h : per.inference.heads) best = std::max(best, h.confidence());
    const auto* e1 = head(per.inference, "efficiency1");
    const double eff1 = e1 ? e1->confidence() : 0.0;
    const bool eff1_top = eff1 > 0.0 && eff1 >= best;

    if (has("Crosswalk") && first_detect < 0) first_detect = k;
    if (first_detect < 0) {
      ++pre_steps;
      pre_ok += eff1_top;
    }
    if (has("OnCrosswalk")) {
      if (first_occupied < 0) first_occupied = k;
      last_occupied = k;
      ++occ_steps;
      occ_ok += per.weights.safety > per.weights.efficiency;
    }
    if (last_occupied >= 0 && k > last_occupied && !crosswalk_occupied(s, cfg) && eff1_top && recovered < 0) {
      recovered = k;
    }

    if (!released && first_occupied >= 0) {
      stopped_for = s.v < 0.1 ? stopped_for + cfg.dt : 0.0;
      if (stopped_for >= 2.0) {
        s.pedestrians[0].trigger = s.t;
        released = true;
      }
    }
    s = step(s, sfol_action(per.weights, s.v, cfg.v_max, 1.0), cfg);
  }
  c.expect(!s.collided, "collided");
  c.expect(pre_steps > 0 && pre_ok == pre_steps,
           "efficiency1 top before detection in " + std::to_string(pre_ok) + "/" + std::to_string(pre_steps));
  c.expect(occ_steps > 0 && occ_ok == occ_steps,
           "w_saf > w_eff while occupied in " + std::to_string(occ_ok) + "/" + std::to_string(occ_steps));
  c.expect(released, "ego never stopped for the pedestrian");
  c.expect(recovered > 0, "efficiency1 never recovered");
  c.expect(first_detect >= 0 && first_detect <= first_occupied && last_occupied < recovered,
           "phases out of order");
  const double secs = seconds_since(t0);
  c.expect(secs < 5.0, fmt("took %.2fs", secs));
  std::ostringstream o;
  o << "steps " << k << ": detect@" << first_detect << " occupied@" << first_occupied << ".."
    << last_occupied << " recovered@" << recovered << " goal=" << (s.ego_x >= cfg.goal);
  return o.str();
}

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

CellMetrics high_full(ControllerKind kind, const char* variant, Check& c, double* secs) {
  EvaluationConfig e;
  e.controller.kind = kind;
  e.controller.variant = RuleVariant::parse(variant);
  e.densities = {Density::High};
  e.occlusions = {Occlusion::Full};
  e.episodes = 100;
  e.seed = 0;
  e.threads = workers();
  const auto t0 = Clock::now();
  const auto t = evaluate(e);
  *secs = seconds_since(t0);
  c.expect(*secs < 120.0, fmt("evaluation took %.1fs", *secs));
  return t.cells.at(0);
}

std::vector<CellMetrics> c7_cells;

// 7. Closed-loop comparison on the hardest cell.
std::string criterion7(Check& c) {
  double t_fixed, t_cecs, t_ceps, t_pecs;
  const auto fixed = high_full(ControllerKind::Fixed, "ce_cs", c, &t_fixed);
  const auto cecs = high_full(ControllerKind::Sfol, "ce_cs", c, &t_cecs);
  const auto ceps = high_full(ControllerKind::Sfol, "ce_ps", c, &t_ceps);
  const auto pecs = high_full(ControllerKind::Sfol, "pe_cs", c, &t_pecs);
  c7_cells = {fixed, cecs, ceps, pecs};
  c.expect(cecs.collisions < fixed.collisions, "CE&CS collisions not below fixed");
  const double reduction =
      fixed.collisions > 0 ? 1.0 - static_cast<double>(cecs.collisions) / fixed.collisions : 0.0;
  c.expect(reduction >= 0.30, fmt("relative reduction %.2f", reduction));
  c.expect(cecs.mean_sd < pecs.mean_sd, "CE&CS stopping distance not below PE&CS");
  c.expect(cecs.collisions < ceps.collisions, "CE&CS collisions not below CE&PS");
  std::ostringstream o;
  o << "collisions fixed=" << fixed.collisions << " ce_cs=" << cecs.collisions << " ce_ps=" << ceps.collisions
    << " pe_cs=" << pecs.collisions << fmt(" reduction=%.0f%%", 100 * reduction)
    << fmt(" SD ce_cs=%.1f", cecs.mean_sd) << fmt(" pe_cs=%.1f", pecs.mean_sd)
    << fmt(" eval %.1fs", t_fixed) << fmt("/%.1fs", t_cecs) << fmt("/%.1fs", t_ceps) << fmt("/%.1fs", t_pecs);
  return o.str();
}

double oracle_rms(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  long double s = 0.0L;
  for (double x : xs) s += static_cast<long double>(x) * x;
  return static_cast<double>(std::sqrt(s / xs.size()));
}

// 8. Metric definitions.
std::string criterion8(Check& c) {
  c.expect(is_near_miss(2.0) && is_near_miss(1.999) && !is_near_miss(2.0001) && !is_near_miss(kInfinity),
           "near-miss threshold");
  c.expect(is_near_miss(ttc(20.0, 10.0)), "ttc of exactly 2 s not flagged");

  ScenarioConfig cfg;
  cfg.density = density_profile(Density::High);
  cfg.occlusion = Occlusion::Full;
  EpisodeOptions opts;
  opts.record_log = true;
  double worst = 0.0;
  int flag_mismatch = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ControllerSpec ctl;
    if (seed % 2) ctl.kind = ControllerKind::Fixed;
    const auto ep = run_episode(ctl, cfg, seed, opts);
    flag_mismatch += ep.outcome.near_miss != (ep.outcome.min_ttc <= 2.0);
    std::vector<double> v, a, j;
    double pv = 0.0, pa = 0.0;
    for (const auto& rec : ep.log) {
      v.push_back(rec.v);
      const double acc = (rec.v - pv) / cfg.dt;
      if (!a.empty()) j.push_back((acc - pa) / cfg.dt);
      a.push_back(acc);
      pv = rec.v;
      pa = acc;
    }
    worst = std::max({worst, std::abs(ep.outcome.rms_speed - oracle_rms(v)),
                      std::abs(ep.outcome.rms_accel - oracle_rms(a)),
                      std::abs(ep.outcome.rms_jerk - oracle_rms(j))});
  }
  c.expect(flag_mismatch == 0, "near-miss flag disagrees with min TTC");
  c.expect(worst <= 1e-9, fmt("rms error %.3g", worst));

  int bad_sum = 0;
  for (const auto& m : c7_cells) {
    bad_sum += m.episodes != 100 || m.successes + m.collisions + m.timeouts != 100 ||
               std::abs(m.success_pct + m.collision_pct + m.timeout_pct - 100.0) > 1e-9;
  }
  c.expect(!c7_cells.empty() && bad_sum == 0, "S + C + T != 100");
  return fmt("rms max err %.2g", worst) + ", 2.0 s flags, S+C+T=100 in " +
         std::to_string(c7_cells.size() - bad_sum) + "/" + std::to_string(c7_cells.size()) + " tables";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(std::vector<std::string> args, std::string* err = nullptr) {
  std::ostringstream out, e;
  const int code = run_cli(args, out, e);
  if (err) *err = e.str();
  return code;
}

// 9. Every command reruns byte-identically from its manifest.
std::string criterion9(Check& c) {
  const fs::path dir = fs::temp_directory_path() / "vsrsfol_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto at = [&](const std::string& n) { return (dir / n).string(); };
  {
    std::ofstream(at("scene.json")) << R"({"background":"road","shapes":[
        {"class":"sidewalk","rect":[150,0,74,224]},
        {"class":"crosswalk","rect":[120,40,14,140]},
        {"class":"pedestrian","rect":[100,100,22,6],"confidence":0.9},
        {"class":"vehicle","rect":[90,170,30,40],"confidence":0.95}]})";
  }
  struct Case {
    std::string name;
    std::vector<std::string> args;
    std::vector<std::string> outputs;  // first one carries the manifest
    std::string flag;                  // rerun override flag
  };
  const std::string th = std::to_string(std::max(2u, workers()));
  const std::vector<Case> cases = {
      {"encode", {"--seed", "4", "encode", "--scene", at("scene.json"), "--dim", "1024", "--out", at("enc.json")},
       {"enc.json"}, "--out"},
      {"infer", {"infer", "--scene", at("scene.json"), "--trace", at("trace.json")}, {"trace.json"}, "--trace"},
      {"evaluate", {"--seed", "9", "--threads", th, "evaluate", "--density", "high", "--episodes", "6",
                    "--out", at("eval.csv")},
       {"eval.csv", "eval.json"}, "--out"},
      {"simulate", {"--seed", "6", "simulate", "--out", at("sim.jsonl")}, {"sim.jsonl"}, "--out"},
  };
  int identical = 0;
  for (const auto& k : cases) {
    std::string err;
    if (cli(k.args, &err) != 0) {
      c.expect(false, k.name + " failed: " + err);
      continue;
    }
    const std::string first = k.outputs[0];
    const std::string ext = fs::path(first).extension().string();
    const std::string again = "again_" + first;
    if (cli({"rerun", at(first + ".manifest.json"), k.flag, at(again)}, &err) != 0) {
      c.expect(false, k.name + " rerun failed: " + err);
      continue;
    }
    bool same = true;
    for (const auto& o : k.outputs) {
      const std::string twin = "again_" + o;
      same = same && !slurp(at(o)).empty() && slurp(at(o)) == slurp(at(twin));
    }
    c.expect(same, k.name + " rerun differs");
    identical += same;
  }
  // A multi-worker evaluation matches a single-worker one.
  const bool single =
      cli({"--seed", "9", "--threads", "1", "evaluate", "--density", "high", "--episodes", "6", "--out",
           at("eval1.csv")}) == 0 &&
      slurp(at("eval1.csv")) == slurp(at("eval.csv"));
  c.expect(single, "threads=" + th + " differs from threads=1");
  fs::remove_all(dir);
  return std::to_string(identical) + "/" + std::to_string(cases.size()) +
         " commands rerun byte-identical, evaluate with " + th + " workers == 1 worker";
}

}  // namespace

int main() {
  run(1, "binding algebra", criterion1);
  run(2, "bundle retrieval", criterion2);
  run(3, "scene encoding", criterion3);
  run(4, "rule inference", criterion4);
  run(5, "reward arithmetic", criterion5);
  run(6, "occupied crosswalk episode", criterion6);
  run(7, "closed-loop safety", criterion7);
  run(8, "metric definitions", criterion8);
  run(9, "reproducible reruns", criterion9);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

#include "vsrsfol/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <thread>

#include "vsrsfol/evaluate.hpp"
#include "vsrsfol/seeding.hpp"
#include "vsrsfol/vsr.hpp"

namespace vsrsfol {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Rule syntax error already located in a file.
struct RuleFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string hex64(std::uint64_t x) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << x;
  return ss.str();
}

// Parses an enum flag, turning the library's complaint into a usage error.
template <class F>
auto parse_enum(std::string_view flag, const std::string& value, F&& parse) {
  try {
    return parse(value);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string(flag) + ": " + e.what());
  }
}

struct RulesInput {
  std::string path;  // "<builtin>" for the embedded rule base
  std::string text;
  std::vector<Rule> rules;
};

// --rules, then $VSR_DEFAULT_RULES, then the embedded copy.
RulesInput load_rules(const std::string& flag) {
  RulesInput in;
  if (!flag.empty()) {
    in.path = flag;
  } else if (const char* env = std::getenv("VSR_DEFAULT_RULES"); env && *env) {
    in.path = env;
  }
  if (in.path.empty()) {
    in.path = "<builtin>";
    in.text = std::string(default_rules_text());
  } else {
    in.text = read_file(in.path);
  }
  try {
    in.rules = parse_rules(in.text);
  } catch (const ParseError& e) {
    throw RuleFileError(in.path + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) +
                        ": " + e.what());
  }
  return in;
}

SemanticMap load_scene(const std::string& path, std::string* text_out = nullptr) {
  const std::string text = read_file(path);
  if (text_out) *text_out = text;
  try {
    return build_semantic_map(SceneSpec::from_json(text));
  } catch (const std::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

struct Globals {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool quiet = false;
  std::string manifest;
};

// Collected while a command runs and written next to its primary output.
struct Manifest {
  std::string command;
  std::vector<std::string> args;
  json config = json::object();
  json inputs = json::object();
  json outputs = json::array();

  void input(const std::string& role, const std::string& path, std::string_view content) {
    inputs[role] = {{"path", path}, {"fnv1a64", hex64(fnv1a64(content))}};
  }
};

void write_manifest(const Manifest& m, const Globals& g, const std::string& primary,
                    const std::string& started, double seconds) {
  const std::string path = !g.manifest.empty() ? g.manifest : primary + ".manifest.json";
  const json j = {{"tool", "vsrsfol"},
                  {"version", kToolVersion},
                  {"command", m.command},
                  {"args", m.args},
                  {"seed", g.seed},
                  {"threads", g.threads},
                  {"config", m.config},
                  {"inputs", m.inputs},
                  {"outputs", m.outputs},
                  {"started", started},
                  {"wall_seconds", seconds}};
  write_file(path, j.dump(2) + "\n");
}

// ---- encode ---------------------------------------------------------------

struct EncodeArgs {
  std::string scene;
  std::size_t dim = 2048;
  std::string mode = "add";
  std::string codebook;
  std::string out;
};

void cmd_encode(const EncodeArgs& a, const Globals& g, Manifest& m, std::ostream& out) {
  const FusionMode mode = parse_enum("--mode", a.mode, parse_fusion_mode);
  if (a.dim < 2) throw DimError("--dim must be at least 2");
  std::string scene_text;
  const SemanticMap map = load_scene(a.scene, &scene_text);
  m.input("scene", a.scene, scene_text);

  VsrConfig cfg;
  cfg.dim = a.dim;
  cfg.fusion = mode;
  SceneEncoding enc;
  if (!a.codebook.empty()) {
    const std::string text = read_file(a.codebook);
    m.input("codebook", a.codebook, text);
    std::optional<Codebook> cb;
    try {
      cb.emplace(Codebook::from_json(text));
    } catch (const std::exception& e) {
      throw UsageError(a.codebook + ": " + e.what());
    }
    if (cb->dim() != a.dim) {
      throw DimError("codebook dim " + std::to_string(cb->dim()) + " != --dim " +
                     std::to_string(a.dim));
    }
    const StubSfProvider sf(stream_seed(g.seed, "sf"), a.dim, cfg.grid_size);
    try {
      enc = encode_scene(map, *cb, cfg, sf);
    } catch (const HdcError& e) {
      throw UsageError(std::string("codebook: ") + e.what());  // missing symbol
    }
  } else {
    enc = encode_scene_seeded(map, cfg, g.seed);
  }
  write_file(a.out, vsr_to_json(enc.vsr, mode));
  m.config = {{"dim", a.dim}, {"mode", to_string(mode)}, {"grid_size", cfg.grid_size},
              {"sf_seed", stream_seed(g.seed, "sf")}};
  m.outputs.push_back(a.out);
  if (!g.quiet) {
    out << "entities=" << enc.entities.size() << " dim=" << a.dim << " mode=" << to_string(mode)
        << " norm=" << enc.vsr.norm() << "\n";
  }
}

// ---- infer ----------------------------------------------------------------

struct InferArgs {
  std::string scene;
  std::string rules;
  std::string camera;
  std::string variant;
  std::string trace;
};

CameraModel load_camera(const std::string& path, Manifest& m) {
  CameraModel cam;
  if (path.empty()) return cam;
  const std::string text = read_file(path);
  m.input("camera", path, text);
  try {
    const json j = json::parse(text);
    cam.focal_length_px = j.value("focal_length_px", cam.focal_length_px);
    cam.crosswalk_width_m = j.value("crosswalk_width_m", cam.crosswalk_width_m);
    cam.validate();
  } catch (const std::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
  return cam;
}

double weight_or_zero(const std::vector<RuleConfidence>& rc) {
  return rc.empty() ? 0.0 : reward_weight(rc);
}

void cmd_infer(const InferArgs& a, const Globals& g, Manifest& m, std::ostream& out) {
  std::string scene_text;
  const SemanticMap map = load_scene(a.scene, &scene_text);
  m.input("scene", a.scene, scene_text);
  RulesInput rules = load_rules(a.rules);
  m.input("rules", rules.path, rules.text);
  if (!a.variant.empty()) {
    rules.rules = apply_variant(rules.rules, parse_enum("--variant", a.variant, RuleVariant::parse));
  }
  ExtractorConfig ecfg;
  ecfg.camera = load_camera(a.camera, m);

  const Extraction ex = extract_facts(map, ecfg);
  const InferenceResult res = infer(rules.rules, ex.facts);
  const RuleConfidences conf = rule_confidences(res.heads, rules.rules);
  const double w_saf = weight_or_zero(conf.safety);
  const double w_eff = weight_or_zero(conf.efficiency);

  m.config = {{"variant", a.variant.empty() ? "none" : a.variant},
              {"focal_length_px", ecfg.camera.focal_length_px},
              {"crosswalk_width_m", ecfg.camera.crosswalk_width_m},
              {"band_depth", ecfg.band_depth}};
  if (!a.trace.empty()) {
    json t = json::parse(trace_to_json(res));
    json facts = json::array();
    for (const auto& f : ex.facts) facts.push_back(json::parse(fact_to_json(f)));
    t["facts"] = facts;
    t["w_saf"] = w_saf;
    t["w_eff"] = w_eff;
    write_file(a.trace, t.dump(2) + "\n");
    m.outputs.push_back(a.trace);
  }
  if (g.quiet) return;
  if (res.heads.empty()) out << "no heads\n";
  for (const auto& h : res.heads) {
    out << h.predicate << "(";
    for (std::size_t i = 0; i < h.args.size(); ++i) out << (i ? "," : "") << h.args[i];
    out << ") l=" << h.bounds.lower << " u=" << h.bounds.upper << " tau=" << h.confidence()
        << " support=" << h.support << "\n";
  }
  out << "w_saf=" << w_saf << " w_eff=" << w_eff << "\n";
}

// ---- evaluate / simulate ----------------------------------------------------

struct RunArgs {
  std::string density = "all";
  std::string occlusion = "all";
  int episodes = 100;
  std::string controller = "sfol";
  std::string variant = "ce_cs";
  std::string rules;
  std::string out;
};

std::vector<Density> densities_from(const std::string& s) {
  if (s == "all") return {Density::Low, Density::Medium, Density::High};
  return {parse_enum("--density", s, parse_density)};
}

std::vector<Occlusion> occlusions_from(const std::string& s) {
  if (s == "all") return {Occlusion::Partial, Occlusion::Full};
  return {parse_enum("--occlusion", s, parse_occlusion)};
}

ControllerSpec controller_from(const RunArgs& a) {
  ControllerSpec c;
  c.kind = parse_enum("--controller", a.controller, parse_controller);
  c.variant = parse_enum("--variant", a.variant, RuleVariant::parse);
  return c;
}

std::string json_twin(const std::string& out) {
  fs::path p(out);
  if (p.extension() == ".csv") return p.replace_extension(".json").string();
  return out + ".json";
}

json scenario_json(const ScenarioConfig& s) {
  return {{"goal", s.goal},
          {"crosswalk_position", s.crosswalk_position},
          {"crosswalk_depth", s.crosswalk_depth},
          {"lane_half_width", s.lane_half_width},
          {"sidewalk_width", s.sidewalk_width},
          {"behavior", to_string(s.behavior)},
          {"timeout", s.timeout},
          {"dt", s.dt},
          {"a_max", s.a_max},
          {"v_max", s.v_max},
          {"trigger_min", s.trigger_min},
          {"trigger_max", s.trigger_max}};
}

void cmd_evaluate(const RunArgs& a, const Globals& g, Manifest& m, std::ostream& out) {
  if (a.episodes < 1) throw UsageError("--episodes must be >= 1");
  EvaluationConfig cfg;
  cfg.controller = controller_from(a);
  cfg.densities = densities_from(a.density);
  cfg.occlusions = occlusions_from(a.occlusion);
  cfg.episodes = a.episodes;
  cfg.seed = g.seed;
  cfg.threads = g.threads;
  const RulesInput rules = load_rules(a.rules);
  m.input("rules", rules.path, rules.text);
  cfg.options.rules = rules.rules;

  const EvaluationTable t = evaluate(cfg);
  const std::string twin = json_twin(a.out);
  write_file(a.out, table_to_csv(t));
  write_file(twin, table_to_json(t));
  m.config = {{"controller", a.controller}, {"variant", a.variant},
              {"density", a.density},       {"occlusion", a.occlusion},
              {"episodes", a.episodes},     {"scenario", scenario_json(cfg.scenario)}};
  m.outputs = {a.out, twin};
  if (g.quiet) return;
  out << std::fixed << std::setprecision(1);
  for (const auto& c : t.cells) {
    out << t.controller << (t.variant.empty() ? "" : " " + t.variant) << " "
        << to_string(c.density) << " " << to_string(c.occlusion) << " S=" << c.success_pct
        << " C=" << c.collision_pct << " T=" << c.timeout_pct << " SD=" << c.mean_sd
        << " (n=" << c.sd_count << ")\n";
  }
}

void cmd_simulate(const RunArgs& a, const Globals& g, Manifest& m, std::ostream& out) {
  ScenarioConfig sc;
  const auto ds = densities_from(a.density == "all" ? "high" : a.density);
  const auto os = occlusions_from(a.occlusion == "all" ? "full" : a.occlusion);
  sc.density = density_profile(ds.front());
  sc.occlusion = os.front();
  const ControllerSpec controller = controller_from(a);
  EpisodeOptions opts;
  const RulesInput rules = load_rules(a.rules);
  m.input("rules", rules.path, rules.text);
  opts.rules = rules.rules;
  opts.record_log = true;

  const Episode ep = run_episode(controller, sc, g.seed, opts);
  std::string lines;
  for (const auto& rec : ep.log) lines += step_record_to_json(rec) + "\n";
  write_file(a.out, lines);
  m.config = {{"controller", a.controller}, {"variant", a.variant},
              {"density", to_string(ds.front())}, {"occlusion", to_string(os.front())},
              {"scenario", scenario_json(sc)}};
  m.outputs.push_back(a.out);
  if (g.quiet) return;
  const auto& o = ep.outcome;
  out << to_string(o.result) << " steps=" << o.steps << " ttg=" << o.ttg
      << " min_ttc=" << o.min_ttc << " sd=" << (o.stopped ? o.stopping_distance : 0.0) << "\n";
}

// ---- rerun ----------------------------------------------------------------

// Replaces the value of `flag` in an argument list (both "--f v" and "--f=v").
void override_flag(std::vector<std::string>& args, const std::string& flag, const std::string& v) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == flag && i + 1 < args.size()) {
      args[i + 1] = v;
      return;
    }
    if (args[i].rfind(flag + "=", 0) == 0) {
      args[i] = flag + "=" + v;
      return;
    }
  }
  throw UsageError("manifest command has no " + flag);
}

void drop_flag(std::vector<std::string>& args, const std::string& flag) {
  for (std::size_t i = 0; i < args.size();) {
    if (args[i] == flag && i + 1 < args.size()) {
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
    } else if (args[i].rfind(flag + "=", 0) == 0) {
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }
}

std::vector<std::string> rerun_args(const std::string& path, const std::string& out_override,
                                    const std::string& trace_override, std::ostream& err) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
  if (!j.contains("args") || !j["args"].is_array()) throw UsageError(path + ": no args");
  auto args = j["args"].get<std::vector<std::string>>();
  // Inputs that changed since the original run cannot reproduce it.
  const json inputs = j.value("inputs", json::object());
  for (const auto& [role, in] : inputs.items()) {
    const std::string p = in.value("path", "");
    if (p == "<builtin>") continue;
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    if (!f || hex64(fnv1a64(ss.str())) != in.value("fnv1a64", "")) {
      err << "warning: " << role << " input " << p << " differs from the recorded run\n";
    }
  }
  if (!out_override.empty()) override_flag(args, "--out", out_override);
  if (!trace_override.empty()) override_flag(args, "--trace", trace_override);
  drop_flag(args, "--manifest");
  return args;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, int depth);

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, int depth) {
  CLI::App app{"Scene hypervector encoding, rule-weighted rewards and crossing simulations",
               "vsrsfol"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kToolVersion));
  Globals g;
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--threads", g.threads, "Worker threads for evaluate (0 = all cores)");
  app.add_flag("--quiet", g.quiet, "No summaries on stdout");
  app.add_option("--manifest", g.manifest, "Manifest path (default <output>.manifest.json)");

  EncodeArgs ea;
  auto* enc = app.add_subcommand("encode", "Encode a scene into its VSR hypervector");
  enc->add_option("--scene", ea.scene, "Scene JSON")->required();
  enc->add_option("--dim", ea.dim, "Hypervector dimension");
  enc->add_option("--mode", ea.mode, "add | multiply | ssi_only | sf_only");
  enc->add_option("--codebook", ea.codebook, "Codebook JSON (default: derived from --seed)");
  enc->add_option("--out", ea.out, "VSR JSON output")->required();

  InferArgs ia;
  auto* inf = app.add_subcommand("infer", "Extract facts from a scene and run the rules");
  inf->add_option("--scene", ia.scene, "Scene JSON")->required();
  inf->add_option("--rules", ia.rules, "Rule file (default $VSR_DEFAULT_RULES or built-in)");
  inf->add_option("--camera", ia.camera, "Camera JSON {focal_length_px, crosswalk_width_m}");
  inf->add_option("--variant", ia.variant, "ce_cs | ce_ps | pe_cs | pe_ps");
  inf->add_option("--trace", ia.trace, "Grounding trace JSON output");

  RunArgs ra;
  auto add_run_options = [&](CLI::App* sub) {
    sub->add_option("--density", ra.density, "low | med | high | all");
    sub->add_option("--occlusion", ra.occlusion, "partial | full | all");
    sub->add_option("--controller", ra.controller, "sfol | fixed | full_throttle | full_brake");
    sub->add_option("--variant", ra.variant, "ce_cs | ce_ps | pe_cs | pe_ps");
    sub->add_option("--rules", ra.rules, "Rule file (default $VSR_DEFAULT_RULES or built-in)");
  };
  auto* ev = app.add_subcommand("evaluate", "Collision test over a density x occlusion matrix");
  add_run_options(ev);
  ev->add_option("--episodes", ra.episodes, "Episodes per cell");
  ev->add_option("--out", ra.out, "Metrics CSV (a .json twin is written alongside)")->required();
  auto* sim = app.add_subcommand("simulate", "Run one episode and write its step log as JSONL");
  add_run_options(sim);
  sim->add_option("--out", ra.out, "Trajectory JSONL")->required();

  std::string manifest_in, out_override, trace_override;
  auto* rr = app.add_subcommand("rerun", "Repeat a command from its manifest");
  rr->add_option("manifest", manifest_in, "Manifest JSON")->required();
  rr->add_option("--out", out_override, "Replace the recorded --out");
  rr->add_option("--trace", trace_override, "Replace the recorded --trace");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadInput;
  }
  if (g.threads == 0) g.threads = std::max(1u, std::thread::hardware_concurrency());

  if (rr->parsed()) {
    if (depth > 0) throw UsageError("rerun of a rerun");
    return run(rerun_args(manifest_in, out_override, trace_override, err), out, err, depth + 1);
  }

  Manifest m;
  m.args = args;
  drop_flag(m.args, "--manifest");
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  std::string primary;
  if (enc->parsed()) {
    m.command = "encode";
    cmd_encode(ea, g, m, out);
    primary = ea.out;
  } else if (inf->parsed()) {
    m.command = "infer";
    cmd_infer(ia, g, m, out);
    primary = ia.trace;
  } else if (ev->parsed()) {
    m.command = "evaluate";
    cmd_evaluate(ra, g, m, out);
    primary = ra.out;
  } else {
    m.command = "simulate";
    cmd_simulate(ra, g, m, out);
    primary = ra.out;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  // infer without --trace has no file output to sit next to.
  if (!primary.empty() || !g.manifest.empty()) write_manifest(m, g, primary, started, secs);
  return kExitOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, int depth) {
  try {
    return dispatch(args, out, err, depth);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const DimError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDimMismatch;
  } catch (const RuleFileError& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuleParse;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  return run(args, out, err, 0);
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace vsrsfol

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "vsrsfol/cli.hpp"
#include "vsrsfol/evaluate.hpp"
#include "vsrsfol/vsr.hpp"

namespace py = pybind11;
using namespace vsrsfol;

namespace {

py::array_t<double> to_array(const Hypervector& v) {
  py::array_t<double> a(static_cast<py::ssize_t>(v.dim()));
  std::copy(v.values().begin(), v.values().end(), a.mutable_data());
  return a;
}

Hypervector from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-d array");
  return Hypervector(std::vector<double>(a.data(), a.data() + a.size()));
}

py::dict fact_dict(const Fact& f) {
  py::dict d;
  d["pred"] = f.predicate;
  d["args"] = f.args;
  d["l"] = f.bounds.lower;
  d["u"] = f.bounds.upper;
  return d;
}

Fact fact_from(const py::dict& d) {
  Fact f;
  f.predicate = d["pred"].cast<std::string>();
  f.args = d["args"].cast<std::vector<std::string>>();
  f.bounds = {d["l"].cast<double>(), d["u"].cast<double>()};
  return f;
}

std::vector<Rule> rules_or_default(const std::optional<std::string>& text) {
  return text ? parse_rules(*text) : default_rules();
}

py::dict outcome_dict(const EpisodeOutcome& o) {
  py::dict d;
  d["result"] = std::string(to_string(o.result));
  d["stopped"] = o.stopped;
  d["stopping_distance"] = o.stopping_distance;
  d["rms_speed"] = o.rms_speed;
  d["rms_accel"] = o.rms_accel;
  d["rms_jerk"] = o.rms_jerk;
  d["min_ttc"] = o.min_ttc;
  d["impact_speed"] = o.impact_speed;
  d["near_miss"] = o.near_miss;
  d["false_brake_rate"] = o.false_brake_rate;
  d["ttg"] = o.ttg;
  d["steps"] = o.steps;
  return d;
}

ControllerSpec controller_spec(const std::string& controller, const std::string& variant) {
  ControllerSpec c;
  c.kind = parse_controller(controller);
  c.variant = RuleVariant::parse(variant);
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hypervector scene encoding, soft-logic rule weights and crossing simulation";
  m.attr("__version__") = std::string(kToolVersion);

  py::register_exception<ParseError>(m, "RuleParseError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const std::invalid_argument& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("random_vector", [](std::uint64_t seed, const std::string& symbol, std::size_t dim) {
        return to_array(random_vector(seed, symbol, dim));
      },
      py::arg("seed"), py::arg("symbol"), py::arg("dim") = 2048);
  m.def("bind", [](py::array_t<double> a, py::array_t<double> b) {
    return to_array(bind(from_array(a), from_array(b)));
  });
  m.def("unbind", [](py::array_t<double> c, py::array_t<double> a) {
    return to_array(unbind(from_array(c), from_array(a)));
  });
  m.def("cosine", [](py::array_t<double> a, py::array_t<double> b) {
    return cosine(from_array(a), from_array(b));
  });
  m.def("bundle", [](const std::vector<py::array_t<double>>& vs) {
    std::vector<Hypervector> hv;
    for (const auto& v : vs) hv.push_back(from_array(v));
    return to_array(bundle(hv));
  });

  m.def("encode_scene",
        [](const std::string& scene_json, std::size_t dim, std::uint64_t seed, const std::string& mode) {
          VsrConfig cfg;
          cfg.dim = dim;
          cfg.fusion = parse_fusion_mode(mode);
          const SemanticMap map = build_semantic_map(SceneSpec::from_json(scene_json));
          return to_array(encode_scene_seeded(map, cfg, seed).vsr);
        },
        py::arg("scene_json"), py::arg("dim") = 2048, py::arg("seed") = 0, py::arg("mode") = "add");

  m.def("extract_facts", [](const std::string& scene_json) {
    const SemanticMap map = build_semantic_map(SceneSpec::from_json(scene_json));
    py::list out;
    for (const auto& f : extract_facts(map).facts) out.append(fact_dict(f));
    return out;
  });

  m.def("default_rules_text", [] { return std::string(default_rules_text()); });

  m.def("infer",
        [](const std::vector<py::dict>& facts, std::optional<std::string> rules_text) {
          std::vector<Fact> fs;
          for (const auto& d : facts) fs.push_back(fact_from(d));
          const auto rules = rules_or_default(rules_text);
          const InferenceResult res = infer(rules, fs);
          py::list heads;
          for (const auto& h : res.heads) {
            py::dict d;
            d["head"] = h.predicate;
            d["args"] = h.args;
            d["l"] = h.bounds.lower;
            d["u"] = h.bounds.upper;
            d["tau"] = h.confidence();
            heads.append(d);
          }
          const RuleConfidences conf = rule_confidences(res.heads, rules);
          py::dict out;
          out["heads"] = heads;
          out["w_saf"] = conf.safety.empty() ? 0.0 : reward_weight(conf.safety);
          out["w_eff"] = conf.efficiency.empty() ? 0.0 : reward_weight(conf.efficiency);
          return out;
        },
        py::arg("facts"), py::arg("rules_text") = py::none());

  m.def("compute_reward",
        [](double v, double d, double a, bool collided, double w_saf, double w_eff) {
          const RewardComponents c = compute_reward(v, d, a, collided, {w_eff, w_saf});
          py::dict out;
          out["g_saf"] = c.g_saf;
          out["g_eff"] = c.g_eff;
          out["g_smooth"] = c.g_smooth;
          out["r_final"] = c.r_final;
          return out;
        },
        py::arg("v"), py::arg("d"), py::arg("a"), py::arg("collided"), py::arg("w_saf"),
        py::arg("w_eff"));

  m.def("run_episode",
        [](std::uint64_t seed, const std::string& controller, const std::string& variant,
           const std::string& density, const std::string& occlusion) {
          ScenarioConfig sc;
          sc.density = density_profile(parse_density(density));
          sc.occlusion = parse_occlusion(occlusion);
          const ControllerSpec spec = controller_spec(controller, variant);
          Episode ep;
          {
            py::gil_scoped_release release;
            ep = run_episode(spec, sc, seed);
          }
          return outcome_dict(ep.outcome);
        },
        py::arg("seed"), py::arg("controller") = "sfol", py::arg("variant") = "ce_cs",
        py::arg("density") = "high", py::arg("occlusion") = "full");

  m.def("evaluate_csv",
        [](const std::string& controller, const std::string& variant, const std::string& density,
           const std::string& occlusion, int episodes, std::uint64_t seed, unsigned threads) {
          EvaluationConfig cfg;
          cfg.controller = controller_spec(controller, variant);
          cfg.densities = {parse_density(density)};
          cfg.occlusions = {parse_occlusion(occlusion)};
          cfg.episodes = episodes;
          cfg.seed = seed;
          cfg.threads = threads;
          py::gil_scoped_release release;
          return table_to_csv(evaluate(cfg));
        },
        py::arg("controller") = "sfol", py::arg("variant") = "ce_cs", py::arg("density") = "high",
        py::arg("occlusion") = "full", py::arg("episodes") = 10, py::arg("seed") = 0,
        py::arg("threads") = 1);

  m.def("cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  });
}

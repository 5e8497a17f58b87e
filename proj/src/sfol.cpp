#include <algorithm>
#include <nlohmann/json.hpp>
#include <set>
#include <utility>

#include "vsrsfol/sfol.hpp"

namespace vsrsfol {

namespace {

using FactKey = std::pair<std::string, std::vector<std::string>>;

// Deduplicated facts indexed by predicate; duplicates merge by element-wise max.
class FactBase {
 public:
  // Returns true when the base changed.
  bool add(const std::string& pred, const std::vector<std::string>& args, const Bounds& b) {
    auto& rows = by_pred_[pred];
    for (auto& row : rows) {
      if (row.args == args) {
        const Bounds merged = elementwise_max(row.bounds, b);
        if (merged == row.bounds) return false;
        row.bounds = merged;
        return true;
      }
    }
    rows.push_back(Fact{pred, args, b});
    return true;
  }

  [[nodiscard]] const std::vector<Fact>& rows(const std::string& pred) const {
    static const std::vector<Fact> empty;
    auto it = by_pred_.find(pred);
    return it == by_pred_.end() ? empty : it->second;
  }

 private:
  std::map<std::string, std::vector<Fact>> by_pred_;
};

void ground_from(const Rule& rule, const FactBase& base, std::size_t i,
                 std::map<std::string, std::string>& subst, std::vector<Fact>& matched,
                 std::vector<Grounding>& out) {
  if (i == rule.body.size()) {
    out.push_back(Grounding{subst, matched, propagate_bounds(matched)});
    return;
  }
  const Atom& atom = rule.body[i];
  for (const Fact& f : base.rows(atom.predicate)) {
    if (f.args.size() != atom.terms.size()) continue;
    std::vector<std::string> bound_here;
    bool ok = true;
    for (std::size_t k = 0; k < atom.terms.size() && ok; ++k) {
      const std::string& term = atom.terms[k];
      if (!is_variable(term)) {
        ok = term == f.args[k];
        continue;
      }
      auto it = subst.find(term);
      if (it == subst.end()) {
        subst.emplace(term, f.args[k]);
        bound_here.push_back(term);
      } else {
        ok = it->second == f.args[k];
      }
    }
    if (ok) {
      matched.push_back(f);
      ground_from(rule, base, i + 1, subst, matched, out);
      matched.pop_back();
    }
    for (const auto& v : bound_here) subst.erase(v);
  }
}

std::vector<Grounding> ground_in(const Rule& rule, const FactBase& base) {
  std::vector<Grounding> out;
  std::map<std::string, std::string> subst;
  std::vector<Fact> matched;
  ground_from(rule, base, 0, subst, matched, out);
  return out;
}

std::vector<std::string> head_args(const Atom& head, const std::map<std::string, std::string>& s) {
  std::vector<std::string> args;
  args.reserve(head.terms.size());
  for (const auto& t : head.terms) args.push_back(is_variable(t) ? s.at(t) : t);
  return args;
}

}  // namespace

Bounds propagate_bounds(const std::vector<Fact>& body_facts) {
  if (body_facts.empty()) return {0.0, 0.0};
  double lo = 0.0;
  double hi = 0.0;
  for (const auto& f : body_facts) {
    lo += f.bounds.lower;
    hi += f.bounds.upper;
  }
  const auto n = static_cast<double>(body_facts.size());
  return {lo / n, hi / n};
}

std::vector<Grounding> ground(const Rule& rule, const std::vector<Fact>& facts) {
  FactBase base;
  for (const auto& f : facts) base.add(f.predicate, f.args, f.bounds);
  return ground_in(rule, base);
}

InferenceResult infer(const std::vector<Rule>& rules, const std::vector<Fact>& facts) {
  FactBase base;
  for (const auto& f : facts) base.add(f.predicate, f.args, f.bounds);
  base.add("Vehicle", {std::string(kEgo)}, {1.0, 1.0});

  InferenceResult result;
  std::map<FactKey, GroundHead> derived;
  bool changed = true;
  while (changed && result.passes < kMaxInferencePasses) {
    changed = false;
    ++result.passes;
    result.trace.clear();
    std::map<FactKey, int> support;
    for (std::size_t ri = 0; ri < rules.size(); ++ri) {
      const Rule& rule = rules[ri];
      for (auto& g : ground_in(rule, base)) {
        auto args = head_args(rule.head, g.substitution);
        FactKey key{rule.head.predicate, args};
        ++support[key];
        auto [it, inserted] =
            derived.try_emplace(key, GroundHead{rule.head.predicate, args, g.head_bounds, 0});
        if (!inserted) it->second.bounds = elementwise_max(it->second.bounds, g.head_bounds);
        result.trace.push_back(
            TraceEntry{ri, rule.head.predicate, std::move(args), std::move(g.matched), g.head_bounds});
      }
    }
    for (auto& [key, head] : derived) {
      head.support = support[key];
      if (base.add(key.first, key.second, head.bounds)) changed = true;
    }
  }

  std::vector<std::string> order;
  for (const auto& r : rules) {
    if (std::find(order.begin(), order.end(), r.head.predicate) == order.end()) {
      order.push_back(r.head.predicate);
    }
  }
  for (const auto& name : order) {
    bool fired = false;
    for (const auto& [key, head] : derived) {
      if (key.first == name) {
        result.heads.push_back(head);
        fired = true;
      }
    }
    if (!fired) result.heads.push_back(GroundHead{name, {}, {0.0, 0.0}, 0});
  }
  return result;
}

std::string trace_to_json(const InferenceResult& result) {
  using nlohmann::json;
  json heads = json::array();
  for (const auto& h : result.heads) {
    heads.push_back({{"head", h.predicate},
                     {"args", h.args},
                     {"l", h.bounds.lower},
                     {"u", h.bounds.upper},
                     {"support", h.support}});
  }
  json trace = json::array();
  for (const auto& t : result.trace) {
    json matched = json::array();
    for (const auto& f : t.matched) {
      matched.push_back({{"pred", f.predicate}, {"args", f.args}, {"l", f.bounds.lower},
                         {"u", f.bounds.upper}});
    }
    trace.push_back({{"rule", t.rule_index},
                     {"head", t.head},
                     {"args", t.head_args},
                     {"matched", matched},
                     {"l", t.bounds.lower},
                     {"u", t.bounds.upper}});
  }
  return json{{"passes", result.passes}, {"heads", heads}, {"trace", trace}}.dump(2);
}

RuleConfidences rule_confidences(const std::vector<GroundHead>& heads,
                                 const std::vector<Rule>& rules) {
  RuleConfidences out;
  std::set<std::string> seen;
  for (const auto& r : rules) {
    if (r.tag == RuleTag::None || !seen.insert(r.head.predicate).second) continue;
    Bounds agg{0.0, 0.0};
    for (const auto& h : heads) {
      if (h.predicate == r.head.predicate) agg = elementwise_max(agg, h.bounds);
    }
    RuleConfidence rc{r.head.predicate, agg.midpoint(), r.importance};
    (r.tag == RuleTag::Safety ? out.safety : out.efficiency).push_back(rc);
  }
  return out;
}

}  // namespace vsrsfol

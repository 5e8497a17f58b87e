#pragma once

// Soft first-order logic over interval truth values: a Horn-clause rule
// parser, grounding against uncertain facts, mean propagation of body bounds
// to rule heads and max-aggregation across groundings that share a head.

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vsrsfol/predicates.hpp"

namespace vsrsfol {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line, int column);
  [[nodiscard]] int line() const noexcept { return line_; }
  [[nodiscard]] int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

struct Atom {
  std::string predicate;
  std::vector<std::string> terms;  // uppercase initial = variable

  friend bool operator==(const Atom&, const Atom&) = default;
};

bool is_variable(std::string_view term) noexcept;

enum class RuleTag { None, Safety, Efficiency };

std::string_view to_string(RuleTag tag) noexcept;

struct Rule {
  Atom head;
  std::vector<Atom> body;
  RuleTag tag = RuleTag::None;
  double importance = 1.0;

  friend bool operator==(const Rule&, const Rule&) = default;
};

// Grammar, one rule per clause, clauses may span lines:
//   [@tag(weight=W)] head(Vars) :- atom {, atom} .
// '#' comments run to end of line. Throws ParseError with 1-based line/column.
std::vector<Rule> parse_rules(std::string_view text);

std::string format_rule(const Rule& rule);
std::string format_rules(const std::vector<Rule>& rules);

// The shipped safety/efficiency rule base.
std::string_view default_rules_text() noexcept;
std::vector<Rule> default_rules();

struct Grounding {
  std::map<std::string, std::string> substitution;
  std::vector<Fact> matched;  // one per body atom, in body order
  Bounds head_bounds;         // mean of matched lower / upper bounds
};

// Every substitution under which all body atoms match a fact. Atoms with no
// matching fact are false (negation as failure).
std::vector<Grounding> ground(const Rule& rule, const std::vector<Fact>& facts);

// Mean of body lower bounds and upper bounds.
Bounds propagate_bounds(const std::vector<Fact>& body_facts);

struct GroundHead {
  std::string predicate;
  std::vector<std::string> args;  // empty for heads that never fired
  Bounds bounds;
  int support = 0;  // groundings that produced this head

  [[nodiscard]] double confidence() const noexcept { return bounds.midpoint(); }
};

struct TraceEntry {
  std::size_t rule_index = 0;
  std::string head;
  std::vector<std::string> head_args;
  std::vector<Fact> matched;
  Bounds bounds;
};

struct InferenceResult {
  std::vector<GroundHead> heads;
  std::vector<TraceEntry> trace;
  int passes = 0;
};

inline constexpr int kMaxInferencePasses = 100;

// Forward chaining to fixpoint (bounded). Vehicle(ego) at [1, 1] is always
// asserted. Heads with no grounding are reported once with bounds [0, 0].
InferenceResult infer(const std::vector<Rule>& rules, const std::vector<Fact>& facts);

std::string trace_to_json(const InferenceResult& result);

struct RuleConfidence {
  std::string head;
  double confidence = 0.0;
  double importance = 1.0;
};

struct RuleConfidences {
  std::vector<RuleConfidence> safety;
  std::vector<RuleConfidence> efficiency;
};

// Per tag, distinct head names in rule-file order with their aggregated
// confidence and importance.
RuleConfidences rule_confidences(const std::vector<GroundHead>& heads,
                                 const std::vector<Rule>& rules);

// Rule-set ablation: the partial set of a tag keeps only its first head.
struct RuleVariant {
  bool complete_efficiency = true;
  bool complete_safety = true;

  static RuleVariant parse(std::string_view name);  // ce_cs | ce_ps | pe_cs | pe_ps
  [[nodiscard]] std::string name() const;
};

std::vector<Rule> apply_variant(const std::vector<Rule>& rules, const RuleVariant& variant);

}  // namespace vsrsfol

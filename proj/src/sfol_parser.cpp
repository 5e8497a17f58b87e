#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include "vsrsfol/sfol.hpp"

namespace vsrsfol {

ParseError::ParseError(const std::string& message, int line, int column)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

bool is_variable(std::string_view term) noexcept {
  return !term.empty() && (std::isupper(static_cast<unsigned char>(term[0])) || term[0] == '_');
}

std::string_view to_string(RuleTag tag) noexcept {
  switch (tag) {
    case RuleTag::Safety:
      return "safety";
    case RuleTag::Efficiency:
      return "efficiency";
    case RuleTag::None:
      break;
  }
  return "none";
}

namespace {

enum class Tok { Ident, Number, LParen, RParen, Comma, Implies, Period, At, Equals, End };

struct Token {
  Tok kind;
  std::string text;
  int line;
  int column;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_space_and_comments();
    const int line = line_;
    const int col = col_;
    if (pos_ >= src_.size()) return {Tok::End, "", line, col};
    const char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string text;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        text.push_back(advance());
      }
      return {Tok::Ident, text, line, col};
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+') {
      std::string text;
      text.push_back(advance());
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.' ||
              ((src_[pos_] == '-' || src_[pos_] == '+') &&
               (text.back() == 'e' || text.back() == 'E')))) {
        // A period followed by a non-digit terminates the rule, not the number.
        if (src_[pos_] == '.' &&
            (pos_ + 1 >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
          break;
        }
        text.push_back(advance());
      }
      return {Tok::Number, text, line, col};
    }
    advance();
    switch (c) {
      case '(':
        return {Tok::LParen, "(", line, col};
      case ')':
        return {Tok::RParen, ")", line, col};
      case ',':
        return {Tok::Comma, ",", line, col};
      case '.':
        return {Tok::Period, ".", line, col};
      case '@':
        return {Tok::At, "@", line, col};
      case '=':
        return {Tok::Equals, "=", line, col};
      case ':':
        if (pos_ < src_.size() && src_[pos_] == '-') {
          advance();
          return {Tok::Implies, ":-", line, col};
        }
        break;
      default:
        break;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line, col);
  }

 private:
  char advance() {
    const char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space_and_comments() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lexer_(text) { tok_ = lexer_.next(); }

  std::vector<Rule> parse_all() {
    std::vector<Rule> rules;
    while (tok_.kind != Tok::End) rules.push_back(parse_rule());
    return rules;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, tok_.line, tok_.column); }

  Token expect(Tok kind, const char* what) {
    if (tok_.kind != kind) {
      fail(std::string("expected ") + what +
           (tok_.kind == Tok::End ? " before end of input" : ", found '" + tok_.text + "'"));
    }
    Token t = tok_;
    tok_ = lexer_.next();
    return t;
  }

  void parse_annotation(Rule& rule) {
    expect(Tok::At, "'@'");
    const Token tag = expect(Tok::Ident, "rule tag");
    if (tag.text == "safety") {
      rule.tag = RuleTag::Safety;
    } else if (tag.text == "efficiency") {
      rule.tag = RuleTag::Efficiency;
    } else if (tag.text == "none") {
      rule.tag = RuleTag::None;
    } else {
      throw ParseError("unknown rule tag '" + tag.text + "'", tag.line, tag.column);
    }
    if (tok_.kind != Tok::LParen) return;
    expect(Tok::LParen, "'('");
    const Token key = expect(Tok::Ident, "'weight'");
    if (key.text != "weight") {
      throw ParseError("unknown annotation key '" + key.text + "'", key.line, key.column);
    }
    expect(Tok::Equals, "'='");
    if (tok_.kind != Tok::Number) fail("bad weight '" + tok_.text + "'");
    const Token num = tok_;
    tok_ = lexer_.next();
    double w = 0.0;
    const auto* first = num.text.data();
    const auto* last = first + num.text.size();
    auto [ptr, ec] = std::from_chars(first, last, w);
    if (ec != std::errc() || ptr != last || !std::isfinite(w) || w < 0.0) {
      throw ParseError("bad weight '" + num.text + "'", num.line, num.column);
    }
    rule.importance = w;
    expect(Tok::RParen, "')'");
  }

  Atom parse_atom() {
    const Token name = expect(Tok::Ident, "predicate name");
    Atom atom{name.text, {}};
    expect(Tok::LParen, "'('");
    if (tok_.kind != Tok::RParen) {
      atom.terms.push_back(expect(Tok::Ident, "term").text);
      while (tok_.kind == Tok::Comma) {
        tok_ = lexer_.next();
        atom.terms.push_back(expect(Tok::Ident, "term").text);
      }
    }
    expect(Tok::RParen, "')'");
    check_arity(atom, name);
    return atom;
  }

  void check_arity(const Atom& atom, const Token& at) {
    const auto [it, inserted] = arity_.emplace(atom.predicate, atom.terms.size());
    if (!inserted && it->second != atom.terms.size()) {
      throw ParseError("arity conflict for '" + atom.predicate + "': " +
                           std::to_string(atom.terms.size()) + " vs " + std::to_string(it->second),
                       at.line, at.column);
    }
  }

  Rule parse_rule() {
    Rule rule;
    if (tok_.kind == Tok::At) parse_annotation(rule);
    const Token head_tok = tok_;
    rule.head = parse_atom();
    expect(Tok::Implies, "':-'");
    rule.body.push_back(parse_atom());
    while (tok_.kind == Tok::Comma) {
      tok_ = lexer_.next();
      rule.body.push_back(parse_atom());
    }
    expect(Tok::Period, "',' or '.'");
    std::set<std::string> body_vars;
    for (const auto& a : rule.body) {
      for (const auto& t : a.terms) {
        if (is_variable(t)) body_vars.insert(t);
      }
    }
    for (const auto& t : rule.head.terms) {
      if (is_variable(t) && !body_vars.contains(t)) {
        throw ParseError("head variable '" + t + "' does not appear in the body", head_tok.line,
                         head_tok.column);
      }
    }
    return rule;
  }

  Lexer lexer_;
  Token tok_;
  std::map<std::string, std::size_t> arity_;
};

std::string format_weight(double w) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), w);
  std::string s(buf, ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::string format_atom(const Atom& a) {
  std::string s = a.predicate + "(";
  for (std::size_t i = 0; i < a.terms.size(); ++i) {
    if (i) s += ", ";
    s += a.terms[i];
  }
  return s + ")";
}

}  // namespace

std::vector<Rule> parse_rules(std::string_view text) { return Parser(text).parse_all(); }

std::string format_rule(const Rule& rule) {
  std::string s;
  if (rule.tag != RuleTag::None || rule.importance != 1.0) {
    s += "@" + std::string(to_string(rule.tag)) + "(weight=" + format_weight(rule.importance) +
         ") ";
  }
  s += format_atom(rule.head) + " :- ";
  for (std::size_t i = 0; i < rule.body.size(); ++i) {
    if (i) s += ", ";
    s += format_atom(rule.body[i]);
  }
  return s + ".";
}

std::string format_rules(const std::vector<Rule>& rules) {
  std::string s;
  for (const auto& r : rules) s += format_rule(r) + "\n";
  return s;
}

std::string_view default_rules_text() noexcept {
  return R"(# Safety and efficiency rule base.
# Importance weights: the explicit rule of each component counts fully, the
# subtle ones at 0.75.

@efficiency(weight=1.0)
efficiency1(X) :- Vehicle(X), NoCrosswalk(X), EmptyLane(X).

@efficiency(weight=0.75)
efficiency2(X) :- Vehicle(X), Crosswalk(A), Approaching(X,A), IsClear(A).

@efficiency(weight=0.75)
efficiency3(X) :- Vehicle(X), Crosswalk(A), IsAt(X,A), IsClear(A).

@safety(weight=1.0)
safe1(X) :- Vehicle(X), Pedestrian(P), OnRoad(P), CenterOf(P,X).

@safety(weight=0.75)
safe2(X) :- Vehicle(X), Pedestrian(P), OnCrosswalk(P).

# Disjunction over occlusion directions: one clause per direction.
@safety(weight=0.75)
safe3(X) :- Vehicle(X), Vehicle(Y), Crosswalk(A), RightOf(Y,X), Occludes(Y,A).
@safety(weight=0.75)
safe3(X) :- Vehicle(X), Vehicle(Y), Crosswalk(A), CenterOf(Y,X), Occludes(Y,A).
@safety(weight=0.75)
safe3(X) :- Vehicle(X), Vehicle(Y), Crosswalk(A), LeftOf(Y,X), Occludes(Y,A).
)";
}

std::vector<Rule> default_rules() { return parse_rules(default_rules_text()); }

RuleVariant RuleVariant::parse(std::string_view name) {
  if (name == "ce_cs") return {true, true};
  if (name == "ce_ps") return {true, false};
  if (name == "pe_cs") return {false, true};
  if (name == "pe_ps") return {false, false};
  throw std::invalid_argument("unknown rule variant '" + std::string(name) + "'");
}

std::string RuleVariant::name() const {
  return std::string(complete_efficiency ? "ce" : "pe") + "_" + (complete_safety ? "cs" : "ps");
}

std::vector<Rule> apply_variant(const std::vector<Rule>& rules, const RuleVariant& variant) {
  std::map<RuleTag, std::string> first_head;
  for (const auto& r : rules) first_head.emplace(r.tag, r.head.predicate);
  std::vector<Rule> out;
  for (const auto& r : rules) {
    const bool partial = (r.tag == RuleTag::Efficiency && !variant.complete_efficiency) ||
                         (r.tag == RuleTag::Safety && !variant.complete_safety);
    if (partial && r.head.predicate != first_head[r.tag]) continue;
    out.push_back(r);
  }
  return out;
}

}  // namespace vsrsfol

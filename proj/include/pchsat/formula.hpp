#ifndef PCHSAT_FORMULA_HPP
#define PCHSAT_FORMULA_HPP

// Formulas over probabilistic, interventional and counterfactual terms:
// data model, text parser and printer, fragment classification, primal
// graph, and domain reduction.

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pchsat/common.hpp"

namespace pchsat {

struct DomainSpec {
  std::vector<std::string> values;

  std::size_t size() const { return values.size(); }

  std::optional<ValueId> index_of(std::string_view symbol) const {
    for (std::size_t i = 0; i < values.size(); ++i)
      if (values[i] == symbol) return i;
    return std::nullopt;
  }

  bool operator==(const DomainSpec&) const = default;
};

struct Atom {
  VarId var = 0;
  ValueId value = 0;

  auto operator<=>(const Atom&) const = default;
};

/// Propositional event tree. Disjunction is desugared at construction.
struct PropEvent {
  enum class Kind { atom, negation, conjunction };

  Kind kind = Kind::atom;
  Atom atom;
  std::vector<PropEvent> children;

  static PropEvent make_atom(VarId var, ValueId value) { return PropEvent{Kind::atom, Atom{var, value}, {}}; }
  static PropEvent make_not(PropEvent e) { return PropEvent{Kind::negation, {}, {std::move(e)}}; }
  static PropEvent make_and(PropEvent l, PropEvent r) {
    PropEvent out{Kind::conjunction, {}, {}};
    out.children.push_back(std::move(l));
    out.children.push_back(std::move(r));
    return out;
  }
  static PropEvent make_or(PropEvent l, PropEvent r) {
    return make_not(make_and(make_not(std::move(l)), make_not(std::move(r))));
  }

  bool operator==(const PropEvent&) const = default;
};

/// Intervention atoms sorted by variable, at most one per variable. Empty
/// encodes the trivial intervention.
using Intervention = std::vector<Atom>;

struct PostIntEvent {
  Intervention intervention;
  PropEvent body;

  bool operator==(const PostIntEvent&) const = default;
};

struct CounterfactEvent {
  enum class Kind { leaf, negation, conjunction };

  Kind kind = Kind::leaf;
  PostIntEvent leaf;
  std::vector<CounterfactEvent> children;

  static CounterfactEvent make_leaf(Intervention i, PropEvent body) {
    return CounterfactEvent{Kind::leaf, PostIntEvent{std::move(i), std::move(body)}, {}};
  }
  static CounterfactEvent make_leaf(PropEvent body) { return make_leaf({}, std::move(body)); }
  static CounterfactEvent make_not(CounterfactEvent e) { return CounterfactEvent{Kind::negation, {}, {std::move(e)}}; }
  static CounterfactEvent make_and(CounterfactEvent l, CounterfactEvent r) {
    CounterfactEvent out{Kind::conjunction, {}, {}};
    out.children.push_back(std::move(l));
    out.children.push_back(std::move(r));
    return out;
  }
  static CounterfactEvent make_or(CounterfactEvent l, CounterfactEvent r) {
    return make_not(make_and(make_not(std::move(l)), make_not(std::move(r))));
  }

  bool operator==(const CounterfactEvent&) const = default;
};

struct Term {
  CounterfactEvent event;

  bool operator==(const Term&) const = default;
};

struct Summand {
  Rational coefficient;
  Term term;

  bool operator==(const Summand& o) const { return coefficient == o.coefficient && term == o.term; }
};

struct LinearConstraint {
  std::vector<Summand> lhs;
  Relation relation = Relation::ge;
  Rational rhs;

  bool operator==(const LinearConstraint& o) const {
    return lhs == o.lhs && relation == o.relation && rhs == o.rhs;
  }
};

struct Formula {
  DomainSpec domain;
  std::vector<std::string> variables;
  std::vector<LinearConstraint> constraints;

  std::size_t num_variables() const { return variables.size(); }

  std::optional<VarId> var_index(std::string_view name) const {
    for (std::size_t i = 0; i < variables.size(); ++i)
      if (variables[i] == name) return i;
    return std::nullopt;
  }

  bool operator==(const Formula&) const = default;
};

enum class Depth { prob, causal, counterfact };
enum class Breadth { base, lin };

struct FragmentClass {
  Depth depth = Depth::prob;
  Breadth breadth = Breadth::base;

  bool operator==(const FragmentClass&) const = default;
};

inline const char* to_string(Depth d) {
  switch (d) {
    case Depth::prob: return "prob";
    case Depth::causal: return "causal";
    case Depth::counterfact: return "counterfact";
  }
  return "?";
}

inline const char* to_string(Breadth b) { return b == Breadth::base ? "base" : "lin"; }

// ---------------------------------------------------------------------------
// Traversal and evaluation

template <class Fn>
void for_each_atom(const PropEvent& e, Fn&& fn) {
  if (e.kind == PropEvent::Kind::atom) {
    fn(e.atom);
    return;
  }
  for (const auto& c : e.children) for_each_atom(c, fn);
}

template <class Fn>
void for_each_leaf(const CounterfactEvent& e, Fn&& fn) {
  if (e.kind == CounterfactEvent::Kind::leaf) {
    fn(e.leaf);
    return;
  }
  for (const auto& c : e.children) for_each_leaf(c, fn);
}

/// Visits every atom, including intervention atoms.
template <class Fn>
void for_each_atom(const CounterfactEvent& e, Fn&& fn) {
  for_each_leaf(e, [&](const PostIntEvent& leaf) {
    for (const auto& a : leaf.intervention) fn(a);
    for_each_atom(leaf.body, fn);
  });
}

/// |e|: number of atoms, intervention atoms included.
inline std::size_t term_size(const Term& t) {
  std::size_t n = 0;
  for_each_atom(t.event, [&](const Atom&) { ++n; });
  return n;
}

/// Sorted variable set of a term.
inline std::vector<VarId> term_variables(const Term& t) {
  std::set<VarId> vars;
  for_each_atom(t.event, [&](const Atom& a) { vars.insert(a.var); });
  return {vars.begin(), vars.end()};
}

/// `value_of(var)` yields the value id of an endogenous variable.
template <class ValueOf>
bool evaluate(const PropEvent& e, ValueOf&& value_of) {
  switch (e.kind) {
    case PropEvent::Kind::atom: return value_of(e.atom.var) == e.atom.value;
    case PropEvent::Kind::negation: return !evaluate(e.children[0], value_of);
    case PropEvent::Kind::conjunction:
      return evaluate(e.children[0], value_of) && evaluate(e.children[1], value_of);
  }
  return false;
}

/// `leaf_holds(post_int_event)` decides each leaf; the tree is combined here.
template <class LeafHolds>
bool evaluate(const CounterfactEvent& e, LeafHolds&& leaf_holds) {
  switch (e.kind) {
    case CounterfactEvent::Kind::leaf: return leaf_holds(e.leaf);
    case CounterfactEvent::Kind::negation: return !evaluate(e.children[0], leaf_holds);
    case CounterfactEvent::Kind::conjunction:
      return evaluate(e.children[0], leaf_holds) && evaluate(e.children[1], leaf_holds);
  }
  return false;
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

struct Token {
  enum class Kind { ident, number, punct, end };
  Kind kind = Kind::end;
  std::string text;
  std::size_t line = 1;
  std::size_t column = 1;
};

inline std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t line = 1, col = 1, i = 0;
  auto advance = [&](std::size_t k) {
    for (std::size_t j = 0; j < k; ++j) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.column = col;
    std::size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.kind = Token::Kind::ident;
      t.text = std::string(src.substr(start, j - start));
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j < src.size() && src[j] == '.') {
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      t.kind = Token::Kind::number;
      t.text = std::string(src.substr(start, j - start));
      advance(j - i);
    } else {
      std::string two = i + 1 < src.size() ? std::string(src.substr(i, 2)) : std::string();
      if (two == "<=" || two == ">=") {
        t.text = two;
      } else if (std::string_view("[](){},;=+-*/!&|<>").find(c) != std::string_view::npos) {
        t.text = std::string(1, c);
      } else {
        throw ParseError(std::string("unexpected character '") + c + "'", line, col);
      }
      t.kind = Token::Kind::punct;
      advance(t.text.size());
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Token::Kind::end;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(tokenize(src)) {}

  Formula parse() {
    Formula f;
    bool have_domain = false, have_vars = false, seen_constraint = false;
    while (peek().kind != Token::Kind::end) {
      const Token& t = peek();
      if (t.kind == Token::Kind::ident && t.text == "domain" && peek(1).text == "{") {
        if (have_domain) fail("domain declared twice", t);
        if (seen_constraint) fail("domain must be declared before constraints", t);
        next();
        expect("{");
        do {
          const Token& v = next();
          if (v.kind != Token::Kind::ident && v.kind != Token::Kind::number) fail("expected domain value", v);
          if (v.kind == Token::Kind::number && v.text.find('.') != std::string::npos)
            fail("domain values must be identifiers or integers", v);
          if (f.domain.index_of(v.text)) fail("duplicate domain value '" + v.text + "'", v);
          f.domain.values.push_back(v.text);
        } while (accept(","));
        expect("}");
        expect(";");
        have_domain = true;
      } else if (t.kind == Token::Kind::ident && t.text == "vars" && peek(1).kind == Token::Kind::ident) {
        if (have_vars) fail("vars declared twice", t);
        if (seen_constraint) fail("vars must be declared before constraints", t);
        next();
        do {
          const Token& v = next();
          if (v.kind != Token::Kind::ident) fail("expected variable name", v);
          if (f.var_index(v.text)) fail("duplicate variable '" + v.text + "'", v);
          f.variables.push_back(v.text);
        } while (accept(","));
        expect(";");
        have_vars = true;
      } else {
        if (!have_domain) {
          f.domain.values = {"0", "1"};
          have_domain = true;
        }
        formula_ = &f;
        f.constraints.push_back(constraint());
        expect(";");
        seen_constraint = true;
      }
    }
    if (!have_domain) f.domain.values = {"0", "1"};
    return f;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Formula* formula_ = nullptr;
  std::optional<ParseError> furthest_;
  std::size_t furthest_pos_ = 0;

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool at(std::string_view p) const { return peek().kind == Token::Kind::punct && peek().text == p; }
  bool accept(std::string_view p) {
    if (!at(p)) return false;
    next();
    return true;
  }

  [[noreturn]] void fail(const std::string& msg, const Token& t) {
    ParseError e(msg, t.line, t.column);
    // Report the failure that got furthest into the input when alternatives
    // are backtracked.
    std::size_t here = static_cast<std::size_t>(&t - toks_.data());
    if (!furthest_ || here >= furthest_pos_) {
      furthest_ = e;
      furthest_pos_ = here;
    }
    throw e;
  }

  void expect(std::string_view p) {
    if (!accept(p)) {
      const Token& t = peek();
      fail("expected '" + std::string(p) + "' but found " + describe(t), t);
    }
  }

  static std::string describe(const Token& t) {
    if (t.kind == Token::Kind::end) return "end of input";
    return "'" + t.text + "'";
  }

  Rational rational() {
    const Token& t = next();
    if (t.kind != Token::Kind::number) fail("expected number but found " + describe(t), t);
    std::string text = t.text;
    if (at("/")) {
      next();
      const Token& d = next();
      if (d.kind != Token::Kind::number || d.text.find('.') != std::string::npos)
        fail("expected integer denominator", d);
      if (text.find('.') != std::string::npos) fail("decimal numerator in fraction", t);
      text += "/" + d.text;
    }
    try {
      return parse_rational(text);
    } catch (const ValidationError& e) {
      fail(e.what(), t);
    }
  }

  LinearConstraint constraint() {
    LinearConstraint c;
    bool first = true;
    for (;;) {
      Rational sign = 1;
      if (first) {
        if (accept("-")) sign = -1;
        else accept("+");
      } else if (accept("-")) {
        sign = -1;
      } else if (!accept("+")) {
        break;
      }
      Rational coef = 1;
      if (peek().kind == Token::Kind::number) {
        coef = rational();
        accept("*");
      }
      const Token& p = peek();
      if (!(p.kind == Token::Kind::ident && p.text == "P")) fail("expected probability term 'P[...]' but found " + describe(p), p);
      next();
      expect("[");
      Summand s{sign * coef, Term{cevent_or()}};
      expect("]");
      c.lhs.push_back(std::move(s));
      first = false;
    }
    const Token& rel = peek();
    if (at("<=")) c.relation = Relation::le;
    else if (at(">=")) c.relation = Relation::ge;
    else if (at("=")) c.relation = Relation::eq;
    else if (at("<") || at(">")) fail("strict inequalities are not supported", rel);
    else fail("expected relation (<=, >=, =) but found " + describe(rel), rel);
    next();
    Rational sign = 1;
    if (accept("-")) sign = -1;
    else accept("+");
    c.rhs = sign * rational();
    return c;
  }

  Atom atom() {
    const Token& v = next();
    if (v.kind != Token::Kind::ident) fail("expected variable but found " + describe(v), v);
    auto var = formula_->var_index(v.text);
    if (!var) fail("undeclared variable '" + v.text + "'", v);
    expect("=");
    const Token& val = next();
    if (val.kind != Token::Kind::ident && val.kind != Token::Kind::number) fail("expected domain value but found " + describe(val), val);
    auto value = formula_->domain.index_of(val.text);
    if (!value) fail("undeclared domain value '" + val.text + "'", val);
    return Atom{*var, *value};
  }

  PropEvent pevent_unary() {
    if (accept("!")) return PropEvent::make_not(pevent_unary());
    if (accept("(")) {
      PropEvent e = pevent_or();
      expect(")");
      return e;
    }
    Atom a = atom();
    return PropEvent::make_atom(a.var, a.value);
  }

  PropEvent pevent_and() {
    PropEvent e = pevent_unary();
    while (at("&")) {
      std::size_t save = pos_;
      next();
      try {
        e = PropEvent::make_and(std::move(e), pevent_unary());
      } catch (const ParseError&) {
        pos_ = save;
        break;
      }
    }
    return e;
  }

  PropEvent pevent_or() {
    PropEvent e = pevent_and();
    while (at("|")) {
      std::size_t save = pos_;
      next();
      try {
        e = PropEvent::make_or(std::move(e), pevent_and());
      } catch (const ParseError&) {
        pos_ = save;
        break;
      }
    }
    return e;
  }

  Intervention intervention() {
    std::map<VarId, ValueId> assigned;
    if (!at("]")) {
      do {
        const Token& t = peek();
        Atom a = atom();
        auto [it, inserted] = assigned.emplace(a.var, a.value);
        if (!inserted && it->second != a.value)
          fail("conflicting intervention on '" + formula_->variables[a.var] + "'", t);
      } while (accept(",") || accept("&"));
    }
    expect("]");
    Intervention out;
    for (auto [var, value] : assigned) out.push_back(Atom{var, value});
    return out;
  }

  CounterfactEvent cevent_unary() {
    if (accept("[")) {
      Intervention i = intervention();
      return CounterfactEvent::make_leaf(std::move(i), pevent_or());
    }
    std::size_t save = pos_;
    try {
      return CounterfactEvent::make_leaf(pevent_or());
    } catch (const ParseError&) {
      pos_ = save;
    }
    if (accept("!")) return CounterfactEvent::make_not(cevent_unary());
    if (accept("(")) {
      CounterfactEvent e = cevent_or();
      expect(")");
      return e;
    }
    if (furthest_) throw *furthest_;
    fail("expected event but found " + describe(peek()), peek());
  }

  CounterfactEvent cevent_and() {
    CounterfactEvent e = cevent_unary();
    while (accept("&")) e = CounterfactEvent::make_and(std::move(e), cevent_unary());
    return e;
  }

  CounterfactEvent cevent_or() {
    CounterfactEvent e = cevent_and();
    while (accept("|")) e = CounterfactEvent::make_or(std::move(e), cevent_and());
    return e;
  }
};

}  // namespace detail

/// Parses the formula text format. Throws ParseError with line and column on
/// syntax errors, undeclared variables or values, and conflicting
/// intervention atoms.
inline Formula parse(std::string_view text) { return detail::Parser(text).parse(); }

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline std::string print_atom(const Formula& f, const Atom& a) {
  return f.variables.at(a.var) + "=" + f.domain.values.at(a.value);
}

inline std::string print_pevent(const Formula& f, const PropEvent& e);

inline std::string print_poperand(const Formula& f, const PropEvent& e) {
  if (e.kind == PropEvent::Kind::conjunction) return "(" + print_pevent(f, e) + ")";
  return print_pevent(f, e);
}

inline std::string print_pevent(const Formula& f, const PropEvent& e) {
  switch (e.kind) {
    case PropEvent::Kind::atom: return print_atom(f, e.atom);
    case PropEvent::Kind::negation: return "!" + print_poperand(f, e.children[0]);
    case PropEvent::Kind::conjunction:
      return print_poperand(f, e.children[0]) + " & " + print_poperand(f, e.children[1]);
  }
  return {};
}

inline std::string print_cevent(const Formula& f, const CounterfactEvent& e, bool top) {
  switch (e.kind) {
    case CounterfactEvent::Kind::leaf: {
      if (top && e.leaf.intervention.empty()) return print_pevent(f, e.leaf.body);
      std::string out = "[";
      for (std::size_t i = 0; i < e.leaf.intervention.size(); ++i) {
        if (i) out += ", ";
        out += print_atom(f, e.leaf.intervention[i]);
      }
      return out + "] " + print_poperand(f, e.leaf.body);
    }
    case CounterfactEvent::Kind::negation: return "!(" + print_cevent(f, e.children[0], false) + ")";
    case CounterfactEvent::Kind::conjunction:
      return "(" + print_cevent(f, e.children[0], false) + ") & (" + print_cevent(f, e.children[1], false) + ")";
  }
  return {};
}

}  // namespace detail

inline std::string to_text(const Formula& f, const Term& t) {
  return "P[" + detail::print_cevent(f, t.event, true) + "]";
}

inline std::string to_text(const Formula& f, const LinearConstraint& c) {
  std::string out;
  for (std::size_t i = 0; i < c.lhs.size(); ++i) {
    const Rational& q = c.lhs[i].coefficient;
    Rational mag = abs(q);
    if (i == 0) {
      if (sgn(q) < 0) out += "-";
    } else {
      out += sgn(q) < 0 ? " - " : " + ";
    }
    if (mag != 1) out += to_string(mag) + " ";
    out += to_text(f, c.lhs[i].term);
  }
  out += " ";
  out += to_string(c.relation);
  out += " " + to_string(c.rhs);
  return out;
}

/// Pretty-prints in the text format; `parse(to_text(f)) == f`.
inline std::string to_text(const Formula& f) {
  std::ostringstream os;
  os << "domain {";
  for (std::size_t i = 0; i < f.domain.size(); ++i) os << (i ? ", " : "") << f.domain.values[i];
  os << "};\n";
  if (!f.variables.empty()) {
    os << "vars ";
    for (std::size_t i = 0; i < f.variables.size(); ++i) os << (i ? ", " : "") << f.variables[i];
    os << ";\n";
  }
  for (const auto& c : f.constraints) os << to_text(f, c) << ";\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Validation and classification

inline void validate(const Formula& f) {
  if (f.domain.values.empty()) throw ValidationError("domain must be nonempty");
  for (std::size_t i = 0; i < f.domain.size(); ++i)
    for (std::size_t j = i + 1; j < f.domain.size(); ++j)
      if (f.domain.values[i] == f.domain.values[j]) throw ValidationError("duplicate domain value '" + f.domain.values[i] + "'");
  for (std::size_t i = 0; i < f.variables.size(); ++i)
    for (std::size_t j = i + 1; j < f.variables.size(); ++j)
      if (f.variables[i] == f.variables[j]) throw ValidationError("duplicate variable '" + f.variables[i] + "'");
  auto check_atom = [&](const Atom& a) {
    if (a.var >= f.variables.size()) throw ValidationError("atom references undeclared variable");
    if (a.value >= f.domain.size()) throw ValidationError("atom references undeclared domain value");
  };
  for (const auto& c : f.constraints) {
    if (c.lhs.empty()) throw ValidationError("constraint without terms");
    for (const auto& s : c.lhs) {
      for_each_leaf(s.term.event, [&](const PostIntEvent& leaf) {
        for (std::size_t i = 0; i < leaf.intervention.size(); ++i) {
          check_atom(leaf.intervention[i]);
          if (i > 0 && leaf.intervention[i - 1].var >= leaf.intervention[i].var) {
            if (leaf.intervention[i - 1].var == leaf.intervention[i].var)
              throw ValidationError("conflicting intervention on '" + f.variables[leaf.intervention[i].var] + "'");
            throw ValidationError("intervention atoms must be sorted by variable");
          }
        }
        for_each_atom(leaf.body, check_atom);
      });
    }
  }
}

/// Validates `f` and returns the least fragment containing it.
inline FragmentClass validate_and_classify(const Formula& f) {
  validate(f);
  FragmentClass fc;
  bool any_intervention = false, all_single_leaf = true;
  bool base = true;
  for (const auto& c : f.constraints) {
    for (const auto& s : c.lhs) {
      std::size_t leaves = 0;
      for_each_leaf(s.term.event, [&](const PostIntEvent& leaf) {
        ++leaves;
        if (!leaf.intervention.empty()) any_intervention = true;
      });
      if (leaves > 1) all_single_leaf = false;
    }
    bool unit_vs_const = c.lhs.size() == 1 && c.lhs[0].coefficient == 1;
    bool unit_vs_unit = c.lhs.size() == 2 && c.rhs == 0 &&
                        ((c.lhs[0].coefficient == 1 && c.lhs[1].coefficient == -1) ||
                         (c.lhs[0].coefficient == -1 && c.lhs[1].coefficient == 1));
    if (!unit_vs_const && !unit_vs_unit) base = false;
  }
  if (!any_intervention) fc.depth = Depth::prob;
  else fc.depth = all_single_leaf ? Depth::causal : Depth::counterfact;
  fc.breadth = base ? Breadth::base : Breadth::lin;
  return fc;
}

// ---------------------------------------------------------------------------
// Primal graph

struct PrimalGraph {
  std::size_t num_vertices = 0;
  std::vector<std::pair<VarId, VarId>> edges;  // u < v, sorted

  std::vector<std::vector<VarId>> adjacency() const {
    std::vector<std::vector<VarId>> adj(num_vertices);
    for (auto [u, v] : edges) {
      adj[u].push_back(v);
      adj[v].push_back(u);
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());
    return adj;
  }

  bool has_edge(VarId u, VarId v) const {
    if (u > v) std::swap(u, v);
    return std::binary_search(edges.begin(), edges.end(), std::make_pair(u, v));
  }

  bool operator==(const PrimalGraph&) const = default;
};

inline PrimalGraph build_primal_graph(const Formula& f) {
  std::set<std::pair<VarId, VarId>> edges;
  for (const auto& c : f.constraints)
    for (const auto& s : c.lhs) {
      auto vars = term_variables(s.term);
      for (std::size_t i = 0; i < vars.size(); ++i)
        for (std::size_t j = i + 1; j < vars.size(); ++j) edges.emplace(vars[i], vars[j]);
    }
  return PrimalGraph{f.variables.size(), {edges.begin(), edges.end()}};
}

// ---------------------------------------------------------------------------
// Vocabulary changes

namespace detail {

template <class MapAtom>
PropEvent map_atoms(const PropEvent& e, const MapAtom& m) {
  PropEvent out = e;
  if (e.kind == PropEvent::Kind::atom) {
    out.atom = m(e.atom);
    return out;
  }
  for (auto& c : out.children) c = map_atoms(c, m);
  return out;
}

template <class MapAtom>
CounterfactEvent map_atoms(const CounterfactEvent& e, const MapAtom& m) {
  CounterfactEvent out = e;
  if (e.kind == CounterfactEvent::Kind::leaf) {
    for (auto& a : out.leaf.intervention) a = m(a);
    std::sort(out.leaf.intervention.begin(), out.leaf.intervention.end());
    out.leaf.body = map_atoms(e.leaf.body, m);
    return out;
  }
  for (auto& c : out.children) c = map_atoms(c, m);
  return out;
}

template <class MapAtom>
Formula map_atoms(const Formula& f, DomainSpec domain, std::vector<std::string> variables, const MapAtom& m) {
  Formula out{std::move(domain), std::move(variables), f.constraints};
  for (auto& c : out.constraints)
    for (auto& s : c.lhs) s.term.event = map_atoms(s.term.event, m);
  return out;
}

}  // namespace detail

/// Domain values mentioned in at least one atom, in domain order.
inline std::vector<ValueId> mentioned_values(const Formula& f) {
  std::vector<bool> seen(f.domain.size(), false);
  for (const auto& c : f.constraints)
    for (const auto& s : c.lhs) for_each_atom(s.term.event, [&](const Atom& a) { seen[a.value] = true; });
  std::vector<ValueId> out;
  for (ValueId v = 0; v < seen.size(); ++v)
    if (seen[v]) out.push_back(v);
  return out;
}

/// Restricts the domain to the mentioned values plus one fresh value. The
/// fresh value is the first unmentioned domain value when one exists (so the
/// reduced domain is a subset of the original), otherwise a new symbol.
inline Formula reduce_domain(const Formula& f) {
  auto mentioned = mentioned_values(f);
  std::vector<bool> keep(f.domain.size(), false);
  for (ValueId v : mentioned) keep[v] = true;
  bool fresh_from_domain = false;
  for (ValueId v = 0; v < keep.size(); ++v)
    if (!keep[v]) {
      keep[v] = true;
      fresh_from_domain = true;
      break;
    }
  DomainSpec reduced;
  std::vector<ValueId> remap(f.domain.size(), 0);
  for (ValueId v = 0; v < keep.size(); ++v)
    if (keep[v]) {
      remap[v] = reduced.values.size();
      reduced.values.push_back(f.domain.values[v]);
    }
  if (!fresh_from_domain) {
    std::string fresh = "_gamma";
    for (int k = 1; f.domain.index_of(fresh); ++k) fresh = "_gamma" + std::to_string(k);
    reduced.values.push_back(fresh);
  }
  return detail::map_atoms(f, std::move(reduced), f.variables,
                           [&](const Atom& a) { return Atom{a.var, remap[a.value]}; });
}

/// Re-expresses `f` over another vocabulary, matching variables by name and
/// values by symbol. Throws ValidationError if a name or symbol is missing.
inline Formula rebind(const Formula& f, const std::vector<std::string>& variables, const DomainSpec& domain) {
  if (f.variables == variables && f.domain == domain) return f;
  std::vector<VarId> var_map(f.variables.size());
  for (VarId v = 0; v < f.variables.size(); ++v) {
    auto it = std::find(variables.begin(), variables.end(), f.variables[v]);
    if (it == variables.end()) throw ValidationError("variable '" + f.variables[v] + "' missing from target vocabulary");
    var_map[v] = static_cast<VarId>(it - variables.begin());
  }
  std::vector<std::optional<ValueId>> value_map(f.domain.size());
  for (ValueId v = 0; v < f.domain.size(); ++v) value_map[v] = domain.index_of(f.domain.values[v]);
  return detail::map_atoms(f, domain, variables, [&](const Atom& a) {
    if (!value_map[a.value]) throw ValidationError("value '" + f.domain.values[a.value] + "' missing from target domain");
    return Atom{var_map[a.var], *value_map[a.value]};
  });
}

}  // namespace pchsat

#endif  // PCHSAT_FORMULA_HPP

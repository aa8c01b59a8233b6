#ifndef PCHSAT_REDUCTIONS_HPP
#define PCHSAT_REDUCTIONS_HPP

// Instance generators for the hardness reductions: 3-SAT to single-term
// probabilistic constraints, multicolored clique to probabilistic
// constraints over a vertex domain, and 3-SAT to interventional linear
// constraints over variable pairs.

#include <algorithm>
#include <array>
#include <cstdlib>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pchsat/common.hpp"
#include "pchsat/formula.hpp"

namespace pchsat {

/// Literals are nonzero integers: +i is x_i, -i its negation (1-based).
struct CnfInstance {
  std::size_t num_vars = 0;
  std::vector<std::array<int, 3>> clauses;

  bool operator==(const CnfInstance&) const = default;
};

/// DIMACS CNF. Clauses with fewer than three literals are padded by
/// repeating their last literal; longer clauses are rejected.
inline CnfInstance parse_dimacs(const std::string& text) {
  CnfInstance cnf;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::vector<int> current;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok) || tok == "c" || tok[0] == '%') continue;
    if (tok == "p") {
      std::string fmt;
      std::size_t nclauses = 0;
      if (!(ls >> fmt >> cnf.num_vars >> nclauses) || fmt != "cnf") throw ParseError("malformed problem line", lineno, 1);
      header = true;
      continue;
    }
    if (!header) throw ParseError("clause before problem line", lineno, 1);
    for (std::istringstream rest(line); rest >> tok;) {
      char* end = nullptr;
      long lit = std::strtol(tok.c_str(), &end, 10);
      if (*end != '\0') throw ParseError("bad literal '" + tok + "'", lineno, 1);
      if (lit == 0) {
        if (current.empty()) throw ValidationError("empty clause");
        if (current.size() > 3) throw ValidationError("clause with more than three literals");
        while (current.size() < 3) current.push_back(current.back());
        cnf.clauses.push_back({current[0], current[1], current[2]});
        current.clear();
        continue;
      }
      if (static_cast<std::size_t>(std::labs(lit)) > cnf.num_vars) throw ParseError("literal out of range", lineno, 1);
      current.push_back(static_cast<int>(lit));
    }
  }
  if (!current.empty()) throw ParseError("unterminated clause", lineno, 1);
  return cnf;
}

inline std::string to_dimacs(const CnfInstance& cnf) {
  std::ostringstream os;
  os << "p cnf " << cnf.num_vars << " " << cnf.clauses.size() << "\n";
  for (const auto& c : cnf.clauses) os << c[0] << " " << c[1] << " " << c[2] << " 0\n";
  return os.str();
}

/// Whether every variable occurs exactly twice positively and twice
/// negatively, the precondition under which the 3-SAT image has primal
/// degree at most 8.
inline bool has_balanced_occurrences(const CnfInstance& cnf) {
  std::vector<int> pos(cnf.num_vars + 1, 0), neg(cnf.num_vars + 1, 0);
  for (const auto& c : cnf.clauses)
    for (int lit : c) (lit > 0 ? pos : neg)[static_cast<std::size_t>(std::abs(lit))]++;
  for (std::size_t v = 1; v <= cnf.num_vars; ++v)
    if (pos[v] != 2 || neg[v] != 2) return false;
  return true;
}

/// One constraint P[g(l1) | g(l2) | g(l3)] = 1 per clause over D = {0, 1},
/// with g(x) = (V_x = 1) and g(!x) = (V_x = 0).
inline Formula gen_threesat_probbase(const CnfInstance& cnf) {
  Formula f;
  f.domain.values = {"0", "1"};
  for (std::size_t v = 1; v <= cnf.num_vars; ++v) f.variables.push_back("V" + std::to_string(v));
  auto g = [](int lit) { return PropEvent::make_atom(static_cast<VarId>(std::abs(lit) - 1), lit > 0 ? 1 : 0); };
  for (const auto& c : cnf.clauses) {
    PropEvent e = PropEvent::make_or(PropEvent::make_or(g(c[0]), g(c[1])), g(c[2]));
    f.constraints.push_back(LinearConstraint{{Summand{1, Term{CounterfactEvent::make_leaf(std::move(e))}}}, Relation::eq, 1});
  }
  return f;
}

/// For each cnf variable x_i, variables V_i and Vbar_i with
/// P[[V_i=1] Vbar_i=1] = 0 and P[[Vbar_i=1] V_i=1] = 0; each clause becomes
/// P[L1=1] + P[L2=1] + P[L3=1] >= 1 with L = V_i for x_i and Vbar_i for !x_i.
inline Formula gen_threesat_causal(const CnfInstance& cnf) {
  Formula f;
  f.domain.values = {"0", "1"};
  for (std::size_t v = 1; v <= cnf.num_vars; ++v) {
    f.variables.push_back("V" + std::to_string(v));
    f.variables.push_back("Vbar" + std::to_string(v));
  }
  auto unit = [](CounterfactEvent e) { return Summand{1, Term{std::move(e)}}; };
  for (VarId i = 0; i < cnf.num_vars; ++i) {
    VarId pos = 2 * i, neg = 2 * i + 1;
    f.constraints.push_back(LinearConstraint{
        {unit(CounterfactEvent::make_leaf({Atom{pos, 1}}, PropEvent::make_atom(neg, 1)))}, Relation::eq, 0});
    f.constraints.push_back(LinearConstraint{
        {unit(CounterfactEvent::make_leaf({Atom{neg, 1}}, PropEvent::make_atom(pos, 1)))}, Relation::eq, 0});
  }
  for (const auto& c : cnf.clauses) {
    LinearConstraint lc;
    for (int lit : c) {
      VarId base = 2 * static_cast<VarId>(std::abs(lit) - 1);
      lc.lhs.push_back(unit(CounterfactEvent::make_leaf(PropEvent::make_atom(lit > 0 ? base : base + 1, 1))));
    }
    lc.relation = Relation::ge;
    lc.rhs = 1;
    f.constraints.push_back(std::move(lc));
  }
  return f;
}

/// Vertices 0..r-1 with colors 1..k.
struct ColoredGraph {
  std::vector<std::size_t> color;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // a < b

  std::size_t num_vertices() const { return color.size(); }

  bool adjacent(std::size_t a, std::size_t b) const {
    if (a > b) std::swap(a, b);
    for (auto e : edges)
      if (e.first == a && e.second == b) return true;
    return false;
  }

  /// Throws ValidationError unless colors are 1..k and adjacent vertices differ.
  void validate(std::size_t k) const {
    for (std::size_t c : color)
      if (c < 1 || c > k) throw ValidationError("vertex color outside 1.." + std::to_string(k));
    for (auto [a, b] : edges) {
      if (a >= color.size() || b >= color.size() || a == b) throw ValidationError("bad edge");
      if (color[a] == color[b]) throw ValidationError("coloring is not proper");
    }
  }
};

/// Text format: `v <id> <color>` and `e <id> <id>` lines with 1-based ids;
/// `#` or `c` lines are comments.
inline ColoredGraph parse_colored_graph(const std::string& text) {
  std::map<std::size_t, std::size_t> colors;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#' || tag == "c") continue;
    std::size_t a = 0, b = 0;
    if (!(ls >> a >> b) || a == 0) throw ParseError("expected two numbers", lineno, 1);
    if (tag == "v") {
      if (!colors.emplace(a, b).second) throw ParseError("vertex declared twice", lineno, 1);
    } else if (tag == "e") {
      if (b == 0) throw ParseError("vertex ids are 1-based", lineno, 1);
      edges.emplace_back(std::min(a, b) - 1, std::max(a, b) - 1);
    } else {
      throw ParseError("unknown line tag '" + tag + "'", lineno, 1);
    }
  }
  ColoredGraph g;
  std::size_t expect = 1;
  for (auto [id, c] : colors) {
    if (id != expect++) throw ValidationError("vertex ids must be 1..r without gaps");
    g.color.push_back(c);
  }
  for (auto [a, b] : edges)
    if (b >= g.color.size()) throw ValidationError("edge references undeclared vertex");
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  g.edges = std::move(edges);
  return g;
}

/// Variables V_1..V_k over D = {v1..vr}: P[V_i = v_a] <= 0 unless v_a has
/// color i, and P[V_i = v_a & V_j = v_b] <= 0 for each non-adjacent pair
/// a < b with colors i and j.
inline Formula gen_clique_probbase(const ColoredGraph& g, std::size_t k) {
  g.validate(k);
  if (g.num_vertices() == 0) throw ValidationError("graph has no vertices");
  Formula f;
  for (std::size_t a = 0; a < g.num_vertices(); ++a) f.domain.values.push_back("v" + std::to_string(a + 1));
  for (std::size_t i = 1; i <= k; ++i) f.variables.push_back("V" + std::to_string(i));
  auto zero = [](PropEvent e) {
    return LinearConstraint{{Summand{1, Term{CounterfactEvent::make_leaf(std::move(e))}}}, Relation::le, 0};
  };
  for (std::size_t i = 1; i <= k; ++i)
    for (std::size_t a = 0; a < g.num_vertices(); ++a)
      if (g.color[a] != i) f.constraints.push_back(zero(PropEvent::make_atom(i - 1, a)));
  for (std::size_t a = 0; a < g.num_vertices(); ++a)
    for (std::size_t b = a + 1; b < g.num_vertices(); ++b)
      if (!g.adjacent(a, b))
        f.constraints.push_back(zero(PropEvent::make_and(PropEvent::make_atom(g.color[a] - 1, a),
                                                         PropEvent::make_atom(g.color[b] - 1, b))));
  return f;
}

}  // namespace pchsat

#endif  // PCHSAT_REDUCTIONS_HPP

#ifndef PCHSAT_CF_SOLVER_HPP
#define PCHSAT_CF_SOLVER_HPP

// Counterfactual and interventional linear formulas: for each ordering of the
// variables, an LP over tuples of functions q = (q_1, ..., q_n) where q_i maps
// the values of the i-1 earlier variables to a value of the i-th.

#include <gmpxx.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <future>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "pchsat/common.hpp"
#include "pchsat/formula.hpp"
#include "pchsat/lpcore.hpp"
#include "pchsat/scm.hpp"

namespace pchsat {

inline constexpr std::uint64_t kDefaultFunctionSpaceCap = 1'000'000;

/// Q_1 x ... x Q_n for one ordering. Q_i holds all maps D^(i-1) -> D; a map
/// is its truth table over the inputs in mixed radix (earliest variable most
/// significant), and its index in Q_i reads that table as a base-d number
/// with the first entry most significant. Tuples are mixed-radix integers
/// with q_1 most significant.
struct FunctionSpace {
  std::size_t domain_size = 0;
  std::vector<VarId> ordering;  // ordering[i] is the variable at position i
  std::vector<std::uint64_t> sizes;           // |Q_i|
  std::vector<std::size_t> table_lengths;     // d^(i-1)
  std::uint64_t total = 1;

  std::size_t num_positions() const { return ordering.size(); }

  std::vector<std::uint64_t> decode(std::uint64_t index) const {
    std::vector<std::uint64_t> q(sizes.size());
    for (std::size_t i = sizes.size(); i-- > 0;) {
      q[i] = index % sizes[i];
      index /= sizes[i];
    }
    return q;
  }

  std::uint64_t encode(const std::vector<std::uint64_t>& q) const {
    std::uint64_t index = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) index = index * sizes[i] + q[i];
    return index;
  }

  /// Entry r of the truth table of function k in Q_i.
  ValueId apply(std::size_t i, std::uint64_t k, std::size_t r) const {
    for (std::size_t s = table_lengths[i] - 1; s > r; --s) k /= domain_size;
    return static_cast<ValueId>(k % domain_size);
  }

  std::vector<ValueId> table(std::size_t i, std::uint64_t k) const {
    std::vector<ValueId> t(table_lengths[i]);
    for (std::size_t r = t.size(); r-- > 0;) {
      t[r] = static_cast<ValueId>(k % domain_size);
      k /= domain_size;
    }
    return t;
  }

  std::uint64_t function_index(const std::vector<ValueId>& t) const {
    std::uint64_t k = 0;
    for (ValueId v : t) k = k * domain_size + v;
    return k;
  }

  /// Endogenous values (by VarId) when U = q, under `intervention`.
  std::vector<ValueId> evaluate(const std::vector<std::uint64_t>& q, const Intervention& intervention) const {
    std::vector<ValueId> values(ordering.size(), 0);
    std::vector<bool> forced(ordering.size(), false);
    for (const Atom& a : intervention) {
      values[a.var] = a.value;
      forced[a.var] = true;
    }
    for (std::size_t i = 0; i < ordering.size(); ++i) {
      VarId v = ordering[i];
      if (forced[v]) continue;
      std::size_t r = 0;
      for (std::size_t j = 0; j < i; ++j) r = r * domain_size + values[ordering[j]];
      values[v] = apply(i, q[i], r);
    }
    return values;
  }

  bool holds(const std::vector<std::uint64_t>& q, const CounterfactEvent& e) const {
    return pchsat::evaluate(e, [&](const PostIntEvent& leaf) {
      auto values = evaluate(q, leaf.intervention);
      return pchsat::evaluate(leaf.body, [&](VarId v) { return values[v]; });
    });
  }
};

/// Throws FunctionSpaceTooLarge, with the exact product, when it exceeds `cap`.
inline FunctionSpace enumerate_function_space(const Formula& f, const std::vector<VarId>& ordering,
                                              std::uint64_t cap = kDefaultFunctionSpaceCap) {
  const std::size_t n = f.num_variables(), d = f.domain.size();
  if (ordering.size() != n) throw ValidationError("ordering must list every variable once");
  std::vector<bool> seen(n, false);
  for (VarId v : ordering) {
    if (v >= n || seen[v]) throw ValidationError("ordering is not a permutation");
    seen[v] = true;
  }
  // Exponent of d in the product is 1 + d + ... + d^(n-1).
  mpz_class exponent = 0, power = 1;
  for (std::size_t i = 0; i < n; ++i) {
    exponent += power;
    power *= static_cast<unsigned long>(d);
  }
  mpz_class total = 1;
  if (d > 1) {
    if (exponent > 1'000'000)
      throw FunctionSpaceTooLarge(std::to_string(d) + "^" + exponent.get_str(), cap);
    mpz_ui_pow_ui(total.get_mpz_t(), static_cast<unsigned long>(d), exponent.get_ui());
  }
  if (total > mpz_class(std::to_string(cap), 10)) throw FunctionSpaceTooLarge(total.get_str(), cap);
  FunctionSpace fs;
  fs.domain_size = d;
  fs.ordering = ordering;
  std::size_t length = 1;
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t size = 1;
    for (std::size_t r = 0; r < length; ++r) size *= d;
    fs.sizes.push_back(size);
    fs.table_lengths.push_back(length);
    length *= d;
  }
  fs.total = total.get_ui();
  return fs;
}

/// One LP variable p_q per tuple q; a term becomes the sum of p_q over the q
/// under which its event holds.
inline RationalLinearProgram build_lp_for_ordering(const Formula& f, const FunctionSpace& fs) {
  RationalLinearProgram lp;
  for (std::uint64_t x = 0; x < fs.total; ++x) lp.add_variable("q" + std::to_string(x));
  LpRow norm{{}, Relation::eq, 1, "normalization"};
  for (std::uint64_t x = 0; x < fs.total; ++x) norm.terms.emplace_back(x, 1);
  lp.add_row(std::move(norm));
  for (std::size_t c = 0; c < f.constraints.size(); ++c) {
    const auto& con = f.constraints[c];
    LpRow row{{}, con.relation, con.rhs, "c" + std::to_string(c)};
    for (std::uint64_t x = 0; x < fs.total; ++x) {
      auto q = fs.decode(x);
      Rational a = 0;
      for (const auto& s : con.lhs)
        if (fs.holds(q, s.term.event)) a += s.coefficient;
      if (sgn(a) != 0) row.terms.emplace_back(x, a);
    }
    lp.add_row(std::move(row));
  }
  return lp;
}

/// The single-hidden-variable model: U ranges over function tuples and
/// f_{V_i}(U, V_1..V_{i-1}) = U[i](V_1..V_{i-1}).
struct CanonicalModel {
  DomainSpec domain;
  std::vector<std::string> variables;
  std::vector<VarId> ordering;
  struct Entry {
    std::vector<std::vector<ValueId>> tables;  // tables[i] has d^i entries
    Rational probability;
  };
  std::vector<Entry> distribution;

  bool operator==(const CanonicalModel& o) const {
    if (!(domain == o.domain && variables == o.variables && ordering == o.ordering &&
          distribution.size() == o.distribution.size()))
      return false;
    for (std::size_t k = 0; k < distribution.size(); ++k)
      if (distribution[k].tables != o.distribution[k].tables || distribution[k].probability != o.distribution[k].probability)
        return false;
    return true;
  }
};

struct CfSolveOptions {
  std::uint64_t function_space_cap = kDefaultFunctionSpaceCap;
  unsigned threads = 1;
  LpOptions lp;
};

struct CfVerdict {
  bool satisfiable = false;
  std::optional<CanonicalModel> model;
  std::size_t orderings_tried = 0;
  std::uint64_t function_space_size = 0;
  std::size_t lp_columns = 0;  // signature classes of the reported ordering
  std::size_t lp_rows = 0;
  std::size_t pivots = 0;
};

namespace detail {

struct OrderingResult {
  bool feasible = false;
  std::size_t columns = 0;
  std::size_t rows = 0;
  std::size_t pivots = 0;
  std::vector<std::pair<std::uint64_t, Rational>> support;  // (tuple index, p_q)
};

/// Solves the ordering's LP with the p_q merged by which terms hold under q.
/// Tuples with equal signatures have identical LP columns, so this is the
/// same LP with duplicate columns combined; a class's mass goes to its first
/// tuple.
inline OrderingResult solve_ordering(const Formula& f, const FunctionSpace& fs, const LpOptions& options) {
  std::vector<const CounterfactEvent*> events;
  std::vector<std::vector<std::size_t>> summand_event(f.constraints.size());
  for (std::size_t c = 0; c < f.constraints.size(); ++c)
    for (const auto& s : f.constraints[c].lhs) {
      std::size_t k = 0;
      while (k < events.size() && !(*events[k] == s.term.event)) ++k;
      if (k == events.size()) events.push_back(&s.term.event);
      summand_event[c].push_back(k);
    }
  std::map<std::vector<bool>, std::size_t> class_of;
  std::vector<std::vector<bool>> signatures;
  std::vector<std::uint64_t> representative;
  std::vector<std::uint64_t> q(fs.num_positions(), 0);
  for (std::uint64_t x = 0; x < fs.total; ++x) {
    std::vector<bool> sig(events.size());
    for (std::size_t k = 0; k < events.size(); ++k) sig[k] = fs.holds(q, *events[k]);
    if (class_of.emplace(sig, signatures.size()).second) {
      signatures.push_back(std::move(sig));
      representative.push_back(x);
    }
    for (std::size_t i = q.size(); i-- > 0;) {
      if (++q[i] < fs.sizes[i]) break;
      q[i] = 0;
    }
  }
  RationalLinearProgram lp;
  for (std::size_t k = 0; k < signatures.size(); ++k) lp.add_variable("q" + std::to_string(representative[k]));
  LpRow norm{{}, Relation::eq, 1, "normalization"};
  for (std::size_t k = 0; k < signatures.size(); ++k) norm.terms.emplace_back(k, 1);
  lp.add_row(std::move(norm));
  for (std::size_t c = 0; c < f.constraints.size(); ++c) {
    const auto& con = f.constraints[c];
    LpRow row{{}, con.relation, con.rhs, "c" + std::to_string(c)};
    for (std::size_t k = 0; k < signatures.size(); ++k) {
      Rational a = 0;
      for (std::size_t s = 0; s < con.lhs.size(); ++s)
        if (signatures[k][summand_event[c][s]]) a += con.lhs[s].coefficient;
      if (sgn(a) != 0) row.terms.emplace_back(k, a);
    }
    lp.add_row(std::move(row));
  }
  LpOutcome out = solve_feasibility(lp, options);
  OrderingResult r;
  r.columns = lp.num_variables();
  r.rows = lp.num_rows();
  r.pivots = out.pivots;
  r.feasible = out.status == LpStatus::feasible;
  if (r.feasible)
    for (std::size_t k = 0; k < out.point.size(); ++k)
      if (sgn(out.point[k]) != 0) r.support.emplace_back(representative[k], out.point[k]);
  return r;
}

inline void require_known_fragment(const Formula& f) {
  validate(f);
  if (f.domain.size() == 0) throw ValidationError("domain must be nonempty");
}

}  // namespace detail

/// Tries the orderings in lexicographic order of variable ids and reports
/// the least feasible one. With several threads, orderings are solved in
/// windows of that size; the outcome does not depend on the thread count.
inline CfVerdict solve_counterfactual(const Formula& f, const CfSolveOptions& options = {}) {
  detail::require_known_fragment(f);
  std::vector<VarId> ordering(f.num_variables());
  std::iota(ordering.begin(), ordering.end(), VarId{0});
  // Same cardinality for every ordering, so the cap is checked once.
  FunctionSpace probe = enumerate_function_space(f, ordering, options.function_space_cap);
  CfVerdict verdict;
  verdict.function_space_size = probe.total;
  const unsigned threads = std::max(1u, options.threads);
  bool more = true;
  while (more) {
    std::vector<std::vector<VarId>> window;
    while (more && window.size() < threads) {
      window.push_back(ordering);
      more = std::next_permutation(ordering.begin(), ordering.end());
    }
    std::vector<detail::OrderingResult> results(window.size());
    if (window.size() == 1) {
      results[0] = detail::solve_ordering(f, enumerate_function_space(f, window[0], options.function_space_cap), options.lp);
    } else {
      std::vector<std::future<detail::OrderingResult>> jobs;
      for (const auto& w : window)
        jobs.push_back(std::async(std::launch::async, [&f, &options, w] {
          return detail::solve_ordering(f, enumerate_function_space(f, w, options.function_space_cap), options.lp);
        }));
      for (std::size_t k = 0; k < jobs.size(); ++k) results[k] = jobs[k].get();
    }
    for (std::size_t k = 0; k < window.size(); ++k) {
      ++verdict.orderings_tried;
      verdict.lp_columns = results[k].columns;
      verdict.lp_rows = results[k].rows;
      verdict.pivots += results[k].pivots;
      if (!results[k].feasible) continue;
      FunctionSpace fs = enumerate_function_space(f, window[k], options.function_space_cap);
      CanonicalModel m{f.domain, f.variables, window[k], {}};
      for (const auto& [x, p] : results[k].support) {
        auto q = fs.decode(x);
        CanonicalModel::Entry e{{}, p};
        for (std::size_t i = 0; i < q.size(); ++i) e.tables.push_back(fs.table(i, q[i]));
        m.distribution.push_back(std::move(e));
      }
      verdict.satisfiable = true;
      verdict.model = std::move(m);
      return verdict;
    }
  }
  return verdict;
}

/// The model as an Scm with one hidden variable U. Val(U) is restricted to
/// the support, which leaves every probability unchanged.
inline Scm to_scm(const CanonicalModel& m) {
  const std::size_t n = m.variables.size(), d = m.domain.size();
  Scm s;
  s.domain = m.domain;
  s.variables = m.variables;
  s.order = m.ordering;
  HiddenVariable u{"U", {}};
  for (const auto& e : m.distribution) {
    std::string label;
    for (std::size_t i = 0; i < e.tables.size(); ++i) {
      if (i) label += ";";
      for (std::size_t r = 0; r < e.tables[i].size(); ++r) label += (r ? "," : "") + m.domain.values[e.tables[i][r]];
    }
    u.values.push_back(label);
  }
  s.hidden.push_back(std::move(u));
  s.functions.assign(n, FunctionTable{});
  for (std::size_t i = 0; i < n; ++i) {
    FunctionTable& fn = s.functions[m.ordering[i]];
    fn.hidden_keys = {0};
    fn.endo_inputs.assign(m.ordering.begin(), m.ordering.begin() + static_cast<std::ptrdiff_t>(i));
    std::size_t rows = 1;
    for (std::size_t j = 0; j < i; ++j) rows *= d;
    for (const auto& e : m.distribution)
      for (std::size_t r = 0; r < rows; ++r) fn.cells.push_back(Cell::constant(e.tables[i][r]));
  }
  for (std::size_t k = 0; k < m.distribution.size(); ++k) s.distribution.emplace_back(std::vector<std::size_t>{k}, m.distribution[k].probability);
  return s;
}

/// Checks the canonical shape (a permutation ordering, total truth tables of
/// the right arity, distinct tuples, a probability distribution, support at
/// most the number of LP rows) and then exact satisfaction.
inline bool verify_certificate(const Formula& f, const CanonicalModel& m, std::uint64_t support_cap = kDefaultSupportCap) {
  const std::size_t n = m.variables.size(), d = m.domain.size();
  if (d == 0 || m.ordering.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (VarId v : m.ordering) {
    if (v >= n || seen[v]) return false;
    seen[v] = true;
  }
  if (m.distribution.size() > f.constraints.size() + 1) return false;
  Rational total = 0;
  std::vector<std::vector<std::vector<ValueId>>> tuples;
  for (const auto& e : m.distribution) {
    if (e.tables.size() != n || sgn(e.probability) < 0) return false;
    std::size_t length = 1;
    for (const auto& t : e.tables) {
      if (t.size() != length) return false;
      for (ValueId v : t)
        if (v >= d) return false;
      length *= d;
    }
    total += e.probability;
    tuples.push_back(e.tables);
  }
  if (total != 1) return false;
  std::sort(tuples.begin(), tuples.end());
  if (std::adjacent_find(tuples.begin(), tuples.end()) != tuples.end()) return false;
  try {
    Formula g = rebind(f, m.variables, m.domain);
    validate(g);
    return satisfies(to_scm(m), g, support_cap);
  } catch (const ValidationError&) {
    return false;
  }
}

inline nlohmann::json to_json(const CanonicalModel& m) {
  using nlohmann::json;
  json ordering = json::array(), dist = json::array();
  for (VarId v : m.ordering) ordering.push_back(m.variables[v]);
  for (const auto& e : m.distribution) {
    json q = json::array();
    for (const auto& t : e.tables) {
      std::string s;
      for (std::size_t r = 0; r < t.size(); ++r) s += (r ? "," : "") + m.domain.values[t[r]];
      q.push_back(s);
    }
    dist.push_back({{"q", q}, {"p", to_string(e.probability)}});
  }
  return json{{"kind", "canonical-model"},
              {"domain", m.domain.values},
              {"variables", m.variables},
              {"ordering", ordering},
              {"distribution", dist}};
}

/// Parses without checking the shape; verify_certificate does that.
inline CanonicalModel canonical_model_from_json(const nlohmann::json& j) {
  if (j.at("kind").get<std::string>() != "canonical-model") throw ValidationError("not a canonical-model certificate");
  CanonicalModel m;
  m.domain.values = j.at("domain").get<std::vector<std::string>>();
  m.variables = j.at("variables").get<std::vector<std::string>>();
  for (const auto& name : j.at("ordering")) {
    auto it = std::find(m.variables.begin(), m.variables.end(), name.get<std::string>());
    if (it == m.variables.end()) throw ValidationError("unknown variable in ordering");
    m.ordering.push_back(static_cast<VarId>(it - m.variables.begin()));
  }
  for (const auto& ej : j.at("distribution")) {
    CanonicalModel::Entry e;
    for (const auto& tj : ej.at("q")) {
      std::vector<ValueId> t;
      std::string s = tj.get<std::string>();
      std::size_t start = 0;
      while (true) {
        std::size_t comma = s.find(',', start);
        std::string sym = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        auto v = m.domain.index_of(sym);
        if (!v) throw ValidationError("function value '" + sym + "' not in domain");
        t.push_back(*v);
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      e.tables.push_back(std::move(t));
    }
    e.probability = parse_rational(ej.at("p").get<std::string>());
    m.distribution.push_back(std::move(e));
  }
  return m;
}

}  // namespace pchsat

#endif  // PCHSAT_CF_SOLVER_HPP

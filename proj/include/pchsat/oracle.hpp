#ifndef PCHSAT_ORACLE_HPP
#define PCHSAT_ORACLE_HPP

// Brute-force reference deciders: a full-joint LP for probabilistic
// formulas, truth tables for CNF, and exhaustive multicolored clique search.
// None of these use decompositions or variable orderings.

#include <gmpxx.h>

#include <string>
#include <vector>

#include "pchsat/common.hpp"
#include "pchsat/formula.hpp"
#include "pchsat/lpcore.hpp"
#include "pchsat/reductions.hpp"

namespace pchsat {

inline constexpr std::uint64_t kDefaultJointCap = std::uint64_t{1} << 16;

/// Probability per full assignment, indexed in mixed radix with the first
/// variable most significant.
struct JointDistribution {
  std::size_t num_vars = 0;
  std::size_t domain_size = 0;
  std::vector<Rational> probability;

  std::vector<ValueId> assignment(std::size_t index) const {
    std::vector<ValueId> a(num_vars);
    for (std::size_t i = num_vars; i-- > 0;) {
      a[i] = index % domain_size;
      index /= domain_size;
    }
    return a;
  }
};

struct OracleVerdict {
  bool satisfiable = false;
  JointDistribution joint;  // when satisfiable
};

namespace detail {

inline std::size_t joint_size_or_throw(std::size_t d, std::size_t n, std::uint64_t cap) {
  mpz_class size;
  mpz_ui_pow_ui(size.get_mpz_t(), d, n);
  if (size > mpz_class(std::to_string(cap), 10)) throw TooLarge(size.get_str(), cap);
  return static_cast<std::size_t>(size.get_ui());
}

inline void require_prob(const Formula& f) {
  for (const auto& c : f.constraints)
    for (const auto& s : c.lhs)
      for_each_leaf(s.term.event, [](const PostIntEvent& leaf) {
        if (!leaf.intervention.empty()) throw FragmentMismatch("the joint oracle only accepts intervention-free formulas");
      });
}

}  // namespace detail

/// P(e) under a joint distribution over full assignments.
inline Rational joint_term_probability(const JointDistribution& joint, const CounterfactEvent& e) {
  Rational total = 0;
  for (std::size_t t = 0; t < joint.probability.size(); ++t) {
    if (sgn(joint.probability[t]) == 0) continue;
    auto a = joint.assignment(t);
    bool holds_here = evaluate(e, [&](const PostIntEvent& leaf) {
      return evaluate(leaf.body, [&](VarId v) { return a[v]; });
    });
    if (holds_here) total += joint.probability[t];
  }
  return total;
}

/// Exact check of `f` against a joint distribution over its own vocabulary.
inline bool joint_satisfies(const Formula& f, const JointDistribution& joint) {
  Rational sum = 0;
  for (const auto& p : joint.probability) {
    if (sgn(p) < 0) return false;
    sum += p;
  }
  if (sum != 1) return false;
  for (const auto& c : f.constraints) {
    Rational lhs = 0;
    for (const auto& s : c.lhs) lhs += s.coefficient * joint_term_probability(joint, s.term.event);
    if (!holds(lhs, c.relation, c.rhs)) return false;
  }
  return true;
}

/// LP over all d^n full assignments: nonnegative, summing to 1, with each
/// term replaced by the sum over the assignments satisfying it. Throws
/// TooLarge when d^n exceeds `cap`.
inline OracleVerdict prob_joint_oracle(const Formula& f, std::uint64_t cap = kDefaultJointCap) {
  validate(f);
  detail::require_prob(f);
  const std::size_t n = f.num_variables(), d = f.domain.size();
  const std::size_t size = detail::joint_size_or_throw(d, n, cap);
  JointDistribution shape{n, d, {}};
  RationalLinearProgram lp;
  for (std::size_t t = 0; t < size; ++t) lp.add_variable("x" + std::to_string(t));
  LpRow norm{{}, Relation::eq, 1, "sum"};
  for (std::size_t t = 0; t < size; ++t) norm.terms.emplace_back(t, 1);
  lp.add_row(std::move(norm));
  std::vector<std::vector<ValueId>> assignments(size);
  for (std::size_t t = 0; t < size; ++t) assignments[t] = shape.assignment(t);
  for (const auto& c : f.constraints) {
    std::vector<Rational> coeff(size);
    for (const auto& s : c.lhs)
      for (std::size_t t = 0; t < size; ++t) {
        const auto& a = assignments[t];
        bool sat = evaluate(s.term.event, [&](const PostIntEvent& leaf) {
          return evaluate(leaf.body, [&](VarId v) { return a[v]; });
        });
        if (sat) coeff[t] += s.coefficient;
      }
    LpRow row{{}, c.relation, c.rhs, ""};
    for (std::size_t t = 0; t < size; ++t)
      if (sgn(coeff[t]) != 0) row.terms.emplace_back(t, coeff[t]);
    lp.add_row(std::move(row));
  }
  LpOutcome out = solve_feasibility(lp);
  OracleVerdict verdict;
  verdict.satisfiable = out.status == LpStatus::feasible;
  if (verdict.satisfiable) {
    verdict.joint = shape;
    verdict.joint.probability = std::move(out.point);
  }
  return verdict;
}

inline constexpr std::size_t kTruthTableLimit = 20;

inline bool truth_table_sat(const CnfInstance& cnf) {
  if (cnf.num_vars > kTruthTableLimit) throw TooLarge(std::to_string(cnf.num_vars), kTruthTableLimit);
  for (std::uint32_t a = 0; a < (std::uint32_t{1} << cnf.num_vars); ++a) {
    bool all = true;
    for (const auto& c : cnf.clauses) {
      bool any = false;
      for (int lit : c) {
        bool value = (a >> (std::abs(lit) - 1)) & 1u;
        if (value == (lit > 0)) any = true;
      }
      if (!any) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

inline constexpr std::size_t kCliqueVertexLimit = 10;

/// Whether some choice of one vertex per color 1..k is pairwise adjacent.
inline bool max_clique_exists(const ColoredGraph& g, std::size_t k) {
  if (g.num_vertices() > kCliqueVertexLimit) throw TooLarge(std::to_string(g.num_vertices()), kCliqueVertexLimit);
  std::vector<std::vector<std::size_t>> by_color(k + 1);
  for (std::size_t a = 0; a < g.num_vertices(); ++a)
    if (g.color[a] >= 1 && g.color[a] <= k) by_color[g.color[a]].push_back(a);
  std::vector<std::size_t> chosen;
  auto extend = [&](auto&& self, std::size_t color) -> bool {
    if (color > k) return true;
    for (std::size_t a : by_color[color]) {
      bool ok = true;
      for (std::size_t b : chosen)
        if (!g.adjacent(a, b)) ok = false;
      if (!ok) continue;
      chosen.push_back(a);
      if (self(self, color + 1)) return true;
      chosen.pop_back();
    }
    return false;
  };
  return extend(extend, 1);
}

}  // namespace pchsat

#endif  // PCHSAT_ORACLE_HPP

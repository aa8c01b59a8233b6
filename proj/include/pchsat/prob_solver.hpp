#ifndef PCHSAT_PROB_SOLVER_HPP
#define PCHSAT_PROB_SOLVER_HPP

// Satisfiability of linear constraints over observational probabilities via
// a nice tree decomposition of the primal graph: one LP variable per bag
// assignment, consistency between adjacent bags, and each term read off the
// smallest bag covering its variables. A feasible point is turned back into
// a model by walking the decomposition from the root.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pchsat/common.hpp"
#include "pchsat/decomp.hpp"
#include "pchsat/formula.hpp"
#include "pchsat/lpcore.hpp"
#include "pchsat/scm.hpp"

namespace pchsat {

struct BagMarginalCertificate {
  DomainSpec domain;
  std::vector<std::string> variables;
  NiceTreeDecomposition decomposition;
  /// Distinct nonempty bags in preorder of first occurrence.
  std::vector<std::vector<VarId>> bags;
  /// marginals[b][t]: probability of bag b taking tuple t, tuples in mixed
  /// radix with the bag's first variable most significant.
  std::vector<std::vector<Rational>> marginals;
  /// term_bags[c][s]: bag assigned to summand s of constraint c.
  std::vector<std::vector<std::size_t>> term_bags;

  bool operator==(const BagMarginalCertificate&) const = default;
};

/// LP together with the bookkeeping needed to read a point back.
struct BagLp {
  RationalLinearProgram lp;
  std::vector<std::vector<VarId>> bags;
  std::vector<std::size_t> offset;  // first LP variable of each bag
  std::vector<std::vector<std::size_t>> term_bags;
  std::size_t consistency_families = 0;
};

struct ProbSolveOptions {
  DecompositionStrategy strategy = DecompositionStrategy::greedy_minfill;
  std::size_t exact_limit = kDefaultExactLimit;
  LpOptions lp;
  bool reduce_domain = true;
};

struct ProbVerdict {
  bool satisfiable = false;
  Formula solved;  // the formula the LP was built for (possibly domain-reduced)
  std::optional<BagMarginalCertificate> certificate;
  std::vector<Rational> farkas;  // when unsatisfiable, one multiplier per LP row
  std::size_t width = 0;
  std::size_t lp_variables = 0;
  std::size_t lp_rows = 0;
  std::size_t pivots = 0;
};

namespace detail {

inline std::size_t tuple_count(std::size_t d, std::size_t k) {
  std::size_t out = 1;
  for (std::size_t i = 0; i < k; ++i) out *= d;
  return out;
}

inline std::vector<ValueId> decode_tuple(std::size_t index, std::size_t d, std::size_t k) {
  std::vector<ValueId> t(k);
  for (std::size_t i = k; i-- > 0;) {
    t[i] = index % d;
    index /= d;
  }
  return t;
}

inline std::vector<std::vector<VarId>> distinct_bags(const NiceTreeDecomposition& nt) {
  std::vector<std::vector<VarId>> out;
  for (std::size_t x : nt.preorder()) {
    const auto& b = nt.nodes[x].bag;
    if (!b.empty() && std::find(out.begin(), out.end(), b) == out.end()) out.push_back(b);
  }
  return out;
}

inline std::size_t bag_index(const std::vector<std::vector<VarId>>& bags, const std::vector<VarId>& bag) {
  return static_cast<std::size_t>(std::find(bags.begin(), bags.end(), bag) - bags.begin());
}

/// Distinct (smaller, larger) bag pairs on tree edges, smaller nonempty.
inline std::vector<std::pair<std::vector<VarId>, std::vector<VarId>>> consistency_pairs(const NiceTreeDecomposition& nt) {
  std::vector<std::pair<std::vector<VarId>, std::vector<VarId>>> out;
  for (std::size_t x : nt.preorder())
    for (std::size_t c : nt.nodes[x].children) {
      const auto& a = nt.nodes[x].bag;
      const auto& b = nt.nodes[c].bag;
      if (a == b) continue;
      auto pair = a.size() < b.size() ? std::make_pair(a, b) : std::make_pair(b, a);
      if (pair.first.empty()) continue;
      if (std::find(out.begin(), out.end(), pair) == out.end()) out.push_back(pair);
    }
  return out;
}

/// Smallest bag containing `vars`, earliest on ties.
inline std::optional<std::size_t> covering_bag(const std::vector<std::vector<VarId>>& bags, const std::vector<VarId>& vars) {
  std::optional<std::size_t> best;
  for (std::size_t b = 0; b < bags.size(); ++b)
    if (std::includes(bags[b].begin(), bags[b].end(), vars.begin(), vars.end()) &&
        (!best || bags[b].size() < bags[*best].size()))
      best = b;
  return best;
}

inline bool holds_on_bag(const CounterfactEvent& e, const std::vector<VarId>& bag, const std::vector<ValueId>& tuple) {
  return evaluate(e, [&](const PostIntEvent& leaf) {
    if (!leaf.intervention.empty()) throw FragmentMismatch("interventions are outside the probabilistic fragment");
    return evaluate(leaf.body, [&](VarId v) {
      return tuple[static_cast<std::size_t>(std::lower_bound(bag.begin(), bag.end(), v) - bag.begin())];
    });
  });
}

/// Index of the tuple of `small` obtained by restricting tuple `t` of `large`.
inline std::size_t restrict_tuple(const std::vector<VarId>& large, const std::vector<ValueId>& t,
                                  const std::vector<VarId>& small, std::size_t d) {
  std::size_t idx = 0;
  for (VarId v : small) {
    auto pos = static_cast<std::size_t>(std::lower_bound(large.begin(), large.end(), v) - large.begin());
    idx = idx * d + t[pos];
  }
  return idx;
}

inline std::string bag_variable_name(const Formula& f, const std::vector<VarId>& bag, const std::vector<ValueId>& t) {
  std::string s = "p[";
  for (std::size_t i = 0; i < bag.size(); ++i) {
    if (i) s += ",";
    s += f.variables[bag[i]] + "=" + f.domain.values[t[i]];
  }
  return s + "]";
}

inline void require_prob_fragment(const Formula& f) {
  for (const auto& c : f.constraints)
    for (const auto& s : c.lhs)
      for_each_leaf(s.term.event, [](const PostIntEvent& leaf) {
        if (!leaf.intervention.empty()) throw FragmentMismatch("interventions are outside the probabilistic fragment");
      });
}

}  // namespace detail

/// The bag-marginal LP for `f` over `nt`. Empty bags carry no variables.
/// Throws LpTooLarge before allocating when the variable count exceeds
/// `max_variables`.
inline BagLp build_lp(const Formula& f, const NiceTreeDecomposition& nt,
                      std::uint64_t max_variables = kDefaultLpVariableCap) {
  detail::require_prob_fragment(f);
  const std::size_t d = f.domain.size();
  BagLp out;
  out.bags = detail::distinct_bags(nt);
  mpz_class total = 0;
  for (const auto& bag : out.bags) {
    mpz_class k;
    mpz_ui_pow_ui(k.get_mpz_t(), d, bag.size());
    total += k;
  }
  if (total > mpz_class(std::to_string(max_variables), 10)) throw LpTooLarge(total.get_str(), max_variables);
  for (const auto& bag : out.bags) {
    out.offset.push_back(out.lp.num_variables());
    const std::size_t k = detail::tuple_count(d, bag.size());
    for (std::size_t t = 0; t < k; ++t)
      out.lp.add_variable(detail::bag_variable_name(f, bag, detail::decode_tuple(t, d, bag.size())));
  }
  for (std::size_t b = 0; b < out.bags.size(); ++b) {
    LpRow row{{}, Relation::eq, 1, "norm" + std::to_string(b)};
    const std::size_t k = detail::tuple_count(d, out.bags[b].size());
    for (std::size_t t = 0; t < k; ++t) row.terms.emplace_back(out.offset[b] + t, 1);
    out.lp.add_row(std::move(row));
  }
  auto pairs = detail::consistency_pairs(nt);
  out.consistency_families = pairs.size();
  for (const auto& [small, large] : pairs) {
    const std::size_t s = detail::bag_index(out.bags, small), l = detail::bag_index(out.bags, large);
    const std::size_t ks = detail::tuple_count(d, small.size()), kl = detail::tuple_count(d, large.size());
    std::vector<LpRow> rows(ks);
    for (std::size_t t = 0; t < ks; ++t) {
      rows[t].relation = Relation::eq;
      rows[t].rhs = 0;
      rows[t].name = "cons" + std::to_string(s) + "_" + std::to_string(l) + "_" + std::to_string(t);
      rows[t].terms.emplace_back(out.offset[s] + t, 1);
    }
    for (std::size_t t = 0; t < kl; ++t) {
      auto tuple = detail::decode_tuple(t, d, large.size());
      rows[detail::restrict_tuple(large, tuple, small, d)].terms.emplace_back(out.offset[l] + t, -1);
    }
    for (auto& r : rows) out.lp.add_row(std::move(r));
  }
  for (std::size_t c = 0; c < f.constraints.size(); ++c) {
    const auto& con = f.constraints[c];
    std::map<std::size_t, Rational> coeff;
    out.term_bags.emplace_back();
    for (const auto& s : con.lhs) {
      auto vars = term_variables(s.term);
      auto b = detail::covering_bag(out.bags, vars);
      if (!b) throw InternalError("no bag covers the variables of a term");
      out.term_bags.back().push_back(*b);
      const auto& bag = out.bags[*b];
      const std::size_t k = detail::tuple_count(d, bag.size());
      for (std::size_t t = 0; t < k; ++t)
        if (detail::holds_on_bag(s.term.event, bag, detail::decode_tuple(t, d, bag.size())))
          coeff[out.offset[*b] + t] += s.coefficient;
    }
    LpRow row{{}, con.relation, con.rhs, "c" + std::to_string(c)};
    for (auto& [j, a] : coeff)
      if (sgn(a) != 0) row.terms.emplace_back(j, a);
    out.lp.add_row(std::move(row));
  }
  return out;
}

/// Certificate from a point of `build_lp(f, nt)`.
inline BagMarginalCertificate certificate_from_point(const Formula& f, const NiceTreeDecomposition& nt, const BagLp& blp,
                                                     const std::vector<Rational>& point) {
  BagMarginalCertificate cert{f.domain, f.variables, nt, blp.bags, {}, blp.term_bags};
  for (std::size_t b = 0; b < blp.bags.size(); ++b) {
    const std::size_t k = detail::tuple_count(f.domain.size(), blp.bags[b].size());
    cert.marginals.emplace_back(point.begin() + static_cast<std::ptrdiff_t>(blp.offset[b]),
                                point.begin() + static_cast<std::ptrdiff_t>(blp.offset[b] + k));
  }
  return cert;
}

/// Decides a probabilistic formula. The domain is first reduced to the
/// mentioned values plus one when that shrinks it.
inline ProbVerdict solve_prob(const Formula& input, const ProbSolveOptions& options = {}) {
  validate(input);
  detail::require_prob_fragment(input);
  ProbVerdict verdict;
  verdict.solved = input;
  if (options.reduce_domain) {
    Formula reduced = reduce_domain(input);
    if (reduced.domain.size() < input.domain.size()) verdict.solved = std::move(reduced);
  }
  const Formula& f = verdict.solved;
  PrimalGraph g = build_primal_graph(f);
  NiceTreeDecomposition nt = make_nice(compute_decomposition(g, options.strategy, options.exact_limit));
  if (!verify_nice(nt, g)) throw InternalError("decomposition failed verification");
  verdict.width = nt.width();
  BagLp blp = build_lp(f, nt, options.lp.max_variables);
  verdict.lp_variables = blp.lp.num_variables();
  verdict.lp_rows = blp.lp.num_rows();
  LpOutcome out = solve_feasibility(blp.lp, options.lp);
  verdict.pivots = out.pivots;
  verdict.satisfiable = out.status == LpStatus::feasible;
  if (verdict.satisfiable) verdict.certificate = certificate_from_point(f, nt, blp, out.point);
  else verdict.farkas = std::move(out.farkas);
  return verdict;
}

namespace detail {

/// Visits, top-down from the root, each edge where a variable first enters:
/// fn(context bag, extended bag, variable).
template <class Fn>
void for_each_introduction(const NiceTreeDecomposition& nt, Fn&& fn) {
  std::vector<bool> defined(nt.num_vertices, false);
  std::vector<std::size_t> queue{nt.root};
  for (std::size_t head = 0; head < queue.size(); ++head) {
    std::size_t x = queue[head];
    for (std::size_t c : nt.nodes[x].children) {
      const auto& a = nt.nodes[x].bag;
      const auto& b = nt.nodes[c].bag;
      if (b.size() == a.size() + 1 && std::includes(b.begin(), b.end(), a.begin(), a.end())) {
        std::vector<VarId> diff;
        std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(diff));
        if (!defined[diff[0]]) {
          defined[diff[0]] = true;
          fn(a, b, diff[0]);
        }
      }
      queue.push_back(c);
    }
  }
}

inline const Rational& marginal(const BagMarginalCertificate& cert, const std::vector<VarId>& bag, std::size_t t) {
  static const Rational one = 1;
  if (bag.empty()) return one;
  return cert.marginals[bag_index(cert.bags, bag)][t];
}

}  // namespace detail

/// Product-form model: one hidden variable per introduced variable and
/// positive-mass context, P(U_{V|B=v} = x) = p_{B+V=(v,x)} / p_{B=v}, and
/// f_V copying the hidden variable of the current context. Zero-mass
/// contexts map to the first domain value.
inline Scm reconstruct_scm(const BagMarginalCertificate& cert) {
  const std::size_t d = cert.domain.size();
  Scm m;
  m.domain = cert.domain;
  m.variables = cert.variables;
  m.form = DistributionForm::product;
  m.functions.resize(cert.variables.size());
  detail::for_each_introduction(cert.decomposition, [&](const std::vector<VarId>& ctx, const std::vector<VarId>& ext, VarId v) {
    FunctionTable fn;
    fn.endo_inputs = ctx;
    const std::size_t kc = detail::tuple_count(d, ctx.size());
    for (std::size_t t = 0; t < kc; ++t) {
      const Rational& pc = detail::marginal(cert, ctx, t);
      if (sgn(pc) == 0) {
        fn.cells.push_back(Cell::constant(0));
        continue;
      }
      auto tuple = detail::decode_tuple(t, d, ctx.size());
      std::string name = "U_" + cert.variables[v];
      if (!ctx.empty()) {
        name += "|";
        for (std::size_t i = 0; i < ctx.size(); ++i)
          name += (i ? "," : "") + cert.variables[ctx[i]] + "=" + cert.domain.values[tuple[i]];
      }
      std::vector<Rational> probs(d);
      for (ValueId x = 0; x < d; ++x) {
        // Extended tuple: insert x at V's position in the sorted bag.
        std::size_t idx = 0, ci = 0;
        for (VarId w : ext) idx = idx * d + (w == v ? x : tuple[ci++]);
        probs[x] = detail::marginal(cert, ext, idx) / pc;
      }
      m.hidden.push_back(HiddenVariable{name, cert.domain.values});
      m.marginals.push_back(std::move(probs));
      fn.cells.push_back(Cell::copy(m.hidden.size() - 1));
    }
    m.functions[v] = std::move(fn);
    m.order.push_back(v);
  });
  if (m.order.size() != m.variables.size()) throw InternalError("decomposition does not cover every variable");
  validate(m);
  return m;
}

/// Probability of a full assignment in the reconstructed model: the product
/// of conditionals p_{B+V}/p_B along the introductions, 0 once a context has
/// no mass.
inline Rational joint_probability(const BagMarginalCertificate& cert, const std::vector<ValueId>& assignment) {
  const std::size_t d = cert.domain.size();
  Rational p = 1;
  detail::for_each_introduction(cert.decomposition, [&](const std::vector<VarId>& ctx, const std::vector<VarId>& ext, VarId) {
    if (sgn(p) == 0) return;
    std::size_t tc = 0, te = 0;
    for (VarId w : ctx) tc = tc * d + assignment[w];
    for (VarId w : ext) te = te * d + assignment[w];
    const Rational& pc = detail::marginal(cert, ctx, tc);
    if (sgn(pc) == 0) {
      p = 0;
      return;
    }
    p *= detail::marginal(cert, ext, te) / pc;
  });
  return p;
}

/// Exact re-check of every LP family: nonnegativity, per-bag sums, adjacent
/// consistency, term coverage, and each translated constraint. `f` is
/// matched to the certificate by names and symbols.
inline bool verify_certificate(const Formula& f, const BagMarginalCertificate& cert) {
  Formula g;
  try {
    g = rebind(f, cert.variables, cert.domain);
    validate(g);
    detail::require_prob_fragment(g);
  } catch (const Error&) {
    return false;
  }
  const std::size_t d = cert.domain.size();
  if (!verify_nice(cert.decomposition, build_primal_graph(g))) return false;
  if (cert.bags != detail::distinct_bags(cert.decomposition) || cert.marginals.size() != cert.bags.size()) return false;
  for (std::size_t b = 0; b < cert.bags.size(); ++b) {
    if (cert.marginals[b].size() != detail::tuple_count(d, cert.bags[b].size())) return false;
    Rational sum = 0;
    for (const auto& p : cert.marginals[b]) {
      if (sgn(p) < 0) return false;
      sum += p;
    }
    if (sum != 1) return false;
  }
  for (const auto& [small, large] : detail::consistency_pairs(cert.decomposition)) {
    const auto& ps = cert.marginals[detail::bag_index(cert.bags, small)];
    const auto& pl = cert.marginals[detail::bag_index(cert.bags, large)];
    std::vector<Rational> summed(ps.size());
    for (std::size_t t = 0; t < pl.size(); ++t)
      summed[detail::restrict_tuple(large, detail::decode_tuple(t, d, large.size()), small, d)] += pl[t];
    if (summed != ps) return false;
  }
  if (cert.term_bags.size() != g.constraints.size()) return false;
  for (std::size_t c = 0; c < g.constraints.size(); ++c) {
    const auto& con = g.constraints[c];
    if (cert.term_bags[c].size() != con.lhs.size()) return false;
    Rational lhs = 0;
    for (std::size_t s = 0; s < con.lhs.size(); ++s) {
      std::size_t b = cert.term_bags[c][s];
      if (b >= cert.bags.size()) return false;
      const auto& bag = cert.bags[b];
      auto vars = term_variables(con.lhs[s].term);
      if (!std::includes(bag.begin(), bag.end(), vars.begin(), vars.end())) return false;
      Rational p = 0;
      for (std::size_t t = 0; t < cert.marginals[b].size(); ++t)
        if (detail::holds_on_bag(con.lhs[s].term.event, bag, detail::decode_tuple(t, d, bag.size()))) p += cert.marginals[b][t];
      lhs += con.lhs[s].coefficient * p;
    }
    if (!holds(lhs, con.relation, con.rhs)) return false;
  }
  return true;
}

inline nlohmann::json to_json(const BagMarginalCertificate& cert) {
  using nlohmann::json;
  json bags = json::array();
  for (std::size_t b = 0; b < cert.bags.size(); ++b) {
    json vars = json::array(), probs = json::array();
    for (VarId v : cert.bags[b]) vars.push_back(cert.variables[v]);
    for (const auto& p : cert.marginals[b]) probs.push_back(to_string(p));
    bags.push_back({{"variables", vars}, {"marginals", probs}});
  }
  return json{{"kind", "bag-marginals"},
              {"domain", cert.domain.values},
              {"variables", cert.variables},
              {"decomposition", to_json(cert.decomposition, cert.variables)},
              {"bags", bags},
              {"term_bags", cert.term_bags}};
}

inline BagMarginalCertificate bag_certificate_from_json(const nlohmann::json& j) {
  if (j.at("kind").get<std::string>() != "bag-marginals") throw ValidationError("not a bag-marginal certificate");
  BagMarginalCertificate cert;
  cert.domain.values = j.at("domain").get<std::vector<std::string>>();
  cert.variables = j.at("variables").get<std::vector<std::string>>();
  cert.decomposition = nice_from_json(j.at("decomposition"), cert.variables);
  for (const auto& bj : j.at("bags")) {
    std::vector<VarId> bag;
    for (const auto& name : bj.at("variables")) {
      auto it = std::find(cert.variables.begin(), cert.variables.end(), name.get<std::string>());
      if (it == cert.variables.end()) throw ValidationError("unknown variable in bag");
      bag.push_back(static_cast<VarId>(it - cert.variables.begin()));
    }
    if (!std::is_sorted(bag.begin(), bag.end())) throw ValidationError("bag variables must follow declaration order");
    cert.bags.push_back(std::move(bag));
    std::vector<Rational> probs;
    for (const auto& p : bj.at("marginals")) probs.push_back(parse_rational(p.get<std::string>()));
    cert.marginals.push_back(std::move(probs));
  }
  cert.term_bags = j.at("term_bags").get<std::vector<std::vector<std::size_t>>>();
  return cert;
}

}  // namespace pchsat

#endif  // PCHSAT_PROB_SOLVER_HPP

#ifndef PCHSAT_SCM_HPP
#define PCHSAT_SCM_HPP

// Recursive structural causal models with finite hidden variables and exact
// evaluation of counterfactual events.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pchsat/common.hpp"
#include "pchsat/formula.hpp"

namespace pchsat {

inline constexpr std::uint64_t kDefaultSupportCap = std::uint64_t{1} << 20;

struct HiddenVariable {
  std::string name;
  std::vector<std::string> values;

  std::size_t size() const { return values.size(); }

  bool operator==(const HiddenVariable&) const = default;
};

/// One case of a structural function: a constant domain value, or a copy of
/// a hidden variable whose value labels coincide with the domain.
struct Cell {
  enum class Kind { constant, hidden };

  Kind kind = Kind::constant;
  std::size_t index = 0;  // ValueId for constants, hidden-variable id otherwise

  static Cell constant(ValueId v) { return Cell{Kind::constant, v}; }
  static Cell copy(std::size_t hidden_id) { return Cell{Kind::hidden, hidden_id}; }

  bool operator==(const Cell&) const = default;
};

/// Case distinction over the listed inputs. `cells` is row-major over
/// (hidden_keys..., endo_inputs...), the last input varying fastest. Inputs
/// not listed are ignored by the function.
struct FunctionTable {
  std::vector<std::size_t> hidden_keys;
  std::vector<VarId> endo_inputs;
  std::vector<Cell> cells;

  bool operator==(const FunctionTable&) const = default;
};

/// How P over the hidden variables is given: an explicit sparse joint, or
/// independent per-variable marginals whose product is P.
enum class DistributionForm { joint, product };

struct Scm {
  DomainSpec domain;
  std::vector<std::string> variables;
  std::vector<VarId> order;  // the well-order, as a permutation of variable ids
  std::vector<HiddenVariable> hidden;
  std::vector<FunctionTable> functions;  // indexed by VarId
  DistributionForm form = DistributionForm::joint;
  /// Joint form: sparse distribution over Val(U); omitted tuples have
  /// probability 0.
  std::vector<std::pair<std::vector<std::size_t>, Rational>> distribution;
  /// Product form: marginals[h][x] = P(U_h = x).
  std::vector<std::vector<Rational>> marginals;

  bool operator==(const Scm& o) const {
    if (!(domain == o.domain && variables == o.variables && order == o.order && hidden == o.hidden &&
          functions == o.functions && form == o.form && distribution.size() == o.distribution.size() &&
          marginals == o.marginals))
      return false;
    for (std::size_t i = 0; i < distribution.size(); ++i)
      if (distribution[i].first != o.distribution[i].first || distribution[i].second != o.distribution[i].second)
        return false;
    return true;
  }
};

/// Throws ValidationError describing the first violated model invariant.
inline void validate(const Scm& m) {
  const std::size_t n = m.variables.size(), d = m.domain.size();
  if (d == 0) throw ValidationError("model domain must be nonempty");
  if (m.order.size() != n) throw ValidationError("order must list every variable once");
  std::vector<std::size_t> position(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (m.order[i] >= n || position[m.order[i]] != n) throw ValidationError("order is not a permutation");
    position[m.order[i]] = i;
  }
  if (m.functions.size() != n) throw ValidationError("expected one function per variable");
  for (const auto& h : m.hidden)
    if (h.values.empty()) throw ValidationError("hidden variable '" + h.name + "' has no values");
  for (VarId v = 0; v < n; ++v) {
    const auto& fn = m.functions[v];
    std::size_t rows = 1;
    for (std::size_t h : fn.hidden_keys) {
      if (h >= m.hidden.size()) throw ValidationError("function of '" + m.variables[v] + "' reads unknown hidden variable");
      rows *= m.hidden[h].size();
    }
    for (VarId p : fn.endo_inputs) {
      if (p >= n || position[p] >= position[v])
        throw ValidationError("function of '" + m.variables[v] + "' reads a variable not preceding it");
      rows *= d;
    }
    if (fn.cells.size() != rows) throw ValidationError("function table of '" + m.variables[v] + "' is not total");
    for (const Cell& c : fn.cells) {
      if (c.kind == Cell::Kind::constant && c.index >= d) throw ValidationError("function value outside domain");
      if (c.kind == Cell::Kind::hidden && (c.index >= m.hidden.size() || m.hidden[c.index].size() != d))
        throw ValidationError("copied hidden variable must range over the domain");
    }
  }
  if (m.form == DistributionForm::product) {
    if (!m.distribution.empty()) throw ValidationError("product-form model must not list joint tuples");
    if (m.marginals.size() != m.hidden.size()) throw ValidationError("expected one marginal per hidden variable");
    for (std::size_t h = 0; h < m.hidden.size(); ++h) {
      if (m.marginals[h].size() != m.hidden[h].size())
        throw ValidationError("marginal of '" + m.hidden[h].name + "' has wrong length");
      Rational sum = 0;
      for (const auto& p : m.marginals[h]) {
        if (sgn(p) < 0) throw ValidationError("negative probability");
        sum += p;
      }
      if (sum != 1) throw ValidationError("marginal of '" + m.hidden[h].name + "' sums to " + to_string(sum));
    }
    return;
  }
  if (!m.marginals.empty()) throw ValidationError("joint-form model must not list marginals");
  Rational total = 0;
  std::vector<std::vector<std::size_t>> seen;
  for (const auto& [u, p] : m.distribution) {
    if (u.size() != m.hidden.size()) throw ValidationError("hidden tuple has wrong arity");
    for (std::size_t i = 0; i < u.size(); ++i)
      if (u[i] >= m.hidden[i].size()) throw ValidationError("hidden tuple value out of range");
    if (sgn(p) < 0) throw ValidationError("negative probability");
    total += p;
    seen.push_back(u);
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) throw ValidationError("duplicate hidden tuple in distribution");
  if (total != 1) throw ValidationError("distribution sums to " + to_string(total) + ", not 1");
}

namespace detail {

/// Evaluates endogenous values, reading hidden values through `read`, which
/// returns nullopt for a value not yet fixed. Returns nullopt as soon as such
/// a read happens and records the hidden id in `missing`.
template <class Read>
std::optional<std::vector<ValueId>> evaluate_with(const Scm& m, Read&& read, const Intervention& intervention,
                                                  std::size_t& missing) {
  std::vector<ValueId> values(m.variables.size(), 0);
  std::vector<int> forced(m.variables.size(), -1);
  for (const Atom& a : intervention) forced[a.var] = static_cast<int>(a.value);
  for (VarId v : m.order) {
    if (forced[v] >= 0) {
      values[v] = static_cast<ValueId>(forced[v]);
      continue;
    }
    const FunctionTable& fn = m.functions[v];
    std::size_t row = 0;
    for (std::size_t h : fn.hidden_keys) {
      auto x = read(h);
      if (!x) return missing = h, std::nullopt;
      row = row * m.hidden[h].size() + *x;
    }
    for (VarId p : fn.endo_inputs) row = row * m.domain.size() + values[p];
    const Cell& c = fn.cells[row];
    if (c.kind == Cell::Kind::constant) {
      values[v] = c.index;
    } else {
      auto x = read(c.index);
      if (!x) return missing = c.index, std::nullopt;
      values[v] = *x;
    }
  }
  return values;
}

}  // namespace detail

/// Values of all endogenous variables (indexed by VarId) for hidden values
/// `u` under `intervention`.
inline std::vector<ValueId> evaluate_endogenous(const Scm& m, const std::vector<std::size_t>& u,
                                                const Intervention& intervention = {}) {
  std::size_t missing = 0;
  return *detail::evaluate_with(m, [&](std::size_t h) { return std::optional<std::size_t>(u[h]); }, intervention, missing);
}

/// Decides F, u |= e. Event variable ids refer to `m.variables`.
inline bool evaluate_event(const Scm& m, const std::vector<std::size_t>& u, const CounterfactEvent& e) {
  return evaluate(e, [&](const PostIntEvent& leaf) {
    auto values = evaluate_endogenous(m, u, leaf.intervention);
    return evaluate(leaf.body, [&](VarId v) { return values[v]; });
  });
}

/// Exact P(e). Joint form sums over the listed support. Product form
/// branches only on hidden variables the evaluation actually reads, so the
/// work is bounded by the number of distinct read patterns; `support_cap`
/// bounds the tuples (joint) or branches (product) visited.
inline Rational term_probability(const Scm& m, const CounterfactEvent& e, std::uint64_t support_cap = kDefaultSupportCap) {
  Rational total = 0;
  if (m.form == DistributionForm::joint) {
    if (m.distribution.size() > support_cap) throw SupportTooLarge(std::to_string(m.distribution.size()), support_cap);
    for (const auto& [u, p] : m.distribution)
      if (evaluate_event(m, u, e)) total += p;
    return total;
  }
  std::vector<std::optional<std::size_t>> partial(m.hidden.size());
  std::uint64_t branches = 0;
  auto read = [&](std::size_t h) { return partial[h]; };
  auto explore = [&](auto&& self, const Rational& weight) -> void {
    std::size_t missing = 0;
    bool incomplete = false;
    bool holds_here = evaluate(e, [&](const PostIntEvent& leaf) {
      if (incomplete) return false;
      auto values = detail::evaluate_with(m, read, leaf.intervention, missing);
      if (!values) {
        incomplete = true;
        return false;
      }
      return evaluate(leaf.body, [&](VarId v) { return (*values)[v]; });
    });
    if (incomplete) {
      for (std::size_t x = 0; x < m.hidden[missing].size(); ++x) {
        if (sgn(m.marginals[missing][x]) == 0) continue;
        partial[missing] = x;
        self(self, weight * m.marginals[missing][x]);
      }
      partial[missing].reset();
      return;
    }
    if (++branches > support_cap) throw SupportTooLarge("more than " + std::to_string(support_cap), support_cap);
    if (holds_here) total += weight;
  };
  explore(explore, Rational(1));
  return total;
}

/// Exact check of every constraint of `f`. The formula is matched to the
/// model by variable name and value symbol.
inline bool satisfies(const Scm& m, const Formula& f, std::uint64_t support_cap = kDefaultSupportCap) {
  Formula g = rebind(f, m.variables, m.domain);
  for (const auto& c : g.constraints) {
    Rational lhs = 0;
    for (const auto& s : c.lhs) lhs += s.coefficient * term_probability(m, s.term.event, support_cap);
    if (!holds(lhs, c.relation, c.rhs)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline std::size_t index_in(const std::vector<std::string>& names, const std::string& name, const char* what) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ValidationError(std::string("unknown ") + what + " '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

inline nlohmann::json cell_to_json(const Scm& m, const Cell& c) {
  if (c.kind == Cell::Kind::constant) return m.domain.values.at(c.index);
  return nlohmann::json{{"hidden", m.hidden.at(c.index).name}};
}

inline nlohmann::json table_to_json(const Scm& m, const std::vector<std::size_t>& dims, std::size_t depth,
                                    std::size_t& next, const FunctionTable& fn) {
  if (depth == dims.size()) return cell_to_json(m, fn.cells.at(next++));
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t i = 0; i < dims[depth]; ++i) arr.push_back(table_to_json(m, dims, depth + 1, next, fn));
  return arr;
}

inline void table_from_json(const Scm& m, const std::vector<std::string>& hidden_names, const nlohmann::json& j,
                            const std::vector<std::size_t>& dims, std::size_t depth, FunctionTable& fn) {
  if (depth == dims.size()) {
    if (j.is_object()) {
      fn.cells.push_back(Cell::copy(index_in(hidden_names, j.at("hidden").get<std::string>(), "hidden variable")));
    } else {
      auto v = m.domain.index_of(j.get<std::string>());
      if (!v) throw ValidationError("function value '" + j.get<std::string>() + "' not in domain");
      fn.cells.push_back(Cell::constant(*v));
    }
    return;
  }
  if (!j.is_array() || j.size() != dims[depth]) throw ValidationError("function table has wrong shape");
  for (const auto& sub : j) table_from_json(m, hidden_names, sub, dims, depth + 1, fn);
}

}  // namespace detail

inline nlohmann::json to_json(const Scm& m) {
  using nlohmann::json;
  json j;
  j["domain"] = m.domain.values;
  j["variables"] = m.variables;
  json order = json::array();
  for (VarId v : m.order) order.push_back(m.variables[v]);
  j["order"] = order;
  json hidden = json::array();
  for (const auto& h : m.hidden) hidden.push_back({{"name", h.name}, {"values", h.values}});
  if (m.form == DistributionForm::product)
    for (std::size_t h = 0; h < m.hidden.size(); ++h) {
      json probs = json::array();
      for (const auto& p : m.marginals[h]) probs.push_back(to_string(p));
      hidden[h]["probabilities"] = probs;
    }
  j["hidden"] = hidden;
  json fns = json::array();
  for (VarId v = 0; v < m.variables.size(); ++v) {
    const auto& fn = m.functions[v];
    std::vector<std::size_t> dims;
    json hidden_inputs = json::array(), inputs = json::array();
    for (std::size_t h : fn.hidden_keys) {
      hidden_inputs.push_back(m.hidden[h].name);
      dims.push_back(m.hidden[h].size());
    }
    for (VarId p : fn.endo_inputs) {
      inputs.push_back(m.variables[p]);
      dims.push_back(m.domain.size());
    }
    std::size_t next = 0;
    fns.push_back({{"variable", m.variables[v]},
                   {"hidden_inputs", hidden_inputs},
                   {"inputs", inputs},
                   {"table", detail::table_to_json(m, dims, 0, next, fn)}});
  }
  j["functions"] = fns;
  if (m.form == DistributionForm::product) {
    j["distribution"] = "product";
    return j;
  }
  json dist = json::array();
  for (const auto& [u, p] : m.distribution) {
    json labels = json::array();
    for (std::size_t i = 0; i < u.size(); ++i) labels.push_back(m.hidden[i].values[u[i]]);
    dist.push_back(json::array({labels, to_string(p)}));
  }
  j["distribution"] = dist;
  return j;
}

/// Product-form models carry "probabilities" on each hidden variable and
/// "distribution": "product". Throws ValidationError (or a json
/// exception) on malformed input.
inline Scm scm_from_json(const nlohmann::json& j) {
  Scm m;
  m.domain.values = j.at("domain").get<std::vector<std::string>>();
  m.variables = j.at("variables").get<std::vector<std::string>>();
  for (const auto& name : j.at("order")) m.order.push_back(detail::index_in(m.variables, name.get<std::string>(), "variable"));
  std::vector<std::string> hidden_names;
  for (const auto& h : j.at("hidden")) {
    m.hidden.push_back(HiddenVariable{h.at("name").get<std::string>(), h.at("values").get<std::vector<std::string>>()});
    hidden_names.push_back(m.hidden.back().name);
  }
  m.functions.resize(m.variables.size());
  std::vector<bool> defined(m.variables.size(), false);
  for (const auto& fj : j.at("functions")) {
    VarId v = detail::index_in(m.variables, fj.at("variable").get<std::string>(), "variable");
    if (defined[v]) throw ValidationError("duplicate function for '" + m.variables[v] + "'");
    defined[v] = true;
    FunctionTable fn;
    std::vector<std::size_t> dims;
    for (const auto& h : fj.at("hidden_inputs")) {
      fn.hidden_keys.push_back(detail::index_in(hidden_names, h.get<std::string>(), "hidden variable"));
      dims.push_back(m.hidden[fn.hidden_keys.back()].size());
    }
    for (const auto& p : fj.at("inputs")) {
      fn.endo_inputs.push_back(detail::index_in(m.variables, p.get<std::string>(), "variable"));
      dims.push_back(m.domain.size());
    }
    detail::table_from_json(m, hidden_names, fj.at("table"), dims, 0, fn);
    m.functions[v] = std::move(fn);
  }
  for (VarId v = 0; v < m.variables.size(); ++v)
    if (!defined[v]) throw ValidationError("missing function for '" + m.variables[v] + "'");
  if (j.at("distribution").is_string()) {
    if (j.at("distribution").get<std::string>() != "product") throw ValidationError("unknown distribution form");
    m.form = DistributionForm::product;
    for (const auto& h : j.at("hidden")) {
      std::vector<Rational> probs;
      for (const auto& p : h.at("probabilities")) probs.push_back(parse_rational(p.get<std::string>()));
      m.marginals.push_back(std::move(probs));
    }
    validate(m);
    return m;
  }
  for (const auto& entry : j.at("distribution")) {
    if (!entry.is_array() || entry.size() != 2) throw ValidationError("distribution entries are [tuple, probability] pairs");
    std::vector<std::size_t> u;
    const auto& labels = entry[0];
    if (labels.size() != m.hidden.size()) throw ValidationError("hidden tuple has wrong arity");
    for (std::size_t i = 0; i < labels.size(); ++i)
      u.push_back(detail::index_in(m.hidden[i].values, labels[i].get<std::string>(), "hidden value"));
    m.distribution.emplace_back(std::move(u), parse_rational(entry[1].get<std::string>()));
  }
  validate(m);
  return m;
}

}  // namespace pchsat

#endif  // PCHSAT_SCM_HPP

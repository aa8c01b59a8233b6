#ifndef PCHSAT_LPCORE_HPP
#define PCHSAT_LPCORE_HPP

// Exact rational linear feasibility. Phase-one primal simplex on a dense
// tableau with Bland's rule; infeasibility is reported with a Farkas
// certificate read off the final reduced costs.

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pchsat/common.hpp"

namespace pchsat {

inline constexpr std::uint64_t kDefaultLpVariableCap = 1'000'000;

struct LpRow {
  std::vector<std::pair<std::size_t, Rational>> terms;  // (variable, coefficient)
  Relation relation = Relation::le;
  Rational rhs;
  std::string name;
};

struct RationalLinearProgram {
  std::vector<std::string> variables;
  /// Lower bound per variable; nullopt means free. Defaults to 0.
  std::vector<std::optional<Rational>> lower_bounds;
  std::vector<LpRow> rows;

  std::size_t num_variables() const { return variables.size(); }
  std::size_t num_rows() const { return rows.size(); }

  std::size_t add_variable(std::string name, std::optional<Rational> lower = Rational(0)) {
    variables.push_back(std::move(name));
    lower_bounds.push_back(std::move(lower));
    return variables.size() - 1;
  }

  std::size_t add_row(LpRow row) {
    rows.push_back(std::move(row));
    return rows.size() - 1;
  }
};

enum class LpStatus { feasible, infeasible };

struct LpOutcome {
  LpStatus status = LpStatus::infeasible;
  std::vector<Rational> point;  // when feasible
  /// When infeasible: one multiplier per row, applied to the row written as
  /// `a x <= b` (`>=` rows are negated first). Inequality multipliers are
  /// nonnegative; equality multipliers are free.
  std::vector<Rational> farkas;
  std::size_t pivots = 0;
};

struct LpOptions {
  std::uint64_t max_variables = kDefaultLpVariableCap;
};

/// True iff `point` meets every bound and row exactly.
inline bool check_point(const RationalLinearProgram& lp, const std::vector<Rational>& point) {
  if (point.size() != lp.num_variables()) return false;
  for (std::size_t j = 0; j < point.size(); ++j)
    if (lp.lower_bounds[j] && point[j] < *lp.lower_bounds[j]) return false;
  for (const auto& row : lp.rows) {
    Rational lhs = 0;
    for (const auto& [j, a] : row.terms) {
      if (j >= point.size()) return false;
      lhs += a * point[j];
    }
    if (!holds(lhs, row.relation, row.rhs)) return false;
  }
  return true;
}

/// True iff `multipliers` prove infeasibility: with r = sum_i l_i * row_i
/// (rows in `<=` orientation), r is nonnegative on bounded variables and zero
/// on free ones, and sum_i l_i * rhs_i < sum_j r_j * lower_j.
inline bool verify_farkas(const RationalLinearProgram& lp, const std::vector<Rational>& multipliers) {
  if (multipliers.size() != lp.num_rows()) return false;
  std::vector<Rational> combo(lp.num_variables());
  Rational rhs = 0;
  for (std::size_t i = 0; i < lp.rows.size(); ++i) {
    const auto& row = lp.rows[i];
    const Rational& l = multipliers[i];
    if (row.relation != Relation::eq && sgn(l) < 0) return false;
    Rational sign = row.relation == Relation::ge ? -1 : 1;
    for (const auto& [j, a] : row.terms) {
      if (j >= combo.size()) return false;
      combo[j] += sign * l * a;
    }
    rhs += sign * l * row.rhs;
  }
  Rational floor = 0;
  for (std::size_t j = 0; j < combo.size(); ++j) {
    if (!lp.lower_bounds[j]) {
      if (sgn(combo[j]) != 0) return false;
    } else {
      if (sgn(combo[j]) < 0) return false;
      floor += combo[j] * *lp.lower_bounds[j];
    }
  }
  return rhs < floor;
}

namespace detail {

/// Standard-form phase-one tableau: rows A' x' + art = beta', beta' >= 0.
class PhaseOneTableau {
 public:
  PhaseOneTableau(std::size_t rows, std::size_t cols) : m_(rows), n_(cols), t_(rows, std::vector<Rational>(cols)), rhs_(rows), obj_(cols), basis_(rows) {}

  std::vector<Rational>& row(std::size_t i) { return t_[i]; }
  Rational& rhs(std::size_t i) { return rhs_[i]; }
  std::vector<std::size_t>& basis() { return basis_; }
  std::vector<Rational>& objective() { return obj_; }
  Rational& objective_rhs() { return obj_rhs_; }

  /// Runs Bland's rule until optimal or the objective reaches zero.
  std::size_t run() {
    std::size_t pivots = 0;
    while (sgn(obj_rhs_) != 0) {
      std::size_t enter = n_;
      for (std::size_t j = 0; j < n_; ++j)
        if (sgn(obj_[j]) < 0) {
          enter = j;
          break;
        }
      if (enter == n_) break;
      std::size_t leave = m_;
      Rational best;
      for (std::size_t i = 0; i < m_; ++i) {
        if (sgn(t_[i][enter]) <= 0) continue;
        Rational ratio = rhs_[i] / t_[i][enter];
        if (leave == m_ || ratio < best || (ratio == best && basis_[i] < basis_[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave == m_) throw InternalError("phase-one simplex found an unbounded ray");
      pivot(leave, enter);
      ++pivots;
    }
    return pivots;
  }

  // The objective row stores reduced costs d_j and obj_rhs = -w for current
  // phase-one objective value w.
  Rational objective_value() const { return -obj_rhs_; }

 private:
  std::size_t m_, n_;
  std::vector<std::vector<Rational>> t_;
  std::vector<Rational> rhs_;
  std::vector<Rational> obj_;
  Rational obj_rhs_;
  std::vector<std::size_t> basis_;

  void pivot(std::size_t r, std::size_t c) {
    std::vector<Rational>& prow = t_[r];
    Rational inv = 1 / prow[c];
    std::vector<std::size_t> nz;
    for (std::size_t j = 0; j < n_; ++j)
      if (sgn(prow[j]) != 0) {
        prow[j] *= inv;
        nz.push_back(j);
      }
    rhs_[r] *= inv;
    Rational factor;
    auto eliminate = [&](std::vector<Rational>& target, Rational& target_rhs) {
      if (sgn(target[c]) == 0) return;
      factor = target[c];
      for (std::size_t j : nz) target[j] -= factor * prow[j];
      target_rhs -= factor * rhs_[r];
    };
    for (std::size_t i = 0; i < m_; ++i)
      if (i != r) eliminate(t_[i], rhs_[i]);
    eliminate(obj_, obj_rhs_);
    basis_[r] = c;
  }
};

}  // namespace detail

/// Decides feasibility exactly. Total: returns a point satisfying
/// `check_point` or multipliers satisfying `verify_farkas`. Throws
/// LpTooLarge past the variable cap.
inline LpOutcome solve_feasibility(const RationalLinearProgram& lp, const LpOptions& options = {}) {
  const std::size_t n = lp.num_variables(), m = lp.num_rows();
  if (n > options.max_variables) throw LpTooLarge(std::to_string(n), options.max_variables);

  // Nonnegative columns: x_j = lower_j + x'_j, or x_j = x+ - x- when free.
  struct Column {
    std::size_t var;
    bool negated;
  };
  std::vector<Column> raw_columns;
  std::vector<std::vector<std::pair<std::size_t, Rational>>> raw_entries;
  std::vector<std::size_t> first_column(n);
  for (std::size_t j = 0; j < n; ++j) {
    first_column[j] = raw_columns.size();
    raw_columns.push_back({j, false});
    if (!lp.lower_bounds[j]) raw_columns.push_back({j, true});
  }
  raw_entries.resize(raw_columns.size());

  // GMP arithmetic assumes canonical operands; callers may not supply them.
  auto canonical = [](Rational q) {
    q.canonicalize();
    return q;
  };
  std::vector<Rational> lower(n);
  for (std::size_t j = 0; j < n; ++j)
    if (lp.lower_bounds[j]) lower[j] = canonical(*lp.lower_bounds[j]);
  std::vector<Rational> beta(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::map<std::size_t, Rational> merged;
    for (const auto& [j, a] : lp.rows[i].terms) {
      if (j >= n) throw ValidationError("LP row references unknown variable");
      merged[j] += canonical(a);
    }
    beta[i] = canonical(lp.rows[i].rhs);
    for (const auto& [j, a] : merged) {
      if (sgn(a) == 0) continue;
      if (lp.lower_bounds[j]) beta[i] -= a * lower[j];
      raw_entries[first_column[j]].emplace_back(i, a);
      if (!lp.lower_bounds[j]) raw_entries[first_column[j] + 1].emplace_back(i, -a);
    }
  }

  // Identical columns are interchangeable; keep the first of each class and
  // drop all-zero columns.
  std::map<std::vector<std::pair<std::size_t, Rational>>, std::size_t> seen;
  std::vector<std::size_t> kept;  // raw column ids in tableau order
  for (std::size_t c = 0; c < raw_columns.size(); ++c) {
    if (raw_entries[c].empty()) continue;
    if (seen.emplace(raw_entries[c], kept.size()).second) kept.push_back(c);
  }

  std::vector<int> flip(m, 1);
  for (std::size_t i = 0; i < m; ++i)
    if (sgn(beta[i]) < 0) flip[i] = -1;

  // Slack columns follow the structural ones; artificials come last.
  std::vector<std::optional<std::size_t>> slack_col(m);
  std::size_t cols = kept.size();
  for (std::size_t i = 0; i < m; ++i)
    if (lp.rows[i].relation != Relation::eq) slack_col[i] = cols++;
  std::vector<std::optional<std::size_t>> art_col(m);
  std::vector<std::size_t> initial_basic(m);
  for (std::size_t i = 0; i < m; ++i) {
    int slack_sign = lp.rows[i].relation == Relation::le ? 1 : -1;
    if (slack_col[i] && slack_sign * flip[i] == 1) {
      initial_basic[i] = *slack_col[i];
    } else {
      art_col[i] = cols;
      initial_basic[i] = cols++;
    }
  }

  detail::PhaseOneTableau tab(m, cols);
  for (std::size_t k = 0; k < kept.size(); ++k)
    for (const auto& [i, a] : raw_entries[kept[k]]) tab.row(i)[k] = flip[i] * a;
  for (std::size_t i = 0; i < m; ++i) {
    if (slack_col[i]) tab.row(i)[*slack_col[i]] = (lp.rows[i].relation == Relation::le ? 1 : -1) * flip[i];
    if (art_col[i]) tab.row(i)[*art_col[i]] = 1;
    tab.rhs(i) = flip[i] * beta[i];
    tab.basis()[i] = initial_basic[i];
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!art_col[i]) continue;
    const auto& r = tab.row(i);
    for (std::size_t j = 0; j < cols; ++j)
      if (sgn(r[j]) != 0 && j != *art_col[i]) tab.objective()[j] -= r[j];
    tab.objective_rhs() -= tab.rhs(i);
  }

  LpOutcome out;
  out.pivots = tab.run();
  if (sgn(tab.objective_value()) == 0) {
    out.status = LpStatus::feasible;
    std::vector<Rational> shifted(raw_columns.size());
    for (std::size_t i = 0; i < m; ++i)
      if (tab.basis()[i] < kept.size()) shifted[kept[tab.basis()[i]]] = tab.rhs(i);
    out.point.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t c = first_column[j];
      if (lp.lower_bounds[j]) out.point[j] = lower[j] + shifted[c];
      else out.point[j] = shifted[c] - shifted[c + 1];
    }
    if (!check_point(lp, out.point)) throw InternalError("simplex produced a point violating the LP");
    return out;
  }

  out.status = LpStatus::infeasible;
  out.farkas.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t k = initial_basic[i];
    Rational cost = art_col[i] ? 1 : 0;
    Rational y = cost - tab.objective()[k];
    Rational mu = -y * flip[i];
    out.farkas[i] = lp.rows[i].relation == Relation::ge ? Rational(-mu) : mu;
  }
  if (!verify_farkas(lp, out.farkas)) throw InternalError("simplex produced an invalid Farkas certificate");
  return out;
}

/// Diagnostic export in CPLEX LP syntax. Rationals are printed as decimals,
/// so the export is not exact.
inline std::string to_cplex_lp(const RationalLinearProgram& lp) {
  auto sanitize = [](const std::string& name) {
    std::string out;
    for (char c : name) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') ? c : '_';
    if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0]))) out = "x_" + out;
    return out;
  };
  auto decimal = [](const Rational& q) {
    std::ostringstream os;
    os.precision(17);
    os << q.get_d();
    return os.str();
  };
  std::ostringstream os;
  os << "\\ feasibility problem, " << lp.num_variables() << " variables, " << lp.num_rows() << " rows\n";
  os << "Minimize\n obj: 0\nSubject To\n";
  for (std::size_t i = 0; i < lp.rows.size(); ++i) {
    const auto& row = lp.rows[i];
    os << " " << (row.name.empty() ? "r" + std::to_string(i) : sanitize(row.name)) << ":";
    if (row.terms.empty()) os << " 0 " << sanitize(lp.variables.empty() ? "x" : lp.variables[0]);
    for (const auto& [j, a] : row.terms)
      os << (sgn(a) < 0 ? " - " : " + ") << decimal(abs(a)) << " " << sanitize(lp.variables[j]);
    os << " " << to_string(row.relation) << " " << decimal(row.rhs) << "\n";
  }
  os << "Bounds\n";
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    if (!lp.lower_bounds[j]) os << " " << sanitize(lp.variables[j]) << " free\n";
    else if (sgn(*lp.lower_bounds[j]) != 0) os << " " << sanitize(lp.variables[j]) << " >= " << decimal(*lp.lower_bounds[j]) << "\n";
  }
  os << "End\n";
  return os.str();
}

}  // namespace pchsat

#endif  // PCHSAT_LPCORE_HPP

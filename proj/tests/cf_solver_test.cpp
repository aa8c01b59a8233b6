#include <gtest/gtest.h>

#include "pchsat/cf_solver.hpp"
#include "pchsat/oracle.hpp"
#include "pchsat/prob_solver.hpp"
#include "pchsat/reductions.hpp"
#include "test_support.hpp"

using namespace pchsat;

namespace {

constexpr const char* kClauseImage = R"(
domain {0,1};
vars V, W;
P[[V=1] W=1] = 0;
P[[W=1] V=1] = 0;
3 P[V=1] >= 1;
)";

Formula with_vars(std::size_t n, std::size_t d) {
  Formula f;
  for (std::size_t v = 0; v < d; ++v) f.domain.values.push_back(std::to_string(v));
  for (std::size_t i = 0; i < n; ++i) f.variables.push_back("X" + std::to_string(i));
  return f;
}

std::vector<VarId> identity(std::size_t n) {
  std::vector<VarId> o(n);
  for (std::size_t i = 0; i < n; ++i) o[i] = i;
  return o;
}

}  // namespace

TEST(FunctionSpace, Cardinalities) {
  auto fs = enumerate_function_space(with_vars(2, 2), identity(2));
  EXPECT_EQ(fs.sizes, (std::vector<std::uint64_t>{2, 4}));
  EXPECT_EQ(fs.total, 8u);
  EXPECT_EQ(enumerate_function_space(with_vars(3, 2), identity(3)).total, 128u);
  auto one = enumerate_function_space(with_vars(1, 3), identity(1));
  EXPECT_EQ(one.sizes, (std::vector<std::uint64_t>{3}));
  EXPECT_EQ(enumerate_function_space(with_vars(4, 2), identity(4)).total, 32768u);
}

TEST(FunctionSpace, CapReportsExactProduct) {
  try {
    enumerate_function_space(with_vars(5, 2), identity(5));
    FAIL();
  } catch (const FunctionSpaceTooLarge& e) {
    EXPECT_EQ(e.requested(), "2147483648");
    EXPECT_EQ(e.cap(), kDefaultFunctionSpaceCap);
  }
  EXPECT_THROW(enumerate_function_space(with_vars(2, 2), identity(2), 7), FunctionSpaceTooLarge);
  EXPECT_THROW(solve_counterfactual(with_vars(5, 2)), FunctionSpaceTooLarge);
}

TEST(FunctionSpace, TablesRoundTrip) {
  auto fs = enumerate_function_space(with_vars(3, 2), {2, 0, 1});
  for (std::uint64_t x = 0; x < fs.total; ++x) {
    auto q = fs.decode(x);
    EXPECT_EQ(fs.encode(q), x);
    for (std::size_t i = 0; i < q.size(); ++i) {
      auto t = fs.table(i, q[i]);
      EXPECT_EQ(fs.function_index(t), q[i]);
      for (std::size_t r = 0; r < t.size(); ++r) EXPECT_EQ(fs.apply(i, q[i], r), t[r]);
    }
  }
  // The third position reads (X2, X0) with X2 most significant.
  std::vector<std::uint64_t> q{1, fs.function_index({1, 0}), fs.function_index({0, 0, 1, 0})};
  auto values = fs.evaluate(q, {});
  EXPECT_EQ(values, (std::vector<ValueId>{0, 1, 1}));
  EXPECT_EQ(fs.evaluate(q, {Atom{0, 1}}), (std::vector<ValueId>{1, 0, 1}));
}

TEST(CfLp, SingleVariable) {
  Formula f = parse("domain {0,1}; vars V; P[V=0] >= 1;");
  auto lp = build_lp_for_ordering(f, enumerate_function_space(f, {0}));
  EXPECT_EQ(lp.num_variables(), 2u);
  ASSERT_EQ(lp.num_rows(), 2u);
  EXPECT_EQ(lp.rows[1].terms, (std::vector<std::pair<std::size_t, Rational>>{{0, 1}}));
  EXPECT_EQ(lp.rows[1].relation, Relation::ge);
}

TEST(CfLp, InterventionalTermCountsTuples) {
  Formula f = parse(kClauseImage);
  auto fs = enumerate_function_space(f, {0, 1});
  auto lp = build_lp_for_ordering(f, fs);
  EXPECT_EQ(lp.num_variables(), 8u);
  // Under V := 1, W = q_2(1): the tables (0,1) and (1,1), for either q_1.
  std::vector<std::size_t> cols;
  for (auto& [j, a] : lp.rows[1].terms) cols.push_back(j);
  EXPECT_EQ(cols, (std::vector<std::size_t>{1, 3, 5, 7}));
  // W comes after V, so intervening on W never changes V.
  cols.clear();
  for (auto& [j, a] : lp.rows[2].terms) cols.push_back(j);
  EXPECT_EQ(cols, (std::vector<std::size_t>{4, 5, 6, 7}));
}

TEST(CfSolve, SatisfiableClauseImage) {
  Formula f = parse(kClauseImage);
  CfVerdict v = solve_counterfactual(f);
  ASSERT_TRUE(v.satisfiable);
  // V must read W: with V first, P[V=1] is forced to 0.
  EXPECT_EQ(v.orderings_tried, 2u);
  EXPECT_EQ(v.model->ordering, (std::vector<VarId>{1, 0}));
  EXPECT_TRUE(verify_certificate(f, *v.model));
}

TEST(CfSolve, ContradictoryClauseImage) {
  Formula f = parse(std::string(kClauseImage) + "3 P[W=1] >= 1;");
  CfVerdict v = solve_counterfactual(f);
  EXPECT_FALSE(v.satisfiable);
  EXPECT_EQ(v.orderings_tried, 2u);
}

TEST(CfSolve, InterventionAgainstObservation) {
  CfVerdict v = solve_counterfactual(parse("domain {0,1}; vars V1, V2; P[[V1=1] V2=1] = 0; P[V1=1 & V2=1] >= 1/2;"));
  EXPECT_FALSE(v.satisfiable);
}

TEST(CfSolve, FourVariableExampleAgreesWithProbSolver) {
  Formula f = parse(R"(
    domain {0, 1};
    vars V1, V2, V3, V4;
    P[V1=1 & V3=1] >= 1/2;
    P[V2=1 | V3=1] - 2 P[V3=1 | V4=1] >= 0;
    P[V4=1] >= 1/3;
  )");
  CfVerdict v = solve_counterfactual(f);
  ASSERT_TRUE(v.satisfiable);
  EXPECT_TRUE(solve_prob(f).satisfiable);
  EXPECT_TRUE(verify_certificate(f, *v.model));
}

TEST(CfSolve, CounterfactualConjunction) {
  Formula f = parse("domain {0,1}; vars X, Y; P[([X=1] Y=1) & ([X=0] Y=0)] = 1; P[X=1] = 1/2;");
  CfVerdict v = solve_counterfactual(f);
  ASSERT_TRUE(v.satisfiable);
  EXPECT_TRUE(verify_certificate(f, *v.model));
  // Y must read X, so X comes first.
  EXPECT_EQ(v.model->ordering, (std::vector<VarId>{0, 1}));
}

TEST(CfCertificate, RejectsBadDistributionAndShape) {
  Formula f = parse(kClauseImage);
  CanonicalModel m = *solve_counterfactual(f).model;
  CanonicalModel half = m;
  for (auto& e : half.distribution) e.probability /= 2;
  EXPECT_FALSE(verify_certificate(f, half));
  CanonicalModel shape = m;
  shape.distribution[0].tables[1].push_back(0);
  EXPECT_FALSE(verify_certificate(f, shape));
  CanonicalModel order = m;
  order.ordering = {1, 1};
  EXPECT_FALSE(verify_certificate(f, order));
}

TEST(CfCertificate, ScmRespectsOrdering) {
  Formula f = parse(kClauseImage);
  CanonicalModel m = *solve_counterfactual(f).model;
  Scm s = to_scm(m);
  EXPECT_NO_THROW(validate(s));
  ASSERT_EQ(s.hidden.size(), 1u);
  EXPECT_TRUE(s.functions[m.ordering[0]].endo_inputs.empty());
  EXPECT_EQ(s.functions[m.ordering[1]].endo_inputs, (std::vector<VarId>{m.ordering[0]}));
  EXPECT_TRUE(satisfies(s, f));
}

TEST(CfCertificate, JsonRoundTrip) {
  Formula f = parse("domain {lo, hi}; vars A, B; P[[A=hi] B=hi] = 1/3; P[A=lo | B=lo] >= 1/2;");
  CfVerdict v = solve_counterfactual(f);
  ASSERT_TRUE(v.satisfiable);
  auto back = canonical_model_from_json(nlohmann::json::parse(to_json(*v.model).dump()));
  EXPECT_EQ(back, *v.model);
  EXPECT_TRUE(verify_certificate(f, back));
  auto j = to_json(*v.model);
  j["distribution"][0]["q"][1] = "hi";
  EXPECT_FALSE(verify_certificate(f, canonical_model_from_json(j)));
}

TEST(CfSolve, ThreadCountDoesNotChangeResult) {
  pchsat::testing::FormulaGenerator gen(31);
  pchsat::testing::RandomFormulaOptions opt;
  opt.max_vars = 3;
  opt.max_domain = 2;
  opt.interventions = true;
  for (int trial = 0; trial < 15; ++trial) {
    Formula f = gen.formula(opt);
    CfSolveOptions many;
    many.threads = 4;
    CfVerdict a = solve_counterfactual(f), b = solve_counterfactual(f, many);
    EXPECT_EQ(a.satisfiable, b.satisfiable);
    EXPECT_EQ(a.model.has_value(), b.model.has_value());
    if (a.model && b.model) {
      EXPECT_TRUE(*a.model == *b.model);
    }
  }
}

TEST(CfSolveProperty, AgreesWithProbSolverWithoutInterventions) {
  pchsat::testing::FormulaGenerator gen(77);
  pchsat::testing::RandomFormulaOptions opt;
  opt.max_vars = 3;
  opt.max_domain = 2;
  for (int trial = 0; trial < 60; ++trial) {
    Formula f = gen.formula(opt);
    CfVerdict v = solve_counterfactual(f);
    ASSERT_EQ(v.satisfiable, solve_prob(f).satisfiable) << to_text(f);
    if (v.satisfiable) {
      EXPECT_TRUE(verify_certificate(f, *v.model)) << to_text(f);
    }
  }
}

TEST(CfSolveProperty, InterventionalCertificatesVerify) {
  pchsat::testing::FormulaGenerator gen(8);
  pchsat::testing::RandomFormulaOptions opt;
  opt.max_vars = 3;
  opt.max_domain = 2;
  opt.interventions = true;
  int sat = 0;
  for (int trial = 0; trial < 40; ++trial) {
    Formula f = gen.formula(opt);
    CfVerdict v = solve_counterfactual(f);
    if (!v.satisfiable) continue;
    ++sat;
    EXPECT_TRUE(verify_certificate(f, *v.model)) << to_text(f);
    EXPECT_LE(v.model->distribution.size(), v.lp_rows);
  }
  EXPECT_GT(sat, 5);
}

TEST(CfSolveProperty, OneVariableReductionFidelity) {
  std::vector<CnfInstance> cases{
      {1, {{1, 1, 1}}}, {1, {{-1, -1, -1}}}, {1, {{1, 1, 1}, {-1, -1, -1}}}, {1, {{1, -1, 1}}}, {1, {}}};
  for (const auto& cnf : cases) {
    Formula f = gen_threesat_causal(cnf);
    EXPECT_EQ(solve_counterfactual(f).satisfiable, truth_table_sat(cnf)) << to_dimacs(cnf);
  }
}

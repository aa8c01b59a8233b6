#include <gtest/gtest.h>

#include <map>

#include "pchsat/oracle.hpp"
#include "pchsat/prob_solver.hpp"
#include "test_support.hpp"

using namespace pchsat;

namespace {

constexpr const char* kFourVariable = R"(
domain {0, 1};
vars V1, V2, V3, V4;
P[V1=1 & V3=1] >= 1/2;
P[V2=1 | V3=1] - 2 P[V3=1 | V4=1] >= 0;
P[V4=1] >= 1/3;
)";

struct Built {
  Formula f;
  NiceTreeDecomposition nt;
  BagLp blp;
};

Built build(const std::string& text) {
  Built b{parse(text), {}, {}};
  b.nt = make_nice(compute_decomposition(build_primal_graph(b.f)));
  b.blp = build_lp(b.f, b.nt);
  return b;
}

// The listed solution: everything 0 except these entries.
std::vector<Rational> listed_solution(const RationalLinearProgram& lp) {
  const std::map<std::string, Rational> nonzero{
      {"p[V2=1]", 1},           {"p[V1=0]", Rational(1, 2)},      {"p[V1=1]", Rational(1, 2)},
      {"p[V3=0]", Rational(1, 2)}, {"p[V3=1]", Rational(1, 2)},   {"p[V1=0,V3=0]", Rational(1, 2)},
      {"p[V1=1,V3=1]", Rational(1, 2)}, {"p[V2=1,V3=0]", Rational(1, 2)}, {"p[V2=1,V3=1]", Rational(1, 2)},
      {"p[V3=0,V4=0]", Rational(1, 2)}, {"p[V3=1,V4=1]", Rational(1, 2)}};
  std::vector<Rational> x(lp.num_variables());
  std::size_t found = 0;
  for (std::size_t j = 0; j < x.size(); ++j)
    if (auto it = nonzero.find(lp.variables[j]); it != nonzero.end()) {
      x[j] = it->second;
      ++found;
    }
  EXPECT_EQ(found, nonzero.size());
  return x;
}

}  // namespace

TEST(ProbLp, FourVariableExampleShape) {
  Built b = build(kFourVariable);
  EXPECT_EQ(b.blp.lp.num_variables(), 18u);
  EXPECT_EQ(b.blp.consistency_families, 5u);
  // 6 normalizations + 10 consistency rows + 3 formula rows.
  EXPECT_EQ(b.blp.lp.num_rows(), 19u);
  const auto& first = b.blp.lp.rows.back().terms;
  (void)first;
  const LpRow& c0 = b.blp.lp.rows[16];
  ASSERT_EQ(c0.terms.size(), 1u);
  EXPECT_EQ(b.blp.lp.variables[c0.terms[0].first], "p[V1=1,V3=1]");
  EXPECT_EQ(c0.rhs, Rational(1, 2));
  EXPECT_EQ(c0.relation, Relation::ge);
  const LpRow& c2 = b.blp.lp.rows[18];
  std::vector<std::string> names;
  for (auto& [j, a] : c2.terms) names.push_back(b.blp.lp.variables[j]);
  EXPECT_EQ(names, (std::vector<std::string>{"p[V3=0,V4=1]", "p[V3=1,V4=1]"}));
}

TEST(ProbLp, ListedSolutionIsFeasible) {
  Built b = build(kFourVariable);
  auto x = listed_solution(b.blp.lp);
  EXPECT_TRUE(check_point(b.blp.lp, x));
  BagMarginalCertificate cert = certificate_from_point(b.f, b.nt, b.blp, x);
  EXPECT_TRUE(verify_certificate(b.f, cert));
  Scm m = reconstruct_scm(cert);
  EXPECT_TRUE(satisfies(m, b.f));
  std::map<std::string, std::vector<Rational>> hidden;
  for (std::size_t h = 0; h < m.hidden.size(); ++h) hidden[m.hidden[h].name] = m.marginals[h];
  ASSERT_TRUE(hidden.count("U_V1"));
  EXPECT_EQ(hidden["U_V1"][1], Rational(1, 2));
  ASSERT_TRUE(hidden.count("U_V3|V1=0"));
  ASSERT_TRUE(hidden.count("U_V3|V1=1"));
  EXPECT_EQ(hidden["U_V3|V1=0"][1], 0);
  EXPECT_EQ(hidden["U_V3|V1=1"][1], 1);
  EXPECT_EQ(m.order[0], 0u);  // V1 first, as in the traversal
}

TEST(ProbLp, JointProbabilityOfListedSolution) {
  Built b = build(kFourVariable);
  BagMarginalCertificate cert = certificate_from_point(b.f, b.nt, b.blp, listed_solution(b.blp.lp));
  EXPECT_EQ(joint_probability(cert, {1, 1, 1, 1}), Rational(1, 2));
  EXPECT_EQ(joint_probability(cert, {1, 0, 1, 1}), 0);
  Rational total = 0;
  std::vector<std::vector<Rational>> recovered(cert.bags.size());
  for (std::size_t b = 0; b < cert.bags.size(); ++b) recovered[b].assign(cert.marginals[b].size(), 0);
  for (std::size_t t = 0; t < 16; ++t) {
    std::vector<ValueId> a{t >> 3 & 1, t >> 2 & 1, t >> 1 & 1, t & 1};
    Rational p = joint_probability(cert, a);
    total += p;
    for (std::size_t b = 0; b < cert.bags.size(); ++b) {
      std::size_t idx = 0;
      for (VarId v : cert.bags[b]) idx = idx * 2 + a[v];
      recovered[b][idx] += p;
    }
  }
  EXPECT_EQ(total, 1);
  EXPECT_EQ(recovered, cert.marginals);
}

TEST(ProbLp, PerturbedCertificateFails) {
  Built b = build(kFourVariable);
  BagMarginalCertificate cert = certificate_from_point(b.f, b.nt, b.blp, listed_solution(b.blp.lp));
  cert.marginals[1][0] += Rational(1, 100);
  cert.marginals[1][1] -= Rational(1, 100);
  EXPECT_FALSE(verify_certificate(b.f, cert));
}

TEST(ProbLp, SingleVariable) {
  Built b = build("domain {0,1}; vars V; P[V=0] >= 1;");
  EXPECT_EQ(b.blp.lp.variables, (std::vector<std::string>{"p[V=0]", "p[V=1]"}));
  ASSERT_EQ(b.blp.lp.num_rows(), 2u);
  EXPECT_EQ(b.blp.lp.rows[1].terms, (std::vector<std::pair<std::size_t, Rational>>{{0, 1}}));
  EXPECT_EQ(b.blp.lp.rows[1].relation, Relation::ge);
}

TEST(ProbSolve, FourVariableExampleIsSat) {
  Formula f = parse(kFourVariable);
  ProbVerdict v = solve_prob(f);
  ASSERT_TRUE(v.satisfiable);
  EXPECT_EQ(v.width, 1u);
  EXPECT_TRUE(verify_certificate(f, *v.certificate));
  EXPECT_TRUE(satisfies(reconstruct_scm(*v.certificate), f));
}

TEST(ProbSolve, ContradictoryMarginals) {
  Formula f = parse("domain {0,1}; vars V; P[V=0] = 1; P[V=1] = 1;");
  ProbVerdict v = solve_prob(f);
  EXPECT_FALSE(v.satisfiable);
  PrimalGraph g = build_primal_graph(v.solved);
  BagLp blp = build_lp(v.solved, make_nice(compute_decomposition(g)));
  EXPECT_TRUE(verify_farkas(blp.lp, v.farkas));
}

TEST(ProbSolve, RaisedBoundMatchesOracle) {
  for (const char* rhs : {"3/4", "1/2", "1"}) {
    std::string text = std::string(kFourVariable);
    text.replace(text.find("1/3"), 3, rhs);
    Formula f = parse(text);
    EXPECT_EQ(solve_prob(f).satisfiable, prob_joint_oracle(f).satisfiable) << rhs;
  }
}

TEST(ProbSolve, RejectsInterventions) {
  EXPECT_THROW(solve_prob(parse("vars V, W; P[[V=1] W=1] >= 0;")), FragmentMismatch);
}

TEST(ProbSolve, EmptyFormulaIsSat) {
  Formula f = parse("vars V, W;");
  ProbVerdict v = solve_prob(f);
  ASSERT_TRUE(v.satisfiable);
  EXPECT_TRUE(verify_certificate(f, *v.certificate));
}

TEST(ProbSolve, CertificateJsonRoundTrip) {
  Formula f = parse(kFourVariable);
  ProbVerdict v = solve_prob(f);
  ASSERT_TRUE(v.satisfiable);
  auto back = bag_certificate_from_json(nlohmann::json::parse(to_json(*v.certificate).dump()));
  EXPECT_EQ(back, *v.certificate);
  EXPECT_TRUE(verify_certificate(f, back));
}

TEST(ProbSolveProperty, AgreesWithJointOracle) {
  pchsat::testing::FormulaGenerator gen(2024);
  pchsat::testing::RandomFormulaOptions opt;
  int sat = 0, unsat = 0;
  for (int trial = 0; trial < 220; ++trial) {
    Formula f = gen.formula(opt);
    bool expected = prob_joint_oracle(f).satisfiable;
    ProbVerdict v = solve_prob(f);
    ASSERT_EQ(v.satisfiable, expected) << to_text(f);
    ProbSolveOptions exact;
    exact.strategy = DecompositionStrategy::exact;
    EXPECT_EQ(solve_prob(f, exact).satisfiable, expected);
    if (expected) {
      ++sat;
      ASSERT_TRUE(verify_certificate(f, *v.certificate)) << to_text(f);
      ASSERT_TRUE(satisfies(reconstruct_scm(*v.certificate), f)) << to_text(f);
    } else {
      ++unsat;
    }
  }
  EXPECT_GT(sat, 40);
  EXPECT_GT(unsat, 40);
}

TEST(ProbSolveProperty, JointProbabilityRecoversMarginals) {
  pchsat::testing::FormulaGenerator gen(99);
  pchsat::testing::RandomFormulaOptions opt;
  opt.max_vars = 4;
  opt.max_domain = 3;
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    Formula f = gen.formula(opt);
    ProbVerdict v = solve_prob(f, ProbSolveOptions{DecompositionStrategy::greedy_minfill, kDefaultExactLimit, {}, false});
    if (!v.satisfiable) continue;
    const auto& cert = *v.certificate;
    const std::size_t n = cert.variables.size(), d = cert.domain.size();
    std::vector<std::vector<Rational>> recovered(cert.bags.size());
    for (std::size_t b = 0; b < cert.bags.size(); ++b) recovered[b].assign(cert.marginals[b].size(), 0);
    std::vector<ValueId> a(n, 0);
    while (true) {
      Rational p = joint_probability(cert, a);
      for (std::size_t b = 0; b < cert.bags.size(); ++b) {
        std::size_t idx = 0;
        for (VarId w : cert.bags[b]) idx = idx * d + a[w];
        recovered[b][idx] += p;
      }
      std::size_t i = 0;
      while (i < n && ++a[i] == d) a[i++] = 0;
      if (i == n) break;
    }
    EXPECT_EQ(recovered, cert.marginals) << to_text(f);
    ++checked;
  }
  EXPECT_GT(checked, 10);
}

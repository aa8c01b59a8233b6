#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "pchsat/oracle.hpp"
#include "test_support.hpp"

using namespace pchsat;

TEST(JointOracle, FourVariableExample) {
  Formula f = parse(R"(
    domain {0, 1};
    vars V1, V2, V3, V4;
    P[V1=1 & V3=1] >= 1/2;
    P[V2=1 | V3=1] - 2 P[V3=1 | V4=1] >= 0;
    P[V4=1] >= 1/3;
  )");
  OracleVerdict v = prob_joint_oracle(f);
  ASSERT_TRUE(v.satisfiable);
  EXPECT_EQ(v.joint.probability.size(), 16u);
  EXPECT_TRUE(joint_satisfies(f, v.joint));
}

TEST(JointOracle, ContradictoryMarginals) {
  EXPECT_FALSE(prob_joint_oracle(parse("vars V; P[V=0] = 1; P[V=1] = 1;")).satisfiable);
}

TEST(JointOracle, RefusesLargeJoint) {
  std::string text = "vars ";
  for (int i = 0; i < 17; ++i) text += (i ? ", V" : "V") + std::to_string(i);
  text += "; P[V0=1] >= 0;";
  EXPECT_THROW(prob_joint_oracle(parse(text)), TooLarge);
  try {
    prob_joint_oracle(parse(text));
  } catch (const TooLarge& e) {
    EXPECT_EQ(e.requested(), "131072");
  }
}

TEST(JointOracle, RejectsInterventions) {
  EXPECT_THROW(prob_joint_oracle(parse("vars V, W; P[[V=1] W=1] >= 0;")), FragmentMismatch);
}

TEST(JointOracle, InvariantUnderReorderingAndRenaming) {
  pchsat::testing::FormulaGenerator gen(5);
  pchsat::testing::RandomFormulaOptions opt;
  for (int trial = 0; trial < 60; ++trial) {
    Formula f = gen.formula(opt);
    OracleVerdict v = prob_joint_oracle(f);
    if (v.satisfiable) {
      EXPECT_TRUE(joint_satisfies(f, v.joint));
    }
    std::vector<std::string> vars = f.variables;
    std::reverse(vars.begin(), vars.end());
    DomainSpec dom = f.domain;
    for (auto& s : dom.values) s = "w" + s;
    std::reverse(dom.values.begin(), dom.values.end());
    Formula renamed = f;
    for (auto& s : renamed.domain.values) s = "w" + s;
    Formula g = rebind(renamed, vars, dom);
    EXPECT_EQ(prob_joint_oracle(g).satisfiable, v.satisfiable) << to_text(f);
  }
}

TEST(TruthTable, Basics) {
  EXPECT_TRUE(truth_table_sat(CnfInstance{1, {{1, 1, 1}}}));
  EXPECT_FALSE(truth_table_sat(CnfInstance{1, {{1, 1, 1}, {-1, -1, -1}}}));
  EXPECT_TRUE(truth_table_sat(CnfInstance{3, {}}));
  EXPECT_THROW(truth_table_sat(CnfInstance{21, {}}), TooLarge);
}

TEST(TruthTable, PlantedInstancesAreSatisfiable) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t r = 1 + trial % 8;
    std::vector<bool> planted(r);
    for (std::size_t i = 0; i < r; ++i) planted[i] = rng() & 1;
    CnfInstance cnf{r, {}};
    for (int c = 0; c < 12; ++c) {
      std::array<int, 3> clause{};
      for (auto& lit : clause) {
        int v = static_cast<int>(rng() % r) + 1;
        lit = (rng() & 1) ? v : -v;
      }
      int v = static_cast<int>(rng() % r) + 1;
      clause[rng() % 3] = planted[static_cast<std::size_t>(v - 1)] ? v : -v;
      cnf.clauses.push_back(clause);
    }
    EXPECT_TRUE(truth_table_sat(cnf));
  }
}

TEST(Clique, Basics) {
  ColoredGraph triangle{{1, 2, 3}, {{0, 1}, {0, 2}, {1, 2}}};
  EXPECT_TRUE(max_clique_exists(triangle, 3));
  ColoredGraph path{{1, 2, 3}, {{0, 1}, {1, 2}}};
  EXPECT_FALSE(max_clique_exists(path, 3));
  ColoredGraph big{std::vector<std::size_t>(11, 1), {}};
  EXPECT_THROW(max_clique_exists(big, 1), TooLarge);
}

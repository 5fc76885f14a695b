#include <random>

#include "catch_amalgamated.hpp"
#include "smr/oracles.hpp"
#include "smr/simplex.hpp"
#include "test_util.hpp"

using namespace smr;

TEST_CASE("simplex solves box-constrained toys") {
  {
    LinearProgram lp;
    lp.add_var(1.0, true);  // min x, x in [0,1]
    auto sol = simplex_solve(lp);
    REQUIRE(sol.status == LpSolution::Status::Optimal);
    CHECK(sol.value == Catch::Approx(0.0).margin(1e-12));
  }
  {
    LinearProgram lp;
    int x = lp.add_var(-1.0, false);
    int y = lp.add_var(-1.0, false);
    lp.add_row({{x, 1.0}, {y, 1.0}}, LinearProgram::Rel::Le, 1.0);
    auto sol = simplex_solve(lp);
    REQUIRE(sol.status == LpSolution::Status::Optimal);
    CHECK(sol.value == Catch::Approx(-1.0).margin(1e-9));
  }
}

TEST_CASE("simplex reports infeasible and unbounded problems") {
  {
    LinearProgram lp;
    int x = lp.add_var(1.0, true);
    lp.add_row({{x, 1.0}}, LinearProgram::Rel::Ge, 2.0);
    CHECK(simplex_solve(lp).status == LpSolution::Status::Infeasible);
  }
  {
    LinearProgram lp;
    lp.add_var(-1.0, false);
    CHECK(simplex_solve(lp).status == LpSolution::Status::Unbounded);
  }
}

static LinearProgram switching_block_lp(const std::vector<double>& y) {
  // z(K-1) - sum z_k  s.t.  z_k <= z, z_k <= y_k, everything in [0,1]
  const int k = static_cast<int>(y.size());
  LinearProgram lp;
  int z = lp.add_var(k - 1.0, true);
  for (int i = 0; i < k; ++i) {
    int zi = lp.add_var(-1.0, true);
    lp.add_row({{zi, 1.0}, {z, -1.0}}, LinearProgram::Rel::Le, 0.0);
    lp.add_row({{zi, 1.0}}, LinearProgram::Rel::Le, y[i]);
  }
  return lp;
}

TEST_CASE("switching-block LP optimum is -min(y)") {
  auto sol = simplex_solve(switching_block_lp({0.2, 0.5, 0.9}));
  REQUIRE(sol.status == LpSolution::Status::Optimal);
  CHECK(sol.value == Catch::Approx(-0.2).margin(1e-9));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> kd(2, 6);
  for (int rep = 0; rep < 100; ++rep) {
    int k = kd(rng);
    std::vector<double> y(k);
    double mn = 1.0;
    for (double& v : y) {
      v = u(rng);
      mn = std::min(mn, v);
    }
    auto s = simplex_solve(switching_block_lp(y));
    REQUIRE(s.status == LpSolution::Status::Optimal);
    CHECK(s.value == Catch::Approx(-mn).margin(1e-9));
  }
}

TEST_CASE("brute force handles single nodes and reports lexicographic ties") {
  EnergyModel m;
  m.num_nodes = 1;
  m.num_labels = 3;
  m.unary = {2.0, -1.0, 0.5};
  auto [x, v] = brute_force_min(m);
  CHECK(x == Labeling{1});
  CHECK(v == -1.0);

  EnergyModel two;
  two.num_nodes = 2;
  two.num_labels = 2;
  two.unary = {0.0, 1.0, 1.0, 0.0};
  PairwiseTerm t;
  t.i = 0;
  t.j = 1;
  t.rewards = {2.0, 2.0};
  two.pairwise.push_back(t);
  auto [x2, v2] = brute_force_min(two);
  CHECK(v2 == -1.0);         // (1,1) gives 1+0-2, (0,0) gives 0+1-2: a tie
  CHECK(x2 == Labeling{0, 0});
}

TEST_CASE("brute force refuses oversized label spaces") {
  EnergyModel m;
  m.num_nodes = 30;
  m.num_labels = 4;
  m.unary.assign(120, 0.0);
  CHECK_THROWS_AS(brute_force_min(m), BudgetError);
}

TEST_CASE("tree dynamic programming matches enumeration on forests") {
  std::mt19937_64 rng(11);
  // chain of 2
  {
    EnergyModel m = testutil::random_grid(3, 1, 2, 3);
    auto bf = brute_force_min(m);
    auto dp = tree_dp_min(m);
    CHECK(dp.second == bf.second);
  }
  // single node
  {
    EnergyModel m;
    m.num_nodes = 1;
    m.num_labels = 4;
    m.unary = {3.0, 1.0, 2.0, 5.0};
    auto dp = tree_dp_min(m);
    CHECK(dp.first == Labeling{1});
    CHECK(dp.second == 1.0);
  }
  // star with 6 leaves
  {
    EnergyModel m;
    m.num_nodes = 7;
    m.num_labels = 3;
    std::normal_distribution<double> g(0.0, 1.0);
    m.unary.resize(21);
    for (double& v : m.unary) v = g(rng);
    for (int leaf = 1; leaf < 7; ++leaf) {
      PairwiseTerm t;
      t.i = 0;
      t.j = leaf;
      t.kind = PairwiseTerm::Kind::Dense;
      t.table.resize(9);
      for (double& v : t.table) v = g(rng);
      m.pairwise.push_back(std::move(t));
    }
    auto bf = brute_force_min(m);
    auto dp = tree_dp_min(m);
    CHECK(dp.second == bf.second);
    CHECK(evaluate_energy(m, dp.first) == dp.second);
  }
  // random forests: take a grid and drop edges to break cycles
  for (uint64_t seed = 0; seed < 6; ++seed) {
    EnergyModel m = testutil::random_grid(seed, 2, 4, 3);
    std::vector<PairwiseTerm> kept;
    std::vector<int> comp(m.num_nodes);
    for (int i = 0; i < m.num_nodes; ++i) comp[i] = i;
    for (auto& t : m.pairwise) {
      int a = comp[t.i], b = comp[t.j];
      if (a == b) continue;
      for (int& c : comp)
        if (c == b) c = a;
      kept.push_back(t);
    }
    m.pairwise = kept;
    auto bf = brute_force_min(m);
    auto dp = tree_dp_min(m);
    CHECK(dp.second == bf.second);
  }
}

TEST_CASE("tree dynamic programming rejects cycles and patterns") {
  EnergyModel grid = testutil::random_grid(5, 2, 2, 2);  // 4-cycle
  CHECK_THROWS_AS(tree_dp_min(grid), NotSupportedError);

  std::mt19937_64 rng(1);
  EnergyModel pat = testutil::random_pattern_model(rng, 4, 2, 1, 3, 2);
  CHECK_THROWS_AS(tree_dp_min(pat), NotSupportedError);
}

TEST_CASE("standard-local relaxation has the documented shape") {
  EnergyModel m;
  m.num_nodes = 2;
  m.num_labels = 2;
  m.unary = {0.3, -0.1, 0.2, 0.4};
  PairwiseTerm t;
  t.i = 0;
  t.j = 1;
  t.kind = PairwiseTerm::Kind::Dense;
  t.table = {0.5, -0.25, 1.0, 0.0};
  m.pairwise.push_back(t);

  Relaxation rel = build_relaxation(m, RelaxKind::StandardLocal);
  CHECK(rel.num_unary_vars == 4);
  CHECK(rel.num_pairwise_vars == 4);
  CHECK(rel.consistency_rows == 2);
  CHECK(rel.lp.rows.size() == 2 + 8);  // consistency + marginalization
}

TEST_CASE("pattern relaxation has one variable and one cap row per entry node") {
  std::mt19937_64 rng(3);
  EnergyModel m = testutil::random_pattern_model(rng, 5, 3, 2, 3, 2);
  Relaxation rel = build_relaxation(m, RelaxKind::SmrPattern);
  CHECK(rel.num_entry_vars == 4);
  CHECK(rel.lp.rows.size() == 5u + 4u * 3u);  // consistency + per-entry caps
}

TEST_CASE("cap-row relaxation matches the standard local polytope on associative models") {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    EnergyModel m = testutil::random_grid(seed, 2, 3, 3);
    auto local = simplex_solve(build_relaxation(m, RelaxKind::StandardLocal).lp);
    auto cor1 = simplex_solve(build_relaxation(m, RelaxKind::PairwiseCor1).lp);
    REQUIRE(local.status == LpSolution::Status::Optimal);
    REQUIRE(cor1.status == LpSolution::Status::Optimal);
    CHECK(local.value == Catch::Approx(cor1.value).margin(1e-7));

    auto bf = brute_force_min(m);
    CHECK(local.value <= bf.second + 1e-9);
  }
}

TEST_CASE("marginal rows change nothing for permuted uniform-label blocks") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 5; ++rep) {
    EnergyModel m = testutil::random_pn_potts_model(rng, 6, 3, 2, 3);
    auto plain = simplex_solve(build_relaxation(m, RelaxKind::SmrPattern).lp);
    auto marg = simplex_solve(build_relaxation(m, RelaxKind::WithMarginalization).lp);
    REQUIRE(plain.status == LpSolution::Status::Optimal);
    REQUIRE(marg.status == LpSolution::Status::Optimal);
    CHECK(plain.value == Catch::Approx(marg.value).margin(1e-7));
  }
}

TEST_CASE("marginal rows can strictly tighten general patterns") {
  // two entries of one block share a label at a node, so their joint mass is
  // capped; verified against enumeration
  EnergyModel m;
  m.num_nodes = 3;
  m.num_labels = 2;
  m.unary = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  PatternPotential pot;
  pot.nodes = {0, 1, 2};
  pot.entries.push_back({{0, 0, 1}, -1.0});
  pot.entries.push_back({{0, 1, 0}, -1.0});
  m.patterns.push_back(pot);
  auto plain = simplex_solve(build_relaxation(m, RelaxKind::SmrPattern).lp);
  auto marg = simplex_solve(build_relaxation(m, RelaxKind::WithMarginalization).lp);
  auto bf = brute_force_min(m);
  REQUIRE(plain.status == LpSolution::Status::Optimal);
  REQUIRE(marg.status == LpSolution::Status::Optimal);
  CHECK(marg.value >= plain.value - 1e-9);
  CHECK(marg.value <= bf.second + 1e-9);
}

TEST_CASE("relaxation kinds reject incompatible models") {
  std::mt19937_64 rng(9);
  EnergyModel pat = testutil::random_pattern_model(rng, 4, 2, 1, 3, 2);
  CHECK_THROWS_AS(build_relaxation(pat, RelaxKind::StandardLocal), NotSupportedError);

  EnergyModel signedm = testutil::random_grid(2, 2, 2, 2, /*signed=*/true);
  CHECK_THROWS_AS(build_relaxation(signedm, RelaxKind::PairwiseCor1), NotSupportedError);
  CHECK(build_relaxation(signedm, RelaxKind::Nsmr).lp.num_vars > 0);
}

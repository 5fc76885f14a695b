#include <random>

#include "catch_amalgamated.hpp"
#include "smr/optimize.hpp"
#include "smr/oracles.hpp"
#include "test_util.hpp"

using namespace smr;

namespace {

// Grids whose relaxation is tight, screened against enumeration.
EnergyModel find_zero_gap_grid(uint64_t seed_base, int rows, int cols, int labels,
                               double potts_sigma = 0.3) {
  for (uint64_t s = seed_base; s < seed_base + 200; ++s) {
    EnergyModel m = testutil::random_grid(s, rows, cols, labels, false, potts_sigma);
    auto [bx, bv] = brute_force_min(m);
    auto lp = simplex_solve(build_relaxation(m, RelaxKind::PairwiseCor1).lp);
    if (lp.status == LpSolution::Status::Optimal && bv - lp.value <= 1e-9 * (1.0 + std::abs(bv)))
      return m;
  }
  throw std::runtime_error("no tight instance in seed range");
}

void check_trace_monotone(const Trace& t) {
  for (size_t k = 1; k < t.rows.size(); ++k) {
    CHECK(t.rows[k].best_dual >= t.rows[k - 1].best_dual);
    CHECK(t.rows[k].best_primal <= t.rows[k - 1].best_primal);
  }
}

}  // namespace

TEST_CASE("adaptive step size arithmetic") {
  CHECK(polyak_step_size(0.5, 10.0, 6.0, 16.0) == 0.125);
  CHECK(bundle_inverse_step(0.1, 100.0, 99.999, 4.0, 1e-10, 100.0) == 100.0);  // clamped high
  CHECK(bundle_inverse_step(1.0, 2.0, 1.0, 0.5, 1.0, 100.0) == 1.0);           // clamped low
  CHECK(bundle_inverse_step(0.5, 3.0, 1.0, 4.0, 1e-10, 100.0) == 4.0);
}

TEST_CASE("config invariants are enforced") {
  EnergyModel m = testutil::random_grid(1, 2, 2, 2);
  OptimizerConfig bad = OptimizerConfig::defaults(Method::Subgradient);
  bad.gamma = 0.0;
  CHECK_THROWS_AS(run_subgradient(m, bad), InvalidInputError);
  bad = OptimizerConfig::defaults(Method::Bundle);
  bad.m_l = 1.0;
  CHECK_THROWS_AS(run_bundle(m, bad), InvalidInputError);
  bad = OptimizerConfig::defaults(Method::Bundle);
  bad.bundle_size = 1;
  CHECK_THROWS_AS(run_bundle(m, bad), InvalidInputError);
}

TEST_CASE("decoupled models reach the sum of unary minima") {
  std::mt19937_64 rng(5);
  EnergyModel m;
  m.num_nodes = 6;
  m.num_labels = 3;
  m.unary.resize(18);
  std::normal_distribution<double> g(0.0, 1.0);
  for (double& v : m.unary) v = g(rng);
  double expect = 0.0;
  for (int i = 0; i < 6; ++i) {
    double mn = m.unary_at(i, 0);
    for (int p = 1; p < 3; ++p) mn = std::min(mn, m.unary_at(i, p));
    expect += mn;
  }
  OptimizerConfig cfg = OptimizerConfig::defaults(Method::Subgradient);
  cfg.max_iter = 500;
  RunResult r = run_subgradient(m, cfg);
  CHECK(r.best_dual == Catch::Approx(expect).margin(1e-6));
  CHECK(r.certificate);
  CHECK(r.best_energy == Catch::Approx(expect).margin(1e-9));
}

TEST_CASE("subgradient certifies tight instances at the enumeration optimum") {
  EnergyModel m = find_zero_gap_grid(100, 3, 3, 3);
  auto [bx, bv] = brute_force_min(m);
  OptimizerConfig cfg = OptimizerConfig::defaults(Method::Subgradient);
  cfg.max_iter = 5000;
  cfg.dual_tol = 0.0;
  RunResult r = run_subgradient(m, cfg);
  CHECK(r.best_dual <= bv + 1e-9);
  CHECK(r.best_dual == Catch::Approx(bv).margin(1e-5));
  if (r.certificate) CHECK(r.best_energy == bv);
  check_trace_monotone(r.trace);
}

TEST_CASE("single-plane bundle update is a subgradient step of size 1/w") {
  std::vector<detail::Plane> planes;
  planes.push_back({{2.0, -1.0, 0.5}, 3.0});
  auto beta = detail::solve_bundle_qp(planes, 4.0, 3.0);
  REQUIRE(beta.size() == 1);
  CHECK(beta[0] == Catch::Approx(1.0));
}

TEST_CASE("bundle and subgradient agree on tight instances") {
  EnergyModel m = find_zero_gap_grid(300, 2, 3, 3);
  OptimizerConfig scfg = OptimizerConfig::defaults(Method::Subgradient);
  scfg.max_iter = 5000;
  scfg.dual_tol = 0.0;
  RunResult sres = run_subgradient(m, scfg);

  OptimizerConfig bcfg = OptimizerConfig::defaults(Method::Bundle);
  bcfg.max_iter = 800;
  bcfg.dual_tol = 0.0;
  RunResult bres = run_bundle(m, bcfg);
  CHECK(bres.best_dual == Catch::Approx(sres.best_dual).margin(1e-5));
  check_trace_monotone(bres.trace);

  OptimizerConfig acfg = OptimizerConfig::defaults(Method::AggBundle);
  acfg.max_iter = 800;
  acfg.dual_tol = 0.0;
  RunResult ares = run_aggregated_bundle(m, acfg);
  CHECK(ares.best_dual == Catch::Approx(sres.best_dual).margin(1e-5));
  check_trace_monotone(ares.trace);
}

TEST_CASE("aggregated bundle starts exactly like the full bundle") {
  EnergyModel m = testutil::random_grid(12, 2, 3, 3);
  OptimizerConfig cfg = OptimizerConfig::defaults(Method::Bundle);
  cfg.max_iter = 2;
  cfg.dual_tol = 0.0;
  OptimizerConfig acfg = cfg;
  acfg.method = Method::AggBundle;
  // same gamma/w bounds so the first proposal coincides
  acfg.m_r = cfg.m_l;
  RunResult b = run_bundle(m, cfg);
  RunResult a = run_aggregated_bundle(m, acfg);
  REQUIRE(b.trace.rows.size() >= 2);
  REQUIRE(a.trace.rows.size() >= 2);
  CHECK(a.trace.rows[1].dual == b.trace.rows[1].dual);
}

TEST_CASE("quasi-concave ascent matches the others and degrades to steepest ascent") {
  EnergyModel m = find_zero_gap_grid(500, 2, 3, 3);
  OptimizerConfig scfg = OptimizerConfig::defaults(Method::Subgradient);
  scfg.max_iter = 5000;
  scfg.dual_tol = 0.0;
  RunResult sres = run_subgradient(m, scfg);

  OptimizerConfig qcfg = OptimizerConfig::defaults(Method::QuasiConcave);
  qcfg.max_iter = 600;
  qcfg.dual_tol = 0.0;
  RunResult qres = run_quasi_concave(m, qcfg);
  CHECK(qres.best_dual == Catch::Approx(sres.best_dual).margin(1e-5));
  check_trace_monotone(qres.trace);

  qcfg.memory = 0;  // plain steepest ascent with the same line search
  RunResult steepest = run_quasi_concave(m, qcfg);
  CHECK(steepest.best_dual == Catch::Approx(sres.best_dual).margin(1e-4));
}

TEST_CASE("curvature memory saves oracle calls on a fixed instance") {
  EnergyModel m = find_zero_gap_grid(700, 3, 3, 3);
  auto calls_to_reach = [&](const RunResult& r, double target) -> long long {
    for (const auto& row : r.trace.rows)
      if (row.best_dual >= target) return row.oracle_calls;
    return std::numeric_limits<long long>::max();
  };
  OptimizerConfig scfg = OptimizerConfig::defaults(Method::Subgradient);
  scfg.max_iter = 20000;
  scfg.dual_tol = 0.0;
  RunResult sres = run_subgradient(m, scfg);

  OptimizerConfig qcfg = OptimizerConfig::defaults(Method::QuasiConcave);
  qcfg.max_iter = 20000;
  qcfg.dual_tol = 0.0;
  RunResult qres = run_quasi_concave(m, qcfg);

  double target = sres.best_dual - 1e-6 * (1.0 + std::abs(sres.best_dual));
  REQUIRE(qres.best_dual >= target);
  CHECK(calls_to_reach(qres, target) <= calls_to_reach(sres, target));
}

TEST_CASE("coordinate updates take the midpoint of the gap interval") {
  // gaps (3, 1, -2): both leaders positive, so lambda moves by 2 exactly
  EnergyModel m;
  m.num_nodes = 1;
  m.num_labels = 3;
  m.unary = {-3.0, -1.0, 2.0};
  OptimizerConfig cfg = OptimizerConfig::defaults(Method::Coordinate);
  cfg.max_iter = 50;
  RunResult r = run_coordinate_ascent(m, cfg);
  CHECK(r.best_point.lambda[0] == 2.0);
  REQUIRE(r.agreement.has_value());
  CHECK(r.agreement->weak_agreement);

  // gaps (1, -1): opposite signs, already coordinate-optimal
  EnergyModel stay;
  stay.num_nodes = 1;
  stay.num_labels = 2;
  stay.unary = {-1.0, 1.0};
  RunResult rs = run_coordinate_ascent(stay, cfg);
  CHECK(rs.best_point.lambda[0] == 0.0);
  CHECK(rs.trace.rows.size() == 1);
}

TEST_CASE("coordinate ascent is monotone and lands on weak agreement") {
  for (uint64_t seed = 40; seed < 43; ++seed) {
    EnergyModel m = testutil::random_grid(seed, 3, 4, 3);
    OptimizerConfig cfg = OptimizerConfig::defaults(Method::Coordinate);
    cfg.max_iter = 200;
    RunResult r = run_coordinate_ascent(m, cfg);  // throws if any update decreases the dual
    check_trace_monotone(r.trace);
    REQUIRE(r.agreement.has_value());
    CHECK(r.agreement->weak_agreement);
    auto [bx, bv] = brute_force_min(m);
    CHECK(r.best_dual <= bv + 1e-9);
  }
}

TEST_CASE("coordinate ascent refuses non-associative models") {
  EnergyModel m = testutil::random_grid(3, 2, 2, 3, /*signed=*/true);
  OptimizerConfig cfg = OptimizerConfig::defaults(Method::Coordinate);
  CHECK_THROWS_AS(run_coordinate_ascent(m, cfg), NotDecomposableError);
}

TEST_CASE("relaxed oracle reproduces the exact trajectory on submodular input") {
  // dense non-positive tables: not decomposable, so both oracles minimize the
  // identical lowered function and every iterate coincides bit for bit
  EnergyModel m = shift_pairwise(testutil::random_grid(8, 2, 3, 3, true)).model;
  OptimizerConfig cfg = OptimizerConfig::defaults(Method::Subgradient);
  cfg.max_iter = 40;
  cfg.dual_tol = 0.0;
  RunResult exact = run_subgradient(m, cfg);
  OptimizerConfig ncfg = cfg;
  ncfg.method = Method::Nsmr;
  RunResult relaxed = run_nsmr(m, ncfg);
  REQUIRE(exact.trace.rows.size() == relaxed.trace.rows.size());
  for (size_t k = 0; k < exact.trace.rows.size(); ++k)
    CHECK(exact.trace.rows[k].dual == relaxed.trace.rows[k].dual);
}

TEST_CASE("fully unlabeled relaxed minimizers give the half-integral subgradient") {
  // a frustrated pair: the roof dual leaves everything at one half
  EnergyModel m;
  m.num_nodes = 2;
  m.num_labels = 2;
  m.unary.assign(4, 0.0);
  PairwiseTerm t;
  t.i = 0;
  t.j = 1;
  t.kind = PairwiseTerm::Kind::Dense;
  t.table = {1.0, -1.0, -1.0, 1.0};
  m.pairwise.push_back(t);

  auto oracle = detail::relaxed_oracle(m);
  DualEvaluation ev = oracle(DualPoint::zeros(m));
  bool all_half = true;
  for (double y : ev.minimizer_y) all_half = all_half && y == 0.5;
  REQUIRE(all_half);
  for (double g : ev.subgrad_lambda) CHECK(g == 0.0);  // |P|/2 - 1 with two labels
  CHECK_FALSE(ev.strong_certificate);

  EnergyModel m3 = m;
  m3.num_labels = 4;
  m3.unary.assign(8, 0.0);
  PairwiseTerm t4 = t;
  t4.table.assign(16, 0.0);
  for (int p = 0; p < 4; ++p)
    for (int q = 0; q < 4; ++q) t4.table[p * 4 + q] = p == q ? 1.0 : -1.0;
  m3.pairwise = {t4};
  DualEvaluation ev4 = detail::relaxed_oracle(m3)(DualPoint::zeros(m3));
  bool all_half4 = true;
  for (double y : ev4.minimizer_y) all_half4 = all_half4 && y == 0.5;
  if (all_half4)
    for (double g : ev4.subgrad_lambda) CHECK(g == 1.0);  // |P|/2 - 1 with four labels
}

TEST_CASE("relaxed bound reaches its relaxation optimum") {
  EnergyModel m = testutil::random_grid(21, 2, 2, 3, /*signed=*/true);
  auto lp = simplex_solve(build_relaxation(m, RelaxKind::Nsmr).lp);
  REQUIRE(lp.status == LpSolution::Status::Optimal);
  OptimizerConfig cfg = OptimizerConfig::defaults(Method::Nsmr);
  cfg.max_iter = 6000;
  cfg.dual_tol = 0.0;
  RunResult r = run_nsmr(m, cfg);
  CHECK(r.best_dual <= lp.value + 1e-7);
  CHECK(r.best_dual == Catch::Approx(lp.value).margin(1e-4));
}

TEST_CASE("relaxed runs reject pattern potentials") {
  std::mt19937_64 rng(6);
  EnergyModel m = testutil::random_pattern_model(rng, 4, 2, 1, 3, 2);
  OptimizerConfig cfg = OptimizerConfig::defaults(Method::Nsmr);
  CHECK_THROWS_AS(run_nsmr(m, cfg), NotSupportedError);
}

TEST_CASE("found maxima satisfy weak agreement") {
  int checked = 0;
  for (uint64_t seed = 900; seed < 920 && checked < 5; ++seed) {
    EnergyModel m = testutil::random_grid(seed, 3, 3, 3, false, 0.3);
    OptimizerConfig cfg = OptimizerConfig::defaults(Method::Subgradient);
    cfg.max_iter = 4000;
    cfg.dual_tol = 0.0;
    RunResult r = run_subgradient(m, cfg);
    if (!r.certificate) continue;  // need an exact maximum
    ++checked;
    CHECK(agreement_sets(m, r.best_point).weak_agreement);
  }
  CHECK(checked > 0);
}

TEST_CASE("inequality multipliers stay non-negative") {
  EnergyModel m = testutil::random_grid(4, 2, 3, 3);
  LinearConstraint cap;
  cap.rhs = 2.0;
  for (int j = 0; j < m.num_nodes; ++j) cap.coeffs.push_back({j, 0, 1.0});
  m.linear_ineq.push_back(cap);
  OptimizerConfig cfg = OptimizerConfig::defaults(Method::Subgradient);
  cfg.max_iter = 300;
  RunResult r = run_subgradient(m, cfg);
  for (double p : r.best_point.pi) CHECK(p >= 0.0);
  check_trace_monotone(r.trace);
}

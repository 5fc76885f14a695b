#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <utility>
#include <vector>

#include "smr/errors.hpp"
#include "smr/max_flow.hpp"
#include "smr/quadratic_pbf.hpp"

namespace smr {

struct CutSolution {
  double min_value = 0.0;
  std::vector<char> assignment;
  bool canonical = false;  // minimal source side among all minimum cuts
};

// Reusable minimizer for a submodular quadratic pseudo-Boolean function.
// Unary coefficients may be shifted between solves; the flow network keeps its
// residual state, so a resolve after an update costs only the incremental flow.
//
// Graph encoding: y_v = 1 puts the node on the source side. A term b*y_u*y_v
// (b <= 0) becomes b on the unary of u plus an arc u->v of capacity -b; the
// effective unary a'_v maps to terminal excess -a'_v. Reported values are the
// function evaluated at the recovered assignment, never flow sums.
class FlowHandle {
 public:
  explicit FlowHandle(const QuadraticPBF& f) : f_(f.normalized()), graph_(f_.num_vars) {
    if (!f_.is_submodular())
      throw NotSubmodularError("positive pairwise coefficient; function is not submodular");
    std::vector<double> eff = f_.unary;
    for (const auto& t : f_.pairwise) {
      eff[t.u] += t.coeff;
      graph_.add_edge(t.u, t.v, -t.coeff, 0.0);
    }
    for (int v = 0; v < f_.num_vars; ++v) graph_.adjust_terminal(v, -eff[v]);
  }

  int num_vars() const { return f_.num_vars; }
  const QuadraticPBF& function() const { return f_; }

  void update_unary(int v, double delta) {
    if (v < 0 || v >= f_.num_vars)
      throw InvalidInputError("update_unary: variable out of range");
    f_.unary[v] += delta;
    graph_.adjust_terminal(v, -delta);
  }

  CutSolution resolve() {
    graph_.maxflow();
    CutSolution s;
    s.assignment = graph_.min_source_assignment();
    s.min_value = f_.value_at(s.assignment);
    s.canonical = true;
    return s;
  }

  // Minimum restricted to y_v = 0 and to y_v = 1, by temporarily forcing the
  // variable with a penalty larger than any value gap. The handle's function is
  // restored afterwards.
  std::pair<double, double> min_marginals(int v) {
    const double force = forcing_constant();
    update_unary(v, force);
    graph_.maxflow();
    std::vector<char> y0 = graph_.min_source_assignment();
    update_unary(v, -force);
    assert(y0[v] == 0);
    const double mm0 = f_.value_at(y0);

    update_unary(v, -force);
    graph_.maxflow();
    std::vector<char> y1 = graph_.min_source_assignment();
    update_unary(v, force);
    assert(y1[v] == 1);
    const double mm1 = f_.value_at(y1);
    return {mm0, mm1};
  }

 private:
  QuadraticPBF f_;
  MaxFlowGraph graph_;

  // Power of two above any value gap of the current function; dyadic inputs
  // stay exact through force/restore.
  double forcing_constant() const {
    double bound = 1.0 + f_.coefficient_magnitude_sum();
    return std::exp2(std::ceil(std::log2(bound)));
  }
};

inline CutSolution minimize_submodular(const QuadraticPBF& f) {
  FlowHandle h(f);
  return h.resolve();
}

}  // namespace smr

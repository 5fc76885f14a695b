#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "smr/flow_handle.hpp"
#include "smr/quadratic_pbf.hpp"

namespace smr {

// Per-variable value 0, 1, or -1 for unlabeled.
struct PartialLabeling {
  std::vector<int8_t> value;
};

struct QpboResult {
  double lower_bound = 0.0;
  PartialLabeling labels;
  std::vector<double> lp_unary;  // half-integral relaxation values in {0, 0.5, 1}
};

// Relaxation value of a pairwise variable under the half-integral solution.
inline double lp_pair_value(double yu, double yv, double coeff) {
  return coeff <= 0.0 ? std::min(yu, yv) : std::max(0.0, yu + yv - 1.0);
}

inline double lp_objective(const QuadraticPBF& f, const std::vector<double>& lp_unary) {
  double s = f.constant;
  for (int v = 0; v < f.num_vars; ++v) s += f.unary[v] * lp_unary[v];
  for (const auto& t : f.pairwise)
    s += t.coeff * lp_pair_value(lp_unary[t.u], lp_unary[t.v], t.coeff);
  return s;
}

// Roof-dual lower bound with a partially persistent labeling. A submodular
// input is solved exactly (everything labeled). Otherwise each term is split
// in half between the variables and their complements, which is submodular
// regardless of signs; variables whose two copies agree in the minimum cut
// are labeled, disagreeing ones are left at one half.
inline QpboResult qpbo(const QuadraticPBF& f_in) {
  QuadraticPBF f = f_in.normalized();
  const int n = f.num_vars;
  QpboResult out;
  out.labels.value.assign(n, -1);
  out.lp_unary.assign(n, 0.5);

  if (f.is_submodular()) {
    CutSolution cut = minimize_submodular(f);
    out.lower_bound = cut.min_value;
    for (int v = 0; v < n; ++v) {
      out.labels.value[v] = cut.assignment[v];
      out.lp_unary[v] = cut.assignment[v];
    }
    return out;
  }

  // Doubled function over (y, ybar): g(u, w) = (f(u) + f(1 - w)) / 2.
  QuadraticPBF g(2 * n);
  g.constant = f.constant;
  for (int v = 0; v < n; ++v) {
    g.unary[v] += 0.5 * f.unary[v];
    g.unary[n + v] -= 0.5 * f.unary[v];
    g.constant += 0.5 * f.unary[v];
  }
  for (const auto& t : f.pairwise) {
    if (t.coeff <= 0.0) {
      g.add_pairwise(t.u, t.v, 0.5 * t.coeff);
      g.add_pairwise(n + t.u, n + t.v, 0.5 * t.coeff);
      g.unary[n + t.u] -= 0.5 * t.coeff;
      g.unary[n + t.v] -= 0.5 * t.coeff;
      g.constant += 0.5 * t.coeff;
    } else {
      g.add_pairwise(t.u, n + t.v, -0.5 * t.coeff);
      g.add_pairwise(t.v, n + t.u, -0.5 * t.coeff);
      g.unary[t.u] += 0.5 * t.coeff;
      g.unary[t.v] += 0.5 * t.coeff;
    }
  }

  CutSolution cut = minimize_submodular(g);
  out.lower_bound = cut.min_value;
  for (int v = 0; v < n; ++v) {
    int u = cut.assignment[v];
    int w = cut.assignment[n + v];  // complement copy: estimates 1 - y_v
    if (u + w == 1) {
      out.labels.value[v] = static_cast<int8_t>(u);
      out.lp_unary[v] = u;
    }
  }
  return out;
}

}  // namespace smr

#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <utility>
#include <vector>

#include "smr/energy_model.hpp"
#include "smr/errors.hpp"
#include "smr/quadratic_pbf.hpp"
#include "smr/simplex.hpp"

namespace smr {

// Exhaustive minimum; ties resolved to the lexicographically smallest labeling.
inline std::pair<Labeling, double> brute_force_min(const EnergyModel& m) {
  double count = 1.0;
  for (int i = 0; i < m.num_nodes; ++i) {
    count *= m.num_labels;
    if (count > 4194304.0) throw BudgetError("label space too large for exhaustive search");
  }
  Labeling x(m.num_nodes, 0);
  Labeling best = x;
  double best_val = evaluate_energy(m, x);
  while (true) {
    int k = m.num_nodes - 1;
    while (k >= 0 && x[k] == m.num_labels - 1) x[k--] = 0;
    if (k < 0) break;
    ++x[k];
    double v = evaluate_energy(m, x);
    if (v < best_val) {
      best_val = v;
      best = x;
    }
  }
  return {best, best_val};
}

// Exact minimum of a pairwise forest model by leaf-to-root dynamic programming.
inline std::pair<Labeling, double> tree_dp_min(const EnergyModel& m) {
  if (!m.patterns.empty() || !m.robust_patterns.empty())
    throw NotSupportedError("tree minimization handles pairwise models only");
  const int n = m.num_nodes;
  const int L = m.num_labels;

  std::vector<std::vector<std::pair<int, int>>> adj(n);  // (neighbor, edge index)
  for (size_t e = 0; e < m.pairwise.size(); ++e) {
    adj[m.pairwise[e].i].push_back({m.pairwise[e].j, static_cast<int>(e)});
    adj[m.pairwise[e].j].push_back({m.pairwise[e].i, static_cast<int>(e)});
  }

  auto edge_cost = [&](int e, int node_a, int pa, int pb) {
    const auto& t = m.pairwise[e];
    int p = node_a == t.i ? pa : pb;
    int q = node_a == t.i ? pb : pa;
    if (t.kind == PairwiseTerm::Kind::Associative) return p == q ? -t.rewards[p] : 0.0;
    return t.table[static_cast<size_t>(p) * L + q];
  };

  std::vector<std::vector<double>> msg(n, std::vector<double>(L, 0.0));
  std::vector<int> parent(n, -1), parent_edge(n, -1), order;
  std::vector<char> visited(n, 0);
  Labeling x(n, 0);

  for (int root = 0; root < n; ++root) {
    if (visited[root]) continue;
    // BFS from the smallest unvisited node; children appear after parents.
    order.clear();
    std::deque<int> q{root};
    visited[root] = 1;
    parent[root] = -1;
    while (!q.empty()) {
      int v = q.front();
      q.pop_front();
      order.push_back(v);
      for (auto [w, e] : adj[v]) {
        if (visited[w]) {
          if (w != parent[v])
            throw NotSupportedError("edge graph contains a cycle");
          continue;
        }
        visited[w] = 1;
        parent[w] = v;
        parent_edge[w] = e;
        q.push_back(w);
      }
    }
    // Upward pass: subtree cost of each node per own label.
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      int v = *it;
      for (int p = 0; p < L; ++p) msg[v][p] = m.unary_at(v, p);
      for (auto [w, e] : adj[v]) {
        if (parent[w] != v) continue;
        for (int p = 0; p < L; ++p) {
          double best = edge_cost(e, v, p, 0) + msg[w][0];
          for (int qq = 1; qq < L; ++qq)
            best = std::min(best, edge_cost(e, v, p, qq) + msg[w][qq]);
          msg[v][p] += best;
        }
      }
    }
    // Downward pass: ties to the smaller label.
    int best_root = 0;
    for (int p = 1; p < L; ++p)
      if (msg[root][p] < msg[root][best_root]) best_root = p;
    x[root] = best_root;
    for (int v : order) {
      if (v == root) continue;
      int e = parent_edge[v];
      int pp = x[parent[v]];
      int best = 0;
      double best_val = edge_cost(e, parent[v], pp, 0) + msg[v][0];
      for (int qq = 1; qq < L; ++qq) {
        double val = edge_cost(e, parent[v], pp, qq) + msg[v][qq];
        if (val < best_val) {
          best_val = val;
          best = qq;
        }
      }
      x[v] = best;
    }
  }
  return {x, evaluate_energy(m, x)};
}

enum class RelaxKind {
  StandardLocal,        // consistency + marginalization equalities
  SmrPattern,           // cap rows only: y_e <= y_endpoints, pattern vars per entry
  WithMarginalization,  // SmrPattern plus per-(node,label) pattern marginal caps
  PairwiseCor1,         // cap rows only, pairwise values <= 0
  Nsmr,                 // cap rows plus y_e >= y_u + y_v - 1, signs free
  WithGlobal            // PairwiseCor1 plus the model's linear constraints
};

struct Relaxation {
  LinearProgram lp;
  int num_unary_vars = 0;
  int num_pairwise_vars = 0;
  int num_entry_vars = 0;
  int consistency_rows = 0;
};

// Variable order: unary block node-major, pairwise blocks per edge in model
// order (row-major tables), then one variable per pattern entry. Row order:
// consistency, pairwise rows per edge, pattern rows, global constraint rows.
inline Relaxation build_relaxation(const EnergyModel& m, RelaxKind kind) {
  if (!m.robust_patterns.empty())
    throw NotSupportedError("no LP form for robust patterns");
  const bool wants_patterns = kind == RelaxKind::SmrPattern || kind == RelaxKind::WithMarginalization;
  if (!m.patterns.empty() && !wants_patterns)
    throw NotSupportedError("pattern potentials are incompatible with this relaxation kind");
  const bool need_nonpositive =
      kind == RelaxKind::PairwiseCor1 || kind == RelaxKind::WithGlobal || wants_patterns;

  const int L = m.num_labels;
  Relaxation out;
  LinearProgram& lp = out.lp;

  for (int i = 0; i < m.num_nodes; ++i)
    for (int p = 0; p < L; ++p) lp.add_var(m.unary_at(i, p), true);
  out.num_unary_vars = lp.num_vars;

  auto edge_value = [&](const PairwiseTerm& t, int p, int q) {
    if (t.kind == PairwiseTerm::Kind::Associative) return p == q ? -t.rewards[p] : 0.0;
    return t.table[static_cast<size_t>(p) * L + q];
  };

  std::vector<int> edge_base(m.pairwise.size(), 0);
  for (size_t e = 0; e < m.pairwise.size(); ++e) {
    edge_base[e] = lp.num_vars;
    for (int p = 0; p < L; ++p)
      for (int q = 0; q < L; ++q) {
        double v = edge_value(m.pairwise[e], p, q);
        if (need_nonpositive && v > 0.0)
          throw NotSupportedError("positive pairwise value is incompatible with this kind");
        lp.add_var(v, true);
      }
  }
  out.num_pairwise_vars = lp.num_vars - out.num_unary_vars;

  std::vector<int> entry_base;
  if (wants_patterns) {
    for (const auto& pot : m.patterns) {
      entry_base.push_back(lp.num_vars);
      for (const auto& e : pot.entries) {
        if (e.value > 0.0)
          throw NotSupportedError("positive pattern value; apply shift_patterns first");
        lp.add_var(e.value, true);
      }
    }
  }
  out.num_entry_vars = lp.num_vars - out.num_unary_vars - out.num_pairwise_vars;

  auto uv = [L](int i, int p) { return i * L + p; };

  for (int i = 0; i < m.num_nodes; ++i) {
    std::vector<std::pair<int, double>> row;
    for (int p = 0; p < L; ++p) row.push_back({uv(i, p), 1.0});
    lp.add_row(std::move(row), LinearProgram::Rel::Eq, 1.0);
  }
  out.consistency_rows = m.num_nodes;

  for (size_t e = 0; e < m.pairwise.size(); ++e) {
    const auto& t = m.pairwise[e];
    auto pv = [&](int p, int q) { return edge_base[e] + p * L + q; };
    if (kind == RelaxKind::StandardLocal) {
      for (int p = 0; p < L; ++p)
        for (int q = 0; q < L; ++q) {
          std::vector<std::pair<int, double>> row;
          for (int pp = 0; pp < L; ++pp) row.push_back({pv(pp, q), 1.0});
          row.push_back({uv(t.j, q), -1.0});
          lp.add_row(std::move(row), LinearProgram::Rel::Eq, 0.0);
          row.clear();
          for (int qq = 0; qq < L; ++qq) row.push_back({pv(p, qq), 1.0});
          row.push_back({uv(t.i, p), -1.0});
          lp.add_row(std::move(row), LinearProgram::Rel::Eq, 0.0);
        }
    } else {
      for (int p = 0; p < L; ++p)
        for (int q = 0; q < L; ++q) {
          lp.add_row({{pv(p, q), 1.0}, {uv(t.i, p), -1.0}}, LinearProgram::Rel::Le, 0.0);
          lp.add_row({{pv(p, q), 1.0}, {uv(t.j, q), -1.0}}, LinearProgram::Rel::Le, 0.0);
          if (kind == RelaxKind::Nsmr)
            lp.add_row({{uv(t.i, p), 1.0}, {uv(t.j, q), 1.0}, {pv(p, q), -1.0}},
                       LinearProgram::Rel::Le, 1.0);
        }
    }
  }

  if (wants_patterns) {
    for (size_t c = 0; c < m.patterns.size(); ++c) {
      const auto& pot = m.patterns[c];
      for (size_t k = 0; k < pot.entries.size(); ++k) {
        int var = entry_base[c] + static_cast<int>(k);
        for (size_t l = 0; l < pot.nodes.size(); ++l)
          lp.add_row({{var, 1.0}, {uv(pot.nodes[l], pot.entries[k].labels[l]), -1.0}},
                     LinearProgram::Rel::Le, 0.0);
      }
    }
    if (kind == RelaxKind::WithMarginalization) {
      // Entries sharing a label at a node may not jointly exceed that node's
      // indicator mass.
      for (size_t c = 0; c < m.patterns.size(); ++c) {
        const auto& pot = m.patterns[c];
        for (size_t l = 0; l < pot.nodes.size(); ++l) {
          for (int p0 = 0; p0 < L; ++p0) {
            std::vector<std::pair<int, double>> row;
            for (size_t k = 0; k < pot.entries.size(); ++k)
              if (pot.entries[k].labels[l] == p0)
                row.push_back({entry_base[c] + static_cast<int>(k), 1.0});
            if (row.empty()) continue;
            row.push_back({uv(pot.nodes[l], p0), -1.0});
            lp.add_row(std::move(row), LinearProgram::Rel::Le, 0.0);
          }
        }
      }
    }
  }

  if (kind == RelaxKind::WithGlobal) {
    for (const auto& c : m.linear_eq) {
      std::vector<std::pair<int, double>> row;
      for (const auto& t : c.coeffs) row.push_back({uv(t.node, t.label), t.value});
      lp.add_row(std::move(row), LinearProgram::Rel::Eq, c.rhs);
    }
    for (const auto& c : m.linear_ineq) {
      std::vector<std::pair<int, double>> row;
      for (const auto& t : c.coeffs) row.push_back({uv(t.node, t.label), t.value});
      lp.add_row(std::move(row), LinearProgram::Rel::Le, c.rhs);
    }
  }

  return out;
}

struct PbfRelaxation {
  LinearProgram lp;
  double constant = 0.0;  // add to the LP optimum
};

// Standard relaxation of a quadratic pseudo-Boolean function: one variable per
// pairwise term, capped by both endpoints and floored by their overlap.
inline PbfRelaxation build_pbf_relaxation(const QuadraticPBF& f_in) {
  QuadraticPBF f = f_in.normalized();
  PbfRelaxation out;
  out.constant = f.constant;
  for (int v = 0; v < f.num_vars; ++v) out.lp.add_var(f.unary[v], true);
  for (const auto& t : f.pairwise) {
    int var = out.lp.add_var(t.coeff, true);
    out.lp.add_row({{var, 1.0}, {t.u, -1.0}}, LinearProgram::Rel::Le, 0.0);
    out.lp.add_row({{var, 1.0}, {t.v, -1.0}}, LinearProgram::Rel::Le, 0.0);
    out.lp.add_row({{t.u, 1.0}, {t.v, 1.0}, {var, -1.0}}, LinearProgram::Rel::Le, 1.0);
  }
  return out;
}

}  // namespace smr

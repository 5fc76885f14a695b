#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <random>
#include <set>
#include <vector>

#include "smr/dual.hpp"
#include "smr/energy_model.hpp"
#include "smr/errors.hpp"

namespace smr {

struct DecodedPrimal {
  Labeling labeling;
  std::vector<int> conflicts;  // nodes whose minimizer had zero or multiple labels on
  double energy = 0.0;
};

enum class DecodeRule { FirstLabel, ComponentRandom };

// Turns an inner minimizer into a labeling. Nodes with exactly one indicator at
// 1 keep that label. Under FirstLabel, multi-label nodes take their smallest on
// label and empty nodes take the unary argmin. Under ComponentRandom, connected
// components of conflicted nodes (over the model's edges) jointly pick one
// label uniformly from the union of their on labels.
inline DecodedPrimal decode(const EnergyModel& m, const DualEvaluation& ev,
                            DecodeRule rule = DecodeRule::FirstLabel, uint64_t seed = 0) {
  const int L = m.num_labels;
  if (static_cast<int>(ev.minimizer_y.size()) != m.num_nodes * L)
    throw InvalidInputError("evaluation does not match the model");

  DecodedPrimal out;
  out.labeling.assign(m.num_nodes, -1);
  std::vector<char> conflicted(m.num_nodes, 0);
  for (int i = 0; i < m.num_nodes; ++i) {
    int count = 0, first = -1;
    for (int p = 0; p < L; ++p) {
      if (ev.minimizer_y[static_cast<size_t>(i) * L + p] == 1.0) {
        ++count;
        if (first < 0) first = p;
      }
    }
    if (count == 1) {
      out.labeling[i] = first;
    } else {
      conflicted[i] = 1;
      out.conflicts.push_back(i);
      if (count > 1) out.labeling[i] = first;  // FirstLabel default, may be overridden below
    }
  }

  if (rule == DecodeRule::ComponentRandom) {
    std::vector<std::vector<int>> adj(m.num_nodes);
    for (const auto& t : m.pairwise) {
      if (conflicted[t.i] && conflicted[t.j]) {
        adj[t.i].push_back(t.j);
        adj[t.j].push_back(t.i);
      }
    }
    std::mt19937_64 rng(seed);
    std::vector<char> visited(m.num_nodes, 0);
    for (int start = 0; start < m.num_nodes; ++start) {
      if (!conflicted[start] || visited[start]) continue;
      std::vector<int> component;
      std::deque<int> q{start};
      visited[start] = 1;
      while (!q.empty()) {
        int v = q.front();
        q.pop_front();
        component.push_back(v);
        for (int w : adj[v])
          if (!visited[w]) {
            visited[w] = 1;
            q.push_back(w);
          }
      }
      std::set<int> labels;
      for (int v : component)
        for (int p = 0; p < L; ++p)
          if (ev.minimizer_y[static_cast<size_t>(v) * L + p] == 1.0) labels.insert(p);
      if (!labels.empty()) {
        std::vector<int> pool(labels.begin(), labels.end());
        int pick = pool[std::uniform_int_distribution<size_t>(0, pool.size() - 1)(rng)];
        for (int v : component) out.labeling[v] = pick;
      }
      // components with no label on fall through to the unary argmin below
    }
  }

  for (int i = 0; i < m.num_nodes; ++i) {
    if (out.labeling[i] >= 0) continue;
    int best = 0;
    for (int p = 1; p < L; ++p)
      if (m.unary_at(i, p) < m.unary_at(i, best)) best = p;
    out.labeling[i] = best;
  }
  out.energy = evaluate_energy(m, out.labeling);
  return out;
}

namespace detail {

// Per-node incidence over the model's terms, for local conditional energies.
struct Incidence {
  std::vector<std::vector<int>> edges;
  std::vector<std::vector<int>> patterns;
  std::vector<std::vector<int>> robust;

  explicit Incidence(const EnergyModel& m)
      : edges(m.num_nodes), patterns(m.num_nodes), robust(m.num_nodes) {
    for (size_t e = 0; e < m.pairwise.size(); ++e) {
      edges[m.pairwise[e].i].push_back(static_cast<int>(e));
      edges[m.pairwise[e].j].push_back(static_cast<int>(e));
    }
    for (size_t c = 0; c < m.patterns.size(); ++c)
      for (int v : m.patterns[c].nodes) patterns[v].push_back(static_cast<int>(c));
    for (size_t c = 0; c < m.robust_patterns.size(); ++c)
      for (int v : m.robust_patterns[c].nodes) robust[v].push_back(static_cast<int>(c));
  }

  // Energy terms touching node j, with x_j replaced by p.
  double local(const EnergyModel& m, const Labeling& x, int j, int p) const {
    double s = m.unary_at(j, p);
    for (int e : edges[j]) {
      const auto& t = m.pairwise[e];
      int a = t.i == j ? p : x[t.i];
      int b = t.j == j ? p : x[t.j];
      if (t.kind == PairwiseTerm::Kind::Associative) {
        if (a == b) s -= t.rewards[a];
      } else {
        s += t.table[static_cast<size_t>(a) * m.num_labels + b];
      }
    }
    for (int c : patterns[j]) {
      const auto& pot = m.patterns[c];
      for (const auto& e : pot.entries) {
        bool match = true;
        for (size_t k = 0; k < pot.nodes.size() && match; ++k) {
          int lbl = pot.nodes[k] == j ? p : x[pot.nodes[k]];
          match = lbl == e.labels[k];
        }
        if (match) s += e.value;
      }
    }
    for (int c : robust[j]) {
      const auto& pot = m.robust_patterns[c];
      for (const auto& e : pot.entries) {
        double acc = e.value;
        for (size_t k = 0; k < pot.nodes.size(); ++k) {
          int lbl = pot.nodes[k] == j ? p : x[pot.nodes[k]];
          if (lbl != e.labels[k]) acc += e.weights[k];
        }
        s += std::min(0.0, acc);
      }
    }
    return s;
  }
};

}  // namespace detail

// Iterated conditional modes: sweeps nodes in ascending order, moving each to
// the label minimizing its conditional energy (ties to the smaller label).
inline Labeling icm(const EnergyModel& m, Labeling x, int sweeps) {
  check_labeling(m, x);
  detail::Incidence inc(m);
  for (int s = 0; s < sweeps; ++s) {
    bool changed = false;
    for (int j = 0; j < m.num_nodes; ++j) {
      int best = x[j];
      double best_val = inc.local(m, x, j, x[j]);
      for (int p = 0; p < m.num_labels; ++p) {
        double v = inc.local(m, x, j, p);
        if (v < best_val || (v == best_val && p < best)) {
          best = p;
          best_val = v;
        }
      }
      if (best != x[j]) {
        x[j] = best;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return x;
}

struct Certificate {
  enum class Kind { Optimal, GapBound };
  Kind kind = Kind::GapBound;
  double bound = 0.0;  // E(x) - D, an upper bound on the suboptimality of x

  bool optimal() const { return kind == Kind::Optimal; }
};

inline Certificate certify(const EnergyModel& m, const DualPoint& dp, const DualEvaluation& ev,
                           const Labeling& x) {
  check_labeling(m, x);
  (void)dp;
  Certificate c;
  c.bound = evaluate_energy(m, x) - ev.value;
  const double tol = 1e-9 * (1.0 + std::abs(ev.value));
  c.kind = c.bound <= tol ? Certificate::Kind::Optimal : Certificate::Kind::GapBound;
  return c;
}

}  // namespace smr

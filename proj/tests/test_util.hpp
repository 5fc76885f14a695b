#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "smr/energy_model.hpp"
#include "smr/generate.hpp"
#include "smr/quadratic_pbf.hpp"

namespace testutil {

using smr::EnergyModel;
using smr::Labeling;
using smr::PairwiseTerm;
using smr::PatternPotential;
using smr::QuadraticPBF;

// Dyadic rationals keep every capacity operation exact in doubles, so flow
// results can be compared to enumeration with ==.
inline double dyadic(std::mt19937_64& rng, int max_units = 64, int denom_log2 = 3) {
  std::uniform_int_distribution<int> d(-max_units, max_units);
  return std::ldexp(static_cast<double>(d(rng)), -denom_log2);
}

inline QuadraticPBF random_pbf(std::mt19937_64& rng, int n, bool submodular,
                               double edge_prob = 0.4) {
  QuadraticPBF f(n);
  f.constant = dyadic(rng);
  for (int v = 0; v < n; ++v) f.unary[v] = dyadic(rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      if (u(rng) > edge_prob) continue;
      double c = dyadic(rng);
      if (submodular) c = -std::abs(c);
      if (c != 0.0) f.add_pairwise(a, b, c);
    }
  return f;
}

inline double pbf_value(const QuadraticPBF& f, const std::vector<char>& y) {
  double s = f.constant;
  for (int v = 0; v < f.num_vars; ++v)
    if (y[v]) s += f.unary[v];
  for (const auto& t : f.pairwise)
    if (y[t.u] && y[t.v]) s += t.coeff;
  return s;
}

struct PbfEnumeration {
  double min_value = 0.0;
  std::vector<char> canonical;             // smallest 1-set among minimizers
  std::vector<std::vector<char>> minimizers;
};

inline PbfEnumeration enumerate_pbf(const QuadraticPBF& f) {
  PbfEnumeration out;
  const int n = f.num_vars;
  std::vector<char> y(n, 0);
  bool first = true;
  for (long long mask = 0; mask < (1LL << n); ++mask) {
    for (int v = 0; v < n; ++v) y[v] = (mask >> v) & 1;
    double val = pbf_value(f, y);
    if (first || val < out.min_value) {
      out.min_value = val;
      out.minimizers.clear();
      first = false;
    }
    if (val == out.min_value) out.minimizers.push_back(y);
  }
  // intersection of all minimizing 1-sets; for submodular f this is itself a
  // minimizer (the minimal source side)
  out.canonical.assign(n, 1);
  for (const auto& mz : out.minimizers)
    for (int v = 0; v < n; ++v) out.canonical[v] = out.canonical[v] && mz[v];
  return out;
}

// Full-table expansion of every potential, evaluated through indicator
// products; an independent route to the model energy.
inline double indicator_polynomial_value(const EnergyModel& m, const Labeling& x) {
  const int L = m.num_labels;
  auto ind = [&](int i, int p) { return x[i] == p ? 1.0 : 0.0; };
  double total = 0.0;
  for (int i = 0; i < m.num_nodes; ++i)
    for (int p = 0; p < L; ++p) total += m.unary_at(i, p) * ind(i, p);
  for (const auto& t : m.pairwise) {
    for (int p = 0; p < L; ++p)
      for (int q = 0; q < L; ++q) {
        double v = t.kind == PairwiseTerm::Kind::Associative
                       ? (p == q ? -t.rewards[p] : 0.0)
                       : t.table[static_cast<size_t>(p) * L + q];
        total += v * ind(t.i, p) * ind(t.j, q);
      }
  }
  auto each_labeling = [&](const std::vector<int>& nodes, auto&& table_value) {
    std::vector<int> d(nodes.size(), 0);
    while (true) {
      double prod = 1.0;
      for (size_t k = 0; k < nodes.size(); ++k) prod *= ind(nodes[k], d[k]);
      if (prod != 0.0) total += table_value(d) * prod;
      int k = static_cast<int>(nodes.size()) - 1;
      while (k >= 0 && d[k] == L - 1) d[k--] = 0;
      if (k < 0) break;
      ++d[k];
    }
  };
  for (const auto& pot : m.patterns) {
    each_labeling(pot.nodes, [&](const std::vector<int>& d) {
      for (const auto& e : pot.entries)
        if (e.labels == d) return e.value;
      return 0.0;
    });
  }
  for (const auto& pot : m.robust_patterns) {
    each_labeling(pot.nodes, [&](const std::vector<int>& d) {
      double s = 0.0;
      for (const auto& e : pot.entries) {
        double acc = e.value;
        for (size_t k = 0; k < d.size(); ++k)
          if (d[k] != e.labels[k]) acc += e.weights[k];
        s += std::min(0.0, acc);
      }
      return s;
    });
  }
  return total;
}

inline Labeling random_labeling(std::mt19937_64& rng, const EnergyModel& m) {
  std::uniform_int_distribution<int> d(0, m.num_labels - 1);
  Labeling x(m.num_nodes);
  for (int& v : x) v = d(rng);
  return x;
}

inline EnergyModel random_grid(uint64_t seed, int rows, int cols, int labels,
                               bool signed_weights = false, double potts_sigma = 0.5,
                               bool class_constraints = false) {
  smr::GenSpec spec;
  spec.rows = rows;
  spec.cols = cols;
  spec.num_labels = labels;
  spec.signed_weights = signed_weights;
  spec.potts_sigma = potts_sigma;
  spec.class_size_constraints = class_constraints;
  spec.seed = seed;
  return smr::generate(spec);
}

// Unary-only base plus a few random pattern potentials with non-positive values.
inline EnergyModel random_pattern_model(std::mt19937_64& rng, int nodes, int labels,
                                        int num_patterns, int arity, int entries_per_pattern) {
  EnergyModel m;
  m.num_nodes = nodes;
  m.num_labels = labels;
  std::normal_distribution<double> g(0.0, 1.0);
  m.unary.resize(static_cast<size_t>(nodes) * labels);
  for (double& v : m.unary) v = g(rng);
  std::uniform_int_distribution<int> node_pick(0, nodes - 1);
  std::uniform_int_distribution<int> label_pick(0, labels - 1);
  for (int c = 0; c < num_patterns; ++c) {
    std::set<int> node_set;
    while (static_cast<int>(node_set.size()) < arity) node_set.insert(node_pick(rng));
    PatternPotential pot;
    pot.nodes.assign(node_set.begin(), node_set.end());
    std::set<std::vector<int>> used;
    while (static_cast<int>(pot.entries.size()) < entries_per_pattern) {
      std::vector<int> d(arity);
      for (int& l : d) l = label_pick(rng);
      if (!used.insert(d).second) continue;
      pot.entries.push_back({d, -std::abs(g(rng))});
    }
    m.patterns.push_back(std::move(pot));
  }
  return m;
}

// All uniform labelings of each block rewarded: the permuted-pattern special
// case where every pair of entries differs at every node.
inline EnergyModel random_pn_potts_model(std::mt19937_64& rng, int nodes, int labels,
                                         int num_blocks, int arity) {
  EnergyModel m;
  m.num_nodes = nodes;
  m.num_labels = labels;
  std::normal_distribution<double> g(0.0, 1.0);
  m.unary.resize(static_cast<size_t>(nodes) * labels);
  for (double& v : m.unary) v = g(rng);
  std::uniform_int_distribution<int> node_pick(0, nodes - 1);
  for (int b = 0; b < num_blocks; ++b) {
    std::set<int> node_set;
    while (static_cast<int>(node_set.size()) < arity) node_set.insert(node_pick(rng));
    PatternPotential pot;
    pot.nodes.assign(node_set.begin(), node_set.end());
    for (int p = 0; p < labels; ++p)
      pot.entries.push_back({std::vector<int>(arity, p), -std::abs(g(rng))});
    m.patterns.push_back(std::move(pot));
  }
  return m;
}

}  // namespace testutil

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "smr/errors.hpp"

namespace smr {

// One label per node, indexed by node id.
using Labeling = std::vector<int>;

struct PairwiseTerm {
  enum class Kind { Associative, Dense };
  int i = 0;
  int j = 0;
  Kind kind = Kind::Associative;
  // Associative: per-label rewards C_p >= 0; the term contributes -C_p when both
  // endpoints take label p and 0 otherwise.
  std::vector<double> rewards;
  // Dense: |P| x |P| table, row = label of i, column = label of j.
  std::vector<double> table;
};

struct PatternPotential {
  std::vector<int> nodes;  // sorted, distinct, |nodes| >= 2
  struct Entry {
    std::vector<int> labels;  // one label per node of `nodes`
    double value = 0.0;
  };
  std::vector<Entry> entries;
};

struct RobustPatternPotential {
  std::vector<int> nodes;
  struct Entry {
    std::vector<int> labels;
    double value = 0.0;            // <= 0
    std::vector<double> weights;   // per-node deviation cost, >= 0
  };
  std::vector<Entry> entries;
};

struct LinearConstraint {
  struct Coef {
    int node = 0;
    int label = 0;
    double value = 0.0;
  };
  std::vector<Coef> coeffs;
  double rhs = 0.0;
};

struct EnergyModel {
  int num_nodes = 0;
  int num_labels = 0;
  std::vector<double> unary;  // num_nodes * num_labels, row-major by node
  std::vector<PairwiseTerm> pairwise;
  std::vector<PatternPotential> patterns;
  std::vector<RobustPatternPotential> robust_patterns;
  std::vector<LinearConstraint> linear_eq;    // sum w_ip y_ip  = rhs
  std::vector<LinearConstraint> linear_ineq;  // sum v_ip y_ip <= rhs

  double unary_at(int i, int p) const { return unary[static_cast<size_t>(i) * num_labels + p]; }
  double& unary_at(int i, int p) { return unary[static_cast<size_t>(i) * num_labels + p]; }
};

inline void check_labeling(const EnergyModel& m, const Labeling& x) {
  if (static_cast<int>(x.size()) != m.num_nodes)
    throw InvalidInputError("labeling has " + std::to_string(x.size()) + " entries, model has " +
                            std::to_string(m.num_nodes) + " nodes");
  for (int i = 0; i < m.num_nodes; ++i)
    if (x[i] < 0 || x[i] >= m.num_labels)
      throw InvalidInputError("label out of range at node " + std::to_string(i));
}

inline double evaluate_energy(const EnergyModel& m, const Labeling& x) {
  check_labeling(m, x);
  double total = 0.0;
  for (int i = 0; i < m.num_nodes; ++i) total += m.unary_at(i, x[i]);
  for (const auto& t : m.pairwise) {
    if (t.kind == PairwiseTerm::Kind::Associative) {
      if (x[t.i] == x[t.j]) total -= t.rewards[x[t.i]];
    } else {
      total += t.table[static_cast<size_t>(x[t.i]) * m.num_labels + x[t.j]];
    }
  }
  for (const auto& pot : m.patterns) {
    for (const auto& e : pot.entries) {
      bool match = true;
      for (size_t k = 0; k < pot.nodes.size() && match; ++k)
        match = x[pot.nodes[k]] == e.labels[k];
      if (match) total += e.value;
    }
  }
  for (const auto& pot : m.robust_patterns) {
    for (const auto& e : pot.entries) {
      double acc = e.value;
      for (size_t k = 0; k < pot.nodes.size(); ++k)
        if (x[pot.nodes[k]] != e.labels[k]) acc += e.weights[k];
      total += std::min(0.0, acc);
    }
  }
  return total;
}

struct ConstraintResiduals {
  std::vector<double> eq_residuals;  // sum w y - c, signed
  std::vector<double> ineq_excess;   // max(0, sum v y - d)
};

inline ConstraintResiduals constraint_violation(const EnergyModel& m, const Labeling& x) {
  check_labeling(m, x);
  ConstraintResiduals r;
  r.eq_residuals.reserve(m.linear_eq.size());
  for (const auto& c : m.linear_eq) {
    double s = 0.0;
    for (const auto& t : c.coeffs)
      if (x[t.node] == t.label) s += t.value;
    r.eq_residuals.push_back(s - c.rhs);
  }
  r.ineq_excess.reserve(m.linear_ineq.size());
  for (const auto& c : m.linear_ineq) {
    double s = 0.0;
    for (const auto& t : c.coeffs)
      if (x[t.node] == t.label) s += t.value;
    r.ineq_excess.push_back(std::max(0.0, s - c.rhs));
  }
  return r;
}

inline std::vector<std::string> validate(const EnergyModel& m) {
  std::vector<std::string> out;
  auto bad = [&out](const std::string& s) { out.push_back(s); };
  if (m.num_nodes < 1) bad("num_nodes must be >= 1");
  if (m.num_labels < 2) bad("num_labels must be >= 2");
  if (static_cast<long long>(m.unary.size()) !=
      static_cast<long long>(m.num_nodes) * m.num_labels)
    bad("unary table size mismatch");
  for (double v : m.unary)
    if (!std::isfinite(v)) {
      bad("non-finite unary value");
      break;
    }

  std::set<std::pair<int, int>> seen_edges;
  for (size_t e = 0; e < m.pairwise.size(); ++e) {
    const auto& t = m.pairwise[e];
    const std::string where = "pairwise term " + std::to_string(e);
    if (t.i < 0 || t.i >= m.num_nodes || t.j < 0 || t.j >= m.num_nodes) {
      bad(where + ": node index out of range");
      continue;
    }
    if (t.i == t.j) bad(where + ": self edge");
    auto key = std::minmax(t.i, t.j);
    if (!seen_edges.insert(key).second) bad(where + ": duplicate undirected edge");
    if (t.kind == PairwiseTerm::Kind::Associative) {
      if (static_cast<int>(t.rewards.size()) != m.num_labels)
        bad(where + ": rewards size mismatch");
      for (double v : t.rewards) {
        if (!std::isfinite(v)) bad(where + ": non-finite reward");
        else if (v < 0.0) bad(where + ": negative associative reward");
      }
    } else {
      if (static_cast<long long>(t.table.size()) !=
          static_cast<long long>(m.num_labels) * m.num_labels)
        bad(where + ": dense table size mismatch");
      for (double v : t.table)
        if (!std::isfinite(v)) {
          bad(where + ": non-finite table entry");
          break;
        }
    }
  }

  auto check_nodes = [&](const std::vector<int>& nodes, const std::string& where) {
    bool ok = true;
    if (nodes.size() < 2) {
      bad(where + ": needs at least 2 nodes (unary data belongs in the unary table)");
      ok = false;
    }
    for (size_t k = 0; k < nodes.size(); ++k) {
      if (nodes[k] < 0 || nodes[k] >= m.num_nodes) {
        bad(where + ": node index out of range");
        ok = false;
      }
      if (k > 0 && nodes[k] <= nodes[k - 1]) {
        bad(where + ": nodes must be sorted and distinct");
        ok = false;
      }
    }
    return ok;
  };
  auto check_labels = [&](const std::vector<int>& labels, size_t arity, const std::string& where) {
    if (labels.size() != arity) {
      bad(where + ": labeling arity mismatch");
      return false;
    }
    for (int l : labels)
      if (l < 0 || l >= m.num_labels) {
        bad(where + ": label out of range");
        return false;
      }
    return true;
  };

  for (size_t c = 0; c < m.patterns.size(); ++c) {
    const auto& pot = m.patterns[c];
    const std::string where = "pattern " + std::to_string(c);
    if (!check_nodes(pot.nodes, where)) continue;
    std::set<std::vector<int>> seen;
    for (const auto& e : pot.entries) {
      if (!check_labels(e.labels, pot.nodes.size(), where)) continue;
      if (!seen.insert(e.labels).second) bad(where + ": duplicate entry labeling");
      if (!std::isfinite(e.value)) bad(where + ": non-finite value");
    }
  }
  for (size_t c = 0; c < m.robust_patterns.size(); ++c) {
    const auto& pot = m.robust_patterns[c];
    const std::string where = "robust pattern " + std::to_string(c);
    if (!check_nodes(pot.nodes, where)) continue;
    std::set<std::vector<int>> seen;
    for (const auto& e : pot.entries) {
      if (!check_labels(e.labels, pot.nodes.size(), where)) continue;
      if (!seen.insert(e.labels).second) bad(where + ": duplicate entry labeling");
      if (!std::isfinite(e.value)) bad(where + ": non-finite value");
      else if (e.value > 0.0) bad(where + ": positive value breaks submodularity");
      if (e.weights.size() != pot.nodes.size()) bad(where + ": weights arity mismatch");
      for (double w : e.weights) {
        if (!std::isfinite(w)) bad(where + ": non-finite weight");
        else if (w < 0.0) bad(where + ": negative deviation weight");
      }
    }
  }

  auto check_constraint = [&](const LinearConstraint& c, const std::string& where) {
    for (const auto& t : c.coeffs) {
      if (t.node < 0 || t.node >= m.num_nodes) bad(where + ": node index out of range");
      if (t.label < 0 || t.label >= m.num_labels) bad(where + ": label out of range");
      if (!std::isfinite(t.value)) bad(where + ": non-finite coefficient");
    }
    if (!std::isfinite(c.rhs)) bad(where + ": non-finite rhs");
  };
  for (size_t k = 0; k < m.linear_eq.size(); ++k)
    check_constraint(m.linear_eq[k], "equality constraint " + std::to_string(k));
  for (size_t k = 0; k < m.linear_ineq.size(); ++k)
    check_constraint(m.linear_ineq[k], "inequality constraint " + std::to_string(k));

  return out;
}

struct ShiftResult {
  EnergyModel model;
  double offset = 0.0;
};

// Makes every pattern value non-positive by subtracting each potential's maximum
// value from all labelings of its joint domain. Unlisted labelings (implicit zeros)
// become -M_C, so the potential is expanded over the full domain; exact zeros are
// dropped. evaluate_energy(model, x) == evaluate_energy(model', x) + offset.
inline ShiftResult shift_patterns(const EnergyModel& m) {
  ShiftResult out;
  out.model = m;
  out.offset = 0.0;
  for (auto& pot : out.model.patterns) {
    double mx = 0.0;
    for (const auto& e : pot.entries) mx = std::max(mx, e.value);
    if (mx <= 0.0) continue;

    const int arity = static_cast<int>(pot.nodes.size());
    double domain = 1.0;
    for (int k = 0; k < arity; ++k) domain *= m.num_labels;
    if (domain > 65536.0)
      throw BudgetError("pattern value shift needs the full joint domain (" +
                        std::to_string(static_cast<long long>(domain)) +
                        " labelings), beyond the supported budget");

    std::set<std::vector<int>> listed;
    std::vector<PatternPotential::Entry> shifted;
    for (const auto& e : pot.entries) {
      listed.insert(e.labels);
      if (e.value != mx) shifted.push_back({e.labels, e.value - mx});
    }
    std::vector<int> d(arity, 0);
    while (true) {
      if (!listed.count(d)) shifted.push_back({d, -mx});
      int k = arity - 1;
      while (k >= 0 && d[k] == m.num_labels - 1) d[k--] = 0;
      if (k < 0) break;
      ++d[k];
    }
    pot.entries = std::move(shifted);
    out.offset += mx;
  }
  return out;
}

// Makes every dense pairwise table non-positive by subtracting its maximum entry.
inline ShiftResult shift_pairwise(const EnergyModel& m) {
  ShiftResult out;
  out.model = m;
  out.offset = 0.0;
  for (auto& t : out.model.pairwise) {
    if (t.kind != PairwiseTerm::Kind::Dense) continue;
    double mx = *std::max_element(t.table.begin(), t.table.end());
    if (mx <= 0.0) continue;
    for (double& v : t.table) v -= mx;
    out.offset += mx;
  }
  return out;
}

// Robust block rewarding uniform labelings of `nodes`: value -gamma per label, with
// the reward fading out linearly once more than Q nodes deviate.
inline RobustPatternPotential make_robust_potts_block(std::vector<int> nodes, double gamma,
                                                      double q, int num_labels) {
  if (gamma < 0.0) throw InvalidInputError("robust block reward must be non-negative");
  if (!(q > 0.0) || q > static_cast<double>(nodes.size()))
    throw InvalidInputError("robust block truncation must lie in (0, |C|]");
  std::sort(nodes.begin(), nodes.end());
  RobustPatternPotential pot;
  pot.nodes = std::move(nodes);
  for (int p = 0; p < num_labels; ++p) {
    RobustPatternPotential::Entry e;
    e.labels.assign(pot.nodes.size(), p);
    e.value = -gamma;
    e.weights.assign(pot.nodes.size(), gamma / q);
    pot.entries.push_back(std::move(e));
  }
  return pot;
}

inline Labeling unary_argmin_labeling(const EnergyModel& m) {
  Labeling x(m.num_nodes, 0);
  for (int i = 0; i < m.num_nodes; ++i) {
    int best = 0;
    for (int p = 1; p < m.num_labels; ++p)
      if (m.unary_at(i, p) < m.unary_at(i, best)) best = p;
    x[i] = best;
  }
  return x;
}

}  // namespace smr

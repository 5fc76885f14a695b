#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <thread>
#include <utility>
#include <vector>

#include "smr/energy_model.hpp"
#include "smr/errors.hpp"
#include "smr/flow_handle.hpp"
#include "smr/quadratic_pbf.hpp"

namespace smr {

// Multipliers of the relaxed consistency constraints (lambda, one per node) and
// of the global linear constraints (xi free, pi >= 0).
struct DualPoint {
  std::vector<double> lambda;
  std::vector<double> xi;
  std::vector<double> pi;

  static DualPoint zeros(const EnergyModel& m) {
    DualPoint dp;
    dp.lambda.assign(m.num_nodes, 0.0);
    dp.xi.assign(m.linear_eq.size(), 0.0);
    dp.pi.assign(m.linear_ineq.size(), 0.0);
    return dp;
  }
};

struct DualEvaluation {
  double value = 0.0;
  std::vector<double> subgrad_lambda;
  std::vector<double> subgrad_xi;
  std::vector<double> subgrad_pi;
  // Indicator values of the inner minimizer, node-major: entry i*|P|+p.
  // Binary for the exact oracle; may contain 0.5 for the relaxed oracle.
  std::vector<double> minimizer_y;
  std::vector<char> minimizer_z;  // switching variables, pattern entries then robust entries
  bool strong_certificate = false;
};

struct AgreementReport {
  int num_nodes = 0;
  int num_labels = 0;
  std::vector<uint8_t> zero_in;  // 0 attainable at (i,p)
  std::vector<uint8_t> one_in;   // 1 attainable at (i,p)
  bool strong_agreement = false;
  bool weak_agreement = false;
};

struct LagrangianPBF {
  QuadraticPBF pbf;  // y block (node-major indicators), then one z per entry
  int num_y = 0;
  int num_z = 0;
};

namespace detail {

inline void check_dual_point(const EnergyModel& m, const DualPoint& dp) {
  if (static_cast<int>(dp.lambda.size()) != m.num_nodes ||
      dp.xi.size() != m.linear_eq.size() || dp.pi.size() != m.linear_ineq.size())
    throw InvalidInputError("dual point dimensions do not match the model");
  for (double p : dp.pi)
    if (p < 0.0) throw InvalidInputError("inequality multipliers must be non-negative");
}

inline double dual_constant(const EnergyModel& m, const DualPoint& dp) {
  double c = 0.0;
  for (double l : dp.lambda) c -= l;
  for (size_t k = 0; k < m.linear_eq.size(); ++k) c -= dp.xi[k] * m.linear_eq[k].rhs;
  for (size_t k = 0; k < m.linear_ineq.size(); ++k) c -= dp.pi[k] * m.linear_ineq[k].rhs;
  return c;
}

// Unary coefficient on indicator (i,p): theta_ip + lambda_i + constraint terms.
inline std::vector<double> effective_unary(const EnergyModel& m, const DualPoint& dp) {
  const int L = m.num_labels;
  std::vector<double> u(m.unary);
  for (int i = 0; i < m.num_nodes; ++i)
    for (int p = 0; p < L; ++p) u[static_cast<size_t>(i) * L + p] += dp.lambda[i];
  for (size_t k = 0; k < m.linear_eq.size(); ++k)
    for (const auto& t : m.linear_eq[k].coeffs)
      u[static_cast<size_t>(t.node) * L + t.label] += dp.xi[k] * t.value;
  for (size_t k = 0; k < m.linear_ineq.size(); ++k)
    for (const auto& t : m.linear_ineq[k].coeffs)
      u[static_cast<size_t>(t.node) * L + t.label] += dp.pi[k] * t.value;
  return u;
}

}  // namespace detail

inline LagrangianPBF build_lagrangian_impl(const EnergyModel& m, const DualPoint& dp,
                                           bool require_submodular) {
  detail::check_dual_point(m, dp);
  const int L = m.num_labels;
  LagrangianPBF out;
  out.num_y = m.num_nodes * L;
  out.num_z = 0;
  for (const auto& pot : m.patterns) out.num_z += static_cast<int>(pot.entries.size());
  for (const auto& pot : m.robust_patterns) out.num_z += static_cast<int>(pot.entries.size());
  if (!require_submodular && out.num_z > 0)
    throw NotSupportedError("the relaxed Lagrangian supports pairwise models only");

  QuadraticPBF f(out.num_y + out.num_z);
  f.constant = detail::dual_constant(m, dp);
  f.unary = detail::effective_unary(m, dp);
  f.unary.resize(out.num_y + out.num_z, 0.0);

  auto yv = [L](int i, int p) { return i * L + p; };
  for (const auto& t : m.pairwise) {
    if (t.kind == PairwiseTerm::Kind::Associative) {
      for (int p = 0; p < L; ++p)
        if (t.rewards[p] != 0.0) f.add_pairwise(yv(t.i, p), yv(t.j, p), -t.rewards[p]);
    } else {
      for (int p = 0; p < L; ++p)
        for (int q = 0; q < L; ++q) {
          double c = t.table[static_cast<size_t>(p) * L + q];
          if (c == 0.0) continue;
          if (c > 0.0 && require_submodular)
            throw NotSubmodularError(
                "positive dense pairwise value; subtract each table's maximum first "
                "(shift_pairwise) or use the relaxed oracle");
          f.add_pairwise(yv(t.i, p), yv(t.j, q), c);
        }
    }
  }

  int z = out.num_y;
  for (const auto& pot : m.patterns) {
    const int arity = static_cast<int>(pot.nodes.size());
    for (const auto& e : pot.entries) {
      if (e.value > 0.0)
        throw NotSubmodularError("positive pattern value; apply shift_patterns first");
      if (e.value != 0.0) {
        f.unary[z] = -e.value * (arity - 1);
        for (int k = 0; k < arity; ++k)
          f.add_pairwise(yv(pot.nodes[k], e.labels[k]), z, e.value);
      }
      ++z;
    }
  }
  for (const auto& pot : m.robust_patterns) {
    const int arity = static_cast<int>(pot.nodes.size());
    for (const auto& e : pot.entries) {
      if (e.value > 0.0)
        throw NotSubmodularError("positive robust pattern value");
      double wsum = e.value;
      for (double w : e.weights) wsum += w;
      f.unary[z] = wsum;
      for (int k = 0; k < arity; ++k) {
        if (e.weights[k] < 0.0) throw NotSubmodularError("negative robust deviation weight");
        if (e.weights[k] != 0.0)
          f.add_pairwise(yv(pot.nodes[k], e.labels[k]), z, -e.weights[k]);
      }
      ++z;
    }
  }

  out.pbf = std::move(f);
  return out;
}

inline LagrangianPBF build_lagrangian(const EnergyModel& m, const DualPoint& dp) {
  return build_lagrangian_impl(m, dp, true);
}

// Same lowering without the sign requirement on dense tables; the result is in
// general not submodular and is meant for the roof-dual oracle.
inline LagrangianPBF build_lagrangian_relaxed(const EnergyModel& m, const DualPoint& dp) {
  return build_lagrangian_impl(m, dp, false);
}

inline bool decomposable(const EnergyModel& m) {
  for (const auto& t : m.pairwise)
    if (t.kind != PairwiseTerm::Kind::Associative) return false;
  auto uniform = [](const std::vector<int>& labels) {
    for (int l : labels)
      if (l != labels[0]) return false;
    return true;
  };
  for (const auto& pot : m.patterns)
    for (const auto& e : pot.entries)
      if (!uniform(e.labels)) return false;
  for (const auto& pot : m.robust_patterns)
    for (const auto& e : pot.entries)
      if (!uniform(e.labels)) return false;
  return true;
}

namespace detail {

struct PerLabelParts {
  std::vector<QuadraticPBF> sub;              // per label; vars 0..|V|-1 are the nodes
  std::vector<std::vector<int>> z_global;     // per label: global entry index of each local z
};

inline PerLabelParts decompose_parts(const EnergyModel& m, const DualPoint& dp) {
  check_dual_point(m, dp);
  if (!decomposable(m))
    throw NotDecomposableError(
        "per-label decomposition needs associative pairwise terms and uniform-label "
        "pattern entries");
  const int L = m.num_labels;
  PerLabelParts parts;
  parts.sub.assign(L, QuadraticPBF(m.num_nodes));
  parts.z_global.assign(L, {});
  std::vector<double> u = effective_unary(m, dp);
  for (int p = 0; p < L; ++p)
    for (int i = 0; i < m.num_nodes; ++i)
      parts.sub[p].unary[i] = u[static_cast<size_t>(i) * L + p];
  for (const auto& t : m.pairwise)
    for (int p = 0; p < L; ++p)
      if (t.rewards[p] != 0.0) parts.sub[p].add_pairwise(t.i, t.j, -t.rewards[p]);

  int global = 0;
  for (const auto& pot : m.patterns) {
    const int arity = static_cast<int>(pot.nodes.size());
    for (const auto& e : pot.entries) {
      if (e.value > 0.0)
        throw NotSubmodularError("positive pattern value; apply shift_patterns first");
      const int p = e.labels[0];
      QuadraticPBF& f = parts.sub[p];
      int z = f.num_vars++;
      f.unary.push_back(e.value == 0.0 ? 0.0 : -e.value * (arity - 1));
      if (e.value != 0.0)
        for (int k = 0; k < arity; ++k) f.add_pairwise(pot.nodes[k], z, e.value);
      parts.z_global[p].push_back(global++);
    }
  }
  for (const auto& pot : m.robust_patterns) {
    const int arity = static_cast<int>(pot.nodes.size());
    for (const auto& e : pot.entries) {
      if (e.value > 0.0) throw NotSubmodularError("positive robust pattern value");
      const int p = e.labels[0];
      QuadraticPBF& f = parts.sub[p];
      int z = f.num_vars++;
      double wsum = e.value;
      for (double w : e.weights) wsum += w;
      f.unary.push_back(wsum);
      for (int k = 0; k < arity; ++k)
        if (e.weights[k] != 0.0) f.add_pairwise(pot.nodes[k], z, -e.weights[k]);
      parts.z_global[p].push_back(global++);
    }
  }
  return parts;
}

// Subgradients, certificate and (on certificate) the exact primal rebind.
inline DualEvaluation assemble_dual_evaluation(const EnergyModel& m, const DualPoint& dp,
                                               double value, std::vector<double> y,
                                               std::vector<char> z) {
  const int L = m.num_labels;
  DualEvaluation ev;
  ev.value = value;
  ev.minimizer_y = std::move(y);
  ev.minimizer_z = std::move(z);
  ev.subgrad_lambda.assign(m.num_nodes, 0.0);
  for (int i = 0; i < m.num_nodes; ++i) {
    double s = -1.0;
    for (int p = 0; p < L; ++p) s += ev.minimizer_y[static_cast<size_t>(i) * L + p];
    ev.subgrad_lambda[i] = s;
  }
  ev.subgrad_xi.reserve(m.linear_eq.size());
  for (const auto& c : m.linear_eq) {
    double s = -c.rhs;
    for (const auto& t : c.coeffs)
      s += t.value * ev.minimizer_y[static_cast<size_t>(t.node) * L + t.label];
    ev.subgrad_xi.push_back(s);
  }
  ev.subgrad_pi.reserve(m.linear_ineq.size());
  for (const auto& c : m.linear_ineq) {
    double s = -c.rhs;
    for (const auto& t : c.coeffs)
      s += t.value * ev.minimizer_y[static_cast<size_t>(t.node) * L + t.label];
    ev.subgrad_pi.push_back(s);
  }

  bool integral = true;
  for (double v : ev.minimizer_y)
    if (v != 0.0 && v != 1.0) {
      integral = false;
      break;
    }
  bool consistent = integral;
  for (int i = 0; i < m.num_nodes && consistent; ++i) consistent = ev.subgrad_lambda[i] == 0.0;
  bool constraints_ok = true;
  for (double r : ev.subgrad_xi)
    if (r != 0.0) constraints_ok = false;
  for (size_t k = 0; k < ev.subgrad_pi.size(); ++k) {
    if (ev.subgrad_pi[k] > 0.0) constraints_ok = false;
    if (dp.pi[k] != 0.0 && ev.subgrad_pi[k] != 0.0) constraints_ok = false;
  }
  ev.strong_certificate = consistent && constraints_ok;

  if (ev.strong_certificate) {
    // A consistent minimizer is a global optimum; report its energy so the
    // certificate equality is bit-exact for downstream checks.
    Labeling x(m.num_nodes, 0);
    for (int i = 0; i < m.num_nodes; ++i)
      for (int p = 0; p < L; ++p)
        if (ev.minimizer_y[static_cast<size_t>(i) * L + p] == 1.0) x[i] = p;
    ev.value = evaluate_energy(m, x);
  }
  return ev;
}

inline int parallel_threshold() { return 4096; }

}  // namespace detail

inline std::vector<QuadraticPBF> decompose_per_label(const EnergyModel& m, const DualPoint& dp) {
  return detail::decompose_parts(m, dp).sub;
}

inline DualEvaluation evaluate_dual_joint(const EnergyModel& m, const DualPoint& dp) {
  LagrangianPBF lag = build_lagrangian(m, dp);
  CutSolution cut = minimize_submodular(lag.pbf);
  std::vector<double> y(cut.assignment.begin(), cut.assignment.begin() + lag.num_y);
  std::vector<char> z(cut.assignment.begin() + lag.num_y, cut.assignment.end());
  return detail::assemble_dual_evaluation(m, dp, cut.min_value, std::move(y), std::move(z));
}

inline DualEvaluation evaluate_dual(const EnergyModel& m, const DualPoint& dp) {
  if (!decomposable(m)) return evaluate_dual_joint(m, dp);

  detail::PerLabelParts parts = detail::decompose_parts(m, dp);
  const int L = m.num_labels;
  std::vector<CutSolution> cuts(L);
  if (m.num_nodes * L >= detail::parallel_threshold() && L >= 2) {
    std::vector<std::future<CutSolution>> jobs;
    jobs.reserve(L);
    for (int p = 0; p < L; ++p)
      jobs.push_back(std::async(std::launch::async,
                                [&parts, p] { return minimize_submodular(parts.sub[p]); }));
    for (int p = 0; p < L; ++p) cuts[p] = jobs[p].get();
  } else {
    for (int p = 0; p < L; ++p) cuts[p] = minimize_submodular(parts.sub[p]);
  }

  double value = 0.0;
  for (int p = 0; p < L; ++p) value += cuts[p].min_value;
  value += detail::dual_constant(m, dp);

  std::vector<double> y(static_cast<size_t>(m.num_nodes) * L, 0.0);
  int num_z = 0;
  for (int p = 0; p < L; ++p) num_z += static_cast<int>(parts.z_global[p].size());
  std::vector<char> z(num_z, 0);
  for (int p = 0; p < L; ++p) {
    for (int i = 0; i < m.num_nodes; ++i)
      y[static_cast<size_t>(i) * L + p] = cuts[p].assignment[i];
    for (size_t k = 0; k < parts.z_global[p].size(); ++k)
      z[parts.z_global[p][k]] = cuts[p].assignment[m.num_nodes + k];
  }
  return detail::assemble_dual_evaluation(m, dp, value, std::move(y), std::move(z));
}

struct NodeGaps {
  std::vector<double> delta;  // per label: MM_0 - MM_1 of that label's subproblem
  double delta1 = 0.0;        // largest
  double delta2 = 0.0;        // second largest
  int label1 = 0;
  int label2 = 0;
};

// Per-label subproblems with live flow state, for coordinate moves on lambda.
class DecomposedDual {
 public:
  DecomposedDual(const EnergyModel& m, const DualPoint& dp) : model_(&m), dp_(dp) {
    detail::PerLabelParts parts = detail::decompose_parts(m, dp);
    z_global_ = std::move(parts.z_global);
    handles_.reserve(parts.sub.size());
    for (auto& f : parts.sub) handles_.emplace_back(f);
    constant_ = detail::dual_constant(m, dp);
  }

  const DualPoint& point() const { return dp_; }

  double value() {
    double v = 0.0;
    for (auto& h : handles_) v += h.resolve().min_value;
    return v + constant_;
  }

  void shift_lambda(int node, double delta) {
    for (auto& h : handles_) h.update_unary(node, delta);
    dp_.lambda[node] += delta;
    constant_ -= delta;
  }

  NodeGaps gaps(int node) {
    NodeGaps g;
    g.delta.reserve(handles_.size());
    for (auto& h : handles_) {
      auto [mm0, mm1] = h.min_marginals(node);
      g.delta.push_back(mm0 - mm1);
    }
    g.label1 = 0;
    for (int p = 1; p < static_cast<int>(g.delta.size()); ++p)
      if (g.delta[p] > g.delta[g.label1]) g.label1 = p;
    g.label2 = g.label1 == 0 ? 1 : 0;
    for (int p = 0; p < static_cast<int>(g.delta.size()); ++p) {
      if (p == g.label1) continue;
      if (g.delta[p] > g.delta[g.label2]) g.label2 = p;
    }
    g.delta1 = g.delta[g.label1];
    g.delta2 = g.delta[g.label2];
    return g;
  }

  DualEvaluation evaluate() {
    const int L = static_cast<int>(handles_.size());
    const int n = model_->num_nodes;
    std::vector<CutSolution> cuts(L);
    double value = constant_;
    for (int p = 0; p < L; ++p) {
      cuts[p] = handles_[p].resolve();
    }
    {
      double s = 0.0;
      for (int p = 0; p < L; ++p) s += cuts[p].min_value;
      value = s + constant_;
    }
    std::vector<double> y(static_cast<size_t>(n) * L, 0.0);
    int num_z = 0;
    for (int p = 0; p < L; ++p) num_z += static_cast<int>(z_global_[p].size());
    std::vector<char> z(num_z, 0);
    for (int p = 0; p < L; ++p) {
      for (int i = 0; i < n; ++i) y[static_cast<size_t>(i) * L + p] = cuts[p].assignment[i];
      for (size_t k = 0; k < z_global_[p].size(); ++k)
        z[z_global_[p][k]] = cuts[p].assignment[n + k];
    }
    return detail::assemble_dual_evaluation(*model_, dp_, value, std::move(y), std::move(z));
  }

 private:
  const EnergyModel* model_;
  DualPoint dp_;
  std::vector<FlowHandle> handles_;
  std::vector<std::vector<int>> z_global_;
  double constant_ = 0.0;
};

inline NodeGaps node_min_marginal_gaps(const EnergyModel& m, const DualPoint& dp, int node) {
  if (node < 0 || node >= m.num_nodes) throw InvalidInputError("node out of range");
  DecomposedDual dd(m, dp);
  return dd.gaps(node);
}

inline AgreementReport agreement_sets(const EnergyModel& m, const DualPoint& dp) {
  LagrangianPBF lag = build_lagrangian(m, dp);
  FlowHandle h(lag.pbf);
  const double value = h.resolve().min_value;
  const double tol = 1e-9 * (1.0 + std::abs(value));
  const int L = m.num_labels;

  AgreementReport rep;
  rep.num_nodes = m.num_nodes;
  rep.num_labels = L;
  rep.zero_in.assign(static_cast<size_t>(m.num_nodes) * L, 0);
  rep.one_in.assign(static_cast<size_t>(m.num_nodes) * L, 0);
  for (int i = 0; i < m.num_nodes; ++i) {
    for (int p = 0; p < L; ++p) {
      auto [mm0, mm1] = h.min_marginals(i * L + p);
      rep.zero_in[static_cast<size_t>(i) * L + p] = mm0 <= mm1 + tol;
      rep.one_in[static_cast<size_t>(i) * L + p] = mm1 <= mm0 + tol;
    }
  }

  rep.strong_agreement = true;
  rep.weak_agreement = true;
  for (int i = 0; i < m.num_nodes; ++i) {
    int only_one = 0;   // labels with Z = {1}
    int any_one = 0;    // labels with 1 attainable
    bool rest_zero = true;
    for (int p = 0; p < L; ++p) {
      size_t k = static_cast<size_t>(i) * L + p;
      bool one_only = rep.one_in[k] && !rep.zero_in[k];
      bool zero_only = rep.zero_in[k] && !rep.one_in[k];
      if (rep.one_in[k]) ++any_one;
      if (one_only) ++only_one;
      else if (!zero_only) rest_zero = false;
    }
    if (!(only_one == 1 && rest_zero)) rep.strong_agreement = false;
    if (any_one == 0) {
      rep.weak_agreement = false;
      continue;
    }
    // Every label pinned to {1} must leave 0 attainable everywhere else.
    for (int p = 0; p < L && rep.weak_agreement; ++p) {
      size_t k = static_cast<size_t>(i) * L + p;
      if (!(rep.one_in[k] && !rep.zero_in[k])) continue;
      for (int q = 0; q < L; ++q) {
        if (q == p) continue;
        if (!rep.zero_in[static_cast<size_t>(i) * L + q]) {
          rep.weak_agreement = false;
          break;
        }
      }
    }
  }
  return rep;
}

}  // namespace smr

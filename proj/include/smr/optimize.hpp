#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "smr/dual.hpp"
#include "smr/energy_model.hpp"
#include "smr/errors.hpp"
#include "smr/primal.hpp"
#include "smr/qpbo.hpp"

namespace smr {

enum class Method { Subgradient, Bundle, AggBundle, QuasiConcave, Coordinate, Nsmr };

struct OptimizerConfig {
  Method method = Method::Subgradient;
  double gamma = 0.7;
  double w_min = 1e-10;
  double w_max = 100.0;
  double m_l = 0.2;    // bundle serious-step threshold
  double m_r = 0.001;  // aggregated bundle threshold
  int bundle_size = 10;
  int memory = 10;  // curvature history of the quasi-concave driver
  int max_iter = 1000;
  double time_budget_s = std::numeric_limits<double>::infinity();
  double dual_tol = 1e-6;
  int plateau_window = 20;
  uint64_t seed = 0;
  Method nsmr_inner = Method::Subgradient;
  bool step_decay = true;  // shrink gamma while the dual stalls
  int icm_sweeps = 5;

  static OptimizerConfig defaults(Method m) {
    OptimizerConfig c;
    c.method = m;
    switch (m) {
      case Method::Subgradient:
      case Method::Nsmr:
        c.gamma = 0.7;
        break;
      case Method::Bundle:
        c.gamma = 0.1;
        c.m_l = 0.2;
        c.w_max = 100.0;
        break;
      case Method::AggBundle:
        c.gamma = 0.02;
        c.m_r = 0.001;
        c.w_max = 500.0;
        break;
      case Method::QuasiConcave:
        c.memory = 10;
        break;
      case Method::Coordinate:
        break;
    }
    return c;
  }
};

struct TraceRow {
  int iter = 0;
  double time_ms = 0.0;
  long long oracle_calls = 0;
  double dual = 0.0;
  double best_dual = 0.0;
  double primal = 0.0;
  double best_primal = 0.0;
  double step = 0.0;
  double subgrad_norm = 0.0;
};

struct Trace {
  std::vector<TraceRow> rows;
};

struct RunResult {
  DualPoint best_point;
  double best_dual = -std::numeric_limits<double>::infinity();
  DualEvaluation best_eval;
  Labeling best_labeling;
  double best_energy = std::numeric_limits<double>::infinity();
  bool certificate = false;
  long long oracle_calls = 0;
  Trace trace;
  std::optional<AgreementReport> agreement;
};

inline double polyak_step_size(double gamma, double primal_best, double dual, double grad_sq) {
  return gamma * (primal_best - dual) / grad_sq;
}

inline double bundle_inverse_step(double gamma, double primal_best, double dual_best,
                                  double grad_norm, double w_min, double w_max) {
  double denom = gamma * (primal_best - dual_best);
  double w = denom > 0.0 ? grad_norm / denom : w_max;
  return std::clamp(w, w_min, w_max);
}

namespace detail {

using DualOracle = std::function<DualEvaluation(const DualPoint&)>;

inline void check_config(const OptimizerConfig& c) {
  if (!(c.gamma > 0.0)) throw InvalidInputError("gamma must be positive");
  if (!(c.w_min > 0.0) || c.w_min > c.w_max)
    throw InvalidInputError("need 0 < w_min <= w_max");
  if (!(c.m_l > 0.0) || !(c.m_l < 1.0)) throw InvalidInputError("need 0 < m_L < 1");
  if (c.bundle_size < 2) throw InvalidInputError("bundle size must be at least 2");
  if (c.max_iter < 1) throw InvalidInputError("max_iter must be at least 1");
}

struct FlatLayout {
  int n_lambda = 0, n_xi = 0, n_pi = 0;
  explicit FlatLayout(const EnergyModel& m)
      : n_lambda(m.num_nodes),
        n_xi(static_cast<int>(m.linear_eq.size())),
        n_pi(static_cast<int>(m.linear_ineq.size())) {}
  int size() const { return n_lambda + n_xi + n_pi; }

  DualPoint unpack(const std::vector<double>& v) const {
    DualPoint dp;
    dp.lambda.assign(v.begin(), v.begin() + n_lambda);
    dp.xi.assign(v.begin() + n_lambda, v.begin() + n_lambda + n_xi);
    dp.pi.assign(v.begin() + n_lambda + n_xi, v.end());
    return dp;
  }
  std::vector<double> pack_grad(const DualEvaluation& ev) const {
    std::vector<double> g;
    g.reserve(size());
    g.insert(g.end(), ev.subgrad_lambda.begin(), ev.subgrad_lambda.end());
    g.insert(g.end(), ev.subgrad_xi.begin(), ev.subgrad_xi.end());
    g.insert(g.end(), ev.subgrad_pi.begin(), ev.subgrad_pi.end());
    return g;
  }
  void project(std::vector<double>& v) const {
    for (int k = n_lambda + n_xi; k < size(); ++k) v[k] = std::max(0.0, v[k]);
  }
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

class DriverLoop {
 public:
  DriverLoop(const EnergyModel& m, const OptimizerConfig& cfg, DualOracle oracle)
      : model_(&m), cfg_(cfg), oracle_(std::move(oracle)), layout_(m), t0_(clock_now()) {
    check_config(cfg);
    result_.best_labeling = unary_argmin_labeling(m);
    result_.best_energy = evaluate_energy(m, result_.best_labeling);
  }

  const FlatLayout& layout() const { return layout_; }
  RunResult& result() { return result_; }
  const OptimizerConfig& cfg() const { return cfg_; }

  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(clock_now() - t0_).count();
  }

  DualEvaluation evaluate(const std::vector<double>& flat) {
    DualPoint dp = layout_.unpack(flat);
    DualEvaluation ev = oracle_(dp);
    ++result_.oracle_calls;
    if (ev.value > result_.best_dual) {
      result_.best_dual = ev.value;
      result_.best_point = dp;
      result_.best_eval = ev;
    }
    return ev;
  }

  // Decode, polish with a few conditional-modes sweeps, keep the best energy.
  double recover_primal(const DualEvaluation& ev) {
    DecodedPrimal d = decode(*model_, ev, DecodeRule::FirstLabel);
    Labeling x = icm(*model_, d.labeling, cfg_.icm_sweeps);
    double e = evaluate_energy(*model_, x);
    if (e < result_.best_energy) {
      result_.best_energy = e;
      result_.best_labeling = x;
    }
    return e;
  }

  void record(int iter, double dual, double primal, double step, double gnorm) {
    TraceRow r;
    r.iter = iter;
    r.time_ms = elapsed_ms();
    r.oracle_calls = result_.oracle_calls;
    r.dual = dual;
    r.best_dual = result_.best_dual;
    r.primal = primal;
    r.best_primal = result_.best_energy;
    r.step = step;
    r.subgrad_norm = gnorm;
    result_.trace.rows.push_back(r);
  }

  // Plateau / budget tests, evaluated once per outer iteration.
  bool should_stop() {
    if (elapsed_ms() > cfg_.time_budget_s * 1000.0) return true;
    if (cfg_.dual_tol > 0.0) {
      double improvement =
          (result_.best_dual - plateau_ref_) / (1.0 + std::abs(result_.best_dual));
      if (std::isfinite(plateau_ref_) && improvement < cfg_.dual_tol) {
        if (++plateau_count_ >= cfg_.plateau_window) return true;
      } else {
        plateau_count_ = 0;
      }
      plateau_ref_ = result_.best_dual;
    }
    return false;
  }

 private:
  static std::chrono::steady_clock::time_point clock_now() {
    return std::chrono::steady_clock::now();
  }
  const EnergyModel* model_;
  OptimizerConfig cfg_;
  DualOracle oracle_;
  FlatLayout layout_;
  std::chrono::steady_clock::time_point t0_;
  RunResult result_;
  int plateau_count_ = 0;
  double plateau_ref_ = -std::numeric_limits<double>::infinity();
};

inline RunResult drive_subgradient(const EnergyModel& m, const OptimizerConfig& cfg,
                                   DualOracle oracle) {
  DriverLoop loop(m, cfg, std::move(oracle));
  std::vector<double> x(loop.layout().size(), 0.0);
  double gamma_eff = cfg.gamma;
  int stall = 0;
  double prev_best = -std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    DualEvaluation ev = loop.evaluate(x);
    double primal = loop.recover_primal(ev);
    if (ev.strong_certificate) {
      loop.result().certificate = true;
      loop.record(iter, ev.value, primal, 0.0, 0.0);
      break;
    }
    std::vector<double> g = loop.layout().pack_grad(ev);
    double g2 = dot(g, g);
    if (g2 == 0.0) {
      loop.record(iter, ev.value, primal, 0.0, 0.0);
      break;
    }
    double num = loop.result().best_energy - ev.value;
    // near-zero or negative gap estimates stall on kinks; keep a harmonic floor
    if (!(num > 1e-12 * (1.0 + std::abs(ev.value))))
      num = (1.0 + std::abs(ev.value)) / (iter + 1.0);
    double step = gamma_eff * num / g2;
    for (size_t k = 0; k < x.size(); ++k) x[k] += step * g[k];
    loop.layout().project(x);
    loop.record(iter, ev.value, primal, step, std::sqrt(g2));

    if (cfg.step_decay) {
      if (loop.result().best_dual >
          prev_best + 1e-12 * (1.0 + std::abs(prev_best))) {
        stall = 0;
      } else if (++stall >= 10) {
        gamma_eff *= 0.98;
        stall = 0;
      }
      prev_best = loop.result().best_dual;
    }
    if (loop.should_stop()) break;
  }
  return std::move(loop.result());
}

struct Plane {
  std::vector<double> g;
  double val_at_center = 0.0;
};

// minimize (1/2w)||sum b_i g_i||^2 + sum b_i a_i over the simplex, by a primal
// active-set iteration; a_i are the planes' gaps above the center value.
inline std::vector<double> solve_bundle_qp(const std::vector<Plane>& planes, double w,
                                           double center_val) {
  const int k = static_cast<int>(planes.size());
  std::vector<double> alpha(k);
  for (int i = 0; i < k; ++i) alpha[i] = std::max(0.0, planes[i].val_at_center - center_val);
  std::vector<std::vector<double>> q(k, std::vector<double>(k, 0.0));
  double trace = 0.0;
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j) {
      q[i][j] = q[j][i] = dot(planes[i].g, planes[j].g) / w;
      if (i == j) trace += q[i][i];
    }
  double ridge = 1e-12 * (1.0 + trace);
  for (int i = 0; i < k; ++i) q[i][i] += ridge;

  std::vector<double> beta(k, 0.0);
  int start = 0;
  for (int i = 1; i < k; ++i)
    if (alpha[i] < alpha[start]) start = i;
  beta[start] = 1.0;
  std::vector<char> active(k, 0);
  active[start] = 1;

  auto solve_kkt = [&](std::vector<double>& out, double& nu) -> bool {
    std::vector<int> idx;
    for (int i = 0; i < k; ++i)
      if (active[i]) idx.push_back(i);
    const int s = static_cast<int>(idx.size());
    std::vector<std::vector<double>> a(s + 1, std::vector<double>(s + 2, 0.0));
    for (int r = 0; r < s; ++r) {
      for (int c = 0; c < s; ++c) a[r][c] = q[idx[r]][idx[c]];
      a[r][s] = -1.0;
      a[r][s + 1] = -alpha[idx[r]];
    }
    for (int c = 0; c < s; ++c) a[s][c] = 1.0;
    a[s][s + 1] = 1.0;
    for (int col = 0; col <= s; ++col) {
      int piv = col;
      for (int r = col + 1; r <= s; ++r)
        if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
      if (std::abs(a[piv][col]) < 1e-14) return false;
      std::swap(a[col], a[piv]);
      for (int r = 0; r <= s; ++r) {
        if (r == col) continue;
        double f = a[r][col] / a[col][col];
        if (f == 0.0) continue;
        for (int c = col; c <= s + 1; ++c) a[r][c] -= f * a[col][c];
      }
    }
    out.assign(k, 0.0);
    for (int r = 0; r < s; ++r) out[idx[r]] = a[r][s + 1] / a[r][r];
    nu = a[s][s + 1] / a[s][s];
    return true;
  };

  for (int round = 0; round < 50 * (k + 1); ++round) {
    std::vector<double> target;
    double nu = 0.0;
    if (!solve_kkt(target, nu)) break;

    double worst = 0.0;
    for (int i = 0; i < k; ++i)
      if (active[i]) worst = std::min(worst, target[i]);
    if (worst < -1e-12) {
      // step toward the KKT point until the first weight hits zero
      double t = 1.0;
      int drop = -1;
      for (int i = 0; i < k; ++i) {
        if (!active[i]) continue;
        double d = target[i] - beta[i];
        if (d < -1e-15) {
          double ti = beta[i] / -d;
          if (ti < t) {
            t = ti;
            drop = i;
          }
        }
      }
      for (int i = 0; i < k; ++i)
        if (active[i]) beta[i] += t * (target[i] - beta[i]);
      if (drop >= 0) {
        beta[drop] = 0.0;
        active[drop] = 0;
      }
      continue;
    }

    for (int i = 0; i < k; ++i) beta[i] = active[i] ? std::max(0.0, target[i]) : 0.0;
    int add = -1;
    double most = -1e-9;
    for (int i = 0; i < k; ++i) {
      if (active[i]) continue;
      double grad = alpha[i] - nu;
      for (int j = 0; j < k; ++j) grad += q[i][j] * beta[j];
      if (grad < most) {
        most = grad;
        add = i;
      }
    }
    if (add < 0) break;
    active[add] = 1;
  }

  double s = 0.0;
  for (double b : beta) s += b;
  if (s <= 0.0) {
    beta.assign(k, 0.0);
    beta[start] = 1.0;
  } else {
    for (double& b : beta) b /= s;
  }
  return beta;
}

inline RunResult drive_bundle(const EnergyModel& m, const OptimizerConfig& cfg,
                              DualOracle oracle, bool aggregated) {
  DriverLoop loop(m, cfg, std::move(oracle));
  const int dim = loop.layout().size();
  std::vector<double> center(dim, 0.0);

  DualEvaluation ev = loop.evaluate(center);
  double primal = loop.recover_primal(ev);
  double center_val = ev.value;
  std::vector<double> g = loop.layout().pack_grad(ev);
  loop.record(0, ev.value, primal, 0.0, norm2(g));
  if (ev.strong_certificate) {
    loop.result().certificate = true;
    return std::move(loop.result());
  }

  std::deque<Plane> planes;
  planes.push_back({g, center_val});
  double w = bundle_inverse_step(cfg.gamma, loop.result().best_energy, loop.result().best_dual,
                                 norm2(g), cfg.w_min, cfg.w_max);
  const double threshold = aggregated ? cfg.m_r : cfg.m_l;

  for (int iter = 1; iter < cfg.max_iter; ++iter) {
    std::vector<Plane> active(planes.begin(), planes.end());
    std::vector<double> beta = solve_bundle_qp(active, w, center_val);

    std::vector<double> dir(dim, 0.0);
    for (size_t i = 0; i < active.size(); ++i)
      for (int k = 0; k < dim; ++k) dir[k] += beta[i] * active[i].g[k];
    std::vector<double> next(center);
    for (int k = 0; k < dim; ++k) next[k] += dir[k] / w;
    loop.layout().project(next);

    double model_val = std::numeric_limits<double>::infinity();
    for (const auto& pl : active) {
      double v = pl.val_at_center;
      for (int k = 0; k < dim; ++k) v += pl.g[k] * (next[k] - center[k]);
      model_val = std::min(model_val, v);
    }
    double expected = model_val - center_val;
    if (expected <= 1e-10 * (1.0 + std::abs(center_val))) break;  // model is flat: done

    ev = loop.evaluate(next);
    primal = loop.recover_primal(ev);
    g = loop.layout().pack_grad(ev);
    loop.record(iter, ev.value, primal, 1.0 / w, norm2(g));
    if (ev.strong_certificate) {
      loop.result().certificate = true;
      break;
    }

    Plane fresh;
    fresh.g = g;
    fresh.val_at_center = ev.value;
    for (int k = 0; k < dim; ++k) fresh.val_at_center += g[k] * (center[k] - next[k]);

    if (aggregated) {
      Plane agg;
      agg.g.assign(dim, 0.0);
      agg.val_at_center = 0.0;
      for (size_t i = 0; i < active.size(); ++i) {
        agg.val_at_center += beta[i] * active[i].val_at_center;
        for (int k = 0; k < dim; ++k) agg.g[k] += beta[i] * active[i].g[k];
      }
      planes.clear();
      planes.push_back(agg);
      planes.push_back(fresh);
    } else {
      planes.push_back(fresh);
      while (static_cast<int>(planes.size()) > cfg.bundle_size) planes.pop_front();
    }

    bool serious = ev.value - center_val >= threshold * expected;
    if (serious) {
      for (auto& pl : planes) {
        for (int k = 0; k < dim; ++k) pl.val_at_center += pl.g[k] * (next[k] - center[k]);
      }
      center = next;
      center_val = ev.value;
      w = bundle_inverse_step(cfg.gamma, loop.result().best_energy, loop.result().best_dual,
                              norm2(g), cfg.w_min, cfg.w_max);
    }
    if (loop.should_stop()) break;
  }
  return std::move(loop.result());
}

inline RunResult drive_quasi_concave(const EnergyModel& m, const OptimizerConfig& cfg,
                                     DualOracle oracle) {
  DriverLoop loop(m, cfg, std::move(oracle));
  const int dim = loop.layout().size();
  std::vector<double> x(dim, 0.0);

  DualEvaluation ev = loop.evaluate(x);
  double primal = loop.recover_primal(ev);
  std::vector<double> g = loop.layout().pack_grad(ev);
  loop.record(0, ev.value, primal, 0.0, norm2(g));
  if (ev.strong_certificate) {
    loop.result().certificate = true;
    return std::move(loop.result());
  }

  std::deque<std::pair<std::vector<double>, std::vector<double>>> mem;  // (s, grad drop)

  auto direction = [&]() {
    std::vector<double> q(g);  // start from the ascent gradient
    if (mem.empty() || cfg.memory == 0) return q;
    std::vector<double> a(mem.size(), 0.0);
    for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
      const auto& [s, y] = mem[i];
      double rho = 1.0 / dot(y, s);
      a[i] = rho * dot(s, q);
      for (int k = 0; k < dim; ++k) q[k] -= a[i] * y[k];
    }
    const auto& [sn, yn] = mem.back();
    double scale = dot(sn, yn) / dot(yn, yn);
    for (double& v : q) v *= scale;
    for (size_t i = 0; i < mem.size(); ++i) {
      const auto& [s, y] = mem[i];
      double rho = 1.0 / dot(y, s);
      double b = rho * dot(y, q);
      for (int k = 0; k < dim; ++k) q[k] += (a[i] - b) * s[k];
    }
    return q;
  };

  for (int iter = 1; iter < cfg.max_iter; ++iter) {
    std::vector<double> d = direction();
    double slope = dot(g, d);  // directional derivative of the dual along d
    if (!(slope > 1e-14)) {
      d = g;
      slope = dot(g, g);
      if (slope == 0.0) break;
    }

    // weak-Wolfe bisection on the negated dual
    const double c1 = 1e-4, c2 = 0.9;
    double lo = 0.0, hi = std::numeric_limits<double>::infinity(), t = 1.0;
    bool accepted = false;
    DualEvaluation ev_t;
    std::vector<double> xt;
    for (int ls = 0; ls < 30; ++ls) {
      xt = x;
      for (int k = 0; k < dim; ++k) xt[k] += t * d[k];
      loop.layout().project(xt);
      ev_t = loop.evaluate(xt);
      double slope_t = dot(loop.layout().pack_grad(ev_t), d);
      if (ev_t.value < ev.value + c1 * t * slope) {
        hi = t;
      } else if (slope_t > c2 * slope) {
        lo = t;
      } else {
        accepted = true;
        break;
      }
      t = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * t;
      if (hi - lo < 1e-14 && std::isfinite(hi)) break;
    }

    if (!accepted) {
      // plain adaptive subgradient step
      double g2 = dot(g, g);
      if (g2 == 0.0) break;
      double num = loop.result().best_energy - ev.value;
      if (!(num > 1e-12 * (1.0 + std::abs(ev.value))))
        num = (1.0 + std::abs(ev.value)) / (iter + 1.0);
      t = cfg.gamma * num / g2;
      xt = x;
      for (int k = 0; k < dim; ++k) xt[k] += t * g[k];
      loop.layout().project(xt);
      ev_t = loop.evaluate(xt);
      d = g;
    }

    std::vector<double> g_t = loop.layout().pack_grad(ev_t);
    if (cfg.memory > 0) {
      std::vector<double> s(dim), y(dim);
      for (int k = 0; k < dim; ++k) {
        s[k] = xt[k] - x[k];
        y[k] = g[k] - g_t[k];
      }
      if (dot(s, y) > 1e-12 * norm2(s) * norm2(y)) {
        mem.push_back({std::move(s), std::move(y)});
        while (static_cast<int>(mem.size()) > cfg.memory) mem.pop_front();
      }
    }
    x = std::move(xt);
    ev = ev_t;
    g = std::move(g_t);
    primal = loop.recover_primal(ev);
    loop.record(iter, ev.value, primal, t, norm2(g));
    if (ev.strong_certificate) {
      loop.result().certificate = true;
      break;
    }
    if (loop.should_stop()) break;
  }
  return std::move(loop.result());
}

inline DualOracle exact_oracle(const EnergyModel& m) {
  return [&m](const DualPoint& dp) { return evaluate_dual(m, dp); };
}

inline DualOracle relaxed_oracle(const EnergyModel& m) {
  return [&m](const DualPoint& dp) {
    LagrangianPBF lag = build_lagrangian_relaxed(m, dp);
    QpboResult q = qpbo(lag.pbf);
    std::vector<double> y(q.lp_unary.begin(), q.lp_unary.begin() + lag.num_y);
    return detail::assemble_dual_evaluation(m, dp, q.lower_bound, std::move(y), {});
  };
}

inline RunResult dispatch_convex(const EnergyModel& m, const OptimizerConfig& cfg, Method method,
                                 DualOracle oracle) {
  switch (method) {
    case Method::Subgradient:
      return drive_subgradient(m, cfg, std::move(oracle));
    case Method::Bundle:
      return drive_bundle(m, cfg, std::move(oracle), false);
    case Method::AggBundle:
      return drive_bundle(m, cfg, std::move(oracle), true);
    case Method::QuasiConcave:
      return drive_quasi_concave(m, cfg, std::move(oracle));
    default:
      throw InvalidInputError("not a convex driver");
  }
}

}  // namespace detail

inline RunResult run_subgradient(const EnergyModel& m, const OptimizerConfig& cfg) {
  return detail::drive_subgradient(m, cfg, detail::exact_oracle(m));
}

inline RunResult run_bundle(const EnergyModel& m, const OptimizerConfig& cfg) {
  return detail::drive_bundle(m, cfg, detail::exact_oracle(m), false);
}

inline RunResult run_aggregated_bundle(const EnergyModel& m, const OptimizerConfig& cfg) {
  return detail::drive_bundle(m, cfg, detail::exact_oracle(m), true);
}

inline RunResult run_quasi_concave(const EnergyModel& m, const OptimizerConfig& cfg) {
  return detail::drive_quasi_concave(m, cfg, detail::exact_oracle(m));
}

// Sweeps nodes in index order, moving each lambda_j to the midpoint of its
// min-marginal gap interval whenever both leading gaps share a sign. Every
// accepted move is re-checked against the dual value; the terminal point
// satisfies the weak agreement condition.
inline RunResult run_coordinate_ascent(const EnergyModel& m, const OptimizerConfig& cfg) {
  detail::check_config(cfg);
  if (!decomposable(m))
    throw NotDecomposableError("coordinate ascent needs an associative model");

  detail::DriverLoop loop(m, cfg, detail::exact_oracle(m));
  DecomposedDual dd(m, DualPoint::zeros(m));
  double dual = dd.value();
  ++loop.result().oracle_calls;

  for (int sweep = 0; sweep < cfg.max_iter; ++sweep) {
    bool changed = false;
    double max_move = 0.0;
    for (int j = 0; j < m.num_nodes; ++j) {
      NodeGaps gaps = dd.gaps(j);
      ++loop.result().oracle_calls;
      bool both_positive = gaps.delta2 > 0.0;
      bool both_negative = gaps.delta1 < 0.0;
      if (!both_positive && !both_negative) continue;
      double move = 0.5 * (gaps.delta1 + gaps.delta2);
      dd.shift_lambda(j, move);
      double after = dd.value();
      ++loop.result().oracle_calls;
      if (after < dual - 1e-9 * (1.0 + std::abs(dual)))
        throw std::runtime_error("coordinate update decreased the dual");
      dual = after;
      changed = true;
      max_move = std::max(max_move, std::abs(move));
    }

    DualEvaluation ev = dd.evaluate();
    ++loop.result().oracle_calls;
    if (ev.value > loop.result().best_dual) {
      loop.result().best_dual = ev.value;
      loop.result().best_point = dd.point();
      loop.result().best_eval = ev;
    }
    double primal = loop.recover_primal(ev);
    loop.record(sweep, ev.value, primal, max_move, detail::norm2(loop.layout().pack_grad(ev)));
    if (ev.strong_certificate) loop.result().certificate = true;
    if (!changed || ev.strong_certificate) break;
    if (loop.elapsed_ms() > cfg.time_budget_s * 1000.0) break;
  }

  loop.result().best_point = dd.point();
  loop.result().agreement = agreement_sets(m, dd.point());
  return std::move(loop.result());
}

// Roof-dual bound maximization for pairwise models with arbitrary-sign tables:
// the inner oracle is the relaxed (half-integral) minimizer, the outer loop is
// any convex driver.
inline RunResult run_nsmr(const EnergyModel& m, const OptimizerConfig& cfg) {
  if (!m.patterns.empty() || !m.robust_patterns.empty())
    throw NotSupportedError("the relaxed oracle supports pairwise models only");
  return detail::dispatch_convex(m, cfg, cfg.nsmr_inner, detail::relaxed_oracle(m));
}

inline RunResult run(const EnergyModel& m, const OptimizerConfig& cfg) {
  switch (cfg.method) {
    case Method::Subgradient:
      return run_subgradient(m, cfg);
    case Method::Bundle:
      return run_bundle(m, cfg);
    case Method::AggBundle:
      return run_aggregated_bundle(m, cfg);
    case Method::QuasiConcave:
      return run_quasi_concave(m, cfg);
    case Method::Coordinate:
      return run_coordinate_ascent(m, cfg);
    case Method::Nsmr:
      return run_nsmr(m, cfg);
  }
  throw InvalidInputError("unknown method");
}

}  // namespace smr

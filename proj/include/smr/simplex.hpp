#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "smr/errors.hpp"

namespace smr {

struct LinearProgram {
  enum class Rel : char { Eq, Le, Ge };
  struct Row {
    std::vector<std::pair<int, double>> coeffs;  // (variable, coefficient)
    Rel rel = Rel::Eq;
    double rhs = 0.0;
  };

  int num_vars = 0;
  std::vector<double> objective;     // minimize objective . x
  std::vector<Row> rows;
  std::vector<uint8_t> unit_upper;   // 1: x in [0,1], 0: x in [0, inf)

  int add_var(double cost, bool in_unit_interval) {
    objective.push_back(cost);
    unit_upper.push_back(in_unit_interval ? 1 : 0);
    return num_vars++;
  }
  void add_row(std::vector<std::pair<int, double>> coeffs, Rel rel, double rhs) {
    rows.push_back({std::move(coeffs), rel, rhs});
  }
};

struct LpSolution {
  enum class Status { Optimal, Infeasible, Unbounded };
  Status status = Status::Infeasible;
  double value = 0.0;
  std::vector<double> x;
};

// Two-phase dense-tableau simplex. Equalities keep a phase-1 artificial
// variable instead of being split into inequality pairs. Pricing is Dantzig
// with a Bland fallback after a degenerate streak, which rules out cycling;
// ratio-test ties go to the smallest basis variable.
inline LpSolution simplex_solve(const LinearProgram& lp) {
  constexpr double kEnterTol = 1e-9;
  constexpr double kPivotTol = 1e-9;

  struct NormRow {
    std::vector<double> a;  // dense over structural variables
    LinearProgram::Rel rel;
    double rhs;
  };
  std::vector<NormRow> norm;
  norm.reserve(lp.rows.size() + lp.num_vars);
  for (const auto& r : lp.rows) {
    NormRow nr{std::vector<double>(lp.num_vars, 0.0), r.rel, r.rhs};
    for (const auto& [j, c] : r.coeffs) {
      if (j < 0 || j >= lp.num_vars) throw InvalidInputError("row references unknown variable");
      nr.a[j] += c;
    }
    norm.push_back(std::move(nr));
  }
  for (int j = 0; j < lp.num_vars; ++j) {
    if (!lp.unit_upper[j]) continue;
    NormRow nr{std::vector<double>(lp.num_vars, 0.0), LinearProgram::Rel::Le, 1.0};
    nr.a[j] = 1.0;
    norm.push_back(std::move(nr));
  }
  for (auto& nr : norm) {
    if (nr.rhs < 0.0) {
      for (double& v : nr.a) v = -v;
      nr.rhs = -nr.rhs;
      if (nr.rel == LinearProgram::Rel::Le) nr.rel = LinearProgram::Rel::Ge;
      else if (nr.rel == LinearProgram::Rel::Ge) nr.rel = LinearProgram::Rel::Le;
    }
  }

  const int m = static_cast<int>(norm.size());
  const int n = lp.num_vars;
  int ncols = n;
  std::vector<int> slack_col(m, -1), artif_col(m, -1);
  for (int i = 0; i < m; ++i) {
    if (norm[i].rel != LinearProgram::Rel::Eq) slack_col[i] = ncols++;
    if (norm[i].rel != LinearProgram::Rel::Le) artif_col[i] = ncols++;
  }

  const int width = ncols + 1;  // rhs in the last column
  std::vector<std::vector<double>> tab(m, std::vector<double>(width, 0.0));
  std::vector<int> basis(m, -1);
  std::vector<char> banned(ncols, 0);
  std::vector<char> dropped(m, 0);
  for (int i = 0; i < m; ++i) {
    std::copy(norm[i].a.begin(), norm[i].a.end(), tab[i].begin());
    tab[i][ncols] = norm[i].rhs;
    if (slack_col[i] >= 0)
      tab[i][slack_col[i]] = norm[i].rel == LinearProgram::Rel::Le ? 1.0 : -1.0;
    if (artif_col[i] >= 0) {
      tab[i][artif_col[i]] = 1.0;
      banned[artif_col[i]] = 1;
      basis[i] = artif_col[i];
    } else {
      basis[i] = slack_col[i];
    }
  }

  std::vector<double> obj(width, 0.0);

  auto pivot = [&](int row, int col) {
    double piv = tab[row][col];
    double inv = 1.0 / piv;
    for (double& v : tab[row]) v *= inv;
    tab[row][col] = 1.0;
    for (int i = 0; i < m; ++i) {
      if (i == row || dropped[i]) continue;
      double f = tab[i][col];
      if (f == 0.0) continue;
      for (int j = 0; j < width; ++j) tab[i][j] -= f * tab[row][j];
      tab[i][col] = 0.0;
    }
    double f = obj[col];
    if (f != 0.0) {
      for (int j = 0; j < width; ++j) obj[j] -= f * tab[row][j];
      obj[col] = 0.0;
    }
    basis[row] = col;
  };

  // Returns false when unbounded.
  auto run = [&](bool phase2) -> bool {
    long long budget = 400000LL + 400LL * (m + ncols);
    long long stall = 0;
    bool bland = false;
    double last_obj = obj[ncols];
    while (true) {
      if (--budget < 0) throw BudgetError("simplex pivot budget exceeded");
      int enter = -1;
      if (bland) {
        for (int j = 0; j < ncols; ++j)
          if (!banned[j] && obj[j] < -kEnterTol) {
            enter = j;
            break;
          }
      } else {
        double best = -kEnterTol;
        for (int j = 0; j < ncols; ++j)
          if (!banned[j] && obj[j] < best) {
            best = obj[j];
            enter = j;
          }
      }
      if (enter < 0) return true;  // optimal for this phase

      int leave = -1;
      double best_ratio = 0.0;
      for (int i = 0; i < m; ++i) {
        if (dropped[i]) continue;
        double a = tab[i][enter];
        if (a <= kPivotTol) continue;
        double ratio = tab[i][ncols] / a;
        if (leave < 0 || ratio < best_ratio - 1e-12 ||
            (ratio <= best_ratio + 1e-12 && basis[i] < basis[leave])) {
          leave = i;
          best_ratio = ratio;
        }
      }
      if (leave < 0) {
        if (phase2) return false;  // phase-1 objective is bounded below by 0
        throw BudgetError("phase-1 subproblem unbounded; inconsistent tableau");
      }
      pivot(leave, enter);

      double now = obj[ncols];
      if (now > last_obj + 1e-12 * (1.0 + std::abs(last_obj))) {
        // -objective decreased: progress
        stall = 0;
        bland = false;
      } else if (++stall > 3LL * (m + 10)) {
        bland = true;
      }
      last_obj = now;
    }
  };

  // Phase 1: minimize the sum of artificials.
  bool any_artificial = false;
  for (int i = 0; i < m; ++i)
    if (artif_col[i] >= 0) {
      any_artificial = true;
      for (int j = 0; j < width; ++j) obj[j] -= tab[i][j];
    }
  if (any_artificial) {
    run(false);
    double infeas = -obj[ncols];
    double scale = 1.0;
    for (int i = 0; i < m; ++i) scale = std::max(scale, std::abs(norm[i].rhs));
    if (infeas > 1e-7 * scale) return {LpSolution::Status::Infeasible, 0.0, {}};

    // Remove leftover basic artificials: pivot them out or drop redundant rows.
    for (int i = 0; i < m; ++i) {
      if (dropped[i] || basis[i] < 0 || !banned[basis[i]]) continue;
      int col = -1;
      for (int j = 0; j < ncols; ++j)
        if (!banned[j] && std::abs(tab[i][j]) > 1e-8) {
          col = j;
          break;
        }
      if (col >= 0) pivot(i, col);
      else dropped[i] = 1;
    }
  }

  // Phase 2 objective, reduced against the current basis.
  std::fill(obj.begin(), obj.end(), 0.0);
  for (int j = 0; j < n; ++j) obj[j] = lp.objective[j];
  for (int i = 0; i < m; ++i) {
    if (dropped[i]) continue;
    double c = basis[i] < n ? lp.objective[basis[i]] : 0.0;
    if (c == 0.0) continue;
    for (int j = 0; j < width; ++j) obj[j] -= c * tab[i][j];
  }
  if (!run(true)) return {LpSolution::Status::Unbounded, 0.0, {}};

  LpSolution sol;
  sol.status = LpSolution::Status::Optimal;
  sol.x.assign(n, 0.0);
  for (int i = 0; i < m; ++i)
    if (!dropped[i] && basis[i] < n) sol.x[basis[i]] = tab[i][ncols];
  sol.value = 0.0;
  for (int j = 0; j < n; ++j) sol.value += lp.objective[j] * sol.x[j];
  return sol;
}

}  // namespace smr

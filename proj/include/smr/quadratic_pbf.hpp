#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "smr/errors.hpp"

namespace smr {

// constant + sum a_v y_v + sum b_uv y_u y_v over binary y.
// Submodular iff every pairwise coefficient b_uv <= 0.
struct QuadraticPBF {
  int num_vars = 0;
  double constant = 0.0;
  std::vector<double> unary;
  struct PairTerm {
    int u = 0;
    int v = 0;
    double coeff = 0.0;
  };
  std::vector<PairTerm> pairwise;

  QuadraticPBF() = default;
  explicit QuadraticPBF(int n) : num_vars(n), unary(n, 0.0) {}

  void add_pairwise(int u, int v, double c) {
    if (u == v) throw InvalidInputError("pairwise term endpoints must differ");
    pairwise.push_back({u, v, c});
  }

  bool is_submodular() const {
    for (const auto& t : pairwise)
      if (t.coeff > 0.0) return false;
    return true;
  }

  double value_at(const std::vector<char>& y) const {
    double s = constant;
    for (int v = 0; v < num_vars; ++v)
      if (y[v]) s += unary[v];
    for (const auto& t : pairwise)
      if (y[t.u] && y[t.v]) s += t.coeff;
    return s;
  }

  // Collapses duplicate unordered pairs and drops zero terms.
  QuadraticPBF normalized() const {
    QuadraticPBF out(num_vars);
    out.constant = constant;
    out.unary = unary;
    std::map<std::pair<int, int>, double> merged;
    for (const auto& t : pairwise) merged[std::minmax(t.u, t.v)] += t.coeff;
    for (const auto& [key, c] : merged)
      if (c != 0.0) out.pairwise.push_back({key.first, key.second, c});
    return out;
  }

  double coefficient_magnitude_sum() const {
    double s = std::abs(constant);
    for (double a : unary) s += std::abs(a);
    for (const auto& t : pairwise) s += std::abs(t.coeff);
    return s;
  }
};

}  // namespace smr

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "smr/energy_model.hpp"
#include "smr/errors.hpp"

namespace smr {

struct GenSpec {
  int rows = 10;
  int cols = 10;
  int num_labels = 10;
  double unary_sigma = 1.0;
  double potts_sigma = 0.5;
  bool signed_weights = false;          // signed tables instead of associative rewards
  bool class_size_constraints = false;  // strict per-label size constraints
  uint64_t seed = 0;
};

// Random 4-neighborhood grid: unaries N(0, unary_sigma); each edge rewards
// equal labels with |N(0, potts_sigma)|, or with a signed draw stored as a
// dense table when signed_weights is set. Class sizes grow linearly with the
// label index and sum to |V|, the last class absorbing the rounding remainder.
inline EnergyModel generate(const GenSpec& spec) {
  if (spec.rows < 1 || spec.cols < 1) throw InvalidInputError("grid dimensions must be positive");
  if (spec.num_labels < 2) throw InvalidInputError("need at least two labels");
  if (!(spec.unary_sigma > 0.0) || !(spec.potts_sigma > 0.0))
    throw InvalidInputError("sigmas must be positive");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> unary_draw(0.0, spec.unary_sigma);
  std::normal_distribution<double> weight_draw(0.0, spec.potts_sigma);

  EnergyModel m;
  m.num_nodes = spec.rows * spec.cols;
  m.num_labels = spec.num_labels;
  m.unary.resize(static_cast<size_t>(m.num_nodes) * m.num_labels);
  for (double& v : m.unary) v = unary_draw(rng);

  auto add_edge = [&](int a, int b) {
    double w = weight_draw(rng);
    PairwiseTerm t;
    t.i = a;
    t.j = b;
    if (spec.signed_weights) {
      t.kind = PairwiseTerm::Kind::Dense;
      t.table.assign(static_cast<size_t>(m.num_labels) * m.num_labels, 0.0);
      for (int p = 0; p < m.num_labels; ++p)
        t.table[static_cast<size_t>(p) * m.num_labels + p] = -w;
    } else {
      t.kind = PairwiseTerm::Kind::Associative;
      t.rewards.assign(m.num_labels, std::abs(w));
    }
    m.pairwise.push_back(std::move(t));
  };
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      int v = r * spec.cols + c;
      if (c + 1 < spec.cols) add_edge(v, v + 1);
      if (r + 1 < spec.rows) add_edge(v, v + spec.cols);
    }
  }

  if (spec.class_size_constraints) {
    const int L = m.num_labels;
    double denom = 0.0;
    for (int q = 1; q <= L; ++q) denom += q;
    long long assigned = 0;
    for (int p = 0; p < L; ++p) {
      long long size;
      if (p + 1 < L) {
        size = std::llround(m.num_nodes * (p + 1) / denom);
      } else {
        size = m.num_nodes - assigned;
      }
      assigned += size;
      LinearConstraint c;
      c.rhs = static_cast<double>(size);
      c.coeffs.reserve(m.num_nodes);
      for (int j = 0; j < m.num_nodes; ++j) c.coeffs.push_back({j, p, 1.0});
      m.linear_eq.push_back(std::move(c));
    }
  }
  return m;
}

}  // namespace smr

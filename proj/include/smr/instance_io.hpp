#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "smr/energy_model.hpp"
#include "smr/errors.hpp"

namespace smr {

namespace detail {

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct LineReader {
  std::istream& in;
  int line_no = 0;

  // Next non-empty, non-comment line; false at end of input.
  bool next(std::string& out) {
    std::string s;
    while (std::getline(in, s)) {
      ++line_no;
      size_t start = s.find_first_not_of(" \t\r");
      if (start == std::string::npos) continue;
      if (s[start] == '#') continue;
      out = s.substr(start);
      return true;
    }
    return false;
  }
};

inline double parse_double(const std::string& tok, int line) {
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0')
    throw ParseError(line, "expected a number, got '" + tok + "'");
  return v;
}

inline long parse_int(const std::string& tok, int line) {
  char* end = nullptr;
  long v = std::strtol(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0')
    throw ParseError(line, "expected an integer, got '" + tok + "'");
  return v;
}

inline std::vector<std::string> split_colon(const std::string& tok) {
  std::vector<std::string> parts;
  size_t pos = 0;
  while (true) {
    size_t next = tok.find(':', pos);
    if (next == std::string::npos) {
      parts.push_back(tok.substr(pos));
      break;
    }
    parts.push_back(tok.substr(pos, next - pos));
    pos = next + 1;
  }
  return parts;
}

}  // namespace detail

inline void write_instance(const EnergyModel& m, std::ostream& out) {
  using detail::fmt17;
  out << "SMR v1 nodes " << m.num_nodes << " labels " << m.num_labels << "\n";
  out << "unary\n";
  for (int i = 0; i < m.num_nodes; ++i) {
    for (int p = 0; p < m.num_labels; ++p) {
      if (p) out << ' ';
      out << fmt17(m.unary_at(i, p));
    }
    out << "\n";
  }
  for (const auto& t : m.pairwise) {
    if (t.kind == PairwiseTerm::Kind::Associative) {
      bool uniform = true;
      for (double r : t.rewards)
        if (r != t.rewards[0]) uniform = false;
      if (uniform) {
        out << "edge " << t.i << ' ' << t.j << " potts " << fmt17(t.rewards[0]) << "\n";
      } else {
        out << "edge " << t.i << ' ' << t.j << " assoc";
        for (double r : t.rewards) out << ' ' << fmt17(r);
        out << "\n";
      }
    } else {
      out << "edge " << t.i << ' ' << t.j << " dense\n";
      for (int p = 0; p < m.num_labels; ++p) {
        for (int q = 0; q < m.num_labels; ++q) {
          if (q) out << ' ';
          out << fmt17(t.table[static_cast<size_t>(p) * m.num_labels + q]);
        }
        out << "\n";
      }
    }
  }
  for (const auto& pot : m.patterns) {
    for (const auto& e : pot.entries) {
      out << "pattern " << pot.nodes.size() << ' ' << fmt17(e.value);
      for (size_t k = 0; k < pot.nodes.size(); ++k)
        out << ' ' << pot.nodes[k] << ':' << e.labels[k];
      out << "\n";
    }
  }
  for (const auto& pot : m.robust_patterns) {
    for (const auto& e : pot.entries) {
      out << "robust " << pot.nodes.size() << ' ' << fmt17(e.value);
      for (size_t k = 0; k < pot.nodes.size(); ++k)
        out << ' ' << pot.nodes[k] << ':' << e.labels[k] << ':' << fmt17(e.weights[k]);
      out << "\n";
    }
  }
  auto write_constraint = [&](const char* kw, const LinearConstraint& c) {
    out << kw << ' ' << fmt17(c.rhs);
    for (const auto& t : c.coeffs) out << ' ' << t.node << ':' << t.label << ':' << fmt17(t.value);
    out << "\n";
  };
  for (const auto& c : m.linear_eq) write_constraint("eq", c);
  for (const auto& c : m.linear_ineq) write_constraint("ineq", c);
}

inline EnergyModel read_instance(std::istream& in) {
  using namespace detail;
  LineReader lr{in};
  std::string line;
  if (!lr.next(line)) throw ParseError(lr.line_no, "empty instance");

  EnergyModel m;
  {
    std::istringstream hs(line);
    std::string magic, version, kw_nodes, kw_labels;
    hs >> magic >> version >> kw_nodes >> m.num_nodes >> kw_labels >> m.num_labels;
    if (hs.fail() || magic != "SMR" || version != "v1" || kw_nodes != "nodes" ||
        kw_labels != "labels")
      throw ParseError(lr.line_no, "expected header 'SMR v1 nodes N labels L'");
    if (m.num_nodes < 1 || m.num_labels < 2)
      throw ParseError(lr.line_no, "invalid node or label count");
  }
  m.unary.assign(static_cast<size_t>(m.num_nodes) * m.num_labels, 0.0);

  auto check_node = [&](long v, int line) {
    if (v < 0 || v >= m.num_nodes) throw ParseError(line, "node index out of range");
    return static_cast<int>(v);
  };
  auto check_label = [&](long v, int line) {
    if (v < 0 || v >= m.num_labels) throw ParseError(line, "label out of range");
    return static_cast<int>(v);
  };

  bool saw_unary = false;
  while (lr.next(line)) {
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "unary") {
      for (int i = 0; i < m.num_nodes; ++i) {
        std::string row;
        if (!lr.next(row)) throw ParseError(lr.line_no, "unary block ends early");
        std::istringstream rs(row);
        std::string tok;
        for (int p = 0; p < m.num_labels; ++p) {
          if (!(rs >> tok)) throw ParseError(lr.line_no, "unary row has too few values");
          m.unary_at(i, p) = parse_double(tok, lr.line_no);
        }
        if (rs >> tok) throw ParseError(lr.line_no, "unary row has too many values");
      }
      saw_unary = true;
    } else if (kw == "edge") {
      long i, j;
      std::string kind;
      if (!(ls >> i >> j >> kind)) throw ParseError(lr.line_no, "malformed edge line");
      PairwiseTerm t;
      t.i = check_node(i, lr.line_no);
      t.j = check_node(j, lr.line_no);
      std::string tok;
      if (kind == "potts") {
        if (!(ls >> tok)) throw ParseError(lr.line_no, "potts edge needs a weight");
        t.kind = PairwiseTerm::Kind::Associative;
        t.rewards.assign(m.num_labels, parse_double(tok, lr.line_no));
      } else if (kind == "assoc") {
        t.kind = PairwiseTerm::Kind::Associative;
        for (int p = 0; p < m.num_labels; ++p) {
          if (!(ls >> tok)) throw ParseError(lr.line_no, "assoc edge has too few rewards");
          t.rewards.push_back(parse_double(tok, lr.line_no));
        }
      } else if (kind == "dense") {
        t.kind = PairwiseTerm::Kind::Dense;
        t.table.resize(static_cast<size_t>(m.num_labels) * m.num_labels);
        for (int p = 0; p < m.num_labels; ++p) {
          std::string row;
          if (!lr.next(row)) throw ParseError(lr.line_no, "dense table ends early");
          std::istringstream rs(row);
          for (int q = 0; q < m.num_labels; ++q) {
            if (!(rs >> tok)) throw ParseError(lr.line_no, "dense row has too few values");
            t.table[static_cast<size_t>(p) * m.num_labels + q] = parse_double(tok, lr.line_no);
          }
        }
      } else {
        throw ParseError(lr.line_no, "unknown edge kind '" + kind + "'");
      }
      if (kind != "dense" && (ls >> tok)) throw ParseError(lr.line_no, "trailing tokens");
      m.pairwise.push_back(std::move(t));
    } else if (kw == "pattern" || kw == "robust") {
      long arity;
      std::string val_tok;
      if (!(ls >> arity >> val_tok)) throw ParseError(lr.line_no, "malformed " + kw + " line");
      double value = parse_double(val_tok, lr.line_no);
      std::vector<int> nodes, labels;
      std::vector<double> weights;
      for (long k = 0; k < arity; ++k) {
        std::string tok;
        if (!(ls >> tok)) throw ParseError(lr.line_no, kw + " line has too few node entries");
        auto parts = split_colon(tok);
        size_t want = kw == "pattern" ? 2 : 3;
        if (parts.size() != want)
          throw ParseError(lr.line_no, "expected node:label" +
                                           std::string(want == 3 ? ":weight" : "") + ", got '" +
                                           tok + "'");
        nodes.push_back(check_node(parse_int(parts[0], lr.line_no), lr.line_no));
        labels.push_back(check_label(parse_int(parts[1], lr.line_no), lr.line_no));
        if (want == 3) weights.push_back(parse_double(parts[2], lr.line_no));
      }
      // entries arrive sorted by node inside one potential; adjacent lines with
      // the same node set extend the same potential
      std::vector<size_t> order(nodes.size());
      for (size_t k = 0; k < order.size(); ++k) order[k] = k;
      std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return nodes[a] < nodes[b]; });
      std::vector<int> snodes, slabels;
      std::vector<double> sweights;
      for (size_t k : order) {
        snodes.push_back(nodes[k]);
        slabels.push_back(labels[k]);
        if (!weights.empty()) sweights.push_back(weights[k]);
      }
      if (kw == "pattern") {
        if (m.patterns.empty() || m.patterns.back().nodes != snodes) {
          PatternPotential pot;
          pot.nodes = snodes;
          m.patterns.push_back(std::move(pot));
        }
        m.patterns.back().entries.push_back({std::move(slabels), value});
      } else {
        if (m.robust_patterns.empty() || m.robust_patterns.back().nodes != snodes) {
          RobustPatternPotential pot;
          pot.nodes = snodes;
          m.robust_patterns.push_back(std::move(pot));
        }
        m.robust_patterns.back().entries.push_back(
            {std::move(slabels), value, std::move(sweights)});
      }
    } else if (kw == "eq" || kw == "ineq") {
      std::string rhs_tok;
      if (!(ls >> rhs_tok)) throw ParseError(lr.line_no, kw + " line needs a right-hand side");
      LinearConstraint c;
      c.rhs = parse_double(rhs_tok, lr.line_no);
      std::string tok;
      while (ls >> tok) {
        auto parts = split_colon(tok);
        if (parts.size() != 3)
          throw ParseError(lr.line_no, "expected node:label:coef, got '" + tok + "'");
        LinearConstraint::Coef coef;
        coef.node = check_node(parse_int(parts[0], lr.line_no), lr.line_no);
        coef.label = check_label(parse_int(parts[1], lr.line_no), lr.line_no);
        coef.value = parse_double(parts[2], lr.line_no);
        c.coeffs.push_back(coef);
      }
      (kw == "eq" ? m.linear_eq : m.linear_ineq).push_back(std::move(c));
    } else {
      throw ParseError(lr.line_no, "unknown directive '" + kw + "'");
    }
  }
  if (!saw_unary) throw ParseError(lr.line_no, "missing unary block");

  auto problems = validate(m);
  if (!problems.empty()) throw InvalidInputError("invalid instance: " + problems.front());
  return m;
}

inline void write_instance_file(const EnergyModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInputError("cannot open '" + path + "' for writing");
  write_instance(m, out);
}

inline EnergyModel read_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open '" + path + "'");
  return read_instance(in);
}

}  // namespace smr

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "smr/energy_model.hpp"
#include "smr/generate.hpp"
#include "smr/instance_io.hpp"
#include "smr/optimize.hpp"

namespace {

smr::Method parse_method(const std::string& name) {
  if (name == "subgradient") return smr::Method::Subgradient;
  if (name == "bundle") return smr::Method::Bundle;
  if (name == "agg-bundle") return smr::Method::AggBundle;
  if (name == "quasi") return smr::Method::QuasiConcave;
  if (name == "coord") return smr::Method::Coordinate;
  if (name == "nsmr") return smr::Method::Nsmr;
  throw CLI::ValidationError("--method", "unknown method '" + name + "'");
}

void write_trace_csv(const smr::Trace& trace, double offset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw smr::InvalidInputError("cannot open '" + path + "' for writing");
  out << "iter,time_ms,oracle_calls,dual,best_dual,primal,best_primal,step,subgrad_norm\n";
  for (const auto& r : trace.rows) {
    out << r.iter << ',' << smr::detail::fmt17(r.time_ms) << ',' << r.oracle_calls << ','
        << smr::detail::fmt17(r.dual + offset) << ',' << smr::detail::fmt17(r.best_dual + offset)
        << ',' << smr::detail::fmt17(r.primal + offset) << ','
        << smr::detail::fmt17(r.best_primal + offset) << ',' << smr::detail::fmt17(r.step) << ','
        << smr::detail::fmt17(r.subgrad_norm) << "\n";
  }
}

struct Prepared {
  smr::EnergyModel model;
  double offset = 0.0;
};

// Non-positive pattern values and (for the exact oracle) non-positive pairwise
// tables, with the subtracted constant carried separately.
Prepared prepare(const smr::EnergyModel& m, smr::Method method) {
  Prepared out{m, 0.0};
  bool pattern_shift_needed = false;
  for (const auto& pot : out.model.patterns)
    for (const auto& e : pot.entries)
      if (e.value > 0.0) pattern_shift_needed = true;
  if (pattern_shift_needed) {
    auto shifted = smr::shift_patterns(out.model);
    out.model = std::move(shifted.model);
    out.offset += shifted.offset;
  }
  if (method != smr::Method::Nsmr) {
    auto shifted = smr::shift_pairwise(out.model);
    out.model = std::move(shifted.model);
    out.offset += shifted.offset;
  }
  return out;
}

struct RunOutcome {
  smr::RunResult result;
  double offset = 0.0;
  double wall_ms = 0.0;
};

RunOutcome run_prepared(const smr::EnergyModel& m, const smr::OptimizerConfig& cfg) {
  Prepared prep = prepare(m, cfg.method);
  auto t0 = std::chrono::steady_clock::now();
  RunOutcome out;
  out.result = smr::run(prep.model, cfg);
  out.offset = prep.offset;
  out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
  return out;
}

int cmd_gen(const smr::GenSpec& spec, const std::string& out_path) {
  smr::EnergyModel m = smr::generate(spec);
  smr::write_instance_file(m, out_path);
  std::cout << "wrote " << out_path << " (" << m.num_nodes << " nodes, " << m.pairwise.size()
            << " edges, " << m.linear_eq.size() << " equality constraints)\n";
  return 0;
}

int cmd_solve(const std::string& instance, const std::string& method_name, double gamma,
              int max_iter, double time_budget, uint64_t seed, const std::string& trace_path,
              const std::string& summary_path) {
  smr::EnergyModel m = smr::read_instance_file(instance);
  smr::Method method = parse_method(method_name);
  smr::OptimizerConfig cfg = smr::OptimizerConfig::defaults(method);
  if (gamma > 0.0) cfg.gamma = gamma;
  cfg.max_iter = max_iter;
  if (time_budget > 0.0) cfg.time_budget_s = time_budget;
  cfg.seed = seed;

  RunOutcome run = run_prepared(m, cfg);
  const auto& res = run.result;
  double final_dual =
      (res.trace.rows.empty() ? res.best_dual : res.trace.rows.back().dual) + run.offset;
  double best_dual = res.best_dual + run.offset;
  double best_primal = res.best_energy + run.offset;

  std::ostringstream summary;
  summary << "instance=" << instance << "\n"
          << "method=" << method_name << "\n"
          << "nodes=" << m.num_nodes << "\n"
          << "labels=" << m.num_labels << "\n"
          << "iters=" << res.trace.rows.size() << "\n"
          << "oracle_calls=" << res.oracle_calls << "\n"
          << "final_dual=" << smr::detail::fmt17(final_dual) << "\n"
          << "best_dual=" << smr::detail::fmt17(best_dual) << "\n"
          << "best_primal=" << smr::detail::fmt17(best_primal) << "\n"
          << "gap=" << smr::detail::fmt17(best_primal - best_dual) << "\n"
          << "certificate=" << (res.certificate ? "true" : "false") << "\n"
          << "wall_ms=" << smr::detail::fmt17(run.wall_ms) << "\n"
          << "seed=" << seed << "\n";
  if (!m.linear_eq.empty() || !m.linear_ineq.empty()) {
    // constrained reporting: conflicted regions pick one label jointly
    smr::DecodedPrimal dec =
        smr::decode(m, res.best_eval, smr::DecodeRule::ComponentRandom, seed);
    smr::Labeling polished = smr::icm(m, dec.labeling, 5);
    auto residuals = smr::constraint_violation(m, polished);
    double violation = 0.0;
    for (double r : residuals.eq_residuals) violation += std::abs(r);
    for (double r : residuals.ineq_excess) violation += r;
    summary << "final_primal=" << smr::detail::fmt17(smr::evaluate_energy(m, polished))
            << "\n"
            << "final_violation=" << smr::detail::fmt17(violation) << "\n";
  }
  if (!summary_path.empty()) {
    std::ofstream out(summary_path);
    if (!out) throw smr::InvalidInputError("cannot open '" + summary_path + "' for writing");
    out << summary.str();
  }
  if (!trace_path.empty()) write_trace_csv(res.trace, run.offset, trace_path);
  std::cout << summary.str();
  return 0;
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return 0.0;
  double pos = q / 100.0 * (v.size() - 1);
  size_t lo = static_cast<size_t>(pos);
  size_t hi = std::min(lo + 1, v.size() - 1);
  double frac = pos - lo;
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

int cmd_compare(int n, uint64_t seed, int rows, int cols, int labels, int max_iter,
                const std::string& out_path) {
  struct InstanceGaps {
    double nsmr = 0.0;
    double subtraction = 0.0;
  };
  std::vector<InstanceGaps> gaps(n);

  auto run_one = [&](int idx) {
    smr::GenSpec spec;
    spec.rows = rows;
    spec.cols = cols;
    spec.num_labels = labels;
    spec.signed_weights = true;
    spec.seed = seed + static_cast<uint64_t>(idx);
    smr::EnergyModel m = smr::generate(spec);

    smr::OptimizerConfig nsmr_cfg = smr::OptimizerConfig::defaults(smr::Method::Nsmr);
    nsmr_cfg.max_iter = max_iter;
    RunOutcome nsmr_run = run_prepared(m, nsmr_cfg);

    smr::OptimizerConfig smr_cfg = smr::OptimizerConfig::defaults(smr::Method::Subgradient);
    smr_cfg.max_iter = max_iter;
    RunOutcome smr_run = run_prepared(m, smr_cfg);

    InstanceGaps g;
    g.nsmr = (nsmr_run.result.best_energy + nsmr_run.offset) -
             (nsmr_run.result.best_dual + nsmr_run.offset);
    g.subtraction = (smr_run.result.best_energy + smr_run.offset) -
                    (smr_run.result.best_dual + smr_run.offset);
    return g;
  };

  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  for (int base = 0; base < n; base += static_cast<int>(workers)) {
    std::vector<std::future<InstanceGaps>> batch;
    int end = std::min(n, base + static_cast<int>(workers));
    for (int i = base; i < end; ++i)
      batch.push_back(std::async(std::launch::async, run_one, i));
    for (int i = base; i < end; ++i) gaps[i] = batch[i - base].get();
  }

  std::vector<double> nsmr_gaps, sub_gaps;
  for (const auto& g : gaps) {
    nsmr_gaps.push_back(g.nsmr);
    sub_gaps.push_back(g.subtraction);
  }
  std::ostringstream table;
  table << "percentile,nsmr,subtraction\n";
  for (double q : {25.0, 50.0, 75.0})
    table << q << ',' << smr::detail::fmt17(percentile(nsmr_gaps, q)) << ','
          << smr::detail::fmt17(percentile(sub_gaps, q)) << "\n";
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw smr::InvalidInputError("cannot open '" + out_path + "' for writing");
    out << table.str();
  }
  std::cout << table.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"submodular-relaxation energy minimization"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "generate a random grid instance");
  smr::GenSpec spec;
  std::string gen_out = "instance.smr";
  gen->add_option("--rows", spec.rows, "grid rows")->default_val(10);
  gen->add_option("--cols", spec.cols, "grid columns")->default_val(10);
  gen->add_option("--labels", spec.num_labels, "number of labels")->default_val(10);
  gen->add_option("--seed", spec.seed, "random seed")->default_val(0);
  gen->add_flag("--signed", spec.signed_weights, "signed pairwise weights");
  gen->add_flag("--class-constraints", spec.class_size_constraints,
                "strict class size constraints");
  gen->add_option("--out", gen_out, "output path")->required();

  auto* solve = app.add_subcommand("solve", "maximize the dual of one instance");
  std::string instance, method = "subgradient", trace_path, summary_path;
  double gamma = -1.0, time_budget = -1.0;
  int max_iter = 1000;
  uint64_t seed = 0;
  solve->add_option("--instance", instance, "instance file")->required();
  solve->add_option("--method", method,
                    "subgradient|bundle|agg-bundle|quasi|coord|nsmr");
  solve->add_option("--gamma", gamma, "step-size scale");
  solve->add_option("--max-iter", max_iter, "iteration budget");
  solve->add_option("--time-budget", time_budget, "wall-clock budget, seconds");
  solve->add_option("--seed", seed, "random seed");
  solve->add_option("--trace", trace_path, "per-iteration CSV output");
  solve->add_option("--summary", summary_path, "key=value summary output");

  auto* compare = app.add_subcommand("compare", "relaxed vs. subtraction-trick duals");
  int cmp_n = 10, cmp_rows = 10, cmp_cols = 10, cmp_labels = 5, cmp_iter = 1000;
  uint64_t cmp_seed = 0;
  std::string cmp_out;
  compare->add_option("--n", cmp_n, "number of instances");
  compare->add_option("--seed", cmp_seed, "base seed");
  compare->add_option("--rows", cmp_rows, "grid rows");
  compare->add_option("--cols", cmp_cols, "grid columns");
  compare->add_option("--labels", cmp_labels, "number of labels");
  compare->add_option("--max-iter", cmp_iter, "iteration budget per run");
  compare->add_option("--out", cmp_out, "output table path");

  CLI11_PARSE(app, argc, argv);
  try {
    if (gen->parsed()) return cmd_gen(spec, gen_out);
    if (solve->parsed())
      return cmd_solve(instance, method, gamma, max_iter, time_budget, seed, trace_path,
                       summary_path);
    if (compare->parsed())
      return cmd_compare(cmp_n, cmp_seed, cmp_rows, cmp_cols, cmp_labels, cmp_iter, cmp_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "catch_amalgamated.hpp"

namespace {

std::string cli_path() {
  const char* p = std::getenv("SMR_CLI");
  REQUIRE(p != nullptr);
  return p;
}

int run(const std::string& args) {
  std::string cmd = cli_path() + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string summary_value(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
  return "";
}

}  // namespace

TEST_CASE("gen, solve and the summary contract") {
  REQUIRE(run("gen --rows 2 --cols 3 --labels 3 --seed 5 --out cli_inst.smr") == 0);
  REQUIRE(run("solve --instance cli_inst.smr --method subgradient --max-iter 3000 "
              "--trace cli_trace.csv --summary cli_summary.txt") == 0);

  std::string summary = slurp("cli_summary.txt");
  CHECK(summary_value(summary, "method") == "subgradient");
  CHECK(summary_value(summary, "nodes") == "6");
  CHECK(!summary_value(summary, "best_dual").empty());
  CHECK(!summary_value(summary, "gap").empty());

  std::string trace = slurp("cli_trace.csv");
  std::istringstream in(trace);
  std::string header;
  std::getline(in, header);
  CHECK(header == "iter,time_ms,oracle_calls,dual,best_dual,primal,best_primal,step,subgrad_norm");
  double prev_best = -1e300, prev_primal = 1e300;
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    std::vector<double> cols;
    while (std::getline(ls, tok, ',')) cols.push_back(std::strtod(tok.c_str(), nullptr));
    REQUIRE(cols.size() == 9);
    CHECK(cols[4] >= prev_best);    // best_dual never decreases
    CHECK(cols[6] <= prev_primal);  // best_primal never increases
    prev_best = cols[4];
    prev_primal = cols[6];
    ++rows;
  }
  CHECK(rows >= 1);
}

TEST_CASE("certificates appear in the summary on easy instances") {
  // unary-dominant: the relaxation is integral and the driver certifies
  REQUIRE(run("gen --rows 2 --cols 2 --labels 3 --seed 11 --out cli_easy.smr") == 0);
  REQUIRE(run("solve --instance cli_easy.smr --method bundle --max-iter 2000 "
              "--summary cli_easy_summary.txt") == 0);
  std::string summary = slurp("cli_easy_summary.txt");
  CHECK(summary_value(summary, "certificate") == "true");
  double gap = std::strtod(summary_value(summary, "gap").c_str(), nullptr);
  CHECK(std::abs(gap) <= 1e-6);
}

TEST_CASE("solve accepts every advertised method on a signed instance") {
  REQUIRE(run("gen --rows 2 --cols 2 --labels 2 --seed 3 --signed --out cli_signed.smr") == 0);
  for (const char* method : {"subgradient", "bundle", "agg-bundle", "quasi", "nsmr"}) {
    REQUIRE(run(std::string("solve --instance cli_signed.smr --method ") + method +
                " --max-iter 200 --summary cli_m_summary.txt") == 0);
  }
  // associative instance for the coordinate driver
  REQUIRE(run("gen --rows 2 --cols 2 --labels 2 --seed 3 --out cli_assoc.smr") == 0);
  REQUIRE(run("solve --instance cli_assoc.smr --method coord --max-iter 50 "
              "--summary cli_m_summary.txt") == 0);
  REQUIRE(run("solve --instance cli_inst.smr --method bogus") != 0);
  REQUIRE(run("solve --instance does_not_exist.smr") != 0);
}

TEST_CASE("constrained instances report a repaired primal") {
  REQUIRE(run("gen --rows 3 --cols 3 --labels 3 --seed 2 --class-constraints "
              "--out cli_con.smr") == 0);
  REQUIRE(run("solve --instance cli_con.smr --method subgradient --max-iter 2000 "
              "--seed 4 --summary cli_con_summary.txt") == 0);
  std::string summary = slurp("cli_con_summary.txt");
  CHECK(!summary_value(summary, "final_primal").empty());
  CHECK(!summary_value(summary, "final_violation").empty());
}

TEST_CASE("compare is deterministic for fixed seeds") {
  REQUIRE(run("compare --n 2 --seed 9 --rows 3 --cols 3 --labels 3 --max-iter 300 "
              "--out cli_cmp_a.csv") == 0);
  REQUIRE(run("compare --n 2 --seed 9 --rows 3 --cols 3 --labels 3 --max-iter 300 "
              "--out cli_cmp_b.csv") == 0);
  std::string a = slurp("cli_cmp_a.csv");
  CHECK(a == slurp("cli_cmp_b.csv"));
  CHECK(a.rfind("percentile,nsmr,subtraction\n", 0) == 0);
  int lines = 0;
  for (char c : a)
    if (c == '\n') ++lines;
  CHECK(lines == 4);
}

// Command-line front end: topology files, single analyses and sweeps.
#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "nc/analysis.hpp"
#include "nc/baselines.hpp"
#include "nc/network.hpp"

namespace nc {

// Malformed topology document; line is 0 when not attributable to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, int line) : std::runtime_error(msg), line(line) {}
  int line;
};

// JSON document with "servers", optional "links" and "flows". Rp may be the
// string "inf". Missing links are derived from flow paths and shapers.
Topology parse_topology(const std::string& text);
std::string serialize_topology(const Topology& t);
Topology load_topology(const std::string& path);
void save_topology(const Topology& t, const std::string& path);

struct MethodOutcome {
  Method method = Method::ludbpp;
  double bound = kInf;  // NaN when the method did not produce a bound
  std::vector<double> theta;
  std::size_t branch_count = 0;
  std::size_t lp_count = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> notes;
  bool timed_out = false;
  bool failed = false;
};

struct RunOptions {
  Objective objective = Objective::delay;
  int workers = 1;
  double timeout_seconds = 0.0;  // 0: no limit
  double tol = 1e-9;             // branch-and-bound pruning tolerance
};

// Runs one method; analysis errors are captured in the outcome.
MethodOutcome run_method(const Topology& net, const std::string& foi, Method m, const RunOptions& opt);

struct SweepSpec {
  std::vector<Family> families;
  std::vector<int> Ns;
  std::vector<double> us;
  std::vector<double> ratios;
  std::vector<Method> methods;
  Method reference = Method::ludbff;
  Objective objective = Objective::delay;
  int workers = 1;
  double cell_timeout = 600.0;
  double tol = 1e-9;
  int side_depth = 1;
};

struct SweepRow {
  Family family = Family::one_hop;
  int N = 0;
  double u = 0.0;
  double ratio = 0.0;
  MethodOutcome outcome;
  double rel_to_ref = 0.0;
  bool emitted = true;  // false for a reference run that was not requested
};

// Cells run in parallel with `workers` threads; rows come back in the fixed
// order family, N, u, ratio, method.
std::vector<SweepRow> run_sweep(const SweepSpec& spec);

inline constexpr const char* kCsvVersion = "ludbpp-compare v1";

// Deterministic CSV: no timing columns.
void write_csv(const std::vector<SweepRow>& rows, const SweepSpec& spec, std::ostream& os);
void write_timing_csv(const std::vector<SweepRow>& rows, std::ostream& os);

// Fixed-precision number formatting used in every report.
std::string format_number(double x);

// "2..5" or "2,3,4"; values must be integers.
std::vector<int> parse_int_list(const std::string& s);
// Comma-separated numbers; a trailing '%' divides by 100.
std::vector<double> parse_double_list(const std::string& s);

// Entry point; returns the process exit code (0 ok, 1 usage, 2 validation,
// 3 analysis failure).
int run_cli(int argc, char** argv);

}  // namespace nc

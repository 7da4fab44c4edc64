// LUDB++ on nested tandems and the feedforward engine built on top of it.
#pragma once

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nc/curves.hpp"
#include "nc/network.hpp"
#include "nc/symbolic.hpp"

namespace nc {

enum class Objective { delay, backlog };

const char* to_string(Objective o);
Objective objective_from_string(const std::string& s);

struct TandemFlow {
  std::string id;
  int entry = 0;  // first server index, inclusive
  int exit = 0;   // last server index, inclusive
  ShapedArrival arrival;
  // Inbound link key. Crossflows with the same interval and key are summed
  // and reshaped by link_shaper; "ingress:<id>" keys never merge.
  std::string link;
  Shaper link_shaper;
};

struct Tandem {
  std::vector<std::string> server_ids;
  std::vector<Mslc> servers;
  std::vector<TandemFlow> flows;
  std::string foi;

  const TandemFlow& flow(const std::string& id) const;
};

// Part of a node's interval: either a bare server or a nested child node.
struct NestPart {
  bool is_node = false;
  int index = 0;  // server index or node index
};

struct NestNode {
  int entry = 0;
  int exit = 0;
  std::vector<NestPart> parts;  // left to right, covering [entry, exit]
  std::vector<std::string> flow_ids;
  ShapedArrival cross;  // aggregated crossflow of this interval (unused at the root)
  int theta = -1;       // θ index of the cut at this node, -1 at the root
  double latency = 0.0; // sum of server latencies in the interval
};

struct NestingTree {
  std::vector<NestNode> nodes;
  int root = 0;
  int ntheta = 0;
  std::vector<int> theta_node;  // θ index to node index
  std::vector<std::string> notes;
};

class NestingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class AnalysisTimeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sum of crossflows sharing one interval. Flows on the same inbound link are
// summed and reshaped by that link's shaper; different links combine by the
// componentwise sum of their shapers, which is flagged through `note`.
ShapedArrival aggregate_crossflows(const std::vector<TandemFlow>& flows, std::string* note = nullptr);

NestingTree build_nesting_tree(const Tandem& t);

struct AnalysisOptions {
  int workers = 1;
  // Cap on the wall time of one analysis; throws AnalysisTimeout.
  std::optional<std::chrono::steady_clock::time_point> deadline;
  bool use_ub_box = true;     // restrict θ with the numeric upper bound
  bool branch_and_bound = true;
  double prune_tol = 1e-9;    // relative gap below which a subtree is pruned
  LeftoverOptions leftover;
};

struct JoinArrival {
  std::string flow;
  std::string server;       // join server
  std::string link;         // inbound link key
  TokenBucket output;       // γ_{vdev, r} before the link shaper
  ShapedArrival arrival;    // after the link shaper
};

struct AnalysisResult {
  double bound = kInf;
  Objective kind = Objective::delay;
  std::vector<double> theta_point;
  std::size_t branch_count = 0;  // root case branches of the main tandem
  std::size_t lp_count = 0;      // LPs solved for the main tandem
  bool loose = false;            // an LP failed numerically; the bound stays valid
  std::vector<std::string> notes;
  std::vector<JoinArrival> joins;
};

// Numeric bound of the LUDB pipeline at one θ vector (θ clamped to each
// node's offset). Any θ gives a valid bound.
double tandem_numeric_eval(const Tandem& t, const NestingTree& tree, Objective obj,
                           const std::vector<double>& theta);

// Largest useful θ_j given an achievable bound ub: beyond it the root service
// stays zero long enough that the bound exceeds ub. +∞ when no cap follows.
double theta_upper_bound(const Tandem& t, const NestingTree& tree, Objective obj, double ub, int j);

// Coordinate search for a good θ; returns the bound and fills theta.
double tandem_numeric_search(const Tandem& t, const NestingTree& tree, Objective obj,
                             std::vector<double>& theta);

// Exact LUDB++ bound of a nested tandem: inf over θ of the composed bound.
AnalysisResult tandem_ludbpp(const Tandem& t, Objective obj, const AnalysisOptions& opt = {});

// Decomposes the network along the foi's path. Crossflow arrivals at join
// servers come from backlog analyses of their upstream segments followed by
// the link shaper.
AnalysisResult feedforward_analyze(const Topology& net, const std::string& foi, Objective obj,
                                   const AnalysisOptions& opt = {});

// LUDB-FF: the same engine with every shaper removed.
AnalysisResult ludb_ff_analyze(const Topology& net, const std::string& foi, Objective obj,
                               const AnalysisOptions& opt = {});

}  // namespace nc

// Topology model, system-model validation and the evaluation generators.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "nc/curves.hpp"

namespace nc {

struct Server {
  std::string id;
  RateLatency service;
  std::map<std::string, Shaper> out_shapers;  // keyed by downstream server id
};

struct Link {
  std::string from;
  std::string to;
};

struct Flow {
  std::string id;
  std::vector<std::string> path;
  TokenBucket arrival;
  Shaper ingress;
};

struct Topology {
  std::vector<Server> servers;
  std::vector<Link> links;
  std::vector<Flow> flows;

  const Server& server(const std::string& id) const;
  const Flow& flow(const std::string& id) const;
  bool has_server(const std::string& id) const;
  bool has_flow(const std::string& id) const;
  // Shaper on the link from → to; inactive when none is configured.
  Shaper link_shaper(const std::string& from, const std::string& to) const;
  // Server ids in a topological order of the link graph (ties by declaration).
  std::vector<std::string> topological_order() const;
  // Copy with every ingress and link shaper removed.
  Topology without_shapers() const;
};

struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::string> warnings;
  bool ok() const { return violations.empty(); }
};

// Stability (Σr < R, with Σr = R admitted under a warning), shaper rates,
// acyclicity, path connectivity and shaper bursts.
ValidationReport validate(const Topology& t);

enum class Family { one_hop, sinktree, tree };

Family family_from_string(const std::string& s);
std::string to_string(Family f);

// All servers β_{R,1}, all flows γ_{1,1}, every shaper (0.5, ratio·R).
Topology gen_one_hop(int N, double u, double ratio);
Topology gen_sinktree(int N, double u, double ratio);
// Main branch of N servers with sinktree interference; each crossflow reaches
// the main branch through `side_depth` side servers, each carrying one local
// single-hop flow.
Topology gen_tree(int N, double u, double ratio, int side_depth = 1);
Topology generate(Family f, int N, double u, double ratio, int side_depth = 1);

}  // namespace nc

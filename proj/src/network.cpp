#include "nc/network.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace nc {

const Server& Topology::server(const std::string& id) const {
  for (const auto& s : servers)
    if (s.id == id) return s;
  throw std::out_of_range("unknown server '" + id + "'");
}

const Flow& Topology::flow(const std::string& id) const {
  for (const auto& f : flows)
    if (f.id == id) return f;
  throw std::out_of_range("unknown flow '" + id + "'");
}

bool Topology::has_server(const std::string& id) const {
  return std::any_of(servers.begin(), servers.end(), [&](const Server& s) { return s.id == id; });
}

bool Topology::has_flow(const std::string& id) const {
  return std::any_of(flows.begin(), flows.end(), [&](const Flow& f) { return f.id == id; });
}

Shaper Topology::link_shaper(const std::string& from, const std::string& to) const {
  const auto& s = server(from);
  auto it = s.out_shapers.find(to);
  return it == s.out_shapers.end() ? Shaper::none() : it->second;
}

namespace {

std::vector<std::pair<int, int>> edges(const Topology& t) {
  std::map<std::string, int> idx;
  for (std::size_t i = 0; i < t.servers.size(); ++i) idx[t.servers[i].id] = static_cast<int>(i);
  std::set<std::pair<int, int>> e;
  for (const auto& l : t.links)
    if (idx.count(l.from) && idx.count(l.to)) e.insert({idx[l.from], idx[l.to]});
  for (const auto& f : t.flows)
    for (std::size_t k = 1; k < f.path.size(); ++k)
      if (idx.count(f.path[k - 1]) && idx.count(f.path[k])) e.insert({idx[f.path[k - 1]], idx[f.path[k]]});
  return {e.begin(), e.end()};
}

// Kahn's algorithm, picking the lowest declaration index first. Returns fewer
// than n entries when the graph has a cycle.
std::vector<int> kahn(const Topology& t) {
  const int n = static_cast<int>(t.servers.size());
  std::vector<int> indeg(n, 0);
  std::vector<std::vector<int>> out(n);
  for (auto [a, b] : edges(t)) {
    out[a].push_back(b);
    ++indeg[b];
  }
  std::set<int> ready;
  for (int i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.insert(i);
  std::vector<int> order;
  while (!ready.empty()) {
    const int v = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(v);
    for (int w : out[v])
      if (--indeg[w] == 0) ready.insert(w);
  }
  return order;
}

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace

std::vector<std::string> Topology::topological_order() const {
  const auto order = kahn(*this);
  if (order.size() != servers.size()) throw std::invalid_argument("topology contains a cycle");
  std::vector<std::string> ids;
  for (int i : order) ids.push_back(servers[i].id);
  return ids;
}

Topology Topology::without_shapers() const {
  Topology t = *this;
  for (auto& s : t.servers) s.out_shapers.clear();
  for (auto& f : t.flows) f.ingress = Shaper::none();
  return t;
}

ValidationReport validate(const Topology& t) {
  ValidationReport rep;
  auto bad = [&](const std::string& m) { rep.violations.push_back(m); };
  auto warn = [&](const std::string& m) { rep.warnings.push_back(m); };

  std::set<std::string> ids;
  for (const auto& s : t.servers) {
    if (!ids.insert(s.id).second) bad("duplicate server id '" + s.id + "'");
    if (!(s.service.R > 0.0)) bad("server '" + s.id + "': rate must be positive");
    if (!(s.service.T >= 0.0)) bad("server '" + s.id + "': latency must be nonnegative");
    for (const auto& [to, sh] : s.out_shapers) {
      if (!t.has_server(to)) bad("server '" + s.id + "': shaper towards unknown server '" + to + "'");
      if (sh.active() && !(sh.Rp > 0.0)) bad("server '" + s.id + "': shaper rate must be positive");
      if (!(sh.L >= 0.0)) bad("server '" + s.id + "': shaper burst must be nonnegative");
    }
  }
  for (const auto& l : t.links)
    if (!t.has_server(l.from) || !t.has_server(l.to))
      bad("link " + l.from + "->" + l.to + " references an unknown server");
  std::set<std::pair<std::string, std::string>> linkset;
  for (const auto& l : t.links) linkset.insert({l.from, l.to});

  std::set<std::string> fids;
  bool paths_ok = true;
  for (const auto& f : t.flows) {
    if (!fids.insert(f.id).second) bad("duplicate flow id '" + f.id + "'");
    if (f.path.empty()) {
      bad("flow '" + f.id + "': empty path");
      paths_ok = false;
      continue;
    }
    for (const auto& s : f.path)
      if (!t.has_server(s)) {
        bad("flow '" + f.id + "': unknown server '" + s + "' on path");
        paths_ok = false;
      }
    for (std::size_t k = 1; k < f.path.size(); ++k)
      if (!linkset.count({f.path[k - 1], f.path[k]}))
        bad("flow '" + f.id + "': no link " + f.path[k - 1] + "->" + f.path[k]);
    if (!(f.arrival.b >= 0.0) || !(f.arrival.r >= 0.0))
      bad("flow '" + f.id + "': token bucket parameters must be nonnegative");
    if (f.ingress.active() && f.ingress.L > f.arrival.b)
      warn("flow '" + f.id + "': ingress shaper burst exceeds b, shaper has no effect");
    if (f.ingress.active() && !(f.arrival.r < f.ingress.Rp))
      bad("flow '" + f.id + "': ingress shaper rate must exceed the flow rate");
  }
  if (!paths_ok) return rep;

  if (kahn(t).size() != t.servers.size()) bad("topology is not feedforward (cycle in the link graph)");

  // Stability per server.
  for (const auto& s : t.servers) {
    double sum = 0.0;
    for (const auto& f : t.flows)
      if (std::find(f.path.begin(), f.path.end(), s.id) != f.path.end()) sum += f.arrival.r;
    const double tol = 1e-9 * std::max(1.0, s.service.R);
    if (sum > s.service.R + tol)
      bad("server '" + s.id + "': stability violated, sum of rates " + fmt(sum) + " exceeds rate " +
          fmt(s.service.R));
    else if (sum >= s.service.R - tol && sum > 0.0)
      warn("server '" + s.id + "': utilization is exactly 100%, admitted as a boundary case");
  }

  // Shaper rates against the feeding server and every downstream server.
  std::set<std::string> reported;
  for (const auto& f : t.flows) {
    for (std::size_t k = 0; k < f.path.size(); ++k) {
      Shaper sh;
      std::string label;
      double own = 0.0;
      if (k == 0) {
        sh = f.ingress;
        label = "ingress shaper of flow '" + f.id + "'";
      } else {
        sh = t.link_shaper(f.path[k - 1], f.path[k]);
        label = "shaper on link " + f.path[k - 1] + "->" + f.path[k];
        own = t.server(f.path[k - 1]).service.R;
      }
      if (!sh.active()) continue;
      double need = own;
      for (std::size_t j = k; j < f.path.size(); ++j) need = std::max(need, t.server(f.path[j]).service.R);
      if (sh.Rp + 1e-9 < need && reported.insert(label).second)
        bad(label + ": shaper rate " + fmt(sh.Rp) + " below service rate " + fmt(need) +
            " of a server it feeds");
    }
  }
  return rep;
}

Family family_from_string(const std::string& s) {
  if (s == "one_hop" || s == "onehop" || s == "one-hop") return Family::one_hop;
  if (s == "sinktree" || s == "sink_tree") return Family::sinktree;
  if (s == "tree") return Family::tree;
  throw std::invalid_argument("unknown topology family '" + s + "'");
}

std::string to_string(Family f) {
  switch (f) {
    case Family::one_hop: return "one_hop";
    case Family::sinktree: return "sinktree";
    case Family::tree: return "tree";
  }
  return "?";
}

namespace {

constexpr double kBurst = 1.0, kRate = 1.0, kLatency = 1.0, kShaperBurst = 0.5;

void check_params(int N, double u, double ratio) {
  if (N < 2) throw std::invalid_argument("generator requires N >= 2");
  if (!(u > 0.0 && u <= 1.0)) throw std::invalid_argument("generator requires 0 < u <= 1");
  if (!(ratio >= 1.0) || !std::isfinite(ratio))
    throw std::invalid_argument("generator requires a finite ratio >= 1");
}

Server make_server(const std::string& id, double R) { return {id, {R, kLatency}, {}}; }

void connect(Topology& t, const std::string& a, const std::string& b, double Rp) {
  t.links.push_back({a, b});
  for (auto& s : t.servers)
    if (s.id == a) s.out_shapers[b] = {kShaperBurst, Rp};
}

Flow make_flow(const std::string& id, std::vector<std::string> path, double Rp) {
  return {id, std::move(path), {kBurst, kRate}, {kShaperBurst, Rp}};
}

std::string idx(const char* p, int i) { return p + std::to_string(i); }

}  // namespace

Topology gen_one_hop(int N, double u, double ratio) {
  check_params(N, u, ratio);
  const double R = 2.0 * kRate / u, Rp = ratio * R;
  Topology t;
  std::vector<std::string> path;
  for (int i = 1; i <= N; ++i) {
    t.servers.push_back(make_server(idx("s", i), R));
    path.push_back(idx("s", i));
  }
  for (int i = 1; i < N; ++i) connect(t, idx("s", i), idx("s", i + 1), Rp);
  t.flows.push_back(make_flow("foi", path, Rp));
  for (int i = 1; i <= N; ++i) t.flows.push_back(make_flow(idx("x", i), {idx("s", i)}, Rp));
  return t;
}

Topology gen_sinktree(int N, double u, double ratio) {
  check_params(N, u, ratio);
  const double R = N * kRate / u, Rp = ratio * R;
  Topology t;
  std::vector<std::string> path;
  for (int i = 1; i <= N; ++i) {
    t.servers.push_back(make_server(idx("s", i), R));
    path.push_back(idx("s", i));
  }
  for (int i = 1; i < N; ++i) connect(t, idx("s", i), idx("s", i + 1), Rp);
  t.flows.push_back(make_flow("foi", path, Rp));
  for (int i = 2; i <= N; ++i)
    t.flows.push_back(make_flow(idx("x", i), {path.begin() + (i - 1), path.end()}, Rp));
  return t;
}

Topology gen_tree(int N, double u, double ratio, int side_depth) {
  check_params(N, u, ratio);
  if (side_depth < 1) throw std::invalid_argument("tree generator requires side depth >= 1");
  const double R = N * kRate / u, Rp = ratio * R;
  Topology t;
  std::vector<std::string> main;
  for (int i = 1; i <= N; ++i) {
    t.servers.push_back(make_server(idx("m", i), R));
    main.push_back(idx("m", i));
  }
  for (int i = 2; i <= N; ++i)
    for (int k = 1; k <= side_depth; ++k)
      t.servers.push_back(make_server(idx("a", i) + "_" + std::to_string(k), R));
  for (int i = 1; i < N; ++i) connect(t, main[i - 1], main[i], Rp);
  for (int i = 2; i <= N; ++i) {
    for (int k = 1; k < side_depth; ++k)
      connect(t, idx("a", i) + "_" + std::to_string(k), idx("a", i) + "_" + std::to_string(k + 1), Rp);
    connect(t, idx("a", i) + "_" + std::to_string(side_depth), main[i - 1], Rp);
  }
  t.flows.push_back(make_flow("foi", main, Rp));
  for (int i = 2; i <= N; ++i) {
    std::vector<std::string> path;
    for (int k = 1; k <= side_depth; ++k) path.push_back(idx("a", i) + "_" + std::to_string(k));
    path.insert(path.end(), main.begin() + (i - 1), main.end());
    t.flows.push_back(make_flow(idx("x", i), path, Rp));
  }
  for (int i = 2; i <= N; ++i)
    for (int k = 1; k <= side_depth; ++k) {
      const std::string s = idx("a", i) + "_" + std::to_string(k);
      t.flows.push_back(make_flow(idx("l", i) + "_" + std::to_string(k), {s}, Rp));
    }
  return t;
}

Topology generate(Family f, int N, double u, double ratio, int side_depth) {
  switch (f) {
    case Family::one_hop: return gen_one_hop(N, u, ratio);
    case Family::sinktree: return gen_sinktree(N, u, ratio);
    case Family::tree: return gen_tree(N, u, ratio, side_depth);
  }
  throw std::invalid_argument("unknown family");
}

}  // namespace nc

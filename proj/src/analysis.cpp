#include "nc/analysis.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <set>

#include "nc/lp.hpp"
#include "nc/parallel.hpp"

namespace nc {

const char* to_string(Objective o) { return o == Objective::delay ? "delay" : "backlog"; }

Objective objective_from_string(const std::string& s) {
  if (s == "delay") return Objective::delay;
  if (s == "backlog") return Objective::backlog;
  throw std::invalid_argument("unknown objective '" + s + "' (expected delay or backlog)");
}

const TandemFlow& Tandem::flow(const std::string& id) const {
  for (const auto& f : flows)
    if (f.id == id) return f;
  throw std::out_of_range("tandem has no flow '" + id + "'");
}

// ------------------------------------------------------------- aggregation

ShapedArrival aggregate_crossflows(const std::vector<TandemFlow>& flows, std::string* note) {
  if (flows.empty()) return ShapedArrival::unshaped({0.0, 0.0});
  std::vector<std::string> keys;
  std::map<std::string, std::vector<const TandemFlow*>> by_link;
  for (const auto& f : flows) {
    if (!by_link.count(f.link)) keys.push_back(f.link);
    by_link[f.link].push_back(&f);
  }
  std::vector<ShapedArrival> groups;
  for (const auto& k : keys) {
    const auto& g = by_link[k];
    if (g.size() == 1) {
      groups.push_back(g.front()->arrival);
      continue;
    }
    TokenBucket sum{0.0, 0.0};
    for (const auto* f : g) sum.b += f->arrival.tb.b, sum.r += f->arrival.tb.r;
    groups.push_back(shape_tb(sum, g.front()->link_shaper));
  }
  if (groups.size() == 1) return groups.front();

  TokenBucket sum{0.0, 0.0};
  Shaper sh{0.0, 0.0};
  bool all_shaped = true;
  for (const auto& a : groups) {
    sum.b += a.tb.b;
    sum.r += a.tb.r;
    if (!a.sh.active()) all_shaped = false;
    sh.L += a.sh.L;
    sh.Rp += a.sh.Rp;
  }
  if (note && all_shaped)
    *note = "crossflows on different links share an interval; their shapers were summed componentwise";
  return all_shaped ? shape_tb(sum, sh) : ShapedArrival::unshaped(sum);
}

// ------------------------------------------------------------ nesting tree

NestingTree build_nesting_tree(const Tandem& t) {
  const int n = static_cast<int>(t.servers.size());
  if (n == 0) throw NestingError("tandem has no servers");
  if (t.server_ids.size() != t.servers.size()) throw NestingError("tandem server ids and curves differ in length");
  const TandemFlow* foi = nullptr;
  for (const auto& f : t.flows)
    if (f.id == t.foi) foi = &f;
  if (!foi) throw NestingError("flow of interest '" + t.foi + "' is not in the tandem");
  if (foi->entry != 0 || foi->exit != n - 1) throw NestingError("flow of interest must span the whole tandem");

  std::map<std::pair<int, int>, std::vector<const TandemFlow*>> by_interval;
  for (const auto& f : t.flows) {
    if (&f == foi) continue;
    if (f.entry < 0 || f.exit >= n || f.entry > f.exit)
      throw NestingError("flow '" + f.id + "' has an invalid interval");
    by_interval[{f.entry, f.exit}].push_back(&f);
  }
  std::vector<std::pair<int, int>> iv;
  for (const auto& [k, v] : by_interval) iv.push_back(k);
  for (std::size_t i = 0; i < iv.size(); ++i)
    for (std::size_t j = i + 1; j < iv.size(); ++j) {
      const auto [a0, a1] = iv[i];
      const auto [b0, b1] = iv[j];
      const bool disjoint = a1 < b0 || b1 < a0;
      const bool nested = (a0 <= b0 && b1 <= a1) || (b0 <= a0 && a1 <= b1);
      if (!disjoint && !nested)
        throw NestingError("flows '" + by_interval[iv[i]].front()->id + "' and '" +
                           by_interval[iv[j]].front()->id + "' overlap without nesting");
    }
  std::stable_sort(iv.begin(), iv.end(), [](auto a, auto b) {
    const int la = a.second - a.first, lb = b.second - b.first;
    return la != lb ? la > lb : a.first < b.first;
  });

  NestingTree tree;
  std::vector<std::vector<int>> kids(1);
  tree.nodes.push_back({0, n - 1, {}, {t.foi}, foi->arrival, -1, 0.0});
  for (const auto& I : iv) {
    int cur = 0;
    for (bool moved = true; moved;) {
      moved = false;
      for (int c : kids[cur]) {
        const auto& cn = tree.nodes[c];
        if (cn.entry <= I.first && I.second <= cn.exit) {
          cur = c;
          moved = true;
          break;
        }
      }
    }
    NestNode node;
    node.entry = I.first;
    node.exit = I.second;
    std::vector<TandemFlow> fl;
    for (const auto* f : by_interval[I]) {
      node.flow_ids.push_back(f->id);
      fl.push_back(*f);
    }
    std::string note;
    node.cross = aggregate_crossflows(fl, &note);
    if (!note.empty()) tree.notes.push_back("interval " + t.server_ids[I.first] + ".." +
                                            t.server_ids[I.second] + ": " + note);
    kids[cur].push_back(static_cast<int>(tree.nodes.size()));
    tree.nodes.push_back(std::move(node));
    kids.emplace_back();
  }
  for (std::size_t v = 0; v < tree.nodes.size(); ++v) {
    auto& node = tree.nodes[v];
    auto ch = kids[v];
    std::sort(ch.begin(), ch.end(), [&](int a, int b) { return tree.nodes[a].entry < tree.nodes[b].entry; });
    std::size_t ci = 0;
    for (int k = node.entry; k <= node.exit;) {
      if (ci < ch.size() && tree.nodes[ch[ci]].entry == k) {
        node.parts.push_back({true, ch[ci]});
        k = tree.nodes[ch[ci]].exit + 1;
        ++ci;
      } else {
        node.parts.push_back({false, k});
        ++k;
      }
    }
    for (int k = node.entry; k <= node.exit; ++k) node.latency += t.servers[k].D;
  }
  std::function<void(int)> post = [&](int v) {
    for (const auto& p : tree.nodes[v].parts)
      if (p.is_node) post(p.index);
    if (v != tree.root) {
      tree.nodes[v].theta = tree.ntheta++;
      tree.theta_node.push_back(v);
    }
  };
  post(tree.root);
  return tree;
}

// ---------------------------------------------------------- numeric pipeline

namespace {

Mslc numeric_service(const Tandem& t, const NestingTree& tr, int v, const std::vector<double>& theta);

Mslc numeric_leftover(const Tandem& t, const NestingTree& tr, int v, const std::vector<double>& theta) {
  const auto& node = tr.nodes[v];
  Mslc s = numeric_service(t, tr, v, theta);
  const double th = std::max(theta[node.theta], s.D);
  return simplify(leftover_numeric(s, node.cross, th));
}

Mslc numeric_service(const Tandem& t, const NestingTree& tr, int v, const std::vector<double>& theta) {
  std::optional<Mslc> acc;
  for (const auto& p : tr.nodes[v].parts) {
    Mslc c = p.is_node ? numeric_leftover(t, tr, p.index, theta) : t.servers[p.index];
    acc = acc ? mslc_convolve(*acc, c) : simplify(c);
  }
  return *acc;
}

double root_value(const ShapedArrival& foi, const Mslc& service, Objective obj) {
  return obj == Objective::delay ? hdev_shaped(foi, service) : vdev_and_output(foi.tb, service).backlog;
}

double min_service_rate(const Tandem& t, const NestNode& n) {
  double rate = kInf;
  for (int k = n.entry; k <= n.exit; ++k)
    for (const auto& s : t.servers[k].stages)
      if (std::isfinite(s.rho) && s.rho > 0.0) rate = std::min(rate, s.rho);
  return std::isfinite(rate) ? rate : 1.0;
}

void check_deadline(const AnalysisOptions& opt) {
  if (opt.deadline && std::chrono::steady_clock::now() > *opt.deadline)
    throw AnalysisTimeout("analysis exceeded its time limit");
}

}  // namespace

// Upper end for θ_j beyond which the bound cannot drop below ub: the root
// service stays zero until θ_j plus the latencies outside node j.
double theta_upper_bound(const Tandem& t, const NestingTree& tr, Objective obj, double ub, int j) {
  if (!std::isfinite(ub)) return kInf;
  const auto& foi = t.flow(t.foi).arrival;
  const double outside = tr.nodes[tr.root].latency - tr.nodes[tr.theta_node[j]].latency;
  const double slack = 1e-6 * (1.0 + std::abs(ub));
  if (obj == Objective::delay) {
    if (foi.tb.b <= 0.0 && foi.tb.r <= 0.0) return kInf;
    return ub - outside + slack;
  }
  if (foi.tb.r <= 0.0) return kInf;
  return (ub - foi.tb.b) / foi.tb.r - outside + slack;
}

double tandem_numeric_eval(const Tandem& t, const NestingTree& tree, Objective obj,
                           const std::vector<double>& theta) {
  if (static_cast<int>(theta.size()) < tree.ntheta) throw std::invalid_argument("θ vector too short");
  return root_value(t.flow(t.foi).arrival, numeric_service(t, tree, tree.root, theta), obj);
}

double tandem_numeric_search(const Tandem& t, const NestingTree& tree, Objective obj,
                             std::vector<double>& theta) {
  const int N = tree.ntheta;
  std::vector<double> lo(N);
  theta.assign(N, 0.0);
  for (int j = 0; j < N; ++j) {
    const auto& node = tree.nodes[tree.theta_node[j]];
    lo[j] = node.latency;
    theta[j] = lo[j] + node.cross.tb.b / min_service_rate(t, node);
  }
  double best = tandem_numeric_eval(t, tree, obj, theta);
  if (N == 0) return best;
  constexpr int kPoints = 41;
  for (int round = 0; round < 3; ++round) {
    bool improved = false;
    for (int j = 0; j < N; ++j) {
      double a = lo[j];
      double b = std::min(theta_upper_bound(t, tree, obj, best, j), lo[j] + 4.0 * (theta[j] - lo[j]) + 10.0);
      b = std::max(b, a);
      for (int zoom = 0; zoom < 3; ++zoom) {
        const double step = (b - a) / (kPoints - 1);
        if (!(step > 0.0)) break;
        std::vector<double> x = theta;
        for (int k = 0; k < kPoints; ++k) {
          x[j] = a + step * k;
          const double v = tandem_numeric_eval(t, tree, obj, x);
          if (v < best - 1e-12) {
            best = v;
            theta[j] = x[j];
            improved = true;
          }
        }
        a = std::max(lo[j], theta[j] - step);
        b = theta[j] + step;
      }
    }
    if (!improved && round > 0) break;
  }
  return best;
}

// ------------------------------------------------------------ symbolic LUDB++

namespace {

struct Engine {
  const Tandem& t;
  const NestingTree& tree;
  const AnalysisOptions& opt;
  std::vector<double> cap;  // θ upper bounds
  std::map<int, std::vector<SymMslc>> memo;

  std::vector<SymMslc> service(int v) {
    std::vector<SymMslc> acc;
    for (const auto& p : tree.nodes[v].parts) {
      check_deadline(opt);
      std::vector<SymMslc> part =
          p.is_node ? leftover(p.index) : std::vector<SymMslc>{SymMslc::from_numeric(t.servers[p.index])};
      if (acc.empty()) {
        for (auto& s : part) acc.push_back(simplify(std::move(s)));
        continue;
      }
      std::vector<SymMslc> next;
      next.reserve(acc.size() * part.size());
      for (const auto& a : acc)
        for (const auto& b : part) next.push_back(sym_convolve(a, b));
      acc = std::move(next);
    }
    return acc;
  }

  const std::vector<SymMslc>& leftover(int v) {
    auto it = memo.find(v);
    if (it != memo.end()) return it->second;
    const auto& node = tree.nodes[v];
    std::vector<SymMslc> out;
    for (auto s : service(v)) {
      check_deadline(opt);
      if (std::isfinite(cap[node.theta]))
        s.cons.push_back(Constraint::ge(AffineExpr(std::max(cap[node.theta], s.D)), AffineExpr::var(node.theta)));
      for (auto& b : sym_leftover(s, node.cross, node.theta, opt.leftover)) out.push_back(std::move(b));
    }
    return memo[v] = std::move(out);
  }
};

struct BranchBest {
  double value = kInf;
  std::vector<double> point;
  std::size_t lps = 0;
  bool loose = false;
};

LpInstance epigraph_lp(double D, int N, const std::vector<Constraint>& cons, const std::vector<AffineExpr>& terms) {
  LpInstance lp;
  lp.nvars = N + 1;
  lp.objective = AffineExpr::var(N) + D;
  lp.cons = cons;
  for (const auto& term : terms) lp.cons.push_back(Constraint::ge(AffineExpr::var(N), term));
  return lp;
}

void take(BranchBest& out, const LpSolution& s, int N) {
  if (s.status == LpStatus::failed) {
    out.loose = true;
    return;
  }
  if (s.status != LpStatus::optimal || !(s.value < out.value)) return;
  out.value = s.value;
  out.point.assign(s.point.begin(), s.point.begin() + std::min<std::size_t>(N, s.point.size()));
}

// Branch and bound over the per-stage delay cases of one root branch. The
// LP over the cases fixed so far, with the remaining stages ignored, bounds
// every completion from below.
BranchBest delay_branch(const SymMslc& beta, const ShapedArrival& alpha, int N, double incumbent,
                        const AnalysisOptions& opt) {
  BranchBest out;
  Region base(beta.cons);
  if (base.empty()) return out;
  std::vector<std::vector<CaseTerm>> cases;
  for (const auto& st : beta.stages) {
    cases.push_back(hdev_stage_cases(alpha, st, base));
    if (cases.back().empty()) return out;
  }
  std::vector<std::size_t> order(cases.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return cases[a].size() < cases[b].size(); });

  double best = incumbent;
  auto pruned = [&](double lb) { return lb > best - opt.prune_tol * (1.0 + std::abs(best)); };
  std::vector<AffineExpr> terms;
  std::function<void(std::size_t, const Region&)> dfs = [&](std::size_t k, const Region& reg) {
    check_deadline(opt);
    if (k == order.size()) {
      const auto s = solve(epigraph_lp(beta.D, N, reg.constraints(), terms));
      ++out.lps;
      take(out, s, N);
      if (s.status == LpStatus::optimal) best = std::min(best, s.value);
      return;
    }
    const auto& cs = cases[order[k]];
    if (cs.size() > 1 && opt.branch_and_bound) {
      const auto s = solve(epigraph_lp(beta.D, N, reg.constraints(), terms));
      ++out.lps;
      if (s.status == LpStatus::infeasible) return;
      if (s.status == LpStatus::optimal && pruned(s.value)) return;
    }
    for (const auto& c : cs) {
      Region next = reg;
      bool ok = true;
      for (const auto& con : c.cons) ok = next.add(con) && ok;
      if (!ok) continue;
      if (c.term) terms.push_back(*c.term);
      dfs(k + 1, next);
      if (c.term) terms.pop_back();
    }
  };
  dfs(0, base);
  return out;
}

BranchBest backlog_branch(const SymMslc& beta, const TokenBucket& alpha, int N) {
  BranchBest out;
  const auto s = solve(epigraph_lp(0.0, N, beta.cons, vdev_terms(alpha, beta)));
  out.lps = 1;
  take(out, s, N);
  return out;
}

}  // namespace

AnalysisResult tandem_ludbpp(const Tandem& t, Objective obj, const AnalysisOptions& opt) {
  const NestingTree tree = build_nesting_tree(t);
  const auto& foi = t.flow(t.foi).arrival;
  const int N = tree.ntheta;
  AnalysisResult res;
  res.kind = obj;
  res.notes = tree.notes;

  std::vector<double> theta_ub;
  const double ub = tandem_numeric_search(t, tree, obj, theta_ub);

  Engine eng{t, tree, opt, std::vector<double>(N, kInf), {}};
  if (opt.use_ub_box)
    for (int j = 0; j < N; ++j) eng.cap[j] = theta_upper_bound(t, tree, obj, ub, j);

  const std::vector<SymMslc> roots = eng.service(tree.root);
  res.branch_count = roots.size();
  std::vector<BranchBest> bests(roots.size());
  parallel_for(roots.size(), opt.workers, [&](std::size_t i) {
    bests[i] = obj == Objective::delay ? delay_branch(roots[i], foi, N, ub, opt)
                                       : backlog_branch(roots[i], foi.tb, N);
  });

  res.bound = ub;
  res.theta_point = theta_ub;
  for (const auto& b : bests) {
    res.lp_count += b.lps;
    res.loose = res.loose || b.loose;
    if (b.value < res.bound - 1e-12) {
      res.bound = b.value;
      res.theta_point = b.point;
    }
  }
  res.bound = std::max(res.bound, 0.0);
  if (res.loose) res.notes.push_back("some LPs failed numerically; the bound is valid but may be loose");
  return res;
}

// ------------------------------------------------------------ feedforward

namespace {

class Feedforward {
 public:
  Feedforward(const Topology& net, const AnalysisOptions& opt) : net_(net), opt_(opt) {}

  // Analysis of flow f over the first m servers of its path.
  AnalysisResult analyze(const Flow& f, std::size_t m, Objective obj) {
    check_deadline(opt_);
    Tandem t;
    t.foi = f.id;
    std::map<std::string, int> pos;
    for (std::size_t k = 0; k < m; ++k) {
      const auto& s = net_.server(f.path[k]);
      pos[s.id] = static_cast<int>(k);
      t.server_ids.push_back(s.id);
      t.servers.push_back(mslc_from_rate_latency(s.service));
    }
    const int last = static_cast<int>(m) - 1;
    t.flows.push_back({f.id, 0, last, shape_tb(f.arrival, f.ingress), "ingress:" + f.id, f.ingress});
    for (const auto& g : net_.flows) {
      if (g.id == f.id) continue;
      // Contiguous runs of g along the tandem become separate pseudo-flows.
      int run = 0;
      for (std::size_t a = 0; a < g.path.size();) {
        auto it = pos.find(g.path[a]);
        if (it == pos.end()) {
          ++a;
          continue;
        }
        std::size_t b = a;
        while (b + 1 < g.path.size()) {
          auto nx = pos.find(g.path[b + 1]);
          if (nx == pos.end() || nx->second != pos[g.path[b]] + 1) break;
          ++b;
        }
        const auto& in = arrival_at(g, a);
        const std::string id = run == 0 ? g.id : g.id + "#" + std::to_string(run);
        t.flows.push_back({id, it->second, pos[g.path[b]], in.arrival, in.link, in.link_shaper});
        ++run;
        a = b + 1;
      }
    }
    return tandem_ludbpp(t, obj, opt_);
  }

  std::vector<JoinArrival> joins;

 private:
  struct Entry {
    ShapedArrival arrival;
    std::string link;
    Shaper link_shaper;
  };

  const Entry& arrival_at(const Flow& g, std::size_t a) {
    const auto key = std::make_pair(g.id, a);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    Entry e;
    if (a == 0) {
      e = {shape_tb(g.arrival, g.ingress), "ingress:" + g.id, g.ingress};
    } else {
      const auto up = analyze(g, a, Objective::backlog);
      const TokenBucket out{up.bound, g.arrival.r};
      const Shaper sh = net_.link_shaper(g.path[a - 1], g.path[a]);
      e = {shape_tb(out, sh), g.path[a - 1] + "->" + g.path[a], sh};
      joins.push_back({g.id, g.path[a], e.link, out, e.arrival});
    }
    return memo_[key] = e;
  }

  const Topology& net_;
  const AnalysisOptions& opt_;
  std::map<std::pair<std::string, std::size_t>, Entry> memo_;
};

}  // namespace

AnalysisResult feedforward_analyze(const Topology& net, const std::string& foi, Objective obj,
                                   const AnalysisOptions& opt) {
  const Flow& f = net.flow(foi);
  net.topological_order();  // rejects cycles
  Feedforward ff(net, opt);
  AnalysisResult res = ff.analyze(f, f.path.size(), obj);
  res.joins = std::move(ff.joins);
  return res;
}

AnalysisResult ludb_ff_analyze(const Topology& net, const std::string& foi, Objective obj,
                               const AnalysisOptions& opt) {
  return feedforward_analyze(net.without_shapers(), foi, obj, opt);
}

}  // namespace nc

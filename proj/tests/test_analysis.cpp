#include "doctest.h"
#include "nc/analysis.hpp"
#include "nc/oracle.hpp"
#include "test_util.hpp"

using namespace nc;
using nc::test::Gen;
using nc::test::paper_flow;
using nc::test::rel_diff;
using nc::test::rl;

namespace {

TandemFlow ingress_flow(const std::string& id, int a, int b, const ShapedArrival& arr) {
  return {id, a, b, arr, "ingress:" + id, arr.sh};
}

Tandem chain(int n, std::vector<std::pair<int, int>> cross) {
  Tandem t;
  for (int i = 0; i < n; ++i) {
    t.server_ids.push_back("s" + std::to_string(i + 1));
    t.servers.push_back(rl(4.0, 1.0));
  }
  t.foi = "foi";
  t.flows.push_back(ingress_flow("foi", 0, n - 1, paper_flow()));
  for (std::size_t i = 0; i < cross.size(); ++i)
    t.flows.push_back(ingress_flow("c" + std::to_string(i), cross[i].first, cross[i].second, paper_flow()));
  return t;
}

// The sinktree main tandem as the feedforward engine sees it.
Tandem sinktree_tandem(const Topology& net) {
  Tandem t;
  const auto& foi = net.flows.front();
  for (const auto& s : foi.path) {
    t.server_ids.push_back(s);
    t.servers.push_back(mslc_from_rate_latency(net.server(s).service));
  }
  t.foi = foi.id;
  for (const auto& f : net.flows) {
    const int a = static_cast<int>(std::find(foi.path.begin(), foi.path.end(), f.path.front()) - foi.path.begin());
    t.flows.push_back(ingress_flow(f.id, a, static_cast<int>(foi.path.size()) - 1, shape_tb(f.arrival, f.ingress)));
  }
  return t;
}

}  // namespace

TEST_CASE("nesting tree of a sinktree is a chain") {
  const NestingTree tr = build_nesting_tree(chain(3, {{1, 2}, {2, 2}}));
  CHECK(tr.ntheta == 2);
  const NestNode& root = tr.nodes[tr.root];
  CHECK(root.theta == -1);
  REQUIRE(root.parts.size() == 2);
  CHECK_FALSE(root.parts[0].is_node);
  REQUIRE(root.parts[1].is_node);
  const NestNode& mid = tr.nodes[root.parts[1].index];
  CHECK(mid.entry == 1);
  CHECK(mid.exit == 2);
  CHECK(mid.latency == doctest::Approx(2.0));
  REQUIRE(mid.parts.size() == 2);
  REQUIRE(mid.parts[1].is_node);
  const NestNode& leaf = tr.nodes[mid.parts[1].index];
  CHECK(leaf.entry == 2);
  REQUIRE(leaf.parts.size() == 1);
  CHECK_FALSE(leaf.parts[0].is_node);
  // Inner cuts are numbered first.
  CHECK(leaf.theta == 0);
  CHECK(mid.theta == 1);
}

TEST_CASE("nesting tree of a lone flow and of a one-hop tandem") {
  NestingTree tr = build_nesting_tree(chain(1, {}));
  CHECK(tr.ntheta == 0);
  CHECK(tr.nodes[tr.root].parts.size() == 1);
  tr = build_nesting_tree(chain(2, {{0, 0}, {1, 1}}));
  CHECK(tr.ntheta == 2);
  const auto& parts = tr.nodes[tr.root].parts;
  REQUIRE(parts.size() == 2);
  CHECK(parts[0].is_node);
  CHECK(parts[1].is_node);
}

TEST_CASE("overlapping intervals are rejected with both flows named") {
  try {
    build_nesting_tree(chain(3, {{0, 1}, {1, 2}}));
    FAIL("expected a nesting error");
  } catch (const NestingError& e) {
    const std::string m = e.what();
    CHECK(m.find("c0") != std::string::npos);
    CHECK(m.find("c1") != std::string::npos);
  }
}

TEST_CASE("crossflow aggregation") {
  const Shaper link{0.5, 4.0};
  const TandemFlow a{"a", 0, 0, paper_flow(), "s0->s1", link};
  const TandemFlow b{"b", 0, 0, paper_flow(), "s0->s1", link};
  ShapedArrival s = aggregate_crossflows({a, b});
  CHECK(s.tb.b == doctest::Approx(2.0));
  CHECK(s.tb.r == doctest::Approx(2.0));
  CHECK(s.sh.L == doctest::Approx(0.5));
  CHECK(s.sh.Rp == doctest::Approx(4.0));

  s = aggregate_crossflows({a});
  CHECK(s.tb.b == 1.0);
  CHECK(s.sh.L == 0.5);

  const auto u = ShapedArrival::unshaped({1.0, 0.5});
  s = aggregate_crossflows({ingress_flow("x", 0, 0, u), ingress_flow("y", 0, 0, u)});
  CHECK(s.tb.b == 2.0);
  CHECK(s.tb.r == 1.0);
  CHECK_FALSE(s.sh.active());

  // Different ingress links fall back to the componentwise shaper sum.
  std::string note;
  s = aggregate_crossflows({ingress_flow("x", 0, 0, paper_flow()), ingress_flow("y", 0, 0, paper_flow())}, &note);
  CHECK(s.sh.L == doctest::Approx(1.0));
  CHECK(s.sh.Rp == doctest::Approx(8.0));
  CHECK_FALSE(note.empty());
}

TEST_CASE("lone flow on a rate-latency server") {
  Tandem t;
  t.server_ids = {"s"};
  t.servers = {rl(3.0, 0.5)};
  t.foi = "f";
  t.flows.push_back(ingress_flow("f", 0, 0, ShapedArrival::unshaped({1.5, 1.0})));
  const auto r = tandem_ludbpp(t, Objective::delay);
  CHECK(r.bound == doctest::Approx(0.5 + 1.5 / 3.0));
  const auto bl = tandem_ludbpp(t, Objective::backlog);
  CHECK(bl.bound == doctest::Approx(1.5 + 0.5 * 1.0));
}

TEST_CASE("two-server instance matches the grid oracle") {
  const Tandem t = nc::test::two_server_tandem();
  const auto r = tandem_ludbpp(t, Objective::delay);
  GridSearchOptions o;
  o.h = 2e-3;
  o.theta_step = 0.01;
  const auto g = tandem_grid_search(t, Objective::delay, o);
  CHECK(rel_diff(r.bound, g.bound) <= 0.02);
  REQUIRE(r.theta_point.size() == 1);
  CHECK(r.theta_point[0] >= 1.0 - 1e-9);
  // The reported θ reproduces the bound through the numeric pipeline.
  const auto tree = build_nesting_tree(t);
  CHECK(tandem_numeric_eval(t, tree, Objective::delay, r.theta_point) == doctest::Approx(r.bound).epsilon(1e-7));

  const auto u = ShapedArrival::unshaped({1.0, 1.0});
  const auto ff = tandem_ludbpp(nc::test::two_server_tandem(u, u), Objective::delay);
  CHECK(ff.bound >= r.bound - 1e-9);
}

TEST_CASE("backlog on the two-server instance matches the grid oracle") {
  const Tandem t = nc::test::two_server_tandem();
  const auto r = tandem_ludbpp(t, Objective::backlog);
  GridSearchOptions o;
  o.h = 2e-3;
  o.theta_step = 0.01;
  const auto g = tandem_grid_search(t, Objective::backlog, o);
  CHECK(rel_diff(r.bound, g.bound) <= 0.02);
}

TEST_CASE("feedforward on a pure tandem equals the tandem analysis") {
  const Topology net = gen_sinktree(3, 0.75, 2.0);
  const auto ff = feedforward_analyze(net, net.flows.front().id, Objective::delay);
  const auto direct = tandem_ludbpp(sinktree_tandem(net), Objective::delay);
  CHECK(ff.bound == doctest::Approx(direct.bound).epsilon(1e-9));
  CHECK(ff.joins.empty());
}

TEST_CASE("tree topology uses shaped side-branch outputs") {
  const Topology net = gen_tree(3, 0.75, 2.0);
  const auto r = feedforward_analyze(net, net.flows.front().id, Objective::delay);
  const auto ff = ludb_ff_analyze(net, net.flows.front().id, Objective::delay);
  CHECK(std::isfinite(r.bound));
  CHECK(r.bound <= ff.bound + 1e-9);
  CHECK(r.joins.size() >= 2);
  for (const auto& j : r.joins) {
    CHECK(j.arrival.sh.active());
    for (double t = 0.0; t < 10.0; t += 0.01) CHECK(j.arrival.eval(t) <= j.output.eval(t) + 1e-12);
  }
}

TEST_CASE("unknown flow and cyclic networks are rejected") {
  const Topology net = gen_one_hop(2, 0.5, 2.0);
  CHECK_THROWS(feedforward_analyze(net, "nope", Objective::delay));
  Topology cyc = net;
  cyc.links.push_back({"s2", "s1"});
  CHECK_THROWS(feedforward_analyze(cyc, net.flows.front().id, Objective::delay));
}

TEST_CASE("property: the bound never exceeds the numeric pipeline at any theta") {
  Gen g(41);
  for (int k = 0; k < 30; ++k) {
    const Tandem t = nc::test::random_tandem(g, g.integer(1, 3), 3);
    const auto tree = build_nesting_tree(t);
    const auto r = tandem_ludbpp(t, Objective::delay);
    for (int j = 0; j < 20; ++j) {
      std::vector<double> th(tree.ntheta);
      for (int i = 0; i < tree.ntheta; ++i) th[i] = tree.nodes[tree.theta_node[i]].latency + g.uniform(0.0, 4.0);
      CHECK(r.bound <= tandem_numeric_eval(t, tree, Objective::delay, th) + 1e-7);
    }
  }
}

TEST_CASE("property: a larger crossflow burst never decreases the bound") {
  Gen g(42);
  for (int k = 0; k < 30; ++k) {
    Tandem t = nc::test::random_tandem(g, g.integer(2, 3), 3);
    if (t.flows.size() < 2) continue;
    for (auto obj : {Objective::delay, Objective::backlog}) {
      const double before = tandem_ludbpp(t, obj).bound;
      Tandem u = t;
      auto& a = u.flows[1].arrival;
      a = a.sh.active() ? ShapedArrival::make({a.tb.b + 0.5, a.tb.r}, a.sh)
                        : ShapedArrival::unshaped({a.tb.b + 0.5, a.tb.r});
      CHECK(tandem_ludbpp(u, obj).bound >= before - 1e-7);
    }
  }
}

TEST_CASE("property: sinktree bounds grow with N") {
  for (double u : {0.5, 0.75}) {
    double prev = 0.0;
    for (int N = 2; N <= 5; ++N) {
      const Topology net = gen_sinktree(N, u, 2.0);
      const double b = feedforward_analyze(net, net.flows.front().id, Objective::delay).bound;
      CHECK(b >= prev - 1e-9);
      prev = b;
    }
  }
}

TEST_CASE("property: ablations give the same bound") {
  Gen g(43);
  for (int k = 0; k < 15; ++k) {
    const Tandem t = nc::test::random_tandem(g, g.integer(2, 3), 2);
    const double ref = tandem_ludbpp(t, Objective::delay).bound;
    AnalysisOptions o;
    o.branch_and_bound = false;
    o.use_ub_box = false;
    o.workers = 2;
    CHECK(tandem_ludbpp(t, Objective::delay, o).bound == doctest::Approx(ref).epsilon(1e-7));
  }
}

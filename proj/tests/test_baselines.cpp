#include "doctest.h"
#include "nc/analysis.hpp"
#include "nc/baselines.hpp"
#include "test_util.hpp"

using namespace nc;

namespace {

Topology single_server(const TokenBucket& foi, const Shaper& sh, const std::vector<TokenBucket>& cross = {}) {
  Topology t;
  t.servers.push_back({"s", {3.0, 0.5}, {}});
  t.flows.push_back({"f", {"s"}, foi, sh});
  for (std::size_t i = 0; i < cross.size(); ++i)
    t.flows.push_back({"c" + std::to_string(i), {"s"}, cross[i], Shaper::none()});
  return t;
}

double ludbff(const Topology& t, const std::string& foi) { return ludb_ff_analyze(t, foi, Objective::delay).bound; }
double ludbpp(const Topology& t, const std::string& foi) {
  return feedforward_analyze(t, foi, Objective::delay).bound;
}

}  // namespace

TEST_CASE("lone flow") {
  const Topology t = single_server({1.5, 1.0}, Shaper::none());
  CHECK(sfa_fifo_delay(t, "f").bound == doctest::Approx(0.5 + 1.5 / 3.0));
  CHECK(tfa_pp_delay(t, "f").bound == doctest::Approx(0.5 + 1.5 / 3.0));
  const Topology s = single_server({1.0, 1.0}, {0.5, 4.0});
  CHECK(tfa_pp_delay(s, "f").bound ==
        doctest::Approx(hdev_shaped(ShapedArrival::make({1.0, 1.0}, {0.5, 4.0}), mslc_from_rate_latency({3.0, 0.5}))));
  // SFA ignores shaping.
  CHECK(sfa_fifo_delay(s, "f").bound == doctest::Approx(0.5 + 1.0 / 3.0));
}

TEST_CASE("single-server nets") {
  // Lone flow: every unshaped method gives T + b/R.
  const Topology lone = single_server({1.0, 0.5}, Shaper::none());
  CHECK(sfa_fifo_delay(lone, "f").bound == doctest::Approx(0.5 + 1.0 / 3.0));
  CHECK(tfa_pp_delay(lone, "f").bound == doctest::Approx(0.5 + 1.0 / 3.0));
  CHECK(ludbff(lone, "f") == doctest::Approx(0.5 + 1.0 / 3.0).epsilon(1e-9));

  // With crossflows TFA and LUDB-FF reach the total-burst bound, while the
  // fixed θ = T + b_c/R leaves β_{R−r_c, θ} for SFA.
  const Topology t = single_server({1.0, 0.5}, Shaper::none(), {{0.7, 0.4}, {1.3, 0.9}});
  const double total = 0.5 + 3.0 / 3.0;
  CHECK(tfa_pp_delay(t, "f").bound == doctest::Approx(total));
  CHECK(ludbff(t, "f") == doctest::Approx(total).epsilon(1e-9));
  CHECK(sfa_fifo_delay(t, "f").bound == doctest::Approx(0.5 + 2.0 / 3.0 + 1.0 / (3.0 - 1.3)));
}

TEST_CASE("one-hop: SFA-FIFO equals LUDB-FF") {
  for (int N : {2, 3})
    for (double ratio : {1.0, 2.0, 3.0}) {
      const Topology t = gen_one_hop(N, 0.5, ratio);
      const std::string foi = t.flows.front().id;
      CHECK(sfa_fifo_delay(t, foi).bound == doctest::Approx(ludbff(t, foi)).epsilon(1e-9));
    }
}

TEST_CASE("sinktree: SFA-FIFO is no better than LUDB-FF") {
  const Topology t = gen_sinktree(3, 0.75, 2.0);
  const std::string foi = t.flows.front().id;
  CHECK(sfa_fifo_delay(t, foi).bound >= ludbff(t, foi) - 1e-9);
}

TEST_CASE("one-hop: TFA++ is no better than LUDB++") {
  const Topology t = gen_one_hop(5, 0.75, 1.0);
  const std::string foi = t.flows.front().id;
  CHECK(tfa_pp_delay(t, foi).bound >= ludbpp(t, foi) - 1e-9);
}

TEST_CASE("TFA++: shaping never hurts") {
  for (Family f : {Family::one_hop, Family::sinktree, Family::tree})
    for (int N = 2; N <= 4; ++N) {
      const Topology t = generate(f, N, 0.75, 2.0);
      const std::string foi = t.flows.front().id;
      const auto shaped = tfa_pp_delay(t, foi);
      const auto plain = tfa_pp_delay(t.without_shapers(), foi);
      CHECK(shaped.bound <= plain.bound + 1e-9);
      CHECK(shaped.per_server.size() == t.flow(foi).path.size());
    }
}

TEST_CASE("overload is rejected") {
  const Topology t = single_server({1.0, 2.0}, Shaper::none(), {{1.0, 2.0}});
  CHECK_THROWS_AS(sfa_fifo_delay(t, "f"), PreconditionError);
  CHECK_THROWS_AS(tfa_pp_delay(t, "f"), PreconditionError);
}

TEST_CASE("concave curves") {
  const ConcaveCurve a = ConcaveCurve::from({{1.0, 1.0}, {0.5, 4.0}});
  CHECK(a.eval(0.0) == 0.0);
  CHECK(a.eval(0.1) == doctest::Approx(0.9));
  CHECK(a.eval(1.0) == doctest::Approx(2.0));
  CHECK(a.rate() == 1.0);
  REQUIRE(a.breakpoints().size() == 1);
  CHECK(a.breakpoints()[0] == doctest::Approx(1.0 / 6.0));
  const ConcaveCurve s = a + a;
  for (double t = 0.01; t < 3.0; t += 0.07) CHECK(s.eval(t) == doctest::Approx(2.0 * a.eval(t)));
  const ConcaveCurve m = min(a, ConcaveCurve::from({{0.0, 3.0}}));
  for (double t = 0.01; t < 3.0; t += 0.07) CHECK(m.eval(t) == doctest::Approx(std::min(a.eval(t), 3.0 * t)));
  const ConcaveCurve sh = shift_left(a, 0.5);
  for (double t = 0.01; t < 3.0; t += 0.07) CHECK(sh.eval(t) == doctest::Approx(a.eval(t + 0.5)));
  CHECK(hdev_rate_latency(a, {2.0, 1.0}) == doctest::Approx(17.0 / 12.0));
  CHECK(std::isinf(hdev_rate_latency(a, {0.5, 1.0})));
}

TEST_CASE("method names") {
  for (Method m : {Method::ludbpp, Method::ludbff, Method::sfa_fifo, Method::tfa_pp})
    CHECK(method_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(method_from_string("elp"), std::invalid_argument);
}

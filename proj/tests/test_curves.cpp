#include "doctest.h"
#include "nc/curves.hpp"
#include "nc/oracle.hpp"
#include "test_util.hpp"

using namespace nc;
using nc::test::Gen;
using nc::test::paper_flow;
using nc::test::rl;

TEST_CASE("rate-latency curves map to a single zero-width stage") {
  const Mslc b = rl(2.0, 1.0);
  CHECK(b.D == 1.0);
  REQUIRE(b.stages.size() == 1);
  CHECK(b.stages[0] == Stage{0.0, 0.0, 2.0});
  CHECK(rl(1.0, 0.0).stages[0] == Stage{0.0, 0.0, 1.0});
  CHECK(rl(3.0, 2.0).eval(4.0) == doctest::Approx(6.0));
  CHECK_THROWS_AS(rl(0.0, 1.0), PreconditionError);
}

TEST_CASE("mslc evaluation") {
  CHECK(mslc_eval({1.0, {{0.0, 0.0, 2.0}}}, 2.0) == doctest::Approx(2.0));
  CHECK(std::isinf(mslc_eval({0.0, {{2.0, 0.0, kInf}}}, 3.0)));
  CHECK(mslc_eval({1.0, {{2.0, 0.5, 2.0}}}, 2.5) == doctest::Approx(0.5));
  CHECK(mslc_eval({1.0, {{2.0, 0.5, 2.0}}}, 1.0) == 0.0);
}

TEST_CASE("convolution of rate-latency curves") {
  const Mslc c = mslc_convolve(rl(2.0, 1.0), rl(3.0, 1.0));
  CHECK(c.D == doctest::Approx(2.0));
  REQUIRE(c.stages.size() == 1);
  CHECK(c.stages[0] == Stage{0.0, 0.0, 2.0});
}

TEST_CASE("convolution of two plateau stages matches the three-stage minimum pointwise") {
  const Mslc a{0.0, {{1.0, 1.0, 2.0}}};
  const Mslc b{0.0, {{2.0, 0.5, 1.0}}};
  const Mslc c = mslc_convolve(a, b);
  const Mslc listed{0.0, {{1.0, 1.0, 2.0}, {2.0, 0.5, 1.0}, {3.0, 1.5, 1.0}}};
  for (double t = 0.0; t <= 8.0; t += 0.01) CHECK(c.eval(t) == doctest::Approx(listed.eval(t)));
  // Independent check against the sampled convolution.
  const double h = 1e-3;
  const auto s = oracle_convolve(sample(a, h, 8.0), sample(b, h, 8.0));
  for (std::size_t i = 0; i + 1 < s.size(); i += 97) {
    CHECK(s[i] >= c.eval(s.t(i)) - 1e-9);
    CHECK(s[i] <= c.eval(s.t(i + 1)) + 1e-9);
  }
}

TEST_CASE("delta zero is neutral for convolution") {
  Gen g(11);
  for (int k = 0; k < 20; ++k) {
    const Mslc c = g.mslc();
    const Mslc d = mslc_convolve(c, Mslc::delta0());
    for (double t = 0.0; t < 6.0; t += 0.037) CHECK(d.eval(t) == doctest::Approx(c.eval(t)));
  }
}

TEST_CASE("simplify drops the larger rate of equal plateaus and keeps mutual duplicates once") {
  const Mslc c = simplify({0.0, {{1.0, 1.0, 2.0}, {1.0, 1.0, kInf}, {1.0, 1.0, 2.0}}});
  REQUIRE(c.stages.size() == 1);
  CHECK(c.stages[0] == Stage{1.0, 1.0, 2.0});
}

TEST_CASE("simplify never changes the curve") {
  Gen g(12);
  for (int k = 0; k < 100; ++k) {
    Mslc c{g.uniform(0.0, 1.0), {}};
    for (int i = 0; i < 6; ++i) c.stages.push_back(g.stage(0.3));
    const Mslc s = simplify(c);
    for (double t = 0.0; t < 6.0; t += 0.0173) {
      const double a = c.eval(t), b = s.eval(t);
      if (std::isinf(a)) CHECK(std::isinf(b));
      else CHECK(b == doctest::Approx(a).epsilon(1e-9));
    }
  }
}

TEST_CASE("shaped delay bound examples") {
  CHECK(hdev_shaped(paper_flow(), rl(2.0, 1.0)) == doctest::Approx(17.0 / 12.0));
  CHECK(hdev_shaped(paper_flow(), {0.0, {{2.0, 0.0, kInf}}}) == doctest::Approx(2.0));
  CHECK(hdev_shaped(ShapedArrival::unshaped({0.0, 0.0}), rl(1.0, 3.0)) == doctest::Approx(3.0));
  // Unshaped token bucket on a rate-latency server: T + b/R.
  CHECK(hdev_shaped(ShapedArrival::unshaped({1.5, 1.0}), rl(3.0, 0.5)) == doctest::Approx(1.0));
}

TEST_CASE("shaped delay bound rejects violated rate assumptions") {
  CHECK_THROWS_AS(hdev_shaped(ShapedArrival::unshaped({1.0, 3.0}), rl(2.0, 1.0)), PreconditionError);
  CHECK_THROWS_AS(hdev_shaped(ShapedArrival::make({1.0, 1.0}, {0.5, 1.5}), rl(2.0, 1.0)), PreconditionError);
  CHECK_THROWS_AS(ShapedArrival::make({1.0, 1.0}, {2.0, 4.0}), PreconditionError);
  CHECK_THROWS_AS(ShapedArrival::make({1.0, 4.0}, {0.5, 4.0}), PreconditionError);
}

TEST_CASE("backlog bound and output curve examples") {
  auto r = vdev_and_output({1.0, 1.0}, rl(2.0, 1.0));
  CHECK(r.backlog == doctest::Approx(2.0));
  CHECK(r.output.b == doctest::Approx(2.0));
  CHECK(r.output.r == doctest::Approx(1.0));
  r = vdev_and_output({1.0, 1.0}, {1.0, {{2.0, 0.5, 2.0}}});
  CHECK(r.backlog == doctest::Approx(3.5));
  CHECK(r.output.b == doctest::Approx(3.5));
  r = vdev_and_output({0.0, 0.0}, {1.0, {{2.0, 0.5, 2.0}}});
  CHECK(r.backlog == 0.0);
  CHECK(r.output.b == 0.0);
  CHECK(r.output.r == 0.0);
}

TEST_CASE("leftover examples") {
  const Mslc l = leftover_numeric(rl(2.0, 1.0), paper_flow(), 17.0 / 12.0);
  CHECK(l.D == doctest::Approx(1.0));
  REQUIRE(l.stages.size() == 2);
  CHECK(l.stages[0].tau == doctest::Approx(7.0 / 12.0));
  CHECK(l.stages[0].sigma == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(l.stages[0].rho == doctest::Approx(1.0));
  CHECK(l.stages[1].tau == doctest::Approx(5.0 / 12.0));
  CHECK(l.stages[1].sigma == 0.0);
  CHECK(std::isinf(l.stages[1].rho));
  // The cutoff stage is dominated here and simplification removes it.
  CHECK(simplify(l).stages.size() == 1);

  const Mslc beta{0.7, {{0.0, 0.0, 3.0}}};
  const Mslc same = simplify(leftover_numeric(beta, ShapedArrival::unshaped({0.0, 0.0}), 0.7));
  for (double t = 0.0; t < 5.0; t += 0.01) CHECK(same.eval(t) == doctest::Approx(beta.eval(t)));

  const Mslc at1 = leftover_numeric(rl(2.0, 1.0), paper_flow(), 1.0);
  CHECK(at1.eval(2.0) <= pos(rl(2.0, 1.0).eval(2.0) - paper_flow().eval(1.0)) + 1e-12);

  CHECK_THROWS_AS(leftover_numeric(rl(2.0, 1.0), paper_flow(), 0.5), PreconditionError);
}

TEST_CASE("leftover of an infinite-rate plateau keeps the unused part") {
  const Mslc beta{0.5, {{1.0, 1.0, kInf}}};
  const auto a = ShapedArrival::unshaped({0.2, 0.1});
  const Mslc l = leftover_numeric(beta, a, 0.7);
  // Cross-traffic sends 0.2 + 0.1·0.8 by the end of the plateau.
  CHECK(l.eval(0.6) == 0.0);
  CHECK(l.eval(1.0) == doctest::Approx(0.72));
  CHECK(l.eval(1.5) == doctest::Approx(0.72));
  CHECK(std::isinf(l.eval(1.51)));
  // Past the plateau only the cutoff remains.
  const Mslc late = leftover_numeric(beta, a, 1.6);
  CHECK(late.eval(1.6) == 0.0);
  CHECK(std::isinf(late.eval(1.61)));
}

TEST_CASE("shape_tb") {
  auto a = shape_tb({2.0, 1.0}, {0.5, 4.0});
  CHECK(a.sh.active());
  CHECK(a.sh.L == 0.5);
  CHECK(a.sh.Rp == 4.0);
  CHECK_FALSE(shape_tb({1.0, 1.0}, {2.0, 4.0}).sh.active());
  a = shape_tb({3.5, 1.0}, {0.5, 8.0});
  CHECK(a.tb.b == 3.5);
  CHECK(a.sh.Rp == 8.0);
  CHECK_FALSE(shape_tb({3.5, 1.0}, Shaper::none()).sh.active());
  CHECK(shape_tb({3.5, 1.0}, Shaper::none()).K() == doctest::Approx(3.5));
}

TEST_CASE("property: curves are nondecreasing and zero up to the offset") {
  Gen g(13);
  for (int k = 0; k < 200; ++k) {
    const Mslc c = g.mslc();
    double prev = 0.0;
    for (double t = 0.0; t < 5.0; t += 0.011) {
      const double v = c.eval(t);
      if (t <= c.D) CHECK(v == 0.0);
      CHECK(v >= prev);
      prev = v;
    }
  }
}

TEST_CASE("property: the offset shifts the delay bound") {
  Gen g(14);
  for (int k = 0; k < 200; ++k) {
    Mslc c = g.mslc();
    const auto a = g.arrival_for(c);
    const double full = hdev_shaped(a, c);
    const double D = c.D;
    c.D = 0.0;
    CHECK(full == doctest::Approx(D + hdev_shaped(a, c)));
  }
}

TEST_CASE("property: delay against a minimum is the maximum of the delays") {
  Gen g(15);
  for (int k = 0; k < 200; ++k) {
    const Mslc c = g.mslc(4);
    const auto a = g.arrival_for(c);
    double worst = 0.0;
    for (const auto& s : c.stages) worst = std::max(worst, hdev_shaped(a, {c.D, {s}}));
    CHECK(hdev_shaped(a, c) == doctest::Approx(worst));
  }
}

TEST_CASE("property: convolution is commutative and associative") {
  Gen g(16);
  for (int k = 0; k < 60; ++k) {
    const Mslc a = g.mslc(2), b = g.mslc(2), c = g.mslc(2);
    const Mslc ab = mslc_convolve(a, b), ba = mslc_convolve(b, a);
    const Mslc l = mslc_convolve(ab, c), r = mslc_convolve(a, mslc_convolve(b, c));
    for (double t = 0.0; t < 8.0; t += 0.029) {
      const double x = ab.eval(t), y = ba.eval(t);
      if (std::isinf(x)) CHECK(std::isinf(y));
      else CHECK(y == doctest::Approx(x));
      const double u = l.eval(t), v = r.eval(t);
      if (std::isinf(u)) CHECK(std::isinf(v));
      else CHECK(v == doctest::Approx(u));
    }
  }
}

TEST_CASE("property: leftover is nondecreasing and below the raw leftover") {
  Gen g(17);
  for (int k = 0; k < 200; ++k) {
    const Mslc beta = g.mslc();
    const auto a = g.arrival_for(beta);
    const double theta = beta.D + g.uniform(0.0, 3.0);
    const Mslc l = leftover_numeric(beta, a, theta);
    double prev = 0.0;
    for (double t = 0.0; t < 8.0; t += 0.013) {
      const double v = l.eval(t);
      const double raw = t > theta ? pos(beta.eval(t) - a.eval(t - theta)) : 0.0;
      CHECK(v <= raw + 1e-9);
      CHECK(v >= prev);
      prev = v;
    }
  }
}

#include "nc/curves.hpp"

#include <algorithm>
#include <sstream>

namespace nc {

namespace {

// x / d for x ≥ 0 where 0/0 counts as 0 and x/0 as +∞.
double div_pos(double x, double d) {
  if (x <= kTol) return 0.0;
  if (d <= 0.0) return kInf;
  return x / d;
}

bool rate_le(double a, double b) {
  if (std::isinf(b)) return true;
  if (std::isinf(a)) return false;
  return a <= b + kTol;
}

double min_rate(const Mslc& c) {
  double m = kInf;
  for (const auto& s : c.stages) m = std::min(m, s.rho);
  return m;
}

double max_finite_rate(const Mslc& c) {
  double m = 0.0;
  for (const auto& s : c.stages)
    if (std::isfinite(s.rho)) m = std::max(m, s.rho);
  return m;
}

// Value of stage b at the right end of a plateau of width x.
double value_at(const Stage& b, double x) {
  if (x <= b.tau + kTol) return b.sigma;
  if (std::isinf(b.rho)) return kInf;
  return b.sigma + b.rho * (x - b.tau);
}

// True when b ≤ a pointwise on t > 0.
bool dominates(const Stage& b, const Stage& a) {
  if (std::isinf(a.rho) && a.tau <= kTol) return true;
  if (!rate_le(b.rho, a.rho)) return false;
  return value_at(b, a.tau) <= a.sigma + kTol;
}

}  // namespace

ShapedArrival ShapedArrival::make(TokenBucket tb, Shaper sh) {
  if (!(tb.b >= 0.0) || !(tb.r >= 0.0) || std::isinf(tb.b) || std::isinf(tb.r))
    throw PreconditionError("token bucket requires finite b >= 0 and r >= 0");
  if (!sh.active()) return {tb, Shaper::none()};
  if (!(sh.L >= 0.0)) throw PreconditionError("shaper requires L >= 0");
  if (!(sh.Rp > 0.0)) throw PreconditionError("shaper requires Rp > 0");
  if (sh.L > tb.b + kTol)
    throw PreconditionError("shaped arrival requires L <= b");
  if (!(tb.r < sh.Rp))
    throw PreconditionError("shaped arrival requires r < R'");
  sh.L = std::min(sh.L, tb.b);
  return {tb, sh};
}

double ShapedArrival::q() const {
  if (!sh.active()) return 0.0;
  return (tb.b - sh.L) / (sh.Rp - tb.r);
}

double ShapedArrival::eval(double t) const {
  if (t <= 0.0) return 0.0;
  return std::min(tb.eval(t), sh.eval(t));
}

double Stage::eval(double t) const {
  if (t <= 0.0) return 0.0;
  if (t <= tau) return sigma;
  if (std::isinf(rho)) return kInf;
  return sigma + rho * (t - tau);
}

double Mslc::eval(double t) const {
  if (t <= D) return 0.0;
  double v = kInf;
  for (const auto& s : stages) v = std::min(v, s.eval(t - D));
  return v;
}

Mslc mslc_from_rate_latency(const RateLatency& rl) {
  if (!(rl.R > 0.0) || !(rl.T >= 0.0))
    throw PreconditionError("rate-latency curve requires R > 0 and T >= 0");
  return {rl.T, {{0.0, 0.0, rl.R}}};
}

double mslc_eval(const Mslc& c, double t) { return c.eval(t); }

Mslc simplify(Mslc c) {
  auto& st = c.stages;
  std::vector<char> dropped(st.size(), 0);
  for (std::size_t i = 0; i < st.size(); ++i) {
    for (std::size_t j = 0; j < st.size(); ++j) {
      if (i == j || dropped[j]) continue;
      if (!dominates(st[j], st[i])) continue;
      // Mutual dominance means equal curves: keep the earlier one.
      if (dominates(st[i], st[j]) && j > i) continue;
      dropped[i] = 1;
      break;
    }
  }
  std::vector<Stage> kept;
  for (std::size_t i = 0; i < st.size(); ++i)
    if (!dropped[i]) kept.push_back(st[i]);
  st = std::move(kept);
  return c;
}

std::vector<Stage> convolve_stage_pair(const Stage& s, const Stage& t) {
  const double tau = s.tau + t.tau;
  const double sigma = s.sigma + t.sigma;
  return {s, t, {tau, sigma, s.rho}, {tau, sigma, t.rho}};
}

Mslc mslc_convolve(const Mslc& a, const Mslc& b) {
  Mslc out{a.D + b.D, {}};
  for (const auto& s : a.stages)
    for (const auto& t : b.stages)
      for (const auto& x : convolve_stage_pair(s, t)) {
        if (std::find(out.stages.begin(), out.stages.end(), x) == out.stages.end())
          out.stages.push_back(x);
      }
  return simplify(std::move(out));
}

void check_shaped_rates(const ShapedArrival& alpha, const Mslc& beta, const char* op) {
  const auto& tb = alpha.tb;
  if (alpha.sh.active()) {
    if (alpha.sh.L > tb.b + kTol)
      throw PreconditionError(std::string(op) + ": shaper burst L exceeds b");
    if (!(tb.r < alpha.sh.Rp))
      throw PreconditionError(std::string(op) + ": arrival rate r must be below R'");
    if (alpha.sh.Rp + kTol < max_finite_rate(beta))
      throw PreconditionError(std::string(op) +
                              ": shaper rate R' below the largest finite stage rate");
  }
  check_tb_rate(tb.r, beta, op);
}

void check_tb_rate(double r, const Mslc& beta, const char* op) {
  if (beta.stages.empty()) throw PreconditionError(std::string(op) + ": empty MSLC");
  if (!rate_le(r, min_rate(beta)))
    throw PreconditionError(std::string(op) +
                            ": arrival rate r exceeds the smallest stage rate");
}

double hdev_shaped(const ShapedArrival& alpha, const Mslc& beta) {
  check_shaped_rates(alpha, beta, "hdev");
  const double b = alpha.tb.b, r = alpha.tb.r, L = alpha.sh.L, Rp = alpha.sh.Rp;
  const double q = alpha.q(), K = alpha.K();
  double worst = 0.0;
  for (const auto& s : beta.stages) {
    const bool above = s.sigma >= K - kTol;
    const bool below = K >= s.sigma - kTol;
    const double t1 = (above ? s.tau : 0.0) - div_pos(pos(s.sigma - b), r);
    double t2;
    if (std::isfinite(s.rho)) {
      t2 = (below ? s.tau : 0.0) + div_pos(pos(K - s.sigma), s.rho) - q;
    } else {
      t2 = (below ? s.tau : 0.0) - (std::isfinite(Rp) ? pos(s.sigma - L) / Rp : 0.0);
    }
    worst = std::max({worst, t1, t2});
  }
  return beta.D + worst;
}

VdevResult vdev_and_output(const TokenBucket& alpha, const Mslc& beta) {
  check_tb_rate(alpha.r, beta, "vdev");
  double v = alpha.b + beta.D * alpha.r;
  for (const auto& s : beta.stages) {
    if (std::isinf(s.tau)) return {kInf, {kInf, alpha.r}};
    v = std::max(v, alpha.b - s.sigma + (beta.D + s.tau) * alpha.r);
  }
  return {v, {v, alpha.r}};
}

Mslc leftover_numeric(const Mslc& beta, const ShapedArrival& alpha, double theta) {
  check_shaped_rates(alpha, beta, "leftover");
  if (theta < beta.D - kTol)
    throw PreconditionError("leftover: theta must be at least the offset D");
  theta = std::max(theta, beta.D);
  const double D = beta.D, b = alpha.tb.b, r = alpha.tb.r;
  const double q = alpha.q(), K = alpha.K();
  const Stage zero{0.0, 0.0, 0.0};
  Mslc out{D, {}};
  for (const auto& s : beta.stages) {
    if (std::isinf(s.rho)) {
      // The plateau keeps what the cross-traffic has not used by D + τ.
      if (theta <= D + s.tau) out.stages.push_back({s.tau, pos(s.sigma - alpha.eval(D + s.tau - theta)), kInf});
      else out.stages.push_back({theta - D, 0.0, kInf});
      continue;
    }
    const double rp = std::max(s.rho - r, 0.0);
    if (theta <= D + s.tau - q) {
      const double y = (D + s.tau - theta) * r + b;
      if (y >= s.sigma) {
        out.stages.push_back(rp <= kTol ? zero : Stage{s.tau + (y - s.sigma) / rp, 0.0, rp});
      } else {
        out.stages.push_back({s.tau, s.sigma - y, rp});
      }
    } else {
      const double y = (theta + q - D - s.tau) * s.rho + s.sigma;
      if (y <= K) {
        out.stages.push_back(rp <= kTol ? zero
                                        : Stage{theta - D + q + (K - y) / rp, 0.0, rp});
      } else {
        out.stages.push_back({theta - D + q, y - K, rp});
      }
    }
  }
  out.stages.push_back({theta - D, 0.0, kInf});
  return out;
}

ShapedArrival shape_tb(const TokenBucket& alpha, const Shaper& sh) {
  if (!sh.active() || sh.L >= alpha.b) return ShapedArrival::unshaped(alpha);
  return ShapedArrival::make(alpha, {std::min(sh.L, alpha.b), sh.Rp});
}

std::string to_string(const Stage& s) {
  std::ostringstream os;
  os << "(" << s.tau << "," << s.sigma << "," << s.rho << ")";
  return os.str();
}

std::string to_string(const Mslc& c) {
  std::ostringstream os;
  os << "D=" << c.D << " [";
  for (std::size_t i = 0; i < c.stages.size(); ++i)
    os << (i ? "," : "") << to_string(c.stages[i]);
  os << "]";
  return os.str();
}

}  // namespace nc

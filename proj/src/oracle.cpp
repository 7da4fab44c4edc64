#include "nc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nc/parallel.hpp"

namespace nc {

std::size_t grid_points(double h, double T_max) {
  if (!(h > 0.0) || !(T_max > 0.0)) throw std::invalid_argument("sampling needs h > 0 and T_max > 0");
  return static_cast<std::size_t>(std::floor(T_max / h + 1e-9)) + 1;
}

SampledFn sample(const std::function<double(double)>& f, double h, double T_max) {
  SampledFn s{h, T_max, std::vector<double>(grid_points(h, T_max))};
  for (std::size_t i = 0; i < s.v.size(); ++i) s.v[i] = f(s.t(i));
  return s;
}

SampledFn sample(const Mslc& c, double h, double T_max) {
  return sample([&](double t) { return c.eval(t); }, h, T_max);
}

SampledFn sample(const TokenBucket& c, double h, double T_max) {
  return sample([&](double t) { return c.eval(t); }, h, T_max);
}

SampledFn sample(const ShapedArrival& c, double h, double T_max) {
  return sample([&](double t) { return c.eval(t); }, h, T_max);
}

namespace {

void check_grids(const SampledFn& f, const SampledFn& g) {
  if (f.h != g.h || f.v.size() != g.v.size()) throw std::invalid_argument("sampled functions on different grids");
}

}  // namespace

SampledFn oracle_convolve(const SampledFn& f, const SampledFn& g) {
  check_grids(f, g);
  const std::size_t n = f.size();
  SampledFn out{f.h, f.T_max, std::vector<double>(n, kInf)};
  for (std::size_t i = 0; i < n; ++i) {
    double m = kInf;
    for (std::size_t k = 0; k <= i; ++k) m = std::min(m, f.v[i - k] + g.v[k]);
    out.v[i] = m;
  }
  return out;
}

SampledFn oracle_deconvolve(const SampledFn& f, const SampledFn& g) {
  check_grids(f, g);
  const std::size_t n = f.size();
  SampledFn out{f.h, f.T_max, std::vector<double>(n, -kInf)};
  for (std::size_t i = 0; i < n; ++i) {
    double m = -kInf;
    for (std::size_t k = 0; i + k < n; ++k) {
      if (std::isinf(g.v[k])) break;  // g is nondecreasing, later terms are -∞
      m = std::max(m, f.v[i + k] - g.v[k]);
    }
    out.v[i] = m;
  }
  return out;
}

double oracle_hdev(const SampledFn& alpha, const SampledFn& beta) {
  check_grids(alpha, beta);
  const std::size_t n = alpha.size();
  double d = 0.0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    j = std::max(j, i);
    while (j < n && beta.v[j] < alpha.v[i]) ++j;
    // Late arrival samples run off the horizon under any finite delay; only
    // a miss in the first half means the horizon is too short.
    if (j == n) {
      if (2 * i < n) return kInf;
      break;
    }
    d = std::max(d, alpha.t(j) - alpha.t(i));
  }
  return d;
}

double oracle_vdev(const SampledFn& alpha, const SampledFn& beta) {
  check_grids(alpha, beta);
  double v = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (std::isinf(beta.v[i])) continue;
    v = std::max(v, alpha.v[i] - beta.v[i]);
  }
  return v;
}

SampledFn lower_closure(SampledFn f) {
  for (std::size_t i = f.v.size(); i-- > 1;) f.v[i - 1] = std::min(f.v[i - 1], f.v[i]);
  return f;
}

SampledFn oracle_leftover(const SampledFn& beta, const SampledFn& alpha, double theta) {
  check_grids(beta, alpha);
  const std::size_t k = static_cast<std::size_t>(std::llround(std::max(theta, 0.0) / beta.h));
  SampledFn raw{beta.h, beta.T_max, std::vector<double>(beta.size(), 0.0)};
  for (std::size_t i = k + 1; i < beta.size(); ++i) raw.v[i] = pos(beta.v[i] - alpha.v[i - k]);
  return lower_closure(std::move(raw));
}

// ------------------------------------------------------------ grid search

namespace {

SampledFn sampled_service(const Tandem& t, const NestingTree& tree, int v, const std::vector<double>& theta,
                          double h, double T);

SampledFn sampled_leftover(const Tandem& t, const NestingTree& tree, int v, const std::vector<double>& theta,
                           double h, double T) {
  const auto& node = tree.nodes[v];
  return oracle_leftover(sampled_service(t, tree, v, theta, h, T), sample(node.cross, h, T), theta[node.theta]);
}

SampledFn sampled_service(const Tandem& t, const NestingTree& tree, int v, const std::vector<double>& theta,
                          double h, double T) {
  std::optional<SampledFn> acc;
  for (const auto& p : tree.nodes[v].parts) {
    SampledFn c = p.is_node ? sampled_leftover(t, tree, p.index, theta, h, T) : sample(t.servers[p.index], h, T);
    acc = acc ? oracle_convolve(*acc, c) : std::move(c);
  }
  return *acc;
}

}  // namespace

double tandem_grid_eval(const Tandem& t, const NestingTree& tree, Objective obj,
                        const std::vector<double>& theta, double h, double horizon) {
  const auto service = sampled_service(t, tree, tree.root, theta, h, horizon);
  const auto& foi = t.flow(t.foi).arrival;
  if (obj == Objective::delay) return oracle_hdev(sample(foi, h, horizon), service);
  return oracle_vdev(sample(foi.tb, h, horizon), service);
}

GridSearchResult tandem_grid_search(const Tandem& t, Objective obj, const GridSearchOptions& opt) {
  const NestingTree tree = build_nesting_tree(t);
  const int N = tree.ntheta;
  // The closed-form pipeline only sizes the horizon and the θ box.
  std::vector<double> th0;
  const double ub = tandem_numeric_search(t, tree, obj, th0);
  const double horizon = opt.horizon > 0.0 ? opt.horizon : std::max(4.0 * ub, 1.0) + 1.0;

  std::vector<double> lo(N), hi(N);
  for (int j = 0; j < N; ++j) {
    lo[j] = tree.nodes[tree.theta_node[j]].latency;
    // Margin so that the sampled optimum is not clipped by the closed-form cap.
    const double cap = theta_upper_bound(t, tree, obj, ub, j);
    hi[j] = opt.theta_span > 0.0 ? lo[j] + opt.theta_span
                                 : (std::isfinite(cap) ? cap + 4.0 * opt.h : lo[j] + horizon);
    hi[j] = std::max(hi[j], lo[j]);
  }

  GridSearchResult res;
  res.theta.assign(N, 0.0);
  if (N == 0) {
    res.bound = tandem_grid_eval(t, tree, obj, {}, opt.h, horizon);
    res.evaluations = 1;
    return res;
  }

  // Evaluates a Cartesian grid of P points per axis over [a_j, b_j].
  auto scan = [&](const std::vector<double>& a, const std::vector<double>& b, int P) {
    std::size_t total = 1;
    for (int j = 0; j < N; ++j) total *= static_cast<std::size_t>(P);
    std::vector<double> vals(total);
    auto point = [&](std::size_t idx) {
      std::vector<double> x(N);
      for (int j = 0; j < N; ++j) {
        const std::size_t k = idx % P;
        idx /= P;
        x[j] = P == 1 ? a[j] : a[j] + (b[j] - a[j]) * static_cast<double>(k) / (P - 1);
      }
      return x;
    };
    parallel_for(total, opt.workers,
                 [&](std::size_t i) { vals[i] = tandem_grid_eval(t, tree, obj, point(i), opt.h, horizon); });
    res.evaluations += total;
    for (std::size_t i = 0; i < total; ++i)
      if (vals[i] < res.bound) {
        res.bound = vals[i];
        res.theta = point(i);
      }
  };

  int P = 2;
  double widest = 0.0;
  for (int j = 0; j < N; ++j) widest = std::max(widest, hi[j] - lo[j]);
  P = std::max(2, static_cast<int>(std::ceil(widest / opt.theta_step)) + 1);
  const int pmax = std::max(2, static_cast<int>(std::floor(std::pow(opt.max_coarse, 1.0 / N))));
  P = std::min(P, pmax);
  scan(lo, hi, P);

  std::vector<double> step(N);
  for (int j = 0; j < N; ++j) step[j] = (hi[j] - lo[j]) / (P - 1);
  const int Pr = N <= 2 ? 21 : 11;
  for (int round = 0; round < opt.refine_rounds; ++round) {
    std::vector<double> a(N), b(N);
    for (int j = 0; j < N; ++j) {
      a[j] = std::max(lo[j], res.theta[j] - step[j]);
      b[j] = std::min(hi[j], res.theta[j] + step[j]);
    }
    scan(a, b, Pr);
    for (int j = 0; j < N; ++j) step[j] = 2.0 * step[j] / (Pr - 1);
  }
  for (int j = 0; j < N; ++j)
    if (opt.theta_span > 0.0 && res.theta[j] >= hi[j] - 1e-12) res.at_range_edge = true;
  return res;
}

}  // namespace nc

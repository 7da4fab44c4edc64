// Brute-force min-plus operations on uniformly sampled curves.
//
// These are deliberately naive (quadratic convolutions, linear scans) and serve
// as ground truth for the closed forms and for the LP decomposition.
#pragma once

#include <functional>
#include <vector>

#include "nc/analysis.hpp"
#include "nc/curves.hpp"

namespace nc {

struct SampledFn {
  double h = 1e-3;
  double T_max = 0.0;
  std::vector<double> v;

  std::size_t size() const { return v.size(); }
  double t(std::size_t i) const { return static_cast<double>(i) * h; }
  double operator[](std::size_t i) const { return v[i]; }
};

// Number of grid points for a horizon, floor(T_max/h)+1 with rounding slack.
std::size_t grid_points(double h, double T_max);

SampledFn sample(const std::function<double(double)>& f, double h, double T_max);
SampledFn sample(const Mslc& c, double h, double T_max);
SampledFn sample(const TokenBucket& c, double h, double T_max);
SampledFn sample(const ShapedArrival& c, double h, double T_max);

// Exact inf/sup over grid points. Deconvolution is truncated at T_max.
SampledFn oracle_convolve(const SampledFn& f, const SampledFn& g);
SampledFn oracle_deconvolve(const SampledFn& f, const SampledFn& g);

// Returns +∞ when an arrival sample in the first half of the horizon is not
// met by the service within the horizon.
double oracle_hdev(const SampledFn& alpha, const SampledFn& beta);
double oracle_vdev(const SampledFn& alpha, const SampledFn& beta);

// [β(t) − α(t−θ)]^+ · 1{t > θ}, then closed to its non-decreasing lower bound.
// theta is snapped to the nearest grid point.
SampledFn oracle_leftover(const SampledFn& beta, const SampledFn& alpha, double theta);

// Non-decreasing lower closure inf_{u ≥ t} f(u).
SampledFn lower_closure(SampledFn f);

struct GridSearchOptions {
  double h = 5e-3;          // curve sampling step
  double horizon = 0.0;     // 0: derived from the numeric upper bound
  double theta_step = 0.05; // coarse θ step
  double theta_span = 0.0;  // 0: derived from the numeric upper bound
  int refine_rounds = 2;    // each round rescans ±one step around the best point
  int max_coarse = 20000;   // cap on coarse grid points
  int workers = 1;
};

struct GridSearchResult {
  double bound = kInf;
  std::vector<double> theta;
  bool at_range_edge = false;  // optimum touched the searched θ box
  std::size_t evaluations = 0;
};

// Minimum over a θ grid of the bound obtained by composing the sampled
// operations in nesting-tree order. Leftovers use oracle_leftover, joins use
// oracle_convolve and the root uses oracle_hdev / oracle_vdev.
GridSearchResult tandem_grid_search(const Tandem& t, Objective obj,
                                    const GridSearchOptions& opt = {});

// Composed sampled bound at one θ point (one entry per nesting-tree cut).
double tandem_grid_eval(const Tandem& t, const NestingTree& tree, Objective obj,
                        const std::vector<double>& theta, double h, double horizon);

}  // namespace nc

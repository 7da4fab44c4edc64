// Reference analyses used in the comparisons: SFA-FIFO and TFA++.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nc/curves.hpp"
#include "nc/network.hpp"

namespace nc {

enum class Method { ludbpp, ludbff, sfa_fifo, tfa_pp };

const char* to_string(Method m);
Method method_from_string(const std::string& s);

struct BaselineResult {
  Method method = Method::sfa_fifo;
  double bound = kInf;
  // Per server on the foi's path: SFA-FIFO stores the leftover's offset,
  // TFA++ the local delay.
  std::vector<std::pair<std::string, double>> per_server;
};

// Separated flow analysis with the FIFO leftover at the fixed θ = T + b/R,
// where b is the aggregate burst of the other flows at the server. Shapers
// are ignored.
BaselineResult sfa_fifo_delay(const Topology& net, const std::string& foi);

// Total flow analysis with shaped per-link aggregates and delay-shifted
// output curves, reshaped on every out-link.
BaselineResult tfa_pp_delay(const Topology& net, const std::string& foi);

// Concave piecewise-linear curve min_i (a_i + s_i·t) for t > 0, 0 at t = 0,
// kept as its lower envelope ordered by decreasing slope.
struct ConcaveCurve {
  std::vector<std::pair<double, double>> lines;  // (intercept, slope)

  static ConcaveCurve from(std::vector<std::pair<double, double>> lines);
  double eval(double t) const;
  double rate() const;  // long-run slope
  // Envelope breakpoints in increasing order.
  std::vector<double> breakpoints() const;
};

ConcaveCurve operator+(const ConcaveCurve& a, const ConcaveCurve& b);
ConcaveCurve min(const ConcaveCurve& a, const ConcaveCurve& b);
// α(t + d).
ConcaveCurve shift_left(const ConcaveCurve& a, double d);
// hdev(α, β_{R,T}); +∞ when the long-run rate exceeds R.
double hdev_rate_latency(const ConcaveCurve& a, const RateLatency& rl);

}  // namespace nc

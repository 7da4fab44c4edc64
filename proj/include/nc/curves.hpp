// Numeric arrival and service curves over the extended nonnegative reals.
//
// Service curves live in the MSLC class: an offset D followed by the minimum
// of plateau-then-rate stages. All closed forms here take and return plain
// values; the symbolic module mirrors them with θ-affine fields.
#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace nc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Comparison tolerance shared by case selection here and by the LP solver.
inline constexpr double kTol = 1e-9;

inline double pos(double x) { return x > 0.0 ? x : 0.0; }

// Raised when an input violates a rate or shape assumption of a closed form.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// γ_{b,r}: b + r·t for t > 0, 0 at t = 0.
struct TokenBucket {
  double b = 0.0;
  double r = 0.0;

  double eval(double t) const { return t > 0.0 ? b + r * t : 0.0; }
};

// γ_{L,R'}; Rp = +∞ means no shaping and is stored canonically with L = 0.
struct Shaper {
  double L = 0.0;
  double Rp = kInf;

  static Shaper none() { return {}; }
  bool active() const { return std::isfinite(Rp); }
  double eval(double t) const { return t > 0.0 ? L + Rp * t : 0.0; }
};

// γ_{b,r} ∧ γ_{L,R'} with L ≤ b and r < R'.
struct ShapedArrival {
  TokenBucket tb;
  Shaper sh;

  // Validating constructor; an inactive shaper is normalized to (0, +∞).
  static ShapedArrival make(TokenBucket tb, Shaper sh);
  static ShapedArrival unshaped(TokenBucket tb) { return make(tb, Shaper::none()); }

  // (b−L)/(R'−r), zero without shaping.
  double q() const;
  // Inflection ordinate q·r + b.
  double K() const { return q() * tb.r + tb.b; }
  double eval(double t) const;
};

struct RateLatency {
  double R = 0.0;
  double T = 0.0;
};

// Plateau of height sigma on (0, tau], then slope rho (possibly +∞).
struct Stage {
  double tau = 0.0;
  double sigma = 0.0;
  double rho = 0.0;

  double eval(double t) const;
  bool operator==(const Stage&) const = default;
};

struct Mslc {
  double D = 0.0;
  std::vector<Stage> stages;

  double eval(double t) const;
  // δ₀: zero offset, one burst-delay stage of width zero.
  static Mslc delta0() { return {0.0, {{0.0, 0.0, kInf}}}; }
};

Mslc mslc_from_rate_latency(const RateLatency& rl);
double mslc_eval(const Mslc& c, double t);

// Drops duplicate and pointwise-dominated stages. Stage a is dropped when some
// other stage b has tau_b ≥ tau_a, sigma_b ≤ sigma_a and rho_b ≤ rho_a, which
// makes b ≤ a everywhere; a zero stage (sigma = rho = 0) absorbs all others.
Mslc simplify(Mslc c);

// Min-plus convolution via the pairwise four-stage expansion, simplified.
Mslc mslc_convolve(const Mslc& a, const Mslc& b);

// Raw stage expansion without simplification (used by tests and symbolic code).
std::vector<Stage> convolve_stage_pair(const Stage& s, const Stage& t);

// Horizontal deviation of a shaped token bucket against an MSLC curve.
double hdev_shaped(const ShapedArrival& alpha, const Mslc& beta);

struct VdevResult {
  double backlog = 0.0;
  TokenBucket output;
};

// Vertical deviation of a token bucket against an MSLC curve and the
// resulting output token bucket γ_{vdev, r}.
VdevResult vdev_and_output(const TokenBucket& alpha, const Mslc& beta);

// Non-decreasing lower bound of the FIFO leftover β ⊖_θ α, for θ ≥ D.
// The result is not simplified; callers may pass it through simplify().
Mslc leftover_numeric(const Mslc& beta, const ShapedArrival& alpha, double theta);

// Applies a link shaper to a token bucket. The shaper is dropped when it can
// never bind (L ≥ b or Rp = +∞).
ShapedArrival shape_tb(const TokenBucket& alpha, const Shaper& sh);

// Checks shared by hdev, vdev and leftover; throw PreconditionError.
void check_shaped_rates(const ShapedArrival& alpha, const Mslc& beta, const char* op);
void check_tb_rate(double r, const Mslc& beta, const char* op);

std::string to_string(const Stage& s);
std::string to_string(const Mslc& c);

}  // namespace nc

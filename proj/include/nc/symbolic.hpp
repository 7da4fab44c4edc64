// θ-affine curve algebra.
//
// A SymMslc is an MSLC curve whose plateau widths and heights are affine in
// the free FIFO parameters θ, valid on the polyhedron described by its
// constraint list. Every [·]^+ and every case distinction of the closed forms
// becomes a branch carrying the corresponding sign constraint.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nc/curves.hpp"

namespace nc {

// c0 + Σ coef[j]·θ_j, stored densely by variable index.
struct AffineExpr {
  double c0 = 0.0;
  std::vector<double> coef;

  AffineExpr() = default;
  explicit AffineExpr(double c) : c0(c) {}
  static AffineExpr var(int j, double a = 1.0);

  double coeff(int j) const { return j < static_cast<int>(coef.size()) ? coef[j] : 0.0; }
  int nvars() const { return static_cast<int>(coef.size()); }
  bool is_constant(double tol = 0.0) const;
  double eval(const std::vector<double>& theta) const;
  bool equals(const AffineExpr& o, double tol = kTol) const;
  std::string str(const std::vector<std::string>& names = {}) const;

  AffineExpr& operator+=(const AffineExpr& o);
  AffineExpr& operator-=(const AffineExpr& o);
  AffineExpr& operator*=(double a);
  friend AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
  friend AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
  friend AffineExpr operator*(AffineExpr a, double s) { return a *= s; }
  friend AffineExpr operator*(double s, AffineExpr a) { return a *= s; }
  friend AffineExpr operator+(AffineExpr a, double c) { a.c0 += c; return a; }
  friend AffineExpr operator-(AffineExpr a, double c) { a.c0 -= c; return a; }
  AffineExpr operator-() const { return *this * -1.0; }
};

// Normalized to lhs ≥ 0.
struct Constraint {
  AffineExpr lhs;

  static Constraint ge(const AffineExpr& a, const AffineExpr& b) { return {a - b}; }
  static Constraint le(const AffineExpr& a, const AffineExpr& b) { return {b - a}; }
  bool holds(const std::vector<double>& theta, double tol = 1e-7) const {
    return lhs.eval(theta) >= -tol;
  }
};

// Constraint list with a cached per-variable box used for cheap entailment
// and emptiness checks. The box is an over-approximation of the polyhedron.
class Region {
 public:
  Region() = default;
  explicit Region(std::vector<Constraint> cons);

  const std::vector<Constraint>& constraints() const { return cons_; }
  // Adds c unless the box already proves it. Returns false when the box
  // proves the region empty.
  bool add(const Constraint& c);
  bool empty() const { return empty_; }

  double lower(const AffineExpr& e) const;
  double upper(const AffineExpr& e) const;
  // Conservative proof of e ≥ 0 on the region: box bound or a match against
  // a single stored constraint. A false answer means "not proven".
  bool provably_nonneg(const AffineExpr& e) const;
  bool provably_negative(const AffineExpr& e) const { return upper(e) < -kTol; }
  // Exact emptiness test through an LP feasibility solve.
  bool lp_feasible() const;

 private:
  void ensure_vars(int n);
  void propagate();

  std::vector<Constraint> cons_;
  std::vector<double> lo_, hi_;
  bool empty_ = false;
};

struct SymStage {
  AffineExpr tau;
  AffineExpr sigma;
  double rho = 0.0;

  Stage instantiate(const std::vector<double>& theta) const;
  bool same(const SymStage& o) const;
};

struct SymMslc {
  double D = 0.0;
  std::vector<SymStage> stages;
  std::vector<Constraint> cons;

  static SymMslc from_numeric(const Mslc& c);
  Mslc instantiate(const std::vector<double>& theta) const;
  bool feasible_at(const std::vector<double>& theta, double tol = 1e-7) const;
  std::string str(const std::vector<std::string>& names = {}) const;
};

struct LeftoverOptions {
  bool prune_box = true;  // drop branches whose box becomes empty
  bool prune_lp = true;   // drop branches an LP proves empty
};

// Branches of (β ⊖_θ α)↑ with θ = θ_{theta_var}. Every branch carries θ ≥ D.
std::vector<SymMslc> sym_leftover(const SymMslc& beta, const ShapedArrival& alpha,
                                  int theta_var, const LeftoverOptions& opt = {});

// Convolution with the four-stage pairwise expansion; constraints concatenated.
SymMslc sym_convolve(const SymMslc& a, const SymMslc& b);

// Removes duplicates and stages proven pointwise dominated on the region.
SymMslc simplify(SymMslc s);

// A bracket term of the delay or backlog formula together with the sign
// constraints of the case that produced it.
struct CaseTerm {
  std::vector<Constraint> cons;
  std::optional<AffineExpr> term;  // empty when the case contributes nothing
};

// Per-stage cases of the shaped delay formula. Cases whose constraints the
// region refutes are omitted and proven constraints are not repeated.
std::vector<CaseTerm> hdev_stage_cases(const ShapedArrival& alpha, const SymStage& s,
                                       const Region& region);

// One LP: minimize objective subject to cons; vars with index ≥ ntheta are
// auxiliary (the epigraph variable).
struct LpInstance;

struct DecomposeOptions {
  bool epigraph = false;  // one epigraph LP per case branch instead of one LP per maximizer
};

std::vector<LpInstance> sym_hdev_decompose(const ShapedArrival& alpha, const SymMslc& beta,
                                           const DecomposeOptions& opt = {});
std::vector<LpInstance> sym_vdev_decompose(const TokenBucket& alpha, const SymMslc& beta,
                                           const DecomposeOptions& opt = {});

// Bracket terms of the backlog formula (all affine, no case split needed).
std::vector<AffineExpr> vdev_terms(const TokenBucket& alpha, const SymMslc& beta);

}  // namespace nc

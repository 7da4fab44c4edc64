#include "nc/symbolic.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "nc/lp.hpp"

namespace nc {

// ---------------------------------------------------------------- AffineExpr

AffineExpr AffineExpr::var(int j, double a) {
  AffineExpr e;
  e.coef.assign(j + 1, 0.0);
  e.coef[j] = a;
  return e;
}

bool AffineExpr::is_constant(double tol) const {
  return std::all_of(coef.begin(), coef.end(), [&](double a) { return std::abs(a) <= tol; });
}

double AffineExpr::eval(const std::vector<double>& theta) const {
  double v = c0;
  for (std::size_t j = 0; j < coef.size(); ++j) {
    if (coef[j] == 0.0) continue;
    v += coef[j] * (j < theta.size() ? theta[j] : 0.0);
  }
  return v;
}

bool AffineExpr::equals(const AffineExpr& o, double tol) const {
  if (std::abs(c0 - o.c0) > tol) return false;
  const int n = std::max(nvars(), o.nvars());
  for (int j = 0; j < n; ++j)
    if (std::abs(coeff(j) - o.coeff(j)) > tol) return false;
  return true;
}

std::string AffineExpr::str(const std::vector<std::string>& names) const {
  std::ostringstream os;
  os << c0;
  for (int j = 0; j < nvars(); ++j) {
    if (coef[j] == 0.0) continue;
    os << (coef[j] < 0 ? " - " : " + ") << std::abs(coef[j]) << "*"
       << (j < static_cast<int>(names.size()) ? names[j] : "t" + std::to_string(j));
  }
  return os.str();
}

AffineExpr& AffineExpr::operator+=(const AffineExpr& o) {
  c0 += o.c0;
  if (coef.size() < o.coef.size()) coef.resize(o.coef.size(), 0.0);
  for (std::size_t j = 0; j < o.coef.size(); ++j) coef[j] += o.coef[j];
  return *this;
}

AffineExpr& AffineExpr::operator-=(const AffineExpr& o) {
  c0 -= o.c0;
  if (coef.size() < o.coef.size()) coef.resize(o.coef.size(), 0.0);
  for (std::size_t j = 0; j < o.coef.size(); ++j) coef[j] -= o.coef[j];
  return *this;
}

AffineExpr& AffineExpr::operator*=(double a) {
  c0 *= a;
  for (auto& x : coef) x *= a;
  return *this;
}

// -------------------------------------------------------------------- Region

Region::Region(std::vector<Constraint> cons) {
  for (auto& c : cons) {
    ensure_vars(c.lhs.nvars());
    cons_.push_back(std::move(c));
  }
  propagate();
}

void Region::ensure_vars(int n) {
  if (static_cast<int>(lo_.size()) >= n) return;
  lo_.resize(n, 0.0);
  hi_.resize(n, kInf);
}

double Region::lower(const AffineExpr& e) const {
  double v = e.c0;
  for (int j = 0; j < e.nvars(); ++j) {
    const double a = e.coef[j];
    if (a == 0.0) continue;
    const double lo = j < static_cast<int>(lo_.size()) ? lo_[j] : 0.0;
    const double hi = j < static_cast<int>(hi_.size()) ? hi_[j] : kInf;
    v += a > 0 ? a * lo : a * hi;
  }
  return v;
}

double Region::upper(const AffineExpr& e) const {
  return -lower(-e);
}

bool Region::provably_nonneg(const AffineExpr& e) const {
  if (lower(e) >= -kTol) return true;
  for (const auto& g : cons_) {
    for (int j = 0; j < g.lhs.nvars(); ++j) {
      const double gj = g.lhs.coef[j];
      const double ej = e.coeff(j);
      if (gj == 0.0 || ej == 0.0) continue;
      const double lambda = ej / gj;
      if (lambda <= 0.0) continue;
      if (lower(e - g.lhs * lambda) >= -kTol) return true;
    }
  }
  return false;
}

bool Region::add(const Constraint& c) {
  if (empty_) return false;
  ensure_vars(c.lhs.nvars());
  if (provably_nonneg(c.lhs)) return true;
  if (provably_negative(c.lhs)) {
    empty_ = true;
    return false;
  }
  cons_.push_back(c);
  propagate();
  return !empty_;
}

void Region::propagate() {
  for (int pass = 0; pass < 3 && !empty_; ++pass) {
    bool changed = false;
    for (const auto& c : cons_) {
      const auto& e = c.lhs;
      for (int j = 0; j < e.nvars(); ++j) {
        const double a = e.coef[j];
        if (a == 0.0) continue;
        // Upper bound of the remaining terms.
        double rest = e.c0;
        for (int k = 0; k < e.nvars() && std::isfinite(rest); ++k) {
          if (k == j || e.coef[k] == 0.0) continue;
          rest += e.coef[k] > 0 ? e.coef[k] * hi_[k] : e.coef[k] * lo_[k];
        }
        if (!std::isfinite(rest)) continue;
        if (a > 0) {
          const double nl = -rest / a;
          if (nl > lo_[j] + kTol) lo_[j] = nl, changed = true;
        } else {
          const double nh = rest / -a;
          if (nh < hi_[j] - kTol) hi_[j] = nh, changed = true;
        }
        if (lo_[j] > hi_[j] + kTol) {
          empty_ = true;
          return;
        }
      }
    }
    if (!changed) break;
  }
}

bool Region::lp_feasible() const {
  if (empty_) return false;
  return nc::lp_feasible(cons_);
}

// ------------------------------------------------------------------ SymStage

Stage SymStage::instantiate(const std::vector<double>& theta) const {
  return {pos(tau.eval(theta)), pos(sigma.eval(theta)), rho};
}

bool SymStage::same(const SymStage& o) const {
  const bool rho_eq = (std::isinf(rho) && std::isinf(o.rho)) || std::abs(rho - o.rho) <= kTol;
  return rho_eq && tau.equals(o.tau) && sigma.equals(o.sigma);
}

SymMslc SymMslc::from_numeric(const Mslc& c) {
  SymMslc s;
  s.D = c.D;
  for (const auto& st : c.stages) s.stages.push_back({AffineExpr(st.tau), AffineExpr(st.sigma), st.rho});
  return s;
}

Mslc SymMslc::instantiate(const std::vector<double>& theta) const {
  Mslc m{D, {}};
  for (const auto& s : stages) m.stages.push_back(s.instantiate(theta));
  return m;
}

bool SymMslc::feasible_at(const std::vector<double>& theta, double tol) const {
  return std::all_of(cons.begin(), cons.end(), [&](const Constraint& c) { return c.holds(theta, tol); });
}

std::string SymMslc::str(const std::vector<std::string>& names) const {
  std::ostringstream os;
  os << "D=" << D << " [";
  for (std::size_t i = 0; i < stages.size(); ++i) {
    os << (i ? ", " : "") << "(" << stages[i].tau.str(names) << " | " << stages[i].sigma.str(names)
       << " | " << stages[i].rho << ")";
  }
  os << "] s.t.";
  for (const auto& c : cons) os << " {" << c.lhs.str(names) << " >= 0}";
  return os.str();
}

// ------------------------------------------------------------------ simplify

namespace {

bool rate_le(double a, double b) {
  if (std::isinf(b)) return true;
  if (std::isinf(a)) return false;
  return a <= b + kTol;
}

bool is_zero_stage(const SymStage& s, const Region& r) {
  return s.rho == 0.0 && r.provably_nonneg(-s.sigma);
}

// Sound test for b ≤ a pointwise on every point of the region.
bool sym_dominates(const SymStage& b, const SymStage& a, const Region& r) {
  if (std::isinf(a.rho) && r.provably_nonneg(-a.tau)) return true;
  if (is_zero_stage(b, r)) return true;
  if (!rate_le(b.rho, a.rho)) return false;
  if (r.provably_nonneg(b.tau - a.tau) && r.provably_nonneg(a.sigma - b.sigma)) return true;
  if (std::isfinite(b.rho) && r.provably_nonneg(a.tau - b.tau) &&
      r.provably_nonneg(a.sigma - b.sigma - (a.tau - b.tau) * b.rho))
    return true;
  return false;
}

void push_unique(std::vector<SymStage>& v, const SymStage& s) {
  for (const auto& x : v)
    if (x.same(s)) return;
  v.push_back(s);
}

}  // namespace

SymMslc simplify(SymMslc s) {
  const Region region(s.cons);
  std::vector<SymStage> uniq;
  for (const auto& st : s.stages) push_unique(uniq, st);
  std::vector<char> dropped(uniq.size(), 0);
  for (std::size_t i = 0; i < uniq.size(); ++i) {
    for (std::size_t j = 0; j < uniq.size(); ++j) {
      if (i == j || dropped[j]) continue;
      if (!sym_dominates(uniq[j], uniq[i], region)) continue;
      if (j > i && sym_dominates(uniq[i], uniq[j], region)) continue;
      dropped[i] = 1;
      break;
    }
  }
  s.stages.clear();
  for (std::size_t i = 0; i < uniq.size(); ++i)
    if (!dropped[i]) s.stages.push_back(uniq[i]);
  return s;
}

// ------------------------------------------------------------------ convolve

SymMslc sym_convolve(const SymMslc& a, const SymMslc& b) {
  SymMslc out;
  out.D = a.D + b.D;
  for (const auto& s : a.stages) {
    for (const auto& t : b.stages) {
      push_unique(out.stages, s);
      push_unique(out.stages, t);
      const AffineExpr tau = s.tau + t.tau;
      const AffineExpr sigma = s.sigma + t.sigma;
      push_unique(out.stages, {tau, sigma, s.rho});
      push_unique(out.stages, {tau, sigma, t.rho});
    }
  }
  out.cons = a.cons;
  out.cons.insert(out.cons.end(), b.cons.begin(), b.cons.end());
  return simplify(std::move(out));
}

// ------------------------------------------------------------------ leftover

namespace {

Mslc rate_skeleton(const SymMslc& s) {
  Mslc m{s.D, {}};
  for (const auto& st : s.stages) m.stages.push_back({0.0, 0.0, st.rho});
  return m;
}

struct StageCase {
  std::vector<Constraint> cons;
  SymStage stage;
};

}  // namespace

std::vector<SymMslc> sym_leftover(const SymMslc& beta, const ShapedArrival& alpha, int theta_var,
                                  const LeftoverOptions& opt) {
  check_shaped_rates(alpha, rate_skeleton(beta), "leftover");
  const double D = beta.D, b = alpha.tb.b, r = alpha.tb.r;
  const double q = alpha.q(), K = alpha.K();
  const AffineExpr theta = AffineExpr::var(theta_var);
  const SymStage zero{AffineExpr(0.0), AffineExpr(0.0), 0.0};

  std::vector<std::vector<StageCase>> cases(beta.stages.size());
  for (std::size_t i = 0; i < beta.stages.size(); ++i) {
    const auto& s = beta.stages[i];
    auto& out = cases[i];
    if (std::isinf(s.rho)) {
      const Constraint before = Constraint::ge(s.tau + D, theta);
      out.push_back({{Constraint::ge(theta, s.tau + D)}, {theta - D, AffineExpr(0.0), kInf}});
      if (s.sigma.is_constant() && s.sigma.c0 <= kTol) {
        out.push_back({{before}, {s.tau, AffineExpr(0.0), kInf}});
        continue;
      }
      // Plateau left after the cross-traffic sent during (θ, D + τ]: the
      // token-bucket piece when that window reaches past q, the shaper piece
      // otherwise.
      const AffineExpr w = s.tau + D - theta;
      std::vector<std::pair<Constraint, AffineExpr>> pieces{{Constraint::ge(w, AffineExpr(q)), w * r + b}};
      if (q > 0.0) pieces.push_back({Constraint::ge(AffineExpr(q), w), w * alpha.sh.Rp + alpha.sh.L});
      for (const auto& [range, y] : pieces) {
        out.push_back({{before, range, Constraint::ge(s.sigma, y)}, {s.tau, s.sigma - y, kInf}});
        out.push_back({{before, range, Constraint::ge(y, s.sigma)}, {s.tau, AffineExpr(0.0), kInf}});
      }
      continue;
    }
    const double rp = std::max(s.rho - r, 0.0);
    const bool flat = rp <= kTol;
    // Case 1: θ ≤ D + τ − q.
    const Constraint c1 = Constraint::ge(s.tau + (D - q), theta);
    const AffineExpr y1 = (s.tau + D - theta) * r + b;
    out.push_back({{c1, Constraint::ge(y1, s.sigma)},
                   flat ? zero : SymStage{s.tau + (y1 - s.sigma) * (1.0 / rp), AffineExpr(0.0), rp}});
    out.push_back({{c1, Constraint::ge(s.sigma, y1)}, {s.tau, s.sigma - y1, rp}});
    // Case 2: θ ≥ D + τ − q.
    const Constraint c2 = Constraint::ge(theta, s.tau + (D - q));
    const AffineExpr y2 = (theta + (q - D) - s.tau) * s.rho + s.sigma;
    out.push_back({{c2, Constraint::ge(AffineExpr(K), y2)},
                   flat ? zero
                        : SymStage{theta + (q - D) + (AffineExpr(K) - y2) * (1.0 / rp), AffineExpr(0.0), rp}});
    out.push_back({{c2, Constraint::ge(y2, AffineExpr(K))}, {theta + (q - D), y2 - K, rp}});
  }

  const SymStage cutoff{theta - D, AffineExpr(0.0), kInf};
  std::vector<SymMslc> result;

  Region root(beta.cons);
  std::vector<Constraint> raw = beta.cons;
  const Constraint lower = Constraint::ge(theta, AffineExpr(D));
  root.add(lower);
  raw.push_back(lower);
  if (opt.prune_box && root.empty()) return result;

  std::vector<SymStage> picked;
  std::function<void(std::size_t, const Region&, const std::vector<Constraint>&)> dfs =
      [&](std::size_t i, const Region& reg, const std::vector<Constraint>& plain) {
        if (i == cases.size()) {
          SymMslc s;
          s.D = D;
          s.stages = picked;
          s.stages.push_back(cutoff);
          s.cons = opt.prune_box ? reg.constraints() : plain;
          result.push_back(simplify(std::move(s)));
          return;
        }
        for (const auto& c : cases[i]) {
          Region next = reg;
          std::vector<Constraint> next_plain = plain;
          const std::size_t before = next.constraints().size();
          bool ok = true;
          for (const auto& k : c.cons) {
            next_plain.push_back(k);
            if (!next.add(k)) ok = false;
          }
          if (opt.prune_box && !ok) continue;
          if (opt.prune_lp && next.constraints().size() > before && !next.lp_feasible()) continue;
          picked.push_back(c.stage);
          dfs(i + 1, next, next_plain);
          picked.pop_back();
        }
      };
  dfs(0, root, raw);
  return result;
}

// ---------------------------------------------------------- delay / backlog

std::vector<CaseTerm> hdev_stage_cases(const ShapedArrival& alpha, const SymStage& s,
                                       const Region& region) {
  const double b = alpha.tb.b, r = alpha.tb.r, L = alpha.sh.L, Rp = alpha.sh.Rp;
  const double q = alpha.q(), K = alpha.K();
  const AffineExpr Kc(K);
  std::vector<CaseTerm> raw;

  // σ ≥ K: plateau at or above the inflection ordinate.
  if (r > 0.0) {
    raw.push_back({{Constraint::ge(s.sigma, Kc)}, s.tau - (s.sigma - b) * (1.0 / r)});
  } else {
    // Zero rate: the stage only binds when σ equals K exactly.
    raw.push_back({{Constraint::ge(s.sigma, Kc), Constraint::ge(Kc, s.sigma)}, s.tau});
    raw.push_back({{Constraint::ge(s.sigma, Kc + kTol)}, std::nullopt});
  }
  // σ ≤ K.
  if (std::isfinite(s.rho)) {
    if (s.rho > 0.0) {
      raw.push_back({{Constraint::ge(Kc, s.sigma)}, s.tau + (Kc - s.sigma) * (1.0 / s.rho) - q});
    } else {
      // A flat stage below K never serves the burst; only σ = K remains finite.
      raw.push_back({{Constraint::ge(Kc, s.sigma), Constraint::ge(s.sigma, Kc)}, s.tau - q});
    }
  } else if (std::isfinite(Rp)) {
    raw.push_back({{Constraint::ge(Kc, s.sigma), Constraint::ge(s.sigma, AffineExpr(L))},
                   s.tau - (s.sigma - L) * (1.0 / Rp)});
    raw.push_back({{Constraint::ge(Kc, s.sigma), Constraint::ge(AffineExpr(L), s.sigma)}, s.tau});
  } else {
    raw.push_back({{Constraint::ge(Kc, s.sigma)}, s.tau});
  }

  std::vector<CaseTerm> out;
  for (auto& c : raw) {
    CaseTerm kept{{}, c.term};
    bool refuted = false;
    for (const auto& k : c.cons) {
      if (region.provably_negative(k.lhs)) {
        refuted = true;
        break;
      }
      if (!region.provably_nonneg(k.lhs)) kept.cons.push_back(k);
    }
    if (!refuted) out.push_back(std::move(kept));
  }
  return out;
}

namespace {

int count_vars(const SymMslc& s) {
  int n = 0;
  for (const auto& st : s.stages) n = std::max({n, st.tau.nvars(), st.sigma.nvars()});
  for (const auto& c : s.cons) n = std::max(n, c.lhs.nvars());
  return n;
}

// LPs for min over θ of D + [max of terms]^+ on one case branch.
void emit_max_lps(double D, const std::vector<AffineExpr>& terms, const std::vector<Constraint>& cons,
                  int nvars, bool epigraph, bool with_zero, std::vector<LpInstance>& out) {
  if (epigraph) {
    LpInstance lp;
    lp.nvars = nvars + 1;
    lp.objective = AffineExpr::var(nvars) + D;
    lp.cons = cons;
    for (const auto& t : terms) lp.cons.push_back(Constraint::ge(AffineExpr::var(nvars), t));
    out.push_back(std::move(lp));
    return;
  }
  for (std::size_t k = 0; k < terms.size(); ++k) {
    LpInstance lp;
    lp.nvars = nvars;
    lp.objective = terms[k] + D;
    lp.cons = cons;
    if (with_zero) lp.cons.push_back({terms[k]});
    for (std::size_t l = 0; l < terms.size(); ++l)
      if (l != k) lp.cons.push_back(Constraint::ge(terms[k], terms[l]));
    out.push_back(std::move(lp));
  }
  if (with_zero) {
    LpInstance lp;
    lp.nvars = nvars;
    lp.objective = AffineExpr(D);
    lp.cons = cons;
    for (const auto& t : terms) lp.cons.push_back({-t});
    out.push_back(std::move(lp));
  }
}

}  // namespace

std::vector<LpInstance> sym_hdev_decompose(const ShapedArrival& alpha, const SymMslc& beta,
                                           const DecomposeOptions& opt) {
  check_shaped_rates(alpha, rate_skeleton(beta), "hdev");
  const int nvars = count_vars(beta);
  std::vector<LpInstance> out;
  std::vector<AffineExpr> terms;
  std::function<void(std::size_t, const Region&)> dfs = [&](std::size_t i, const Region& reg) {
    if (i == beta.stages.size()) {
      emit_max_lps(beta.D, terms, reg.constraints(), nvars, opt.epigraph, true, out);
      return;
    }
    for (const auto& c : hdev_stage_cases(alpha, beta.stages[i], reg)) {
      Region next = reg;
      bool ok = true;
      for (const auto& k : c.cons) ok = next.add(k) && ok;
      if (!ok) continue;
      if (c.term) terms.push_back(*c.term);
      dfs(i + 1, next);
      if (c.term) terms.pop_back();
    }
  };
  dfs(0, Region(beta.cons));
  return out;
}

std::vector<AffineExpr> vdev_terms(const TokenBucket& alpha, const SymMslc& beta) {
  std::vector<AffineExpr> terms;
  terms.emplace_back(alpha.b + beta.D * alpha.r);
  for (const auto& s : beta.stages)
    terms.push_back(AffineExpr(alpha.b) - s.sigma + (s.tau + beta.D) * alpha.r);
  return terms;
}

std::vector<LpInstance> sym_vdev_decompose(const TokenBucket& alpha, const SymMslc& beta,
                                           const DecomposeOptions& opt) {
  check_tb_rate(alpha.r, rate_skeleton(beta), "vdev");
  std::vector<LpInstance> out;
  emit_max_lps(0.0, vdev_terms(alpha, beta), beta.cons, count_vars(beta), opt.epigraph, false, out);
  return out;
}

}  // namespace nc

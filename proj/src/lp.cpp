#include "nc/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "nc/parallel.hpp"

namespace nc {

int LpInstance::num_vars() const {
  int n = std::max(nvars, objective.nvars());
  for (const auto& c : cons) n = std::max(n, c.lhs.nvars());
  return std::max(n, static_cast<int>(lower.size()));
}

namespace {

class Tableau {
 public:
  Tableau(int rows, int cols) : m_(rows), c_(cols), a_((rows + 1) * (cols + 1), 0.0), basis_(rows, -1) {}

  double& at(int i, int j) { return a_[i * (c_ + 1) + j]; }
  double at(int i, int j) const { return a_[i * (c_ + 1) + j]; }
  double& rhs(int i) { return at(i, c_); }
  // Row m_ holds reduced costs; its rhs cell holds minus the objective value.
  double& cost(int j) { return at(m_, j); }

  void pivot(int r, int e) {
    const double p = at(r, e);
    for (int j = 0; j <= c_; ++j) at(r, j) /= p;
    for (int i = 0; i <= m_; ++i) {
      if (i == r) continue;
      const double f = at(i, e);
      if (f == 0.0) continue;
      for (int j = 0; j <= c_; ++j) at(i, j) -= f * at(r, j);
      at(i, e) = 0.0;
    }
    basis_[r] = e;
  }

  int rows() const { return m_; }
  int cols() const { return c_; }
  std::vector<int>& basis() { return basis_; }

 private:
  int m_, c_;
  std::vector<double> a_;
  std::vector<int> basis_;
};

enum class Step { optimal, unbounded, capped };

// Runs simplex iterations on columns [0, eligible) until optimal.
Step iterate(Tableau& T, int eligible, const LpTolerances& tol, long& budget) {
  bool bland = false;
  int degenerate = 0;
  const int m = T.rows();
  for (;;) {
    if (budget-- <= 0) return Step::capped;
    int e = -1;
    double best = -tol.pivot;
    for (int j = 0; j < eligible; ++j) {
      const double d = T.cost(j);
      if (d < best) {
        e = j;
        if (bland) break;
        best = d;
      }
    }
    if (e < 0) return Step::optimal;
    int r = -1;
    double ratio = kInf;
    for (int i = 0; i < m; ++i) {
      const double a = T.at(i, e);
      if (a <= tol.pivot) continue;
      const double q = T.rhs(i) / a;
      if (q < ratio - 1e-12 ||
          (q <= ratio + 1e-12 && r >= 0 && T.basis()[i] < T.basis()[r])) {
        ratio = q;
        r = i;
      }
    }
    if (r < 0) return Step::unbounded;
    if (ratio <= 1e-12) {
      if (++degenerate > 20) bland = true;
    } else {
      degenerate = 0;
    }
    T.pivot(r, e);
  }
}

}  // namespace

LpSolution solve(const LpInstance& lp, const LpTolerances& tol) {
  const int n = lp.num_vars();
  const int m = static_cast<int>(lp.cons.size());
  std::vector<double> lb(n);
  for (int j = 0; j < n; ++j) lb[j] = lp.lower_bound(j);

  // Row i: a·y − s_i = rhs with x = lb + y, flipped so that rhs ≥ 0.
  std::vector<double> rhs(m);
  std::vector<char> needs_art(m, 0);
  int na = 0;
  for (int i = 0; i < m; ++i) {
    const auto& e = lp.cons[i].lhs;
    double shift = e.c0;
    for (int j = 0; j < n; ++j) shift += e.coeff(j) * lb[j];
    rhs[i] = -shift;
    if (rhs[i] > 0.0) needs_art[i] = 1, ++na;
  }
  const int cols = n + m + na;
  Tableau T(m, cols);
  int art = n + m;
  for (int i = 0; i < m; ++i) {
    const auto& e = lp.cons[i].lhs;
    if (needs_art[i]) {
      for (int j = 0; j < n; ++j) T.at(i, j) = e.coeff(j);
      T.at(i, n + i) = -1.0;
      T.at(i, art) = 1.0;
      T.rhs(i) = rhs[i];
      T.basis()[i] = art++;
    } else {
      for (int j = 0; j < n; ++j) T.at(i, j) = -e.coeff(j);
      T.at(i, n + i) = 1.0;
      T.rhs(i) = -rhs[i];
      T.basis()[i] = n + i;
    }
  }

  long budget = 10L * static_cast<long>(n + m) * static_cast<long>(n + m) + 50;
  LpSolution out;

  // Phase one: minimize the artificial sum.
  if (na > 0) {
    for (int j = n + m; j < cols; ++j) T.cost(j) = 1.0;
    for (int i = 0; i < m; ++i) {
      if (T.basis()[i] < n + m) continue;
      for (int j = 0; j <= cols; ++j) T.at(m, j) -= T.at(i, j);
    }
    const Step s = iterate(T, cols, tol, budget);
    if (s == Step::capped) return out;
    if (-T.at(m, cols) > tol.feasibility) {
      out.status = LpStatus::infeasible;
      return out;
    }
    // Pivot remaining zero-level artificials out where possible.
    for (int i = 0; i < m; ++i) {
      if (T.basis()[i] < n + m) continue;
      for (int j = 0; j < n + m; ++j) {
        if (std::abs(T.at(i, j)) > tol.pivot) {
          T.pivot(i, j);
          break;
        }
      }
    }
  }

  // Phase two on the structural and slack columns.
  for (int j = 0; j <= cols; ++j) T.at(m, j) = 0.0;
  for (int j = 0; j < n; ++j) T.cost(j) = lp.objective.coeff(j);
  for (int i = 0; i < m; ++i) {
    const int b = T.basis()[i];
    const double cb = b < n ? lp.objective.coeff(b) : 0.0;
    if (cb == 0.0) continue;
    for (int j = 0; j <= cols; ++j) T.at(m, j) -= cb * T.at(i, j);
  }
  const Step s = iterate(T, n + m, tol, budget);
  if (s == Step::capped) return out;
  if (s == Step::unbounded) {
    out.status = LpStatus::unbounded;
    out.value = -kInf;
    return out;
  }

  out.point = lb;
  for (int i = 0; i < m; ++i) {
    const int b = T.basis()[i];
    if (b < n) out.point[b] = lb[b] + T.rhs(i);
  }
  for (const auto& c : lp.cons) {
    double scale = 1.0 + std::abs(c.lhs.c0);
    for (int j = 0; j < n; ++j) scale += std::abs(c.lhs.coeff(j) * out.point[j]);
    if (c.lhs.eval(out.point) < -tol.feasibility * scale) return LpSolution{};
  }
  out.status = LpStatus::optimal;
  out.value = lp.objective.eval(out.point);
  return out;
}

bool lp_feasible(const std::vector<Constraint>& cons, int nvars) {
  LpInstance lp;
  lp.cons = cons;
  lp.nvars = nvars;
  const auto s = solve(lp);
  // A numeric breakdown is treated as feasible so that no branch is lost.
  return s.status != LpStatus::infeasible;
}

BranchMin min_over_branches(const std::vector<LpInstance>& lps, int workers) {
  if (lps.empty()) throw std::invalid_argument("min_over_branches: empty branch list");
  std::vector<LpSolution> sol(lps.size());
  parallel_for(lps.size(), workers, [&](std::size_t i) { sol[i] = solve(lps[i]); });
  BranchMin out;
  for (std::size_t i = 0; i < sol.size(); ++i) {
    switch (sol[i].status) {
      case LpStatus::optimal:
        ++out.solved;
        if (sol[i].value < out.value) {
          out.value = sol[i].value;
          out.argmin = i;
          out.point = sol[i].point;
        }
        break;
      case LpStatus::infeasible: ++out.infeasible; break;
      case LpStatus::unbounded:
        ++out.solved;
        out.value = -kInf;
        out.argmin = i;
        break;
      case LpStatus::failed: ++out.failed; break;
    }
  }
  if (out.solved == 0 && out.failed == 0)
    throw std::runtime_error("min_over_branches: every branch is infeasible");
  return out;
}

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::failed: return "failed";
  }
  return "?";
}

std::string to_lp_text(const LpInstance& lp, const std::vector<std::string>& names) {
  const int n = lp.num_vars();
  auto name = [&](int j) {
    return j < static_cast<int>(names.size()) ? names[j] : "t" + std::to_string(j);
  };
  auto linear = [&](const AffineExpr& e) {
    std::ostringstream os;
    bool first = true;
    for (int j = 0; j < n; ++j) {
      const double a = e.coeff(j);
      if (a == 0.0) continue;
      os << (a < 0 ? " - " : (first ? " " : " + ")) << std::abs(a) << " " << name(j);
      first = false;
    }
    if (first) os << " 0 " << name(0);
    return os.str();
  };
  std::ostringstream os;
  os.precision(17);
  os << "\\ constant objective offset: " << lp.objective.c0 << "\n";
  os << "Minimize\n obj:" << linear(lp.objective) << "\nSubject To\n";
  for (std::size_t i = 0; i < lp.cons.size(); ++i)
    os << " c" << i << ":" << linear(lp.cons[i].lhs) << " >= " << -lp.cons[i].lhs.c0 << "\n";
  os << "Bounds\n";
  for (int j = 0; j < n; ++j) os << " " << name(j) << " >= " << lp.lower_bound(j) << "\n";
  os << "End\n";
  return os.str();
}

}  // namespace nc

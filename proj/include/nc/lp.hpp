// Small dense linear programs over the θ-vector.
#pragma once

#include <string>
#include <vector>

#include "nc/symbolic.hpp"

namespace nc {

struct LpInstance {
  AffineExpr objective;              // minimized
  std::vector<Constraint> cons;      // each lhs ≥ 0
  std::vector<double> lower;         // per-variable lower bound, default 0
  int nvars = 0;                     // 0: inferred from the expressions

  int num_vars() const;
  double lower_bound(int j) const { return j < static_cast<int>(lower.size()) ? lower[j] : 0.0; }
};

enum class LpStatus { optimal, infeasible, unbounded, failed };

struct LpSolution {
  LpStatus status = LpStatus::failed;
  double value = kInf;
  std::vector<double> point;
};

struct LpTolerances {
  double pivot = 1e-9;
  double feasibility = 1e-7;
};

// Two-phase dense tableau simplex. Dantzig pricing with a switch to Bland's
// rule after repeated degenerate pivots; iteration cap 10·(vars+cons)².
LpSolution solve(const LpInstance& lp, const LpTolerances& tol = {});

// Phase one only.
bool lp_feasible(const std::vector<Constraint>& cons, int nvars = 0);

struct BranchMin {
  double value = kInf;
  std::size_t argmin = 0;
  std::vector<double> point;
  std::size_t solved = 0;
  std::size_t infeasible = 0;
  std::size_t failed = 0;
};

// Minimum over the feasible optima, solved with `workers` threads and reduced
// in index order so the result does not depend on scheduling.
BranchMin min_over_branches(const std::vector<LpInstance>& lps, int workers = 1);

// Debug dump in a CPLEX-like LP text format.
std::string to_lp_text(const LpInstance& lp, const std::vector<std::string>& names = {});

const char* to_string(LpStatus s);

}  // namespace nc

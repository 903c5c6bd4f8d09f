#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>

#include "qisdp/solver.hpp"

namespace qisdp {
namespace oracle {

struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OracleBudget {
  long max_points = 1000000;
};

struct BruteForceResult {
  double value = 0.0;
  Eigen::VectorXi argmin;
};

/// Exact integer optimum by full enumeration of the box.
BruteForceResult brute_force_opt(const QipInstance& inst,
                                 const OracleBudget& budget = {});

/// Dense check: min eigenvalue of Q - A'y >= -tol and every facet
/// multiplier <= tol.
bool check_dual_feasible(const Problem& p, const DualPoint& y, double tol);

/// Central finite difference of the barrier along one coordinate; h is
/// reduced (up to three times) when a perturbed point leaves the
/// positive definite region.
double finite_diff_gradient(const Problem& p, const DualPoint& y, double sigma,
                            CoordIndex coord, double h);

/// Reference coordinate selection scanning all m+1 coordinates; same
/// contract as select_coordinate.
std::optional<Selection> exhaustive_select(const Problem& p,
                                           const Eigen::MatrixXd& w,
                                           double sigma, const DualPoint& y,
                                           double tol);

}  // namespace oracle
}  // namespace qisdp

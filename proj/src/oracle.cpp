#include "qisdp/oracle.hpp"

#include <cmath>

namespace qisdp {
namespace oracle {

BruteForceResult brute_force_opt(const QipInstance& inst,
                                 const OracleBudget& budget) {
  const int n = inst.n();
  double points = 1.0;
  for (const auto& d : inst.domains()) points *= d.size();
  if (points > static_cast<double>(budget.max_points)) {
    throw BudgetExceeded("enumeration exceeds oracle budget");
  }

  Eigen::VectorXi x(n);
  for (int i = 0; i < n; ++i) x(i) = inst.domains()[i].lo;

  BruteForceResult best;
  best.value = objective_value(inst, x);
  best.argmin = x;
  for (;;) {
    int i = 0;
    while (i < n && x(i) == inst.domains()[i].hi) {
      x(i) = inst.domains()[i].lo;
      ++i;
    }
    if (i == n) break;
    ++x(i);
    const double v = objective_value(inst, x);
    if (v < best.value) {
      best.value = v;
      best.argmin = x;
    }
  }
  return best;
}

bool check_dual_feasible(const Problem& p, const DualPoint& y, double tol) {
  for (const auto& [c, v] : y.facet_y) {
    if (v > tol) return false;
  }
  return min_eigenvalue(slack_matrix(p, y)) >= -tol;
}

double finite_diff_gradient(const Problem& p, const DualPoint& y, double sigma,
                            CoordIndex coord, double h) {
  for (int attempt = 0; attempt <= 3; ++attempt, h /= 10.0) {
    DualPoint up = y, down = y;
    up.add(coord, h);
    down.add(coord, -h);
    try {
      return (barrier_value(p, up, sigma) - barrier_value(p, down, sigma)) /
             (2.0 * h);
    } catch (const InfeasibleState&) {
      // shrink h and retry
    }
  }
  throw InfeasibleState("finite difference: perturbed points infeasible");
}

std::optional<Selection> exhaustive_select(const Problem& p,
                                           const Eigen::MatrixXd& w,
                                           double sigma, const DualPoint& y,
                                           double tol) {
  std::optional<Selection> best;
  auto consider = [&](CoordIndex c) {
    const double g = gradient_entry(p.matrix(c), w, sigma);
    const bool eligible =
        c.is_zero() ? g != 0.0 : (g > 0.0 && y.value(c) < 0.0) || g < 0.0;
    if (!eligible || std::abs(g) <= tol) return;
    if (!best || std::abs(g) > std::abs(best->grad)) best = Selection{c, g};
  };
  consider(CoordIndex::zero());
  for (int i = 1; i <= p.n(); ++i) {
    const IntRange& d = p.instance().domain(i);
    for (int j = d.lo; j <= d.hi; ++j) consider(CoordIndex::facet(i, j));
  }
  return best;
}

}  // namespace oracle
}  // namespace qisdp

#pragma once

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qisdp/linalg.hpp"
#include "qisdp/model.hpp"

namespace qisdp {

struct NumericalBreakdown : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleState : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dual iterate: the free multiplier y0 and the nonzero facet multipliers
/// (all <= 0). Entries absent from the map are zero.
struct DualPoint {
  double y0 = 0.0;
  std::map<CoordIndex, double> facet_y;

  double value(CoordIndex c) const {
    if (c.is_zero()) return y0;
    auto it = facet_y.find(c);
    return it == facet_y.end() ? 0.0 : it->second;
  }

  void add(CoordIndex c, double s) {
    if (c.is_zero()) {
      y0 += s;
      return;
    }
    const double v = value(c) + s;
    if (v == 0.0) {
      facet_y.erase(c);
    } else {
      facet_y[c] = v;
    }
  }

  /// <b, y> with b the all-ones vector.
  double bound() const {
    double sum = y0;
    for (const auto& [c, v] : facet_y) sum += v;
    return sum;
  }
};

enum class Algorithm { CD, CD2D };

enum class TerminationReason { MaxIters, TargetReached, Converged };

std::string to_string(TerminationReason reason);
std::string to_string(CoordIndex coord);

struct TraceRecord {
  long iter = 0;
  double elapsed_s = 0.0;
  CoordIndex coord;
  double step_s = 0.0;
  double step_s0 = 0.0;  // only nonzero for CD2D pair steps
  double sigma = 0.0;
  double grad = 0.0;
  double bound = 0.0;
  double barrier = 0.0;
};

/// One line per record; header
/// iter,elapsed_s,coordinate,step_s,step_s0,sigma,grad,bound,barrier
/// with the coordinate encoded as "0" or "i:j".
std::string trace_to_csv(const std::vector<TraceRecord>& trace);

struct StepInfo {
  CoordIndex coord;
  double s = 0.0;
  double s0 = 0.0;
  bool clamped = false;
  bool two_dim = false;
  double sigma = 0.0;
  /// Directional gradients evaluated at the accepted step.
  double resid_s = 0.0;
  double resid_s0 = 0.0;
};

struct SolverConfig {
  double sigma0 = 1.0;
  double sigma_shrink = 0.25;
  double grad_threshold = 0.01;
  double sigma_min = 1e-5;
  long max_iters = 0;  // 0: 50 * n * (average domain size)
  std::optional<double> bound_target;
  Algorithm algorithm = Algorithm::CD;
  int refresh_period = 500;
  double stationarity_tol = 1e-7;
  int improvement_window = 100;
  double improvement_rel_tol = 1e-8;
  /// When positive, run a dense feasibility check every this many
  /// iterations; violations are counted in the result.
  int debug_check_every = 0;
  /// Observation hook, invoked after every accepted step.
  std::function<void(const StepInfo&)> step_hook;
};

struct SolverState {
  const Problem* problem = nullptr;
  DualPoint y;
  Eigen::MatrixXd w;      // (Q - A'y)^-1, maintained incrementally
  Eigen::MatrixXd slack;  // Q - A'y itself, kept in sync for drift checks
  double sigma = 1.0;
  long iter = 0;
  double bound = 0.0;
  double logdet = 0.0;  // log det(Q - A'y)
  std::vector<TraceRecord> trace;

  double barrier() const { return bound + sigma * logdet; }
};

struct SolveResult {
  double bound = 0.0;
  DualPoint y;
  std::vector<TraceRecord> trace;
  TerminationReason reason = TerminationReason::MaxIters;
  long iters = 0;
  double elapsed_s = 0.0;
  /// Variables with more than two facet multipliers below -1e-4 at
  /// termination (near-sparsity diagnostic; reported, not enforced).
  int active_set_excess = 0;
  double max_refresh_residual = 0.0;
  int feasibility_violations = 0;
};

/// Q - A'y, assembled densely.
Eigen::MatrixXd slack_matrix(const Problem& p, const DualPoint& y);

/// Feasible starting point: y = 0 when Q is safely positive definite,
/// otherwise the shifted construction placing min(lambda_min(Qhat)-1, 0)
/// on every upper facet.
DualPoint initial_point(const Problem& p);

/// <b,y> + sigma log det(Q - A'y), via dense factorization. Throws
/// InfeasibleState when the slack matrix is not positive definite.
double barrier_value(const Problem& p, const DualPoint& y, double sigma);

inline double gradient_entry(const ConstraintMatrix& cm,
                             const Eigen::MatrixXd& w, double sigma) {
  return 1.0 - sigma * inner_with(cm, w);
}

struct Selection {
  CoordIndex coord;
  double grad = 0.0;
};

/// Argmax of |gradient| over the eligible candidate set: coordinate 0,
/// at most four facets per variable (domain endpoints, rounded vertex,
/// upper facet), and every coordinate with a negative multiplier.
/// Eligible means (grad > 0 and y < 0) or grad < 0; coordinate 0 needs
/// only grad != 0. Ties go to the first coordinate in canonical order.
std::optional<Selection> select_coordinate(const Problem& p,
                                           const Eigen::MatrixXd& w,
                                           double sigma, const DualPoint& y,
                                           double tol);

struct LineStep {
  double s = 0.0;
  bool clamped = false;
};

/// Exact maximizer of s -> f(y + s e) inside the positive definite
/// window, clamped at -y_coord for facet coordinates. Pass y_coord = 0
/// for coordinate 0.
LineStep line_search_1d(const Eigen::MatrixXd& w, double sigma,
                        const ConstraintMatrix& cm, double y_coord);

/// d/ds f(y + s e) at step s, in closed form.
double directional_gradient(const Eigen::MatrixXd& w, double sigma,
                            const ConstraintMatrix& cm, double s);

struct PlaneStep {
  double s0 = 0.0;
  double s = 0.0;
  bool clamped = false;
};

/// Joint maximizer over (s0, s) of f(y + s0 e_0 + s e_coord); cm must be
/// a facet matrix. When the sign constraint binds, s is fixed at
/// -y_coord and s0 re-optimized.
PlaneStep plane_search_2d(const Eigen::MatrixXd& w, double sigma,
                          const ConstraintMatrix& cm, double y_coord);

/// Both partial gradients of f(y + s0 e_0 + s e_coord) at (s0, s).
Eigen::Vector2d plane_gradient(const Eigen::MatrixXd& w, double sigma,
                               const ConstraintMatrix& cm, double s0,
                               double s);

/// Moves y along the coordinate(s), updates W by a Woodbury downdate and
/// the running bound/logdet. O(n^2). Returns the slack determinant ratio
/// of the update; values near zero flag an ill-conditioned step.
double apply_step(SolverState& st, CoordIndex coord, double s,
                  std::optional<double> s0 = std::nullopt);

/// sigma <- max(sigma_shrink * sigma, sigma_min) once the selected
/// gradient entry drops below the threshold.
void sigma_update(SolverState& st, double selected_grad,
                  const SolverConfig& cfg);

SolveResult solve(const QipInstance& inst, const SolverConfig& cfg = {});
SolveResult solve(const Problem& p, const SolverConfig& cfg = {});

}  // namespace qisdp

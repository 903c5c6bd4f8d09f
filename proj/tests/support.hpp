#pragma once

#include <random>

#include "qisdp/oracle.hpp"
#include "qisdp/solver.hpp"

namespace qisdp::testing {

/// Random instance with dense Qhat and domains of width up to max_width.
inline QipInstance random_instance(std::mt19937_64& rng, int n,
                                   int max_width = 2) {
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::uniform_int_distribution<int> lo_dist(-4, 3);
  std::uniform_int_distribution<int> width_dist(1, max_width);
  Eigen::MatrixXd q(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c <= r; ++c) {
      q(r, c) = q(c, r) = sym(rng);
    }
  }
  Eigen::VectorXd l(n);
  for (int r = 0; r < n; ++r) l(r) = sym(rng);
  std::vector<IntRange> domains;
  for (int i = 0; i < n; ++i) {
    const int lo = lo_dist(rng);
    domains.push_back({lo, lo + width_dist(rng)});
  }
  return QipInstance(q, l, sym(rng), domains);
}

struct FeasibleState {
  Problem problem;
  DualPoint y;
  Eigen::MatrixXd w;
  double sigma;
};

/// Feasible dual state away from the starting point: run a handful of
/// damped exact coordinate steps from the feasible start.
inline FeasibleState random_state(std::mt19937_64& rng, int n,
                                  int max_width = 2) {
  FeasibleState st{Problem(random_instance(rng, n, max_width)), {}, {}, 1.0};
  const double sigmas[] = {1.0, 0.25, 0.0625, 1e-2};
  st.sigma = sigmas[std::uniform_int_distribution<int>(0, 3)(rng)];
  st.y = initial_point(st.problem);

  SolverState run;
  run.problem = &st.problem;
  run.y = st.y;
  run.w = slack_matrix(st.problem, st.y).inverse();
  std::uniform_int_distribution<int> nsteps(0, 25);
  std::uniform_real_distribution<double> damp(0.2, 0.9);
  const int steps = nsteps(rng);
  for (int k = 0; k < steps; ++k) {
    const auto sel =
        select_coordinate(st.problem, run.w, st.sigma, run.y, 1e-9);
    if (!sel) break;
    const auto cm = st.problem.matrix(sel->coord);
    const auto ls =
        line_search_1d(run.w, st.sigma, cm, run.y.value(sel->coord));
    apply_step(run, sel->coord, damp(rng) * ls.s);
  }
  st.y = run.y;
  st.w = slack_matrix(st.problem, st.y).inverse();
  st.w = ((st.w + st.w.transpose()) / 2.0).eval();
  return st;
}

}  // namespace qisdp::testing

#include "qisdp/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace qisdp {

std::string to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::MaxIters:
      return "max_iters";
    case TerminationReason::TargetReached:
      return "target";
    case TerminationReason::Converged:
      return "converged";
  }
  return "unknown";
}

std::string to_string(CoordIndex coord) {
  if (coord.is_zero()) return "0";
  return std::to_string(coord.i) + ":" + std::to_string(coord.j);
}

std::string trace_to_csv(const std::vector<TraceRecord>& trace) {
  std::ostringstream out;
  out << "iter,elapsed_s,coordinate,step_s,step_s0,sigma,grad,bound,barrier\n";
  char buf[256];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof(buf),
                  "%ld,%.6f,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.iter,
                  r.elapsed_s, to_string(r.coord).c_str(), r.step_s, r.step_s0,
                  r.sigma, r.grad, r.bound, r.barrier);
    out << buf;
  }
  return out.str();
}

Eigen::MatrixXd slack_matrix(const Problem& p, const DualPoint& y) {
  Eigen::MatrixXd s = p.q();
  s(0, 0) -= y.y0;
  for (const auto& [c, v] : y.facet_y) {
    const ConstraintMatrix cm = p.matrix(c);
    s(0, 0) -= v * cm.a00;
    s(0, cm.i) -= v * cm.a0i;
    s(cm.i, 0) -= v * cm.a0i;
    s(cm.i, cm.i) -= v * cm.aii;
  }
  return s;
}

DualPoint initial_point(const Problem& p) {
  const Eigen::MatrixXd& q = p.q();
  const double scale = q.cwiseAbs().maxCoeff();
  DualPoint y;
  if (min_eigenvalue(q) > 1e-8 * (1.0 + scale)) return y;

  const QipInstance& inst = p.instance();
  const int n = inst.n();
  const double ytil = std::min(min_eigenvalue(inst.qhat()) - 1.0, 0.0);

  double sum_lu = 0.0;
  Eigen::VectorXd a(n);
  for (int i = 1; i <= n; ++i) {
    const IntRange& d = inst.domain(i);
    sum_lu += 1.0 + static_cast<double>(d.lo) * d.hi;
    a(i - 1) = -(d.lo + d.hi) / 2.0;
  }
  const Eigen::VectorXd v = inst.lhat() / 2.0 - ytil * a;
  y.y0 = inst.chat() - ytil * sum_lu - 1.0 - v.squaredNorm();
  if (ytil != 0.0) {
    for (int i = 1; i <= n; ++i) {
      y.facet_y[CoordIndex::facet(i, inst.domain(i).hi)] = ytil;
    }
  }
  if (min_eigenvalue(slack_matrix(p, y)) <= 0.0) {
    throw std::logic_error("starting point construction lost definiteness");
  }
  return y;
}

double barrier_value(const Problem& p, const DualPoint& y, double sigma) {
  const auto logdet = cholesky_logdet(slack_matrix(p, y));
  if (!logdet) throw InfeasibleState("slack matrix not positive definite");
  return y.bound() + sigma * *logdet;
}

namespace {

/// trace(M K) and det(M) det(K) for the 2x2 reduction of a coordinate.
struct Reduction {
  double t = 0.0;
  double d = 0.0;
  bool rank_one = false;
};

Reduction reduce(const Eigen::MatrixXd& w, const ConstraintMatrix& cm) {
  Reduction r;
  if (cm.i == 0) {
    r.t = w(0, 0);
    r.rank_one = true;
    return r;
  }
  const int i = cm.i;
  r.t = cm.a00 * w(0, 0) + 2.0 * cm.a0i * w(0, i) + cm.aii * w(i, i);
  const double det_m = cm.a00 * cm.aii - cm.a0i * cm.a0i;
  const double det_k = w(0, 0) * w(i, i) - w(0, i) * w(0, i);
  r.d = det_m * det_k;
  r.rank_one = std::abs(det_m) < 1e-12;
  return r;
}

}  // namespace

double directional_gradient(const Eigen::MatrixXd& w, double sigma,
                            const ConstraintMatrix& cm, double s) {
  const Reduction r = reduce(w, cm);
  const double denom = 1.0 - s * r.t + s * s * r.d;
  return 1.0 - sigma * (r.t - 2.0 * s * r.d) / denom;
}

std::optional<Selection> select_coordinate(const Problem& p,
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

  // per-variable support of the current multiplier vector
  std::vector<std::vector<int>> support(p.n() + 1);
  for (const auto& [c, v] : y.facet_y) support[c.i].push_back(c.j);

  for (int i = 1; i <= p.n(); ++i) {
    const IntRange& d = p.instance().domain(i);
    std::vector<int> js;
    js.push_back(d.lo);
    if (d.hi - 1 != d.lo) js.push_back(d.hi - 1);
    // rounded vertex of the lower-facet gradient parabola, half toward -inf
    const double x = w(i, 0) / w(0, 0) - 0.5;
    const long jstar = static_cast<long>(std::ceil(x - 0.5));
    if (jstar >= d.lo && jstar <= d.hi - 1) js.push_back(static_cast<int>(jstar));
    js.push_back(d.hi);
    js.insert(js.end(), support[i].begin(), support[i].end());
    std::sort(js.begin(), js.end());
    js.erase(std::unique(js.begin(), js.end()), js.end());
    for (int j : js) consider(CoordIndex::facet(i, j));
  }
  return best;
}

LineStep line_search_1d(const Eigen::MatrixXd& w, double sigma,
                        const ConstraintMatrix& cm, double y_coord) {
  const Reduction r = reduce(w, cm);
  double s;
  if (r.rank_one) {
    if (!(r.t > 0.0)) {
      throw NumericalBreakdown("rank-one line search: g'Wg not positive");
    }
    s = 1.0 / r.t - sigma;
  } else {
    // stationarity: d s^2 + (2 sigma d - t) s + (1 - sigma t) = 0
    const double a = r.d;
    const double b = 2.0 * sigma * r.d - r.t;
    const double c = 1.0 - sigma * r.t;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) {
      throw NumericalBreakdown("line search: no real stationary point");
    }
    const double sq = std::sqrt(disc);
    const double qq = -(b + (b >= 0 ? sq : -sq)) / 2.0;
    double roots[2];
    int nroots = 0;
    if (std::abs(a) > 1e-300) roots[nroots++] = qq / a;
    if (std::abs(qq) > 1e-300) roots[nroots++] = c / qq;
    const StepWindow win = pd_window(w, cm);
    double inside[2];
    int ninside = 0;
    for (int k = 0; k < nroots; ++k) {
      if (win.contains(roots[k])) inside[ninside++] = roots[k];
    }
    if (ninside == 0) {
      throw NumericalBreakdown("line search: no stationary point in window");
    }
    s = inside[0];
    if (ninside == 2) {
      // near-degenerate; keep the root on the ascent side
      if ((c > 0) != (inside[0] > 0) && (c > 0) == (inside[1] > 0)) {
        s = inside[1];
      }
    }
    // Newton polish on the stationarity residual
    for (int it = 0; it < 4; ++it) {
      const double q = 1.0 - s * r.t + s * s * r.d;
      const double num = r.t - 2.0 * s * r.d;
      const double g = 1.0 - sigma * num / q;
      if (std::abs(g) <= 1e-9 * (1.0 + sigma)) break;
      const double dg = -sigma * (num * num - 2.0 * r.d * q) / (q * q);
      if (dg == 0.0) break;
      const double s_next = s - g / dg;
      if (!win.contains(s_next)) break;
      s = s_next;
    }
  }
  LineStep step{s, false};
  if (cm.i != 0 && s > -y_coord) {
    step.s = -y_coord;
    step.clamped = true;
  }
  return step;
}

namespace {

/// 2x2 block of (Q - A'y)^-1 after the (s0, s) downdate: inverse of
/// P = K^-1 - s0 E00 - s M.
Eigen::Matrix2d plane_pivot(const Eigen::MatrixXd& w,
                            const ConstraintMatrix& cm, double s0, double s) {
  const int i = cm.i;
  Eigen::Matrix2d k;
  k << w(0, 0), w(0, i), w(0, i), w(i, i);
  Eigen::Matrix2d p = k.inverse();
  p(0, 0) -= s0 + s * cm.a00;
  p(0, 1) -= s * cm.a0i;
  p(1, 0) -= s * cm.a0i;
  p(1, 1) -= s * cm.aii;
  return p;
}

}  // namespace

Eigen::Vector2d plane_gradient(const Eigen::MatrixXd& w, double sigma,
                               const ConstraintMatrix& cm, double s0,
                               double s) {
  const Eigen::Matrix2d h = plane_pivot(w, cm, s0, s).inverse();
  return {1.0 - sigma * h(0, 0),
          1.0 - sigma * (cm.a00 * h(0, 0) + 2.0 * cm.a0i * h(0, 1) +
                         cm.aii * h(1, 1))};
}

PlaneStep plane_search_2d(const Eigen::MatrixXd& w, double sigma,
                          const ConstraintMatrix& cm, double y_coord) {
  const int i = cm.i;
  if (i == 0) throw std::logic_error("plane search needs a facet coordinate");
  Eigen::Matrix2d k;
  k << w(0, 0), w(0, i), w(0, i), w(i, i);
  const Eigen::Matrix2d kinv = k.inverse();
  const double k00 = kinv(0, 0), k0i = kinv(0, 1), kii = kinv(1, 1);
  const double a00 = cm.a00, a0i = cm.a0i, aii = cm.aii;

  // Setting both partial gradients to zero forces the linear relation
  // s0 = alpha + beta s; substitution leaves one quadratic in s.
  const double alpha = (aii * k00 - 2.0 * a0i * k0i + (a00 - 1.0) * kii) / aii;
  const double beta = (2.0 * a0i * a0i - aii * (2.0 * a00 - 1.0)) / aii;
  const double pa = k00 - alpha;
  const double pb = beta + a00;
  const double qa = pb * aii - a0i * a0i;
  const double qb = -pa * aii - pb * kii + 2.0 * a0i * k0i + sigma * aii;
  const double qc = pa * kii - k0i * k0i - sigma * kii;

  double roots[2];
  int nroots = 0;
  if (std::abs(qa) < 1e-14 * (1.0 + std::abs(qb) + std::abs(qc))) {
    if (qb == 0.0) throw NumericalBreakdown("plane search: degenerate system");
    roots[nroots++] = -qc / qb;
  } else {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc < 0.0) {
      throw NumericalBreakdown("plane search: no real stationary point");
    }
    const double sq = std::sqrt(disc);
    const double qq = -(qb + (qb >= 0 ? sq : -sq)) / 2.0;
    if (std::abs(qa) > 0.0) roots[nroots++] = qq / qa;
    if (std::abs(qq) > 0.0) roots[nroots++] = qc / qq;
  }

  PlaneStep best;
  bool found = false;
  for (int r = 0; r < nroots; ++r) {
    const double s = roots[r];
    const double s0 = alpha + beta * s;
    const Eigen::Matrix2d p = plane_pivot(w, cm, s0, s);
    if (p(0, 0) > 0.0 && p.determinant() > 0.0) {
      best = PlaneStep{s0, s, false};
      found = true;
      break;
    }
  }
  if (!found) {
    throw NumericalBreakdown("plane search: no stationary point in PD cone");
  }

  // Newton polish of the 2x2 stationarity system
  const Eigen::Matrix2d m1 = cm.block();
  for (int it = 0; it < 4; ++it) {
    const Eigen::Matrix2d p = plane_pivot(w, cm, best.s0, best.s);
    if (!(p(0, 0) > 0.0 && p.determinant() > 0.0)) break;
    const Eigen::Matrix2d h = p.inverse();
    const Eigen::Vector2d g(
        1.0 - sigma * h(0, 0),
        1.0 - sigma * (a00 * h(0, 0) + 2.0 * a0i * h(0, 1) + aii * h(1, 1)));
    if (g.cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + sigma)) break;
    const Eigen::Matrix2d he = h.col(0) * h.row(0);  // H E00 H
    const Eigen::Matrix2d hm = h * m1 * h;
    auto pair_m = [&](const Eigen::Matrix2d& x) {
      return a00 * x(0, 0) + 2.0 * a0i * x(0, 1) + aii * x(1, 1);
    };
    Eigen::Matrix2d jac;
    jac << -sigma * he(0, 0), -sigma * hm(0, 0), -sigma * pair_m(he),
        -sigma * pair_m(hm);
    if (std::abs(jac.determinant()) < 1e-300) break;
    const Eigen::Vector2d delta = jac.inverse() * g;
    const double s0_next = best.s0 - delta(0);
    const double s_next = best.s - delta(1);
    const Eigen::Matrix2d pn = plane_pivot(w, cm, s0_next, s_next);
    if (!(pn(0, 0) > 0.0 && pn.determinant() > 0.0)) break;
    best.s0 = s0_next;
    best.s = s_next;
  }

  if (best.s > -y_coord) {
    // Sign constraint binds: fix s, re-optimize the free coordinate.
    const double s = -y_coord;
    const double p11 = kii - s * aii;
    if (!(p11 > 0.0)) {
      throw NumericalBreakdown("plane search: clamped pivot not positive");
    }
    const double p01 = k0i - s * a0i;
    const double p00 = sigma + p01 * p01 / p11;
    best = PlaneStep{k00 - s * a00 - p00, s, true};
    // polish the free coordinate
    for (int it = 0; it < 3; ++it) {
      const Eigen::Matrix2d h = plane_pivot(w, cm, best.s0, best.s).inverse();
      const double g0 = 1.0 - sigma * h(0, 0);
      if (std::abs(g0) <= 1e-10 * (1.0 + sigma)) break;
      const double dg0 = -sigma * h(0, 0) * h(0, 0);
      best.s0 -= g0 / dg0;
    }
  }
  return best;
}

double apply_step(SolverState& st, CoordIndex coord, double s,
                  std::optional<double> s0) {
  double det_ratio;
  if (coord.is_zero()) {
    det_ratio = woodbury_apply(st.w, UpdateSpec::coord_zero(s));
  } else {
    const ConstraintMatrix cm = st.problem->matrix(coord);
    Eigen::Matrix2d m = s * cm.block();
    if (s0) m(0, 0) += *s0;
    det_ratio = woodbury_apply(st.w, UpdateSpec::rank_two(cm.i, m));
  }
  st.y.add(coord, s);
  st.bound += s;
  if (s0 && !coord.is_zero()) {
    st.y.add(CoordIndex::zero(), *s0);
    st.bound += *s0;
  }
  if (st.slack.rows() == st.w.rows()) {
    if (coord.is_zero()) {
      st.slack(0, 0) -= s;
    } else {
      const ConstraintMatrix cm = st.problem->matrix(coord);
      st.slack(0, 0) -= s * cm.a00 + (s0 ? *s0 : 0.0);
      st.slack(0, cm.i) -= s * cm.a0i;
      st.slack(cm.i, 0) -= s * cm.a0i;
      st.slack(cm.i, cm.i) -= s * cm.aii;
    }
  }
  st.logdet += std::log(det_ratio);
  ++st.iter;
  return det_ratio;
}

void sigma_update(SolverState& st, double selected_grad,
                  const SolverConfig& cfg) {
  if (std::abs(selected_grad) < cfg.grad_threshold) {
    st.sigma = std::max(st.sigma * cfg.sigma_shrink, cfg.sigma_min);
  }
}

namespace {

double refresh_dense(const Problem& p, SolverState& st) {
  const Eigen::MatrixXd s = slack_matrix(p, st.y);
  const int d = p.dim();
  const double resid =
      st.w.rows() == d
          ? (s * st.w - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff()
          : 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) {
    throw NumericalBreakdown("refresh: slack matrix lost definiteness");
  }
  st.w = llt.solve(Eigen::MatrixXd::Identity(d, d));
  st.w = ((st.w + st.w.transpose()) / 2.0).eval();
  st.logdet =
      2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  st.slack = s;
  return resid;
}

std::string diagnostic(const SolverState& st, const char* what) {
  std::ostringstream out;
  out << what << " (iter=" << st.iter << " sigma=" << st.sigma
      << " bound=" << st.bound << " logdet=" << st.logdet << ")";
  return out.str();
}

}  // namespace

SolveResult solve(const QipInstance& inst, const SolverConfig& cfg) {
  return solve(Problem(inst), cfg);
}

SolveResult solve(const Problem& p, const SolverConfig& cfg) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double>(clock::now() - t0).count();
  };

  SolverState st;
  st.problem = &p;
  st.y = initial_point(p);
  st.sigma = cfg.sigma0;
  st.bound = st.y.bound();
  refresh_dense(p, st);  // dense W^(0) and log det

  SolveResult res;
  res.reason = TerminationReason::MaxIters;
  double best_bound = st.bound;
  DualPoint best_y = st.y;
  std::vector<double> best_history{best_bound};

  const long max_iters =
      cfg.max_iters > 0 ? cfg.max_iters
                        : 50L * static_cast<long>(p.num_coords() - 1);
  const double sigma_floor = cfg.sigma_min * (1.0 + 1e-12);
  int steps_since_refresh = 0;

  for (long k = 0; k < max_iters; ++k) {
    const auto sel =
        select_coordinate(p, st.w, st.sigma, st.y, cfg.stationarity_tol);
    if (!sel) {
      if (st.sigma <= sigma_floor) {
        res.reason = TerminationReason::Converged;
        break;
      }
      st.sigma = std::max(st.sigma * cfg.sigma_shrink, cfg.sigma_min);
      continue;
    }

    const ConstraintMatrix cm = p.matrix(sel->coord);
    const double y_coord = st.y.value(sel->coord);
    StepInfo info;
    info.coord = sel->coord;
    info.sigma = st.sigma;

    bool refreshed_retry = false;
    for (;;) {
      try {
        if (cfg.algorithm == Algorithm::CD2D && !sel->coord.is_zero()) {
          const PlaneStep ps = plane_search_2d(st.w, st.sigma, cm, y_coord);
          info.s = ps.s;
          info.s0 = ps.s0;
          info.clamped = ps.clamped;
          info.two_dim = true;
          const Eigen::Vector2d g =
              plane_gradient(st.w, st.sigma, cm, ps.s0, ps.s);
          info.resid_s0 = g(0);
          info.resid_s = g(1);
          apply_step(st, sel->coord, ps.s, ps.s0);
        } else {
          const LineStep ls = line_search_1d(st.w, st.sigma, cm, y_coord);
          info.s = ls.s;
          info.clamped = ls.clamped;
          info.resid_s = directional_gradient(st.w, st.sigma, cm, ls.s);
          apply_step(st, sel->coord, ls.s);
        }
        break;
      } catch (const std::runtime_error& e) {
        if (refreshed_retry) {
          throw NumericalBreakdown(diagnostic(st, e.what()));
        }
        refreshed_retry = true;
        res.max_refresh_residual =
            std::max(res.max_refresh_residual, refresh_dense(p, st));
        steps_since_refresh = 0;
      }
    }

    // drift control: probe the residual on the touched columns after every
    // update; an ill-conditioned downdate shows up here immediately and we
    // rebuild W before it is used again
    const int d = p.dim();
    double col_resid =
        (st.slack * st.w.col(0) - Eigen::VectorXd::Unit(d, 0))
            .cwiseAbs()
            .maxCoeff();
    if (cm.i != 0) {
      col_resid = std::max(
          col_resid, (st.slack * st.w.col(cm.i) - Eigen::VectorXd::Unit(d, cm.i))
                         .cwiseAbs()
                         .maxCoeff());
    }
    if (col_resid > 5e-8) {
      refresh_dense(p, st);
      steps_since_refresh = 0;
    }

    st.trace.push_back({st.iter, elapsed(), sel->coord, info.s, info.s0,
                        st.sigma, sel->grad, st.bound, st.barrier()});
    if (cfg.step_hook) cfg.step_hook(info);

    if (st.bound > best_bound) {
      best_bound = st.bound;
      best_y = st.y;
    }
    best_history.push_back(best_bound);

    sigma_update(st, sel->grad, cfg);

    if (cfg.bound_target && st.bound >= *cfg.bound_target) {
      res.reason = TerminationReason::TargetReached;
      break;
    }

    if (++steps_since_refresh >= cfg.refresh_period) {
      res.max_refresh_residual =
          std::max(res.max_refresh_residual, refresh_dense(p, st));
      steps_since_refresh = 0;
    }

    if (cfg.debug_check_every > 0 && st.iter % cfg.debug_check_every == 0) {
      bool ok = min_eigenvalue(slack_matrix(p, st.y)) > 0.0;
      for (const auto& [c, v] : st.y.facet_y) ok = ok && v <= 0.0;
      if (!ok) ++res.feasibility_violations;
    }

    if (st.sigma <= sigma_floor &&
        static_cast<long>(best_history.size()) > cfg.improvement_window) {
      const double then =
          best_history[best_history.size() - 1 - cfg.improvement_window];
      if (best_bound - then <=
          cfg.improvement_rel_tol * (1.0 + std::abs(best_bound))) {
        res.reason = TerminationReason::Converged;
        break;
      }
    }
  }

  // final checkpoint: reconstruction residual of the incremental inverse
  res.max_refresh_residual =
      std::max(res.max_refresh_residual, refresh_dense(p, st));

  std::vector<int> deep(p.n() + 1, 0);
  for (const auto& [c, v] : best_y.facet_y) {
    if (v < -1e-4) ++deep[c.i];
  }
  for (int i = 1; i <= p.n(); ++i) {
    if (deep[i] > 2) ++res.active_set_excess;
  }

  res.bound = best_bound;
  res.y = std::move(best_y);
  res.trace = std::move(st.trace);
  res.iters = st.iter;
  res.elapsed_s = elapsed();
  return res;
}

}  // namespace qisdp

#include "qisdp/linalg.hpp"

#include <cmath>

namespace qisdp {

std::optional<double> cholesky_logdet(const Eigen::MatrixXd& s) {
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) return std::nullopt;
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

double min_eigenvalue(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

namespace {

Eigen::Matrix2d corner_block(const Eigen::MatrixXd& w, int i) {
  Eigen::Matrix2d k;
  k << w(0, 0), w(0, i), w(0, i), w(i, i);
  return k;
}

}  // namespace

double woodbury_apply(Eigen::MatrixXd& w, const UpdateSpec& u) {
  const int d = static_cast<int>(w.rows());
  if (u.rank_one) {
    const int i = u.i;
    Eigen::VectorXd wg = w.col(0) * u.g(0);
    if (i > 0) wg += w.col(i) * u.g(1);
    const double quad = u.g(0) * u.g(0) * w(0, 0) +
                        (i > 0 ? 2.0 * u.g(0) * u.g(1) * w(0, i) +
                                     u.g(1) * u.g(1) * w(i, i)
                               : 0.0);
    const double denom = 1.0 - u.theta * quad;
    if (!(denom > 1e-14)) {
      throw UpdateSingular("rank-one update pivot not positive");
    }
    w.noalias() += (u.theta / denom) * (wg * wg.transpose());
    w = ((w + w.transpose()) / 2.0).eval();
    return denom;
  }

  const int i = u.i;
  if (i <= 0 || i >= d) throw UpdateSingular("rank-two update index invalid");
  Eigen::MatrixXd wu(d, 2);
  wu.col(0) = w.col(0);
  wu.col(1) = w.col(i);
  const Eigen::Matrix2d k = corner_block(w, i);
  const Eigen::Matrix2d c = Eigen::Matrix2d::Identity() - k * u.m;
  const double det = c.determinant();
  if (!(det > 1e-14)) {
    throw UpdateSingular("rank-two update pivot singular or indefinite");
  }
  Eigen::Matrix2d cinv;
  cinv << c(1, 1), -c(0, 1), -c(1, 0), c(0, 0);
  cinv /= det;
  const Eigen::Matrix2d x = u.m * cinv;
  w.noalias() += wu * x * wu.transpose();
  w = ((w + w.transpose()) / 2.0).eval();
  return det;
}

StepWindow pd_window(const Eigen::MatrixXd& w, const ConstraintMatrix& cm) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double t, d;
  if (cm.i == 0) {
    t = w(0, 0);
    d = 0.0;
  } else {
    const Eigen::Matrix2d k = corner_block(w, cm.i);
    const Eigen::Matrix2d m = cm.block();
    t = (m * k).trace();
    d = m.determinant() * k.determinant();
  }

  // det(I - s K M) = 1 - t s + d s^2; both eigenvalue factors are positive
  // between the roots bracketing 0.
  StepWindow win{-kInf, kInf};
  auto take = [&win](double r) {
    if (r > 0.0) {
      win.hi = std::min(win.hi, r);
    } else if (r < 0.0) {
      win.lo = std::max(win.lo, r);
    }
  };
  if (std::abs(d) <= 1e-14 * (1.0 + t * t)) {
    if (t != 0.0) take(1.0 / t);
    return win;
  }
  const double disc = std::max(t * t - 4.0 * d, 0.0);
  const double sq = std::sqrt(disc);
  // numerically stable pair of roots of d s^2 - t s + 1
  const double qq = -((-t) + (t >= 0 ? -sq : sq)) / 2.0;
  if (qq != 0.0) {
    take(qq / d);
    take(1.0 / qq);
  } else {
    take(t / (2.0 * d));
  }
  return win;
}

}  // namespace qisdp

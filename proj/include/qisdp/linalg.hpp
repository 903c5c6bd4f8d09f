#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>

#include "qisdp/model.hpp"

namespace qisdp {

struct UpdateSingular : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// log det S for S > 0 via Cholesky, nullopt when S is not positive
/// definite.
std::optional<double> cholesky_logdet(const Eigen::MatrixXd& s);

double min_eigenvalue(const Eigen::MatrixXd& s);

/// Rank-<=2 downdate of an inverse: given W = S^-1, replace W by
/// (S - U M U')^-1 with U = [e0 e_i], or by (S - theta g g')^-1 in the
/// rank-one form.
struct UpdateSpec {
  int i = 0;
  Eigen::Matrix2d m = Eigen::Matrix2d::Zero();

  bool rank_one = false;
  Eigen::Vector2d g = Eigen::Vector2d::Zero();  // components on {0, i}
  double theta = 0.0;

  static UpdateSpec coord_zero(double s0) {
    UpdateSpec u;
    u.rank_one = true;
    u.g = Eigen::Vector2d(1.0, 0.0);
    u.theta = s0;
    return u;
  }

  static UpdateSpec rank_two(int i, const Eigen::Matrix2d& m) {
    UpdateSpec u;
    u.i = i;
    u.m = m;
    return u;
  }
};

/// Applies the update in place in O(d^2) using the push-through identity
///   (W^-1 - U M U')^-1 = W + W U M (I - U'WU M)^-1 U' W,
/// which stays valid for singular M. Returns the determinant ratio
/// det(S_new)/det(S_old) = det(I - U'WU M), so the caller can maintain a
/// running log det. Throws UpdateSingular when the 2x2 pivot degenerates.
double woodbury_apply(Eigen::MatrixXd& w, const UpdateSpec& u);

/// Open interval of step sizes s around 0 for which W^-1 - s A stays
/// positive definite; endpoints are roots of det(I - s U'WU M) = 0.
struct StepWindow {
  double lo;
  double hi;
  bool contains(double s) const { return lo < s && s < hi; }
};

StepWindow pd_window(const Eigen::MatrixXd& w, const ConstraintMatrix& cm);

}  // namespace qisdp

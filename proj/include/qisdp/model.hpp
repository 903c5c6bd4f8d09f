#pragma once

#include <Eigen/Dense>

#include <compare>
#include <vector>

#include "qisdp/instance.hpp"

namespace qisdp {

/// Dual coordinate: either the homogenization multiplier (i == 0) or the
/// facet (i, j) with i in 1..n and j in {lo_i, ..., hi_i}. j < hi_i names
/// a lower bounding facet of P(D_i), j == hi_i the upper one.
struct CoordIndex {
  int i = 0;
  int j = 0;

  static CoordIndex zero() { return {}; }
  static CoordIndex facet(int i, int j) { return {i, j}; }
  bool is_zero() const { return i == 0; }
  auto operator<=>(const CoordIndex&) const = default;
};

/// Sparse form of a constraint matrix: the only nonzeros of the symmetric
/// (n+1)x(n+1) matrix are (0,0)=a00, (0,i)=(i,0)=a0i, (i,i)=aii.
/// For A0 (i == 0) the matrix is e0 e0'.
struct ConstraintMatrix {
  int i = 0;
  double a00 = 0.0;
  double a0i = 0.0;
  double aii = 0.0;

  Eigen::Matrix2d block() const {
    Eigen::Matrix2d m;
    m << a00, a0i, a0i, aii;
    return m;
  }
};

/// Augmented objective matrix: (0,0)=chat, (0,i)=lhat_i/2, lower block Qhat.
Eigen::MatrixXd build_augmented_q(const QipInstance& inst);

/// Constraint matrix of a dual coordinate. Throws DomainError for an index
/// outside the variable's range.
ConstraintMatrix facet_matrix(CoordIndex coord,
                              const std::vector<IntRange>& domains);

/// 1 or 2, from the 2x2 determinant of the nonzero block.
int rank_class(const ConstraintMatrix& cm);

/// <A, W> for dense symmetric W: a00 W00 + 2 a0i W0i + aii Wii.
inline double inner_with(const ConstraintMatrix& cm, const Eigen::MatrixXd& w) {
  if (cm.i == 0) return w(0, 0);
  return cm.a00 * w(0, 0) + 2.0 * cm.a0i * w(0, cm.i) + cm.aii * w(cm.i, cm.i);
}

/// Instance plus its augmented matrix and coordinate layout.
class Problem {
 public:
  explicit Problem(QipInstance inst)
      : inst_(std::move(inst)), q_(build_augmented_q(inst_)) {}

  const QipInstance& instance() const { return inst_; }
  const Eigen::MatrixXd& q() const { return q_; }
  int n() const { return inst_.n(); }
  int dim() const { return inst_.n() + 1; }

  /// Total number of dual coordinates, m + 1.
  int num_coords() const {
    int m = 1;
    for (const auto& d : inst_.domains()) m += d.size();
    return m;
  }

  ConstraintMatrix matrix(CoordIndex coord) const {
    return facet_matrix(coord, inst_.domains());
  }

 private:
  QipInstance inst_;
  Eigen::MatrixXd q_;
};

}  // namespace qisdp

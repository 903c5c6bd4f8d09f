#include "qisdp/model.hpp"

#include <cmath>

namespace qisdp {

Eigen::MatrixXd build_augmented_q(const QipInstance& inst) {
  const int n = inst.n();
  Eigen::MatrixXd q(n + 1, n + 1);
  q(0, 0) = inst.chat();
  q.block(0, 1, 1, n) = inst.lhat().transpose() / 2.0;
  q.block(1, 0, n, 1) = inst.lhat() / 2.0;
  q.block(1, 1, n, n) = inst.qhat();
  return q;
}

ConstraintMatrix facet_matrix(CoordIndex coord,
                              const std::vector<IntRange>& domains) {
  if (coord.is_zero()) return {0, 1.0, 0.0, 0.0};
  if (coord.i < 1 || coord.i > static_cast<int>(domains.size())) {
    throw DomainError("facet variable index out of range");
  }
  const IntRange& d = domains[coord.i - 1];
  if (coord.j < d.lo || coord.j > d.hi) {
    throw DomainError("facet index outside variable domain");
  }
  if (coord.j < d.hi) {
    const double j = coord.j;
    return {coord.i, 1.0 - j * (j + 1.0), (2.0 * j + 1.0) / 2.0, -1.0};
  }
  const double lo = d.lo, hi = d.hi;
  return {coord.i, 1.0 + lo * hi, -(lo + hi) / 2.0, 1.0};
}

int rank_class(const ConstraintMatrix& cm) {
  const double det = cm.a00 * cm.aii - cm.a0i * cm.a0i;
  const double scale =
      std::abs(cm.a00) + std::abs(cm.a0i) + std::abs(cm.aii);
  return std::abs(det) <= 1e-9 * (1.0 + scale * scale) ? 1 : 2;
}

}  // namespace qisdp

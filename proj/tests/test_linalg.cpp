#include <doctest.h>

#include <cmath>
#include <random>

#include "qisdp/linalg.hpp"

using namespace qisdp;

namespace {

Eigen::MatrixXd random_spd(std::mt19937_64& rng, int d, double shift = 0.5) {
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  Eigen::MatrixXd a(d, d);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) a(r, c) = sym(rng);
  }
  return a * a.transpose() + shift * Eigen::MatrixXd::Identity(d, d);
}

/// Independent smallest-eigenvalue estimate: inverse iteration on the
/// shifted matrix S - mu I with mu below the spectrum.
double min_eig_inverse_iteration(const Eigen::MatrixXd& s) {
  const int d = static_cast<int>(s.rows());
  const double mu = -s.cwiseAbs().rowwise().sum().maxCoeff() - 1.0;
  const Eigen::MatrixXd shifted =
      s - mu * Eigen::MatrixXd::Identity(d, d);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(shifted);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(d).normalized();
  for (int it = 0; it < 500; ++it) {
    v = lu.solve(v).normalized();
  }
  return v.dot(s * v);
}

}  // namespace

TEST_CASE("cholesky logdet") {
  CHECK(*cholesky_logdet(Eigen::MatrixXd::Identity(3, 3)) ==
        doctest::Approx(0.0));
  Eigen::MatrixXd d2 = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  CHECK(*cholesky_logdet(d2) == doctest::Approx(2.0 * std::log(2.0)));
  Eigen::MatrixXd indef(2, 2);
  indef << 1.0, 2.0, 2.0, 1.0;
  CHECK(!cholesky_logdet(indef).has_value());
}

TEST_CASE("minimum eigenvalue") {
  Eigen::MatrixXd s = Eigen::Vector3d(3.0, -1.0, 2.0).asDiagonal();
  CHECK(min_eigenvalue(s) == doctest::Approx(-1.0));
  CHECK(min_eigenvalue(Eigen::MatrixXd::Identity(4, 4)) ==
        doctest::Approx(1.0));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 3 + trial % 5;
    Eigen::MatrixXd m(d, d);
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c <= r; ++c) m(r, c) = m(c, r) = sym(rng);
    }
    const double tol = 1e-9 * (1.0 + m.cwiseAbs().maxCoeff());
    CHECK(std::abs(min_eigenvalue(m) - min_eig_inverse_iteration(m)) <= tol);
  }
}

TEST_CASE("woodbury trivial cases") {
  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(3, 3);
  const Eigen::MatrixXd before = w;
  const double det = woodbury_apply(w, UpdateSpec::rank_two(1, Eigen::Matrix2d::Zero()));
  CHECK(det == doctest::Approx(1.0));
  CHECK((w - before).cwiseAbs().maxCoeff() == 0.0);

  Eigen::MatrixXd w2 = Eigen::MatrixXd::Identity(2, 2);
  UpdateSpec u;
  u.i = 1;
  u.rank_one = true;
  u.g = Eigen::Vector2d(0.0, 1.0);  // e_1
  u.theta = 0.5;
  const double det2 = woodbury_apply(w2, u);
  CHECK(det2 == doctest::Approx(0.5));
  CHECK(w2(0, 0) == doctest::Approx(1.0));
  CHECK(w2(1, 1) == doctest::Approx(2.0));
  CHECK(w2(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("woodbury reconstructs the dense inverse") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> sym(-0.2, 0.2);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 4 + trial % 4;
    const Eigen::MatrixXd s = random_spd(rng, d);
    Eigen::MatrixXd w = s.inverse();
    const int i = 1 + trial % (d - 1);
    Eigen::Matrix2d m;
    const double a = sym(rng), b = sym(rng), c = sym(rng);
    m << a, b, b, c;
    Eigen::MatrixXd s_new = s;
    s_new(0, 0) -= m(0, 0);
    s_new(0, i) -= m(0, 1);
    s_new(i, 0) -= m(1, 0);
    s_new(i, i) -= m(1, 1);
    if (min_eigenvalue(s_new) < 1e-6) continue;
    woodbury_apply(w, UpdateSpec::rank_two(i, m));
    const Eigen::MatrixXd resid =
        s_new * w - Eigen::MatrixXd::Identity(d, d);
    CHECK(resid.cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("woodbury rejects a destroyed pivot") {
  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(2, 2);
  Eigen::Matrix2d m;
  m << 1.0, 0.0, 0.0, 0.0;  // exactly cancels the (0,0) pivot
  CHECK_THROWS_AS(woodbury_apply(w, UpdateSpec::rank_two(1, m)),
                  UpdateSingular);
}

TEST_CASE("pd window closed forms") {
  const Eigen::MatrixXd w = Eigen::MatrixXd::Identity(2, 2);

  ConstraintMatrix upper{1, 0.0, 0.0, 1.0};
  auto win = pd_window(w, upper);
  CHECK(std::isinf(win.lo));
  CHECK(win.hi == doctest::Approx(1.0));

  ConstraintMatrix lower{1, 1.0, 0.5, -1.0};
  win = pd_window(w, lower);
  CHECK(win.lo == doctest::Approx(-2.0 / std::sqrt(5.0)));
  CHECK(win.hi == doctest::Approx(2.0 / std::sqrt(5.0)));

  ConstraintMatrix a0{0, 1.0, 0.0, 0.0};
  win = pd_window(w, a0);
  CHECK(std::isinf(win.lo));
  CHECK(win.hi == doctest::Approx(1.0));
}

TEST_CASE("pd window endpoints verified by dense cholesky") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> coeff(-1.5, 1.5);
  int tested = 0;
  for (int trial = 0; trial < 200 && tested < 50; ++trial) {
    const int d = 4;
    const Eigen::MatrixXd s = random_spd(rng, d);
    const Eigen::MatrixXd w = s.inverse();
    ConstraintMatrix cm{1 + trial % (d - 1), coeff(rng), coeff(rng),
                        coeff(rng)};
    const auto win = pd_window(w, cm);
    for (double endpoint : {win.lo, win.hi}) {
      if (std::isinf(endpoint)) continue;
      ++tested;
      for (double factor : {1.0 - 1e-6, 1.0 + 1e-6}) {
        const double step = endpoint * factor;
        Eigen::MatrixXd probe = s;
        probe(0, 0) -= step * cm.a00;
        probe(0, cm.i) -= step * cm.a0i;
        probe(cm.i, 0) -= step * cm.a0i;
        probe(cm.i, cm.i) -= step * cm.aii;
        const bool inside = std::abs(step) < std::abs(endpoint);
        CHECK(cholesky_logdet(probe).has_value() == inside);
      }
    }
  }
  CHECK(tested >= 50);
}

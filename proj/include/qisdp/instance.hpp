#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qisdp {

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GeneratorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Closed integer interval {lo, ..., hi}.
struct IntRange {
  int lo = -1;
  int hi = 1;

  int width() const { return hi - lo; }
  int size() const { return hi - lo + 1; }
  bool contains(int v) const { return lo <= v && v <= hi; }
  bool operator==(const IntRange&) const = default;
};

/// Data of a quadratic integer program
///   min x' Qhat x + lhat' x + chat,  x_i in {lo_i, ..., hi_i}.
///
/// Immutable after construction; safe to share across concurrent solves.
class QipInstance {
 public:
  /// Symmetrizes qhat; asymmetry beyond 1e-12 relative or a domain of
  /// fewer than two points is rejected.
  QipInstance(Eigen::MatrixXd qhat, Eigen::VectorXd lhat, double chat,
              std::vector<IntRange> domains);

  int n() const { return static_cast<int>(qhat_.rows()); }
  const Eigen::MatrixXd& qhat() const { return qhat_; }
  const Eigen::VectorXd& lhat() const { return lhat_; }
  double chat() const { return chat_; }
  const std::vector<IntRange>& domains() const { return domains_; }
  const IntRange& domain(int i) const { return domains_[i - 1]; }  // 1-based

 private:
  Eigen::MatrixXd qhat_;
  Eigen::VectorXd lhat_;
  double chat_;
  std::vector<IntRange> domains_;
};

struct GeneratorConfig {
  int n = 10;
  int p = 0;  // percentage of negative eigenvalues, 0..100
  std::uint64_t seed = 0;
  IntRange domain{-1, 1};
};

/// Random instance with controlled spectrum: Qhat = sum mu_i v_i v_i',
/// the v_i an orthonormalized random basis, the first floor(p*n/100)
/// values mu_i drawn from [-1,0] and the rest from [0,1]. Deterministic
/// for a fixed seed.
QipInstance generate_instance(const GeneratorConfig& config);

/// x' Qhat x + lhat' x + chat. Throws DomainError if x leaves the box.
double objective_value(const QipInstance& inst, const Eigen::VectorXi& x);

QipInstance read_instance(const std::string& text);
std::string write_instance(const QipInstance& inst);

QipInstance load_instance(const std::string& path);
void save_instance(const QipInstance& inst, const std::string& path);

}  // namespace qisdp

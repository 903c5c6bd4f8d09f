#include "qisdp/instance.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace qisdp {

QipInstance::QipInstance(Eigen::MatrixXd qhat, Eigen::VectorXd lhat,
                         double chat, std::vector<IntRange> domains)
    : qhat_(std::move(qhat)),
      lhat_(std::move(lhat)),
      chat_(chat),
      domains_(std::move(domains)) {
  const auto n = qhat_.rows();
  if (n <= 0 || qhat_.cols() != n) {
    throw DomainError("Qhat must be square and nonempty");
  }
  if (lhat_.size() != n) {
    throw DomainError("lhat dimension does not match Qhat");
  }
  if (static_cast<Eigen::Index>(domains_.size()) != n) {
    throw DomainError("domain count does not match Qhat");
  }
  const double scale = qhat_.cwiseAbs().maxCoeff();
  const double asym = (qhat_ - qhat_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * (1.0 + scale)) {
    throw DomainError("Qhat asymmetry exceeds tolerance");
  }
  qhat_ = ((qhat_ + qhat_.transpose()) / 2.0).eval();
  for (const auto& d : domains_) {
    if (d.hi < d.lo + 1) {
      throw DomainError("each domain needs at least two points");
    }
  }
}

QipInstance generate_instance(const GeneratorConfig& config) {
  if (config.n <= 0) throw GeneratorError("n must be positive");
  if (config.p < 0 || config.p > 100) {
    throw GeneratorError("p must lie in [0,100]");
  }
  const int n = config.n;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::uniform_real_distribution<double> neg(-1.0, 0.0);
  std::uniform_real_distribution<double> pos(0.0, 1.0);

  const int n_neg = (config.p * n) / 100;
  Eigen::VectorXd mu(n);
  for (int k = 0; k < n; ++k) mu(k) = k < n_neg ? neg(rng) : pos(rng);

  // Gram-Schmidt on random vectors; a near-dependent draw is replaced.
  Eigen::MatrixXd v(n, n);
  for (int k = 0; k < n; ++k) {
    int attempts = 0;
    for (;;) {
      Eigen::VectorXd cand(n);
      for (int r = 0; r < n; ++r) cand(r) = sym(rng);
      for (int prev = 0; prev < k; ++prev) {
        cand -= v.col(prev).dot(cand) * v.col(prev);
      }
      // re-orthogonalize once against accumulated rounding
      for (int prev = 0; prev < k; ++prev) {
        cand -= v.col(prev).dot(cand) * v.col(prev);
      }
      const double norm = cand.norm();
      if (norm > 1e-8) {
        v.col(k) = cand / norm;
        break;
      }
      if (++attempts > 100) {
        throw GeneratorError("Gram-Schmidt failed to find independent vector");
      }
    }
  }

  Eigen::MatrixXd qhat = v * mu.asDiagonal() * v.transpose();
  qhat = ((qhat + qhat.transpose()) / 2.0).eval();

  Eigen::VectorXd lhat(n);
  for (int r = 0; r < n; ++r) lhat(r) = sym(rng);

  return QipInstance(std::move(qhat), std::move(lhat), 0.0,
                     std::vector<IntRange>(n, config.domain));
}

double objective_value(const QipInstance& inst, const Eigen::VectorXi& x) {
  if (x.size() != inst.n()) throw DomainError("x dimension mismatch");
  for (int i = 0; i < inst.n(); ++i) {
    if (!inst.domains()[i].contains(x(i))) {
      throw DomainError("x leaves the integer box");
    }
  }
  const Eigen::VectorXd xd = x.cast<double>();
  return xd.dot(inst.qhat() * xd) + inst.lhat().dot(xd) + inst.chat();
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& tok) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw ParseError("bad float: '" + tok + "'");
  }
  if (pos != tok.size()) throw ParseError("bad float: '" + tok + "'");
  return v;
}

std::string next_line(std::istringstream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("unexpected end of file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream ls(line);
  std::vector<std::string> out;
  std::string tok;
  while (ls >> tok) out.push_back(tok);
  return out;
}

}  // namespace

QipInstance read_instance(const std::string& text) {
  std::istringstream in(text);
  if (next_line(in) != "qisdp-instance v1") {
    throw ParseError("missing 'qisdp-instance v1' header");
  }
  auto ntok = tokens(next_line(in));
  if (ntok.size() != 2 || ntok[0] != "n") throw ParseError("malformed n line");
  const int n = static_cast<int>(parse_double(ntok[1]));
  if (n <= 0) throw ParseError("n must be positive");

  auto ctok = tokens(next_line(in));
  if (ctok.size() != 2 || ctok[0] != "c") throw ParseError("malformed c line");
  const double chat = parse_double(ctok[1]);

  auto ltok = tokens(next_line(in));
  if (ltok.size() != static_cast<std::size_t>(n + 1) || ltok[0] != "l") {
    throw ParseError("malformed l line");
  }
  Eigen::VectorXd lhat(n);
  for (int i = 0; i < n; ++i) lhat(i) = parse_double(ltok[i + 1]);

  Eigen::MatrixXd qhat(n, n);
  for (int r = 0; r < n; ++r) {
    auto row = tokens(next_line(in));
    if (row.size() != static_cast<std::size_t>(n)) {
      throw ParseError("Q row has wrong entry count");
    }
    for (int c = 0; c < n; ++c) qhat(r, c) = parse_double(row[c]);
  }

  std::vector<IntRange> domains;
  domains.reserve(n);
  for (int i = 0; i < n; ++i) {
    auto pair = tokens(next_line(in));
    if (pair.size() != 2) throw ParseError("malformed domain line");
    const int lo = static_cast<int>(parse_double(pair[0]));
    const int hi = static_cast<int>(parse_double(pair[1]));
    if (hi <= lo) throw ParseError("domain upper bound must exceed lower");
    domains.push_back({lo, hi});
  }
  try {
    return QipInstance(std::move(qhat), std::move(lhat), chat,
                       std::move(domains));
  } catch (const DomainError& e) {
    throw ParseError(e.what());
  }
}

std::string write_instance(const QipInstance& inst) {
  std::ostringstream out;
  const int n = inst.n();
  out << "qisdp-instance v1\n";
  out << "n " << n << "\n";
  out << "c " << fmt(inst.chat()) << "\n";
  out << "l";
  for (int i = 0; i < n; ++i) out << " " << fmt(inst.lhat()(i));
  out << "\n";
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (c) out << " ";
      out << fmt(inst.qhat()(r, c));
    }
    out << "\n";
  }
  for (const auto& d : inst.domains()) {
    out << d.lo << " " << d.hi << "\n";
  }
  return out.str();
}

QipInstance load_instance(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open instance file: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return read_instance(buf.str());
}

void save_instance(const QipInstance& inst, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ParseError("cannot open output file: " + path);
  f << write_instance(inst);
}

}  // namespace qisdp

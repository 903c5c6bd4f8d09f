#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "qisdp/oracle.hpp"
#include "qisdp/solver.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

qisdp::Algorithm parse_alg(const std::string& name) {
  if (name == "cd") return qisdp::Algorithm::CD;
  if (name == "cd2d") return qisdp::Algorithm::CD2D;
  throw CLI::ValidationError("--alg", "expected 'cd' or 'cd2d'");
}

qisdp::IntRange parse_domain(const std::string& spec) {
  const auto comma = spec.find(',');
  if (comma == std::string::npos) {
    throw CLI::ValidationError("--domain", "expected 'l,u'");
  }
  try {
    const int lo = std::stoi(spec.substr(0, comma));
    const int hi = std::stoi(spec.substr(comma + 1));
    if (hi <= lo) throw std::invalid_argument("u <= l");
    return {lo, hi};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--domain", "expected integers 'l,u' with l < u");
  }
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << content;
}

/// Minimal SVG line chart of bound vs time, one polyline per series.
std::string render_svg(
    const std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>&
        series) {
  const double width = 720, height = 440, margin = 50;
  double tmax = 1e-9, blo = 1e300, bhi = -1e300;
  for (const auto& [name, pts] : series) {
    for (const auto& [t, b] : pts) {
      tmax = std::max(tmax, t);
      blo = std::min(blo, b);
      bhi = std::max(bhi, b);
    }
  }
  if (bhi <= blo) bhi = blo + 1.0;
  auto px = [&](double t) { return margin + (width - 2 * margin) * t / tmax; };
  auto py = [&](double b) {
    return height - margin - (height - 2 * margin) * (b - blo) / (bhi - blo);
  };
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::ostringstream out;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
      << "' height='" << height << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<line x1='" << margin << "' y1='" << height - margin << "' x2='"
      << width - margin << "' y2='" << height - margin
      << "' stroke='black'/>\n";
  out << "<line x1='" << margin << "' y1='" << margin << "' x2='" << margin
      << "' y2='" << height - margin << "' stroke='black'/>\n";
  int idx = 0;
  for (const auto& [name, pts] : series) {
    const char* color = colors[idx % 4];
    out << "<polyline fill='none' stroke='" << color << "' points='";
    for (const auto& [t, b] : pts) out << px(t) << "," << py(b) << " ";
    out << "'/>\n";
    out << "<text x='" << width - margin + 5 << "' y='" << margin + 16 * idx
        << "' font-size='12' fill='" << color << "'>" << name << "</text>\n";
    ++idx;
  }
  out << "<text x='" << width / 2 << "' y='" << height - 10
      << "' font-size='12'>time [s]</text>\n";
  out << "<text x='12' y='" << height / 2
      << "' font-size='12' transform='rotate(-90 12 " << height / 2
      << ")'>bound</text>\n";
  out << "</svg>\n";
  return out.str();
}

std::vector<std::pair<double, double>> bound_curve(
    const std::vector<qisdp::TraceRecord>& trace) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(trace.size());
  for (const auto& r : trace) pts.emplace_back(r.elapsed_s, r.bound);
  return pts;
}

int cmd_gen(int n, int p, std::uint64_t seed, const std::string& domain,
            const std::string& out) {
  qisdp::GeneratorConfig cfg;
  cfg.n = n;
  cfg.p = p;
  cfg.seed = seed;
  cfg.domain = parse_domain(domain);
  const auto inst = qisdp::generate_instance(cfg);
  if (out.empty()) {
    std::cout << qisdp::write_instance(inst);
  } else {
    qisdp::save_instance(inst, out);
  }
  return 0;
}

int cmd_solve(const std::string& path, const std::string& alg, long max_iters,
              double sigma0, double bound_target, bool has_target,
              const std::string& trace_out, const std::string& plot_out) {
  const auto inst = qisdp::load_instance(path);
  qisdp::SolverConfig cfg;
  cfg.algorithm = parse_alg(alg);
  cfg.max_iters = max_iters;
  cfg.sigma0 = sigma0;
  if (has_target) cfg.bound_target = bound_target;
  const auto res = qisdp::solve(inst, cfg);
  if (!trace_out.empty()) write_file(trace_out, qisdp::trace_to_csv(res.trace));
  if (!plot_out.empty()) {
    write_file(plot_out, render_svg({{alg, bound_curve(res.trace)}}));
  }
  std::printf("bound=%.10g iters=%ld time_s=%.3f reason=%s\n", res.bound,
              res.iters, res.elapsed_s, qisdp::to_string(res.reason).c_str());
  return 0;
}

/// Iterations and time until the bound has covered the given fraction of
/// its total improvement.
std::pair<long, double> time_to_fraction(
    const std::vector<qisdp::TraceRecord>& trace, double fraction) {
  if (trace.empty()) return {0, 0.0};
  const double first = trace.front().bound - trace.front().step_s -
                       trace.front().step_s0;
  double best = first;
  for (const auto& r : trace) best = std::max(best, r.bound);
  const double target = first + fraction * (best - first);
  double run_best = first;
  for (const auto& r : trace) {
    run_best = std::max(run_best, r.bound);
    if (run_best >= target) return {r.iter, r.elapsed_s};
  }
  return {trace.back().iter, trace.back().elapsed_s};
}

int cmd_bench(int n, int p, int seeds, const std::string& algs_csv,
              const std::string& out, const std::string& plot_out) {
  std::vector<std::string> algs;
  std::stringstream ss(algs_csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) algs.push_back(tok);
  }
  if (algs.empty()) throw CLI::ValidationError("--algs", "empty algorithm list");
  for (const auto& a : algs) parse_alg(a);

  std::ostringstream csv;
  csv << "n,p,seed,alg,bound,iters,time_s,iters99,t99_s\n";
  std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>
      curves;
  for (int seed = 0; seed < seeds; ++seed) {
    qisdp::GeneratorConfig gcfg;
    gcfg.n = n;
    gcfg.p = p;
    gcfg.seed = static_cast<std::uint64_t>(seed);
    const auto inst = qisdp::generate_instance(gcfg);
    for (const auto& a : algs) {
      qisdp::SolverConfig cfg;
      cfg.algorithm = parse_alg(a);
      const auto res = qisdp::solve(inst, cfg);
      const auto [it99, t99] = time_to_fraction(res.trace, 0.99);
      char line[256];
      std::snprintf(line, sizeof(line), "%d,%d,%d,%s,%.10g,%ld,%.4f,%ld,%.4f\n",
                    n, p, seed, a.c_str(), res.bound, res.iters, res.elapsed_s,
                    it99, t99);
      csv << line;
      if (seed == 0) curves.emplace_back(a, bound_curve(res.trace));
    }
  }
  if (out.empty()) {
    std::cout << csv.str();
  } else {
    write_file(out, csv.str());
  }
  if (!plot_out.empty()) write_file(plot_out, render_svg(curves));
  return 0;
}

int cmd_verify(int n, int p, int count, std::uint64_t seed0) {
  using namespace qisdp;
  int failures = 0;
  for (int k = 0; k < count; ++k) {
    GeneratorConfig gcfg;
    gcfg.n = n;
    gcfg.p = p;
    gcfg.seed = seed0 + static_cast<std::uint64_t>(k);
    const auto inst = generate_instance(gcfg);
    Problem prob(inst);

    const auto brute = oracle::brute_force_opt(inst);
    SolverConfig cfg;
    cfg.debug_check_every = 25;
    const auto res = solve(prob, cfg);

    const bool duality_ok = res.bound <= brute.value + 1e-6;
    const bool feas_ok = oracle::check_dual_feasible(prob, res.y, 1e-9) &&
                         res.feasibility_violations == 0;

    // analytic vs finite-difference gradient at the starting point
    const DualPoint y0 = initial_point(prob);
    const Eigen::MatrixXd w0 = slack_matrix(prob, y0).inverse();
    bool grad_ok = true;
    for (int i = 1; i <= inst.n(); ++i) {
      const auto c = CoordIndex::facet(i, inst.domain(i).lo);
      const double g = gradient_entry(prob.matrix(c), w0, 1.0);
      const double fd = oracle::finite_diff_gradient(prob, y0, 1.0, c, 1e-5);
      if (std::abs(g - fd) > 1e-5 * (1.0 + std::abs(g))) grad_ok = false;
    }

    const auto fast = select_coordinate(prob, w0, 1.0, y0, 1e-7);
    const auto full = oracle::exhaustive_select(prob, w0, 1.0, y0, 1e-7);
    const bool select_ok =
        fast.has_value() == full.has_value() &&
        (!fast || fast->coord == full->coord);

    const bool ok = duality_ok && feas_ok && grad_ok && select_ok;
    if (!ok) ++failures;
    std::printf(
        "seed=%llu bound=%.6g opt=%.6g duality=%s feasible=%s gradient=%s "
        "selection=%s active_set_excess=%d\n",
        static_cast<unsigned long long>(gcfg.seed), res.bound, brute.value,
        duality_ok ? "ok" : "FAIL", feas_ok ? "ok" : "FAIL",
        grad_ok ? "ok" : "FAIL", select_ok ? "ok" : "FAIL",
        res.active_set_excess);
  }
  std::printf("verify: %d/%d instances passed\n", count - failures, count);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual SDP bounds for quadratic integer programs"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a random instance");
  int gen_n = 10, gen_p = 0;
  std::uint64_t gen_seed = 0;
  std::string gen_domain = "-1,1", gen_out;
  gen->add_option("--n", gen_n, "variable count")->required();
  gen->add_option("--p", gen_p, "percent negative eigenvalues")
      ->check(CLI::Range(0, 100));
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--domain", gen_domain, "integer range 'l,u' for all variables");
  gen->add_option("--out", gen_out, "output path (default stdout)");

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "solve one instance");
  std::string solve_path, solve_alg = "cd", solve_trace, solve_plot;
  long solve_max_iters = 0;
  double solve_sigma0 = 1.0, solve_target = 0.0;
  solve_cmd->add_option("instance", solve_path, "instance file")->required();
  solve_cmd->add_option("--alg", solve_alg, "cd or cd2d");
  solve_cmd->add_option("--max-iters", solve_max_iters, "iteration cap");
  solve_cmd->add_option("--sigma0", solve_sigma0, "initial barrier parameter");
  auto* target_opt =
      solve_cmd->add_option("--bound-target", solve_target,
                            "stop once the bound reaches this value");
  solve_cmd->add_option("--trace", solve_trace, "trace CSV output path");
  solve_cmd->add_option("--plot", solve_plot, "bound-vs-time SVG output path");

  // bench
  auto* bench = app.add_subcommand("bench", "compare algorithms over seeds");
  int bench_n = 100, bench_p = 0, bench_seeds = 1;
  std::string bench_algs = "cd,cd2d", bench_out, bench_plot;
  bench->add_option("--n", bench_n, "variable count");
  bench->add_option("--p", bench_p, "percent negative eigenvalues")
      ->check(CLI::Range(0, 100));
  bench->add_option("--seeds", bench_seeds, "number of seeds");
  bench->add_option("--algs", bench_algs, "comma-separated algorithms");
  bench->add_option("--out", bench_out, "CSV output path (default stdout)");
  bench->add_option("--plot", bench_plot, "SVG output path (first seed)");

  // verify
  auto* verify = app.add_subcommand("verify", "oracle checks on random instances");
  int verify_n = 6, verify_p = 50, verify_count = 10;
  std::uint64_t verify_seed = 0;
  verify->add_option("--n", verify_n, "variable count (kept enumerable)")
      ->check(CLI::Range(1, 12));
  verify->add_option("--p", verify_p, "percent negative eigenvalues")
      ->check(CLI::Range(0, 100));
  verify->add_option("--count", verify_count, "number of instances");
  verify->add_option("--seed", verify_seed, "first seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      return cmd_gen(gen_n, gen_p, gen_seed, gen_domain, gen_out);
    }
    if (solve_cmd->parsed()) {
      return cmd_solve(solve_path, solve_alg, solve_max_iters, solve_sigma0,
                       solve_target, target_opt->count() > 0, solve_trace,
                       solve_plot);
    }
    if (bench->parsed()) {
      return cmd_bench(bench_n, bench_p, bench_seeds, bench_algs, bench_out,
                       bench_plot);
    }
    if (verify->parsed()) {
      return cmd_verify(verify_n, verify_p, verify_count, verify_seed);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const qisdp::NumericalBreakdown& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const qisdp::UpdateSingular& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

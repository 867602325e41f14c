#pragma once

#include "admm.hpp"
#include "battery.hpp"
#include "instances.hpp"
#include "io.hpp"
#include "metric_select.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace equiprox {

enum ExitCode : int { exit_ok = 0, exit_validation = 1, exit_non_convergence = 2, exit_verification = 3 };

struct RunConfig {
  std::string command;
  std::string input;
  std::string out = ".";
  std::uint64_t seed = 42;
  std::optional<double> gamma;
  std::string metric;  // "", identity, optimal, file:PATH
  double tol = 1e-8;
  long kmax = 100000;
  std::string family = "lasso_dense";
  Index count = 20;
  Index n = 20;
  Index p = 0;
};

inline const std::vector<double>& default_gamma_grid() {
  static const std::vector<double> grid{0.01, 0.1, 1.0, 10.0, 100.0};
  return grid;
}

namespace detail {

namespace fs = std::filesystem;

struct NamedProblem {
  std::string id;
  ProblemSpec spec;
};

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::invalid_argument, "cannot write " + path.string());
  out << text;
}

inline std::string metric_tag(const RunConfig& cfg) {
  if (!cfg.metric.empty()) return cfg.metric.rfind("file:", 0) == 0 ? "file" : cfg.metric;
  return "gamma";
}

inline AdmmConfig solver_config(const ProblemSpec& spec, const RunConfig& cfg) {
  AdmmConfig c;
  c.k_max = cfg.kmax;
  c.tol = cfg.tol;
  c.stop = spec.is_l1_form() ? StopRule::x_optimality : StopRule::kkt;
  return c;
}

/// Problems for compare: a file, a directory of *.json files, or a generated family.
inline std::vector<NamedProblem> load_instances(const RunConfig& cfg) {
  std::vector<NamedProblem> out;
  if (!cfg.input.empty()) {
    const fs::path in(cfg.input);
    if (fs::is_directory(in)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(in))
        if (e.path().extension() == ".json") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) out.push_back({f.stem().string(), read_problem_file(f.string())});
    } else {
      out.push_back({in.stem().string(), read_problem_file(in.string())});
    }
    return out;
  }
  const Family fam = parse_family(cfg.family);
  const auto specs = generate_instances(fam, cfg.n, cfg.p, cfg.count, cfg.seed);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    char id[64];
    std::snprintf(id, sizeof id, "%s_%03zu", to_string(fam), i);
    out.push_back({id, specs[i]});
  }
  return out;
}

inline json metric_json(const DiagonalMetric& m, const std::vector<MetricProvenance>* prov) {
  json j;
  j["m"] = vector_json(m.m());
  if (prov) {
    json tags = json::array();
    for (auto t : *prov) tags.push_back(to_string(t));
    j["provenance"] = tags;
  }
  return j;
}

inline int solve_command(const RunConfig& cfg, std::ostream& log) {
  const ProblemSpec spec = read_problem_file(cfg.input);
  require_valid(spec);
  require(!(cfg.gamma && !cfg.metric.empty()), ErrorKind::invalid_argument,
          "--gamma and --metric are mutually exclusive");
  const AdmmConfig acfg = solver_config(spec, cfg);
  std::optional<SolutionPair> ref;
  if (spec.is_l1_form()) ref = estimate_reference(spec);

  json report;
  AdmmResult res;
  std::optional<DiagonalMetric> metric;
  if (cfg.metric.empty()) {
    const double g = cfg.gamma.value_or(1.0);
    report["parametrization"] = "classical_scalar";
    report["gamma"] = g;
    res = admm_classical(spec, g, {}, acfg);
  } else {
    std::optional<MetricChoice> choice;
    if (cfg.metric == "identity") {
      metric = metric_from_vector(Vec::Ones(spec.p()));
    } else if (cfg.metric == "optimal") {
      require(ref.has_value(), ErrorKind::unsupported, "optimal metric needs the l1 form A = F, B = I, c = 0");
      choice = optimal_metric(ref->z_star, ref->lambda_star);
      metric = choice->metric;
    } else if (cfg.metric.rfind("file:", 0) == 0) {
      std::ifstream in(cfg.metric.substr(5));
      require(static_cast<bool>(in), ErrorKind::parse_error, "cannot open " + cfg.metric.substr(5));
      std::stringstream ss;
      ss << in.rdbuf();
      metric = metric_from_vector(parse_metric_vector(ss.str()));
    } else {
      throw Error(ErrorKind::invalid_argument, "unknown --metric '" + cfg.metric + "'");
    }
    report["parametrization"] = "equilibrate_metric";
    report["metric"] = metric_json(*metric, choice ? &choice->provenance : nullptr);
    res = admm_equilibrate(spec, *metric, {}, acfg);
  }
  report["stop_rule"] = to_string(acfg.stop);
  report["solution"] = solution_json(res.solution);

  const fs::path out(cfg.out);
  fs::create_directories(out);
  std::optional<double> dist0_sq;
  if (ref) {
    const DiagonalMetric tm = metric ? *metric : metric_from_vector(Vec::Constant(spec.p(), 1.0 / cfg.gamma.value_or(1.0)));
    Vec zstar = unscaled_fixed_point(spec, tm, ref->x_star, ref->lambda_star);
    if (!metric) zstar /= std::sqrt(cfg.gamma.value_or(1.0));  // classical coordinates Ax + lambda/gamma
    res.trace.fix_distances.clear();
    for (const auto& pt : res.trace.points) res.trace.fix_distances.push_back((pt - zstar).norm());
    dist0_sq = (res.trace.points.front() - zstar).squaredNorm();
  }
  std::ostringstream trace;
  write_trace_csv(trace, res.trace, dist0_sq);
  write_text(out / "trace.csv", trace.str());
  write_text(out / "solution.json", report.dump(1) + "\n");
  log << "solve: " << (res.converged ? "converged" : "not converged") << " in " << res.iterations
      << " iterations, residual " << fmt_double(res.solution.residual) << "\n";
  return res.converged ? exit_ok : exit_non_convergence;
}

inline int oneshot_command(const RunConfig& cfg, std::ostream& log) {
  const ProblemSpec spec = read_problem_file(cfg.input);
  require_valid(spec);
  const SolutionPair ref = estimate_reference(spec);
  const MetricChoice choice = optimal_metric(ref.z_star, ref.lambda_star);
  const SolutionPair one = one_shot_solve(spec, choice.metric);
  const SolutionPair finite = one_shot_solve_finite(spec, choice.metric);
  json report;
  report["reference"] = solution_json(ref);
  report["metric"] = metric_json(choice.metric, &choice.provenance);
  report["one_shot"] = solution_json(one);
  report["one_shot_finite"] = solution_json(finite);
  report["deviation"] = (one.x_star - ref.x_star).norm();
  report["deviation_finite"] = (finite.x_star - ref.x_star).norm();
  const fs::path out(cfg.out);
  fs::create_directories(out);
  write_text(out / "oneshot.json", report.dump(1) + "\n");
  log << "oneshot: residual " << fmt_double(one.residual) << ", deviation from reference "
      << fmt_double(report["deviation"].get<double>()) << "\n";
  return one.converged ? exit_ok : exit_non_convergence;
}

struct CompareRow {
  std::string instance;
  std::string parametrization;
  double gamma = 0.0;
  long iterations = 0;
  bool converged = false;
  double residual = 0.0;
};

inline int compare_command(const RunConfig& cfg, std::ostream& log) {
  const auto problems = load_instances(cfg);
  std::vector<CompareRow> rows;
  std::ostringstream summary;
  summary << "instance,best_classical_gamma,best_classical_iterations,equilibrate_optimal_iterations,dominates\n";
  int dominated = 0, eligible = 0;
  for (const auto& [id, spec] : problems) {
    require_valid(spec);
    const AdmmConfig acfg = solver_config(spec, cfg);
    long best_it = -1;
    double best_g = 0.0;
    for (double g : default_gamma_grid()) {
      const AdmmResult r = admm_classical(spec, g, {}, acfg);
      const long it = r.converged ? r.iterations : cfg.kmax + 1;
      rows.push_back({id, "classical_scalar", g, r.iterations, r.converged, r.solution.residual});
      if (best_it < 0 || it < best_it) {
        best_it = it;
        best_g = g;
      }
    }
    const AdmmResult ident = admm_equilibrate(spec, metric_from_vector(Vec::Ones(spec.p())), {}, acfg);
    rows.push_back({id, "equilibrate_identity", 1.0, ident.iterations, ident.converged, ident.solution.residual});
    if (spec.is_l1_form()) {
      const SolutionPair ref = estimate_reference(spec);
      const MetricChoice choice = optimal_metric(ref.z_star, ref.lambda_star);
      const AdmmResult opt = admm_equilibrate(spec, choice.metric, {}, acfg);
      rows.push_back({id, "equilibrate_optimal", 0.0, opt.iterations, opt.converged, opt.solution.residual});
      const bool dom = opt.converged && opt.iterations < best_it;
      ++eligible;
      dominated += dom;
      summary << id << ',' << fmt_double(best_g) << ',' << best_it << ',' << opt.iterations << ','
              << (dom ? "yes" : "no") << '\n';
    }
  }
  std::sort(rows.begin(), rows.end(), [](const CompareRow& a, const CompareRow& b) {
    return std::tie(a.instance, a.parametrization, a.gamma) < std::tie(b.instance, b.parametrization, b.gamma);
  });
  std::ostringstream table;
  table << "instance,parametrization,gamma,iterations,converged,residual\n";
  for (const auto& r : rows)
    table << r.instance << ',' << r.parametrization << ',' << fmt_double(r.gamma) << ',' << r.iterations << ','
          << (r.converged ? "yes" : "no") << ',' << fmt_double(r.residual) << '\n';
  const fs::path out(cfg.out);
  fs::create_directories(out);
  write_text(out / "compare.csv", table.str());
  write_text(out / "compare_summary.csv", summary.str());
  log << "compare: equilibrate-optimal beat the best classical step on " << dominated << " of " << eligible
      << " instances\n";
  return exit_ok;
}

inline int verify_command(const RunConfig& cfg, std::ostream& log) {
  BatteryOptions opt;
  opt.seed = cfg.seed;
  const auto rows = run_identity_battery(opt);
  std::ostringstream csv;
  write_battery_csv(csv, rows);
  const fs::path out(cfg.out);
  fs::create_directories(out);
  write_text(out / "verify.csv", csv.str());
  const auto failed = std::count_if(rows.begin(), rows.end(), [](const CheckRow& r) { return !r.passed; });
  log << "verify: " << rows.size() - static_cast<std::size_t>(failed) << " of " << rows.size() << " checks passed\n";
  return failed == 0 ? exit_ok : exit_verification;
}

inline int bench_command(const RunConfig& cfg, std::ostream& log) {
  const auto problems = load_instances(cfg);
  std::ostringstream stats, timing;
  stats << "instance,parametrization,iterations,converged,residual\n";
  timing << "instance,parametrization,seconds\n";
  long total_classical = 0, total_optimal = 0;
  for (const auto& [id, spec] : problems) {
    require_valid(spec);
    const AdmmConfig acfg = solver_config(spec, cfg);
    auto timed = [&](const char* tag, auto&& fn) {
      const auto t0 = std::chrono::steady_clock::now();
      const AdmmResult r = fn();
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      stats << id << ',' << tag << ',' << r.iterations << ',' << (r.converged ? "yes" : "no") << ','
            << fmt_double(r.solution.residual) << '\n';
      timing << id << ',' << tag << ',' << fmt_double(secs) << '\n';
      return r.iterations;
    };
    total_classical += timed("classical_gamma_1", [&] { return admm_classical(spec, 1.0, {}, acfg); });
    if (spec.is_l1_form()) {
      total_optimal += timed("equilibrate_optimal", [&] {
        const SolutionPair ref = estimate_reference(spec);
        return admm_equilibrate(spec, optimal_metric(ref.z_star, ref.lambda_star).metric, {}, acfg);
      });
    }
  }
  const fs::path out(cfg.out);
  fs::create_directories(out);
  write_text(out / "bench.csv", stats.str());
  write_text(out / "bench_timing.csv", timing.str());
  log << "bench: " << problems.size() << " instances, classical iterations " << total_classical
      << ", equilibrate-optimal iterations " << total_optimal << "\n";
  return exit_ok;
}

inline int generate_command(const RunConfig& cfg, std::ostream& log) {
  RunConfig gen = cfg;
  gen.input.clear();
  const auto problems = load_instances(gen);
  const fs::path out(cfg.out);
  fs::create_directories(out);
  for (const auto& [id, spec] : problems) write_text(out / (id + ".json"), write_problem(spec));
  log << "generate: wrote " << problems.size() << " instances to " << out.string() << "\n";
  return exit_ok;
}

}  // namespace detail

inline int exit_code_for(ErrorKind kind) {
  return kind == ErrorKind::non_convergence ? exit_non_convergence : exit_validation;
}

/// Dispatches one command. Errors are reported on `err` and mapped to exit codes.
inline int run(const RunConfig& cfg, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  try {
    if (cfg.command == "solve") return detail::solve_command(cfg, log);
    if (cfg.command == "oneshot") return detail::oneshot_command(cfg, log);
    if (cfg.command == "compare") return detail::compare_command(cfg, log);
    if (cfg.command == "verify") return detail::verify_command(cfg, log);
    if (cfg.command == "bench") return detail::bench_command(cfg, log);
    if (cfg.command == "generate") return detail::generate_command(cfg, log);
    err << "unknown command '" << cfg.command << "'\n";
    return exit_validation;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_validation;
  }
}

}  // namespace equiprox

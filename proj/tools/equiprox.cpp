#include <equiprox/cli.hpp>

#include "CLI11.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Equilibrate proximal operators, ADMM and optimal diagonal metrics"};
  app.require_subcommand(1);
  equiprox::RunConfig cfg;
  double gamma = 0.0;
  equiprox::Index count = cfg.count, n = cfg.n, p = cfg.p;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", cfg.out, "Output directory")->capture_default_str();
    sub->add_option("--tol", cfg.tol, "Stopping tolerance")->capture_default_str();
    sub->add_option("--kmax", cfg.kmax, "Iteration budget")->capture_default_str();
  };
  auto add_generator = [&](CLI::App* sub) {
    sub->add_option("--family", cfg.family, "lasso_dense | lasso_diagonal | quadratic_pair")->capture_default_str();
    sub->add_option("--count", count, "Number of instances")->capture_default_str();
    sub->add_option("--n", n, "Primal dimension")->capture_default_str();
    sub->add_option("--p", p, "Constraint rows (0 means n)")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  };

  auto* solve = app.add_subcommand("solve", "Run classical ADMM or E-ADMM on a problem file");
  solve->add_option("--input", cfg.input, "Problem JSON")->required();
  auto* gopt = solve->add_option("--gamma", gamma, "Classical step size");
  solve->add_option("--metric", cfg.metric, "identity | optimal | file:PATH");
  add_common(solve);

  auto* oneshot = app.add_subcommand("oneshot", "Reference solve, optimal metric and one-iteration solve");
  oneshot->add_option("--input", cfg.input, "Problem JSON")->required();
  add_common(oneshot);

  auto* compare = app.add_subcommand("compare", "Iteration counts: classical step grid vs equilibrate metrics");
  compare->add_option("--input", cfg.input, "Problem JSON or directory (default: generate)");
  add_common(compare);
  add_generator(compare);

  auto* verify = app.add_subcommand("verify", "Run the operator identity battery");
  verify->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  add_common(verify);

  auto* bench = app.add_subcommand("bench", "Iteration and timing statistics over a generated family");
  bench->add_option("--input", cfg.input, "Problem JSON or directory (default: generate)");
  add_common(bench);
  add_generator(bench);

  auto* generate = app.add_subcommand("generate", "Write seeded random problem files");
  add_common(generate);
  add_generator(generate);

  CLI11_PARSE(app, argc, argv);
  for (auto* sub : app.get_subcommands()) cfg.command = sub->get_name();
  if (gopt->count() > 0) cfg.gamma = gamma;
  cfg.count = count;
  cfg.n = n;
  cfg.p = p;
  return equiprox::run(cfg);
}

// sparsegn: experiment harness for the sublinear Gauss-Newton trainer.
//
//   sparsegn train          training run, writes report.csv/json, timings.csv, manifest.json
//   sparsegn sparsity-sweep fire-set size vs width at the default shift
//   sparsegn kernel-check   NTK eigenvalue sandwich and H_dis/H_cts agreement
//   sparsegn bench-cpi      per-iteration cost vs width, sublinear and dense
//   sparsegn gen-data       write a synthetic dataset
//   sparsegn replay         re-run the command recorded in a manifest
//
// Output directories default to $SPARSEGN_OUT_DIR/<command>, or
// ./sparsegn-out/<command> when the variable is unset.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;
using namespace sparsegn::cli;

namespace {

fs::path default_out(const std::string& command) {
  const char* env = std::getenv("SPARSEGN_OUT_DIR");
  const fs::path base = env && *env ? fs::path(env) : fs::path("sparsegn-out");
  return base / command;
}

// Subcommand arguments as typed, minus --out, for the manifest.
std::vector<std::string> recorded_args(const std::vector<std::string>& argv) {
  std::vector<std::string> out;
  for (std::size_t k = 2; k < argv.size(); ++k) {
    if (argv[k] == "--out") {
      ++k;
      continue;
    }
    if (argv[k].rfind("--out=", 0) == 0) continue;
    out.push_back(argv[k]);
  }
  return out;
}

int run(std::vector<std::string> argv);

int run(std::vector<std::string> argv) {
  CLI::App app{"Sublinear-cost Gauss-Newton training of shifted-ReLU networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "sparsegn 0.1.0");
  std::string out;

  TrainOptions train;
  auto* t = app.add_subcommand("train", "Train a two-layer shifted-ReLU network");
  t->add_option("--n", train.n, "Number of generated data points")->capture_default_str();
  t->add_option("--d", train.d, "Input dimension of generated data")->capture_default_str();
  t->add_option("--m", train.m, "Hidden width")->capture_default_str();
  t->add_option("--b", train.b, "Activation shift (default sqrt(0.48 ln m))");
  t->add_option("--epsilon", train.epsilon, "Target loss ratio")->capture_default_str();
  t->add_option("--T", train.iterations, "Iteration cap (default ceil(log2(1/epsilon)))");
  t->add_option("--seed", train.seed, "Seed for data, weights and sketches")->capture_default_str();
  t->add_option("--mode", train.mode, "sublinear, dense_gn or gd_baseline")->capture_default_str();
  t->add_option("--labels", train.labels, "uniform or teacher")->capture_default_str();
  t->add_option("--delta", train.delta, "Separability of generated data")->capture_default_str();
  t->add_option("--lambda-est", train.lambda_est, "Override the NTK eigenvalue estimate");
  t->add_option("--sketch-rows", train.sketch_rows, "Sketch rows (default from the row formula)");
  t->add_option("--sketch-eps", train.sketch_eps, "Sketch distortion")->capture_default_str();
  t->add_option("--c-s", train.c_s, "Sketch row constant")->capture_default_str();
  t->add_option("--data", train.data, "Dataset file instead of generated data")->check(CLI::ExistingFile);
  t->add_flag("--no-early-exit", train.no_early_exit, "Run all T iterations");
  t->add_flag("--verify-forest", train.verify_forest, "Check 3 random trees after every step");
  t->add_option("--threads", train.threads, "Query threads (determinism needs 1)")->capture_default_str();
  t->add_flag("--quiet", train.quiet, "Do not print the loss table");
  t->add_option("--out", out, "Output directory");

  SweepOptions sweep;
  auto* s = app.add_subcommand("sparsity-sweep", "Fire-set size vs width at b = sqrt(0.48 ln m)");
  s->add_option("--m", sweep.m_list, "Comma-separated widths (default 2^10..2^16)")->delimiter(',');
  s->add_option("--trials", sweep.trials, "Independent initialisations per width")->capture_default_str();
  s->add_option("--n", sweep.n, "Inputs per trial")->capture_default_str();
  s->add_option("--d", sweep.d, "Input dimension")->capture_default_str();
  s->add_option("--seed", sweep.seed)->capture_default_str();
  s->add_option("--out", out, "Output directory");

  KernelOptions kernel;
  auto* k = app.add_subcommand("kernel-check", "Eigenvalue sandwich and discrete/continuous kernel agreement");
  k->add_option("--datasets", kernel.datasets, "Random datasets to check")->capture_default_str();
  k->add_option("--n", kernel.n, "Largest dataset size")->capture_default_str();
  k->add_option("--d", kernel.d, "Input dimension")->capture_default_str();
  k->add_option("--delta", kernel.delta, "Separability of generated data")->capture_default_str();
  k->add_option("--b", kernel.b_list, "Comma-separated shifts (default 0,0.5,1)")->delimiter(',');
  k->add_option("--samples", kernel.samples, "Monte-Carlo draws")->capture_default_str();
  k->add_option("--m", kernel.m, "Width of the discrete kernel")->capture_default_str();
  k->add_option("--seed", kernel.seed)->capture_default_str();
  k->add_option("--data", kernel.data, "Check this dataset instead of random ones")->check(CLI::ExistingFile);
  k->add_flag("--no-examples", kernel.no_examples, "Skip the orthogonal-pair and duplicate-point cases");
  k->add_option("--threads", kernel.threads)->capture_default_str();
  k->add_option("--out", out, "Output directory");

  BenchOptions bench;
  auto* c = app.add_subcommand("bench-cpi", "Per-iteration cost vs width");
  c->add_option("--m", bench.m_list, "Comma-separated widths (default 2^12..2^18)")->delimiter(',');
  c->add_option("--n", bench.n)->capture_default_str();
  c->add_option("--d", bench.d)->capture_default_str();
  c->add_option("--iters", bench.iters, "Timed iterations per width, after one warm-up")->capture_default_str();
  c->add_option("--modes", bench.modes, "Comma-separated modes (default sublinear,dense_gn)")->delimiter(',');
  c->add_option("--seed", bench.seed)->capture_default_str();
  c->add_option("--threads", bench.threads)->capture_default_str();
  c->add_option("--out", out, "Output directory");

  GenOptions gen;
  auto* g = app.add_subcommand("gen-data", "Write a synthetic unit-norm dataset");
  g->add_option("--n", gen.n)->capture_default_str();
  g->add_option("--d", gen.d)->capture_default_str();
  g->add_option("--delta", gen.delta, "Required separability")->capture_default_str();
  g->add_option("--labels", gen.labels, "uniform or teacher")->capture_default_str();
  g->add_option("--teacher-width", gen.teacher_width)->capture_default_str();
  g->add_option("--teacher-shift", gen.teacher_shift)->capture_default_str();
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("--out", gen.out, "Dataset file (default stdout)");

  std::string manifest_path;
  auto* r = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  r->add_option("manifest", manifest_path, "manifest.json of an earlier run")->required()->check(CLI::ExistingFile);
  r->add_option("--out", out, "Output directory");

  std::vector<const char*> raw;
  for (const auto& a : argv) raw.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(raw.size()), raw.data());
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  auto* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  if (name == "gen-data") return cmd_gen_data(gen);
  RunContext ctx{out.empty() ? default_out(name) : fs::path(out), recorded_args(argv)};
  if (name == "train") return cmd_train(train, ctx);
  if (name == "sparsity-sweep") return cmd_sparsity_sweep(sweep, ctx);
  if (name == "kernel-check") return cmd_kernel_check(kernel, ctx);
  if (name == "bench-cpi") return cmd_bench_cpi(bench, ctx);

  const RunManifest m = read_manifest(manifest_path);
  std::vector<std::string> again{argv.front(), m.command};
  again.insert(again.end(), m.args.begin(), m.args.end());
  again.push_back("--out");
  again.push_back(out.empty() ? default_out("replay").string() : out);
  return run(std::move(again));
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(std::vector<std::string>(argv, argv + argc));
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\nRun with --help for usage.\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

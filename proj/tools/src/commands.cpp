#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "manifest.hpp"
#include "sparsegn/baselines.hpp"
#include "sparsegn/data_gen.hpp"
#include "sparsegn/kernel.hpp"
#include "sparsegn/network.hpp"
#include "sparsegn/report_io.hpp"
#include "sparsegn/rng.hpp"
#include "sparsegn/trainer.hpp"

namespace sparsegn::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

constexpr const char* kSparsitySchema = "sparsegn.sparsity.v1";
constexpr const char* kKernelSchema = "sparsegn.kernel.v1";
constexpr const char* kBenchSchema = "sparsegn.bench_cpi.v1";
constexpr const char* kTimingsSchema = "sparsegn.timings.v1";

std::ofstream open_output(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::string dataset_text(const Dataset& data) {
  std::ostringstream os;
  write_dataset(os, data);
  return os.str();
}

json json_or_null(double v) { return std::isfinite(v) ? json(v) : json(); }

RunManifest start_manifest(const std::string& command, const RunContext& ctx) {
  RunManifest m;
  m.command = command;
  m.args = ctx.args;
  m.started_at = utc_timestamp();
  return m;
}

}  // namespace

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nan("");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double lx = std::log(x[k]);
    const double ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  return den == 0.0 ? std::nan("") : (n * sxy - sx * sy) / den;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

// ---------------------------------------------------------------------------
// train

int cmd_train(const TrainOptions& opt, const RunContext& ctx) {
  RunManifest manifest = start_manifest("train", ctx);
  const TrainMode mode = [&] {
    try {
      return parse_train_mode(opt.mode);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }();
  if (!(opt.epsilon > 0.0 && opt.epsilon < 1.0)) throw UsageError("--epsilon must lie in (0, 1)");
  if (opt.b && !(*opt.b >= 0.0)) throw UsageError("--b must be >= 0");
  if (opt.lambda_est && !(*opt.lambda_est > 0.0)) throw UsageError("--lambda-est must be positive");
  if (mode != TrainMode::sublinear && opt.sketch_rows != 0)
    throw UsageError("--sketch-rows only applies to --mode sublinear");

  Dataset data = [&] {
    if (!opt.data.empty()) {
      manifest.inputs["data"] = {{"source", "file"}, {"path", opt.data}};
      return load_dataset(opt.data);
    }
    DataSpec spec;
    spec.n = opt.n;
    spec.d = opt.d;
    spec.delta_target = opt.delta;
    spec.seed = opt.seed;
    try {
      spec.label_mode = parse_label_mode(opt.labels);
      spec.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    manifest.inputs["data"] = {{"source", "generated"},
                               {"n", spec.n},
                               {"d", spec.d},
                               {"delta_target", spec.delta_target},
                               {"labels", to_string(spec.label_mode)},
                               {"teacher_width", spec.teacher_width},
                               {"teacher_shift", spec.teacher_shift}};
    return generate(spec);
  }();
  manifest.inputs["data"]["digest"] = git_blob_digest(dataset_text(data));
  if (opt.m < data.n()) throw UsageError("--m must be at least the number of data points");

  TrainerConfig cfg = TrainerConfig::defaults(opt.m, data.d(), data.n(), opt.seed);
  if (opt.b) cfg.network.b = *opt.b;
  cfg.epsilon = opt.epsilon;
  cfg.iterations = opt.iterations;
  cfg.mode = mode;
  cfg.early_exit = !opt.no_early_exit;
  cfg.verify_forest = opt.verify_forest;
  cfg.threads = opt.threads;
  cfg.sketch.rows = opt.sketch_rows;
  cfg.sketch.eps = opt.sketch_eps;
  cfg.sketch.c_s = opt.c_s;
  if (opt.lambda_est) cfg.regression.lambda_est = *opt.lambda_est;

  const TrainReport report = train(cfg, data);

  prepare_dir(ctx.out_dir);
  {
    auto os = open_output(ctx.out_dir / "report.csv");
    write_report_csv(os, report);
  }
  {
    auto os = open_output(ctx.out_dir / "report.json");
    os << report_json(report) << '\n';
  }
  {
    auto os = open_output(ctx.out_dir / "timings.csv");
    write_timings_csv(os, report);
  }
  manifest.config = json::parse(config_json(report.config));
  manifest.seeds = {{"network", report.config.network.seed},
                    {"sketch", report.config.sketch.seed},
                    {"data", opt.data.empty() ? json(opt.seed) : json()}};
  manifest.schemas = {{"report.csv", kReportSchema},
                      {"report.json", kReportSchema},
                      {"timings.csv", kTimingsSchema}};
  manifest.outputs = {"report.csv", "report.json", "timings.csv"};
  manifest.results = {{"initial_loss", report.initial_loss},
                      {"final_loss", report.final_loss},
                      {"iterations", report.steps.size()},
                      {"converged", report.converged},
                      {"weights_digest", report.weights_digest}};
  manifest.finished_at = utc_timestamp();
  write_manifest(ctx.out_dir, manifest);

  if (!opt.quiet) {
    std::printf("mode %s  n=%zu d=%zu m=%zu b=%.6g  lambda_est=%.4g  init %.3f s\n",
                to_string(mode).c_str(), data.n(), data.d(), report.config.network.m,
                report.config.network.b, report.lambda_est, report.init_seconds);
    for (const auto& w : report.warnings) std::printf("warning: %s\n", w.c_str());
    std::printf("%4s %14s %14s %10s %8s %6s %10s\n", "t", "loss_before", "loss_after", "ratio",
                "|K|", "iters", "step_s");
    for (const auto& s : report.steps)
      std::printf("%4zu %14.6e %14.6e %10.4f %8zu %6zu %10.4f\n", s.t, s.loss_before, s.loss_after,
                  s.halving_ratio, s.update_size, s.regression_iters, s.total_seconds());
    std::printf("final loss %.6e (initial %.6e): %s\n", report.final_loss, report.initial_loss,
                report.stop_reason.c_str());
    std::printf("wrote %s\n", ctx.out_dir.string().c_str());
  }
  return report.converged ? 0 : 3;
}

// ---------------------------------------------------------------------------
// sparsity-sweep

int cmd_sparsity_sweep(const SweepOptions& opt, const RunContext& ctx) {
  RunManifest manifest = start_manifest("sparsity-sweep", ctx);
  if (opt.trials == 0) throw UsageError("--trials must be >= 1");
  if (opt.n == 0 || opt.d < 2) throw UsageError("need --n >= 1 and --d >= 2");
  std::vector<std::size_t> ms = opt.m_list;
  if (ms.empty())
    for (int e = 10; e <= 16; ++e) ms.push_back(std::size_t{1} << e);
  for (std::size_t m : ms)
    if (m == 0) throw UsageError("--m values must be >= 1");

  prepare_dir(ctx.out_dir);
  auto os = open_output(ctx.out_dir / "sparsity.csv");
  os << "m,b,q,expected_mean,mean,min,max,stderr,z,trials,n\n";
  os.precision(10);
  std::vector<double> xs, ys;
  json rows = json::array();
  for (std::size_t m : ms) {
    const double b = NetworkConfig::auto_shift(m);
    const double q = gaussian_tail(b);
    double total = 0.0;
    std::size_t kmin = m, kmax = 0;
    for (std::size_t trial = 0; trial < opt.trials; ++trial) {
      const std::uint64_t seed = derive_seed(derive_seed(opt.seed, m), trial);
      const WeightMatrix w = init_weights({m, opt.d, opt.n, b, seed});
      DataSpec ds;
      ds.n = opt.n;
      ds.d = opt.d;
      ds.delta_target = 0.0;
      ds.seed = seed;
      const Dataset data = generate(ds);
      for (std::size_t i = 0; i < opt.n; ++i) {
        const std::size_t k = scan_fire_row(w, data.point(i), b).size();
        total += static_cast<double>(k);
        kmin = std::min(kmin, k);
        kmax = std::max(kmax, k);
      }
    }
    const double samples = static_cast<double>(opt.trials * opt.n);
    const double mean = total / samples;
    const double expect = static_cast<double>(m) * q;
    const double se = std::sqrt(static_cast<double>(m) * q * (1.0 - q) / samples);
    const double z = se > 0.0 ? (mean - expect) / se : 0.0;
    os << m << ',' << b << ',' << q << ',' << expect << ',' << mean << ',' << kmin << ',' << kmax
       << ',' << se << ',' << z << ',' << opt.trials << ',' << opt.n << '\n';
    std::printf("m=%-8zu b=%.4f  mean k=%.2f  expected m Q(b)=%.2f  z=%+.2f  range [%zu, %zu]\n", m,
                b, mean, expect, z, kmin, kmax);
    if (mean > 0.0) {
      xs.push_back(static_cast<double>(m));
      ys.push_back(mean);
    }
    rows.push_back({{"m", m}, {"mean", mean}, {"expected", expect}, {"z", z}});
  }
  const double slope = loglog_slope(xs, ys);
  if (std::isfinite(slope))
    std::printf("fitted log-log slope of mean fire-set size vs m: %.4f\n", slope);
  else
    std::printf("fitted log-log slope: undefined (need two m values with nonzero mean)\n");

  manifest.config = {{"m", ms}, {"trials", opt.trials}, {"n", opt.n}, {"d", opt.d},
                     {"b_rule", "sqrt(0.48 ln m)"}};
  manifest.seeds = {{"base", opt.seed}};
  manifest.schemas = {{"sparsity.csv", kSparsitySchema}};
  manifest.outputs = {"sparsity.csv"};
  manifest.results = {{"slope", json_or_null(slope)}, {"rows", rows}};
  manifest.finished_at = utc_timestamp();
  write_manifest(ctx.out_dir, manifest);
  return 0;
}

// ---------------------------------------------------------------------------
// kernel-check

int cmd_kernel_check(const KernelOptions& opt, const RunContext& ctx) {
  RunManifest manifest = start_manifest("kernel-check", ctx);
  if (opt.samples == 0) throw UsageError("--samples must be >= 1");
  if (opt.m == 0) throw UsageError("--m must be >= 1");
  std::vector<double> bs = opt.b_list;
  if (bs.empty()) bs = {0.0, 0.5, 1.0};
  for (double b : bs)
    if (!(b >= 0.0)) throw UsageError("--b values must be >= 0");

  struct Named {
    std::string name;
    Dataset data;
  };
  std::vector<Named> sets;
  if (!opt.no_examples) {
    sets.push_back({"orthogonal-pair", Dataset(2, {1.0, 0.0, 0.0, 1.0}, {0.0, 0.0})});
    const double h = 1.0 / std::sqrt(2.0);
    sets.push_back({"duplicate-points", Dataset(2, {h, h, h, h, 1.0, 0.0}, {0.0, 0.0, 0.0})});
  }
  if (!opt.data.empty()) {
    sets.push_back({opt.data, load_dataset(opt.data)});
  } else {
    if (opt.n < 2 || opt.d < 2) throw UsageError("need --n >= 2 and --d >= 2");
    for (std::size_t k = 0; k < opt.datasets; ++k) {
      DataSpec ds;
      ds.n = 2 + k % (opt.n - 1);
      ds.d = opt.d;
      ds.delta_target = opt.delta;
      ds.seed = derive_seed(opt.seed, k);
      try {
        ds.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      sets.push_back({"random-" + std::to_string(k), generate(ds)});
    }
  }

  prepare_dir(ctx.out_dir);
  auto os = open_output(ctx.out_dir / "kernel.csv");
  os << "dataset,n,d,delta,b,samples,lambda_hat,lower_bound,upper_bound,tol,sandwich_pass,"
        "hdis_m,hdis_frobenius_gap,hdis_gap_bound,hdis_pass,data_digest\n";
  os.precision(10);
  std::size_t failures = 0;
  json inputs = json::array();
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const auto& [name, data] = sets[k];
    const std::string digest = git_blob_digest(dataset_text(data));
    inputs.push_back({{"dataset", name}, {"digest", digest}});
    for (std::size_t bi = 0; bi < bs.size(); ++bi) {
      const double b = bs[bi];
      const std::uint64_t seed = derive_seed(derive_seed(opt.seed, 1000 + k), bi);
      const SandwichReport rep = sandwich_check(data, b, opt.samples, seed, opt.threads);
      const KernelMatrix cts = h_cts_mc(data, b, opt.samples, seed, opt.threads);
      const WeightMatrix w = init_weights({opt.m, data.d(), data.n(), b, derive_seed(seed, 7)});
      const KernelMatrix dis = h_dis(w, data, b);
      double gap = 0.0;
      for (std::size_t j = 0; j < data.n(); ++j)
        for (std::size_t i = 0; i < data.n(); ++i) {
          const double e = dis.entries(i, j) - cts.entries(i, j);
          gap += e * e;
        }
      gap = std::sqrt(gap);
      const double n = static_cast<double>(data.n());
      // Monte-Carlo error of the reference is folded into the bound.
      const double bound = 6.0 * n / std::sqrt(static_cast<double>(opt.m)) + rep.tol;
      const bool hdis_ok = gap <= bound;
      if (!rep.pass || !hdis_ok) ++failures;
      os << name << ',' << data.n() << ',' << data.d() << ',' << rep.delta << ',' << b << ','
         << rep.samples << ',' << rep.lambda_hat << ',' << rep.lower_bound << ','
         << rep.upper_bound << ',' << rep.tol << ',' << (rep.pass ? 1 : 0) << ',' << opt.m << ','
         << gap << ',' << bound << ',' << (hdis_ok ? 1 : 0) << ',' << digest << '\n';
      std::printf("%-18s b=%-4g delta=%.4f lambda=%.5f in [%.3g, %.3g] +- %.4f: %s; "
                  "||H_dis - H_cts||_F=%.4f (<= %.4f): %s\n",
                  name.c_str(), b, rep.delta, rep.lambda_hat, rep.lower_bound, rep.upper_bound,
                  rep.tol, rep.pass ? "PASS" : "FAIL", gap, bound, hdis_ok ? "PASS" : "FAIL");
      if (!rep.warning.empty()) std::printf("  note: %s\n", rep.warning.c_str());
    }
  }

  manifest.config = {{"datasets", opt.datasets}, {"n_max", opt.n},   {"d", opt.d},
                     {"delta", opt.delta},       {"b", bs},          {"samples", opt.samples},
                     {"m", opt.m},               {"examples", !opt.no_examples},
                     {"threads", opt.threads}};
  manifest.inputs = {{"datasets", inputs}};
  manifest.seeds = {{"base", opt.seed}};
  manifest.schemas = {{"kernel.csv", kKernelSchema}};
  manifest.outputs = {"kernel.csv"};
  manifest.results = {{"failures", failures}};
  manifest.finished_at = utc_timestamp();
  write_manifest(ctx.out_dir, manifest);
  std::printf("%zu failing checks\n", failures);
  return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// bench-cpi

int cmd_bench_cpi(const BenchOptions& opt, const RunContext& ctx) {
  RunManifest manifest = start_manifest("bench-cpi", ctx);
  if (opt.iters < 5) throw UsageError("--iters must be >= 5 (the median needs at least five samples)");
  std::vector<std::size_t> ms = opt.m_list;
  if (ms.empty())
    for (int e = 12; e <= 18; ++e) ms.push_back(std::size_t{1} << e);
  std::vector<TrainMode> modes;
  for (const auto& s : opt.modes.empty() ? std::vector<std::string>{"sublinear", "dense_gn"} : opt.modes) {
    try {
      modes.push_back(parse_train_mode(s));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  for (std::size_t m : ms)
    if (m < opt.n) throw UsageError("every --m value must be >= --n");

  DataSpec ds;
  ds.n = opt.n;
  ds.d = opt.d;
  ds.delta_target = 0.5;
  ds.seed = opt.seed;
  try {
    ds.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const Dataset data = generate(ds);

  prepare_dir(ctx.out_dir);
  auto os = open_output(ctx.out_dir / "bench_cpi.csv");
  os << "m,mode,iters,median_step_s,min_step_s,max_step_s,init_s,median_fire_mean\n";
  os.precision(9);
  std::map<TrainMode, std::pair<std::vector<double>, std::vector<double>>> curves;
  std::vector<double> init_x, init_y;
  for (std::size_t m : ms) {
    for (TrainMode mode : modes) {
      TrainerConfig cfg = TrainerConfig::defaults(m, opt.d, opt.n, opt.seed);
      cfg.mode = mode;
      cfg.iterations = opt.iters + 1;
      cfg.record_phase_times = false;
      cfg.threads = opt.threads;
      Trainer trainer(cfg, data);
      std::vector<double> times, fire;
      // Iteration 0 is warm-up and discarded.
      for (std::size_t it = 0; it <= opt.iters; ++it) {
        const auto t0 = Clock::now();
        const StepRecord rec = trainer.step();
        const double s = std::chrono::duration<double>(Clock::now() - t0).count();
        if (it == 0) continue;
        times.push_back(s);
        fire.push_back(rec.fire_mean);
      }
      const double med = median(times);
      const auto [lo, hi] = std::minmax_element(times.begin(), times.end());
      os << m << ',' << to_string(mode) << ',' << opt.iters << ',' << med << ',' << *lo << ','
         << *hi << ',' << trainer.init_seconds() << ',' << median(fire) << '\n';
      std::printf("m=%-8zu %-11s median step %.4e s  init %.4e s\n", m, to_string(mode).c_str(),
                  med, trainer.init_seconds());
      curves[mode].first.push_back(static_cast<double>(m));
      curves[mode].second.push_back(med);
      if (mode == modes.front()) {
        init_x.push_back(static_cast<double>(m));
        init_y.push_back(trainer.init_seconds());
      }
    }
  }
  json slopes = json::object();
  for (const auto& [mode, xy] : curves) {
    const double s = loglog_slope(xy.first, xy.second);
    slopes[to_string(mode)] = json_or_null(s);
    if (std::isfinite(s)) std::printf("log-log slope of step time vs m, %s: %.3f\n", to_string(mode).c_str(), s);
  }
  const double init_slope = loglog_slope(init_x, init_y);
  slopes["init"] = json_or_null(init_slope);
  if (std::isfinite(init_slope)) std::printf("log-log slope of init time vs m: %.3f\n", init_slope);

  json mode_names = json::array();
  for (TrainMode mode : modes) mode_names.push_back(to_string(mode));
  manifest.config = {{"m", ms},         {"n", opt.n},         {"d", opt.d},
                     {"iters", opt.iters}, {"modes", mode_names}, {"threads", opt.threads},
                     {"timing", "steady_clock, warm-up iteration discarded, median"}};
  manifest.inputs = {{"data", {{"source", "generated"}, {"digest", git_blob_digest(dataset_text(data))}}}};
  manifest.results = {{"slopes", slopes}};
  manifest.seeds = {{"base", opt.seed}};
  manifest.schemas = {{"bench_cpi.csv", kBenchSchema}};
  manifest.outputs = {"bench_cpi.csv"};
  manifest.finished_at = utc_timestamp();
  write_manifest(ctx.out_dir, manifest);
  return 0;
}

// ---------------------------------------------------------------------------
// gen-data

int cmd_gen_data(const GenOptions& opt) {
  DataSpec spec;
  spec.n = opt.n;
  spec.d = opt.d;
  spec.delta_target = opt.delta;
  spec.teacher_width = opt.teacher_width;
  spec.teacher_shift = opt.teacher_shift;
  spec.seed = opt.seed;
  try {
    spec.label_mode = parse_label_mode(opt.labels);
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const Dataset data = generate(spec);
  const std::string text = dataset_text(data);
  if (opt.out.empty() || opt.out == "-") {
    std::cout << text;
  } else {
    const fs::path path(opt.out);
    if (path.has_parent_path()) prepare_dir(path.parent_path());
    auto os = open_output(path);
    os << text;
    std::fprintf(stderr, "wrote %s (n=%zu, d=%zu, separability %.6f, digest %s)\n",
                 path.string().c_str(), data.n(), data.d(),
                 data.n() >= 2 ? separability(data).delta : std::sqrt(2.0),
                 git_blob_digest(text).c_str());
  }
  return 0;
}

}  // namespace sparsegn::cli

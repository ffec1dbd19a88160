#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sparsegn::cli {

/// Raised for flag combinations that parse but make no sense; main() turns it
/// into a usage message and exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainOptions {
  std::size_t n = 8;
  std::size_t d = 4;
  std::size_t m = 16384;
  std::optional<double> b;
  double epsilon = 0.01;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  std::string mode = "sublinear";
  std::string labels = "uniform";
  double delta = 0.5;
  std::optional<double> lambda_est;
  std::size_t sketch_rows = 0;
  double sketch_eps = 0.1;
  double c_s = 8.0;
  std::string data;
  bool no_early_exit = false;
  bool verify_forest = false;
  unsigned threads = 1;
  bool quiet = false;
};

struct SweepOptions {
  std::vector<std::size_t> m_list;
  std::size_t trials = 20;
  std::size_t n = 8;
  std::size_t d = 16;
  std::uint64_t seed = 0;
};

struct KernelOptions {
  std::size_t datasets = 10;
  std::size_t n = 8;
  std::size_t d = 8;
  double delta = 0.5;
  std::vector<double> b_list;
  std::size_t samples = 100000;
  std::size_t m = 4096;
  std::uint64_t seed = 0;
  std::string data;
  bool no_examples = false;
  unsigned threads = 1;
};

struct BenchOptions {
  std::vector<std::size_t> m_list;
  std::size_t n = 8;
  std::size_t d = 8;
  std::size_t iters = 5;
  std::vector<std::string> modes;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct GenOptions {
  std::size_t n = 8;
  std::size_t d = 4;
  double delta = 0.5;
  std::string labels = "uniform";
  std::size_t teacher_width = 64;
  double teacher_shift = 0.0;
  std::uint64_t seed = 0;
  std::string out;
};

/// Shared by the commands that write a result directory.
struct RunContext {
  std::filesystem::path out_dir;
  std::vector<std::string> args;  // subcommand arguments without --out
};

int cmd_train(const TrainOptions& opt, const RunContext& ctx);
int cmd_sparsity_sweep(const SweepOptions& opt, const RunContext& ctx);
int cmd_kernel_check(const KernelOptions& opt, const RunContext& ctx);
int cmd_bench_cpi(const BenchOptions& opt, const RunContext& ctx);
int cmd_gen_data(const GenOptions& opt);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);
double median(std::vector<double> v);

}  // namespace sparsegn::cli

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sparsegn/network.hpp"
#include "sparsegn/regression.hpp"
#include "sparsegn/sketching.hpp"
#include "sparsegn/threshold_forest.hpp"

namespace sparsegn {

enum class TrainMode { sublinear, dense_gn, gd_baseline };

TrainMode parse_train_mode(const std::string& s);
std::string to_string(TrainMode mode);

struct TrainerConfig {
  NetworkConfig network;
  SketchSpec sketch;
  RegressionConfig regression;  // lambda_est 0: derived from the data's separability
  double epsilon = 0.01;        // stop once ||f - y|| <= epsilon ||f_0 - y||
  std::size_t iterations = 0;   // T; 0: ceil(log2(1 / epsilon))
  TrainMode mode = TrainMode::sublinear;
  bool record_phase_times = true;
  bool early_exit = true;
  bool verify_forest = false;   // full check of 3 random trees after each step
  double gd_learning_rate = 0;  // 0: 1 / trace(G_0)
  unsigned threads = 1;

  /// Width m, data shape, seed; b = sqrt(0.48 ln m).
  static TrainerConfig defaults(std::size_t m, std::size_t d, std::size_t n, std::uint64_t seed);
  static std::size_t auto_iterations(double epsilon);
};

struct StepRecord {
  std::size_t t = 0;
  double loss_before = 0.0;  // ||f_t - y||
  double loss_after = 0.0;   // ||f_{t+1} - y||
  double halving_ratio = 0.0;
  std::size_t fire_min = 0;
  double fire_mean = 0.0;
  std::size_t fire_max = 0;
  std::size_t update_size = 0;  // |K|, also the number of forest updates
  std::size_t regression_iters = 0;
  double residual = 0.0;
  bool converged = true;
  double ridge = 0.0;
  double max_drift = 0.0;  // running max over r, t of sqrt(m) ||w_r(t) - w_r(0)||
  double query_seconds = 0.0;
  double sketch_seconds = 0.0;
  double regression_seconds = 0.0;
  double maintenance_seconds = 0.0;
  Vector g;  // regression solution, not serialised

  double total_seconds() const noexcept {
    return query_seconds + sketch_seconds + regression_seconds + maintenance_seconds;
  }
};

struct TrainReport {
  TrainerConfig config;  // fully resolved
  double lambda_est = 0.0;
  double separability = 0.0;
  double init_seconds = 0.0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  bool converged = true;
  std::string stop_reason;
  std::vector<std::string> warnings;
  std::vector<StepRecord> steps;
  std::string weights_digest;
};

/// One training run. Construction performs the one-time O(m n d) set-up:
/// weight initialisation, forest init (sublinear mode) and the initial fire
/// sets and predictions; init_seconds() covers all of it. The trainer owns its
/// state exclusively.
class Trainer {
 public:
  Trainer(const TrainerConfig& config, Dataset data);
  /// Starts from the given weights instead of init_weights(config.network).
  Trainer(const TrainerConfig& config, Dataset data, WeightMatrix initial);

  /// One iteration: sketch, regression, weight maintenance.
  /// Throws NumericalError on a NaN loss.
  StepRecord step();
  /// One iteration with the regression replaced by the given g (sublinear mode).
  StepRecord step_with(std::span<const double> g);

  /// Runs until T iterations, the target loss, or a failed regression.
  TrainReport run();

  const TrainerConfig& config() const noexcept { return config_; }
  const Dataset& data() const noexcept { return data_; }
  const WeightMatrix& weights() const noexcept { return w_; }
  const ThresholdForest* forest() const noexcept { return forest_ ? &*forest_ : nullptr; }
  const FireSet& fire() const noexcept { return fire_; }
  std::span<const double> predictions() const noexcept { return f_; }
  double residual_norm() const;
  std::size_t iteration() const noexcept { return t_; }
  double lambda_est() const noexcept { return lambda_est_; }
  double init_seconds() const noexcept { return init_seconds_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

 private:
  void initialise();
  void refresh_predictions();
  void fill_fire_stats(StepRecord& rec) const;
  void track_drift(std::size_t r);
  StepRecord sublinear_step(std::optional<std::span<const double>> forced_g);
  StepRecord dense_step();
  void verify_forest_sample() const;

  static WeightMatrix timed_init_weights(const TrainerConfig& config, const Dataset& data,
                                         double& seconds);

  TrainerConfig config_;
  Dataset data_;
  double init_seconds_ = 0.0;  // declared before w_: the weight draw is timed into it
  WeightMatrix w_;
  WeightMatrix w0_;
  std::optional<ThresholdForest> forest_;
  FireSet fire_;
  Vector f_;
  std::size_t t_ = 0;
  double lambda_est_ = 0.0;
  double separability_ = 0.0;
  double max_drift_ = 0.0;
  double gd_lr_ = 0.0;
  std::vector<std::string> warnings_;
  Matrix dense_workspace_;
};

TrainReport train(const TrainerConfig& config, const Dataset& data);

/// FNV-1a over the raw bytes of the weights, as 16 hex digits.
std::string weights_digest(const WeightMatrix& w);

}  // namespace sparsegn

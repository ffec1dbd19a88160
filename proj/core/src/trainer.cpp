#include "sparsegn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>

#include "sparsegn/baselines.hpp"
#include "sparsegn/kernel.hpp"
#include "sparsegn/rng.hpp"

namespace sparsegn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Phase timer that is a no-op when timing is disabled, so reports stay
// byte-identical across runs.
class PhaseTimer {
 public:
  explicit PhaseTimer(bool enabled) : enabled_(enabled) {
    if (enabled_) start_ = Clock::now();
  }
  double lap() {
    if (!enabled_) return 0.0;
    const auto now = Clock::now();
    const double s = std::chrono::duration<double>(now - start_).count();
    start_ = now;
    return s;
  }

 private:
  bool enabled_;
  Clock::time_point start_;
};

constexpr double kLambdaFloor = 1e-12;

}  // namespace

TrainMode parse_train_mode(const std::string& s) {
  if (s == "sublinear") return TrainMode::sublinear;
  if (s == "dense_gn") return TrainMode::dense_gn;
  if (s == "gd_baseline") return TrainMode::gd_baseline;
  throw std::invalid_argument("unknown mode '" + s + "' (expected sublinear, dense_gn or gd_baseline)");
}

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::sublinear: return "sublinear";
    case TrainMode::dense_gn: return "dense_gn";
    case TrainMode::gd_baseline: return "gd_baseline";
  }
  return "unknown";
}

TrainerConfig TrainerConfig::defaults(std::size_t m, std::size_t d, std::size_t n,
                                      std::uint64_t seed) {
  TrainerConfig c;
  c.network = {m, d, n, NetworkConfig::auto_shift(m), seed};
  c.sketch.seed = derive_seed(seed, 0x5e7c);
  return c;
}

std::size_t TrainerConfig::auto_iterations(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  return static_cast<std::size_t>(std::ceil(std::log2(1.0 / epsilon)));
}

WeightMatrix Trainer::timed_init_weights(const TrainerConfig& config, const Dataset& data,
                                         double& seconds) {
  const auto start = Clock::now();
  NetworkConfig net = config.network;
  net.n = data.n();
  net.d = data.d();
  WeightMatrix w = init_weights(net);
  seconds = seconds_since(start);
  return w;
}

Trainer::Trainer(const TrainerConfig& config, Dataset data)
    : config_(config),
      data_(std::move(data)),
      w_(timed_init_weights(config_, data_, init_seconds_)),
      w0_(w_) {
  const auto start = Clock::now();
  initialise();
  init_seconds_ += seconds_since(start);
}

Trainer::Trainer(const TrainerConfig& config, Dataset data, WeightMatrix initial)
    : config_(config), data_(std::move(data)), w_(std::move(initial)), w0_(w_) {
  const auto start = Clock::now();
  initialise();
  init_seconds_ = seconds_since(start);
}

void Trainer::initialise() {
  const std::size_t n = data_.n();
  config_.network.n = n;
  config_.network.d = data_.d();
  config_.network.validate();
  if (w_.m() != config_.network.m || w_.d() != data_.d())
    throw std::invalid_argument("Trainer: initial weights do not match the configured shape");
  if (config_.network.m < n) throw std::invalid_argument("Trainer: need m >= n");
  if (config_.iterations == 0) config_.iterations = TrainerConfig::auto_iterations(config_.epsilon);
  else if (!(config_.epsilon > 0.0 && config_.epsilon < 1.0))
    throw std::invalid_argument("Trainer: epsilon must lie in (0, 1)");
  config_.sketch = config_.sketch.resolved(n);

  const double b = config_.network.b;
  if (n >= 2) {
    if (!data_.separability()) data_.cache_separability(separability(data_).delta);
    separability_ = *data_.separability();
  } else {
    separability_ = std::sqrt(2.0);
  }
  lambda_est_ = config_.regression.lambda_est;
  if (!(lambda_est_ > 0.0)) {
    lambda_est_ = lambda_lower_bound(b, separability_, n);
    if (!(lambda_est_ > kLambdaFloor)) {
      warnings_.push_back("separability lower bound on lambda is zero; using 1e-12");
      lambda_est_ = kLambdaFloor;
    }
  }
  config_.regression.lambda_est = lambda_est_;
  config_.regression = config_.regression.resolved(n);

  const double nd = static_cast<double>(n);
  const double m_needed = std::pow(nd / lambda_est_, 4.0);
  if (static_cast<double>(config_.network.m) < m_needed) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "m = %zu is below the width heuristic (n/lambda)^4 = %.3g",
                  config_.network.m, m_needed);
    warnings_.emplace_back(buf);
  }

  if (config_.mode == TrainMode::sublinear) {
    forest_.emplace(w_.flat(), data_.points(), data_.d());
  }
  refresh_predictions();

  if (config_.mode == TrainMode::gd_baseline) {
    gd_lr_ = config_.gd_learning_rate;
    if (!(gd_lr_ > 0.0)) {
      double trace = 0.0;
      for (std::size_t i = 0; i < n; ++i) trace += static_cast<double>(fire_[i].size());
      trace /= static_cast<double>(w_.m());
      gd_lr_ = trace > 0.0 ? 1.0 / trace : 1.0;
    }
    config_.gd_learning_rate = gd_lr_;
  }
}

void Trainer::refresh_predictions() {
  const double b = config_.network.b;
  if (forest_) {
    fire_ = query_fire_sets(*forest_, b, config_.threads);
  } else {
    fire_.sets.assign(data_.n(), {});
    for (std::size_t i = 0; i < data_.n(); ++i) fire_.sets[i] = scan_fire_row(w_, data_.point(i), b);
  }
  f_ = sparsegn::predictions(w_, b, data_, fire_);
}

double Trainer::residual_norm() const {
  double s = 0.0;
  for (std::size_t i = 0; i < f_.size(); ++i) s += (f_[i] - data_.label(i)) * (f_[i] - data_.label(i));
  return std::sqrt(s);
}

void Trainer::fill_fire_stats(StepRecord& rec) const {
  rec.fire_min = fire_.min_size();
  rec.fire_mean = fire_.mean_size();
  rec.fire_max = fire_.max_size();
}

void Trainer::track_drift(std::size_t r) {
  const auto now = w_.row(r);
  const auto start = w0_.row(r);
  double s = 0.0;
  for (std::size_t c = 0; c < now.size(); ++c) s += (now[c] - start[c]) * (now[c] - start[c]);
  max_drift_ = std::max(max_drift_, std::sqrt(s * static_cast<double>(w_.m())));
}

StepRecord Trainer::step() {
  return config_.mode == TrainMode::sublinear ? sublinear_step(std::nullopt) : dense_step();
}

StepRecord Trainer::step_with(std::span<const double> g) {
  if (config_.mode != TrainMode::sublinear)
    throw std::logic_error("step_with: only available in sublinear mode");
  if (g.size() != data_.n()) throw std::invalid_argument("step_with: g must have length n");
  return sublinear_step(g);
}

StepRecord Trainer::sublinear_step(std::optional<std::span<const double>> forced_g) {
  const std::size_t n = data_.n();
  StepRecord rec;
  rec.t = ++t_;
  rec.loss_before = residual_norm();
  fill_fire_stats(rec);
  PhaseTimer timer(config_.record_phase_times);

  // Sketch computing: the fire sets are already current (queried after the
  // previous update), so only the implicit Jacobian and B = S A are built here.
  const SparseJacobian jac(w_, data_, fire_);
  Vector g;
  if (forced_g) {
    g.assign(forced_g->begin(), forced_g->end());
    rec.sketch_seconds = timer.lap();
  } else {
    SketchSpec spec_t = config_.sketch;
    spec_t.seed = derive_seed(config_.sketch.seed, rec.t);
    const SketchOperator op = build_sketch(spec_t, jac.cols());
    const Matrix b_sketch = sketch_jacobian(op, jac);
    rec.sketch_seconds = timer.lap();

    // Iterative regression.
    Vector y_reg(n);
    for (std::size_t i = 0; i < n; ++i) y_reg[i] = f_[i] - data_.label(i);
    const double trace = jac.gram_trace();
    if (trace == 0.0) {
      // No neuron fires: J = 0 and the pseudo-inverse step is zero.
      g.assign(n, 0.0);
      rec.converged = norm2(y_reg) < config_.regression.tolerance(norm2(y_reg));
    } else {
      std::optional<Preconditioner> precond;
      try {
        precond.emplace(qr_precondition(b_sketch));
      } catch (const RankDeficientError&) {
        rec.ridge = 1e-8 * trace / static_cast<double>(n);
        precond.emplace(qr_precondition(b_sketch, rec.ridge));
      }
      const double ridge = rec.ridge;
      const GramOperator apply_m = [&jac, ridge](std::span<const double> v) {
        Vector out = jac.apply_gram(v);
        if (ridge > 0.0)
          for (std::size_t i = 0; i < out.size(); ++i) out[i] += ridge * v[i];
        return out;
      };
      RegressionResult res = solve(apply_m, *precond, y_reg, config_.regression);
      rec.regression_iters = res.iterations;
      rec.residual = res.final_residual;
      rec.converged = res.converged;
      g = std::move(res.g);
    }
    rec.regression_seconds = timer.lap();
    if (!rec.converged) {
      rec.loss_after = rec.loss_before;
      rec.halving_ratio = 1.0;
      rec.max_drift = max_drift_;
      rec.g = std::move(g);
      return rec;
    }
  }

  // Implicit weight maintenance: only neurons in K = supp(J^T g) move.
  const SparseUpdate delta = jac.apply_jt(g);
  for (std::size_t k = 0; k < delta.neurons.size(); ++k) {
    const std::size_t r = delta.neurons[k];
    auto row = w_.row(r);
    const auto dr = delta.delta(k);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] -= dr[c];
    forest_->update(r, row);
    track_drift(r);
  }
  rec.update_size = delta.neurons.size();
  rec.maintenance_seconds = timer.lap();

  refresh_predictions();
  rec.query_seconds = timer.lap();
  if (config_.verify_forest) verify_forest_sample();

  rec.loss_after = residual_norm();
  if (std::isnan(rec.loss_after)) throw NumericalError("training loss became NaN at step " + std::to_string(rec.t));
  rec.halving_ratio = rec.loss_before > 0.0 ? rec.loss_after / rec.loss_before : 0.0;
  rec.max_drift = max_drift_;
  rec.g = std::move(g);
  return rec;
}

StepRecord Trainer::dense_step() {
  const double b = config_.network.b;
  StepRecord rec;
  rec.t = ++t_;
  rec.loss_before = residual_norm();
  fill_fire_stats(rec);
  PhaseTimer timer(config_.record_phase_times);

  WeightMatrix next = [&] {
    if (config_.mode == TrainMode::dense_gn) {
      DenseStep ds = dense_gauss_newton_step(w_, data_, b, dense_workspace_);
      rec.g = std::move(ds.g);
      return std::move(ds.next);
    }
    return gd_step(w_, data_, b, gd_lr_);
  }();
  rec.regression_seconds = timer.lap();

  for (std::size_t r = 0; r < w_.m(); ++r) {
    const auto a = w_.row(r);
    const auto z = next.row(r);
    if (!std::equal(a.begin(), a.end(), z.begin())) ++rec.update_size;
  }
  w_ = std::move(next);
  for (std::size_t r = 0; r < w_.m(); ++r) track_drift(r);
  rec.maintenance_seconds = timer.lap();

  refresh_predictions();
  rec.query_seconds = timer.lap();

  rec.loss_after = residual_norm();
  if (std::isnan(rec.loss_after)) throw NumericalError("training loss became NaN at step " + std::to_string(rec.t));
  rec.halving_ratio = rec.loss_before > 0.0 ? rec.loss_after / rec.loss_before : 0.0;
  rec.max_drift = max_drift_;
  return rec;
}

void Trainer::verify_forest_sample() const {
  Rng rng(derive_seed(config_.network.seed, 0xf0e5 + t_));
  std::uniform_int_distribution<std::size_t> pick(0, data_.n() - 1);
  for (int k = 0; k < 3; ++k) {
    const std::size_t i = pick(rng);
    if (!forest_->verify_tree(i))
      throw std::logic_error("forest tree " + std::to_string(i) + " is inconsistent with the weights");
  }
}

TrainReport Trainer::run() {
  TrainReport report;
  report.lambda_est = lambda_est_;
  report.separability = separability_;
  report.init_seconds = init_seconds_;
  report.initial_loss = residual_norm();
  report.final_loss = report.initial_loss;

  if (report.initial_loss == 0.0) {
    report.stop_reason = "initial predictions fit the labels";
  } else {
    const double target = config_.epsilon * report.initial_loss;
    report.stop_reason = "iteration cap reached";
    while (t_ < config_.iterations) {
      StepRecord rec;
      try {
        rec = step();
      } catch (const NumericalError& e) {
        report.converged = false;
        report.stop_reason = e.what();
        break;
      }
      report.final_loss = rec.loss_after;
      const bool ok = rec.converged;
      report.steps.push_back(std::move(rec));
      if (!ok) {
        report.converged = false;
        report.stop_reason = "regression did not converge";
        break;
      }
      if (config_.early_exit && report.final_loss <= target) {
        report.stop_reason = "target loss reached";
        break;
      }
    }
  }
  report.config = config_;
  report.warnings = warnings_;
  report.weights_digest = weights_digest(w_);
  return report;
}

TrainReport train(const TrainerConfig& config, const Dataset& data) {
  Trainer trainer(config, data);
  return trainer.run();
}

std::string weights_digest(const WeightMatrix& w) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* p, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t k = 0; k < len; ++k) {
      h ^= bytes[k];
      h *= 0x100000001b3ULL;
    }
  };
  mix(w.flat().data(), w.flat().size() * sizeof(double));
  mix(w.signs().data(), w.signs().size() * sizeof(double));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sparsegn

#include "sparsegn/report_io.hpp"

#include <iomanip>
#include <ostream>

#include "json.hpp"

namespace sparsegn {

namespace {

using nlohmann::ordered_json;

ordered_json to_json(const TrainerConfig& c) {
  ordered_json j;
  j["mode"] = to_string(c.mode);
  j["network"] = {{"m", c.network.m}, {"d", c.network.d}, {"n", c.network.n},
                  {"b", c.network.b}, {"seed", c.network.seed}};
  j["sketch"] = {{"eps", c.sketch.eps},
                 {"delta", c.sketch.delta ? ordered_json(*c.sketch.delta) : ordered_json()},
                 {"rows", c.sketch.rows},
                 {"c_s", c.sketch.c_s},
                 {"seed", c.sketch.seed},
                 {"mode", c.sketch.mode == SketchMode::sparse_embedding ? "sparse_embedding" : "gaussian"}};
  j["regression"] = {{"lambda_est", c.regression.lambda_est},
                     {"eps_reg", c.regression.eps_reg},
                     {"max_iters", c.regression.max_iters}};
  j["epsilon"] = c.epsilon;
  j["iterations"] = c.iterations;
  j["early_exit"] = c.early_exit;
  j["record_phase_times"] = c.record_phase_times;
  j["gd_learning_rate"] = c.gd_learning_rate;
  j["threads"] = c.threads;
  return j;
}

}  // namespace

void write_report_csv(std::ostream& os, const TrainReport& report) {
  os << "t,loss_before,loss_after,halving_ratio,fire_min,fire_mean,fire_max,update_size,"
        "regression_iters,residual,converged,ridge,max_drift\n";
  os << std::setprecision(17);
  for (const auto& s : report.steps) {
    os << s.t << ',' << s.loss_before << ',' << s.loss_after << ',' << s.halving_ratio << ','
       << s.fire_min << ',' << s.fire_mean << ',' << s.fire_max << ',' << s.update_size << ','
       << s.regression_iters << ',' << s.residual << ',' << (s.converged ? 1 : 0) << ','
       << s.ridge << ',' << s.max_drift << '\n';
  }
}

void write_timings_csv(std::ostream& os, const TrainReport& report) {
  os << "t,query_s,sketch_s,regression_s,maintenance_s,total_s\n";
  os << std::setprecision(9);
  for (const auto& s : report.steps) {
    os << s.t << ',' << s.query_seconds << ',' << s.sketch_seconds << ',' << s.regression_seconds
       << ',' << s.maintenance_seconds << ',' << s.total_seconds() << '\n';
  }
}

std::string config_json(const TrainerConfig& config, int indent) {
  return to_json(config).dump(indent);
}

std::string report_json(const TrainReport& report, int indent) {
  ordered_json j;
  j["schema"] = kReportSchema;
  j["config"] = to_json(report.config);
  j["lambda_est"] = report.lambda_est;
  j["separability"] = report.separability;
  j["init_seconds"] = report.init_seconds;
  j["initial_loss"] = report.initial_loss;
  j["final_loss"] = report.final_loss;
  j["converged"] = report.converged;
  j["stop_reason"] = report.stop_reason;
  j["warnings"] = report.warnings;
  j["weights_digest"] = report.weights_digest;
  ordered_json steps = ordered_json::array();
  for (const auto& s : report.steps) {
    steps.push_back({{"t", s.t},
                     {"loss_before", s.loss_before},
                     {"loss_after", s.loss_after},
                     {"halving_ratio", s.halving_ratio},
                     {"fire_min", s.fire_min},
                     {"fire_mean", s.fire_mean},
                     {"fire_max", s.fire_max},
                     {"update_size", s.update_size},
                     {"regression_iters", s.regression_iters},
                     {"residual", s.residual},
                     {"converged", s.converged},
                     {"ridge", s.ridge},
                     {"max_drift", s.max_drift},
                     {"query_s", s.query_seconds},
                     {"sketch_s", s.sketch_seconds},
                     {"regression_s", s.regression_seconds},
                     {"maintenance_s", s.maintenance_seconds}});
  }
  j["steps"] = std::move(steps);
  return j.dump(indent);
}

}  // namespace sparsegn

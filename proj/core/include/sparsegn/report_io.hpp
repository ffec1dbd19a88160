#pragma once

#include <iosfwd>
#include <string>

#include "sparsegn/trainer.hpp"

namespace sparsegn {

inline constexpr const char* kReportSchema = "sparsegn.report.v1";

/// One row per iteration. Columns, in order:
///   t, loss_before, loss_after, halving_ratio, fire_min, fire_mean, fire_max,
///   update_size, regression_iters, residual, converged, ridge, max_drift
/// Wall-clock columns are deliberately absent so that identical runs produce
/// identical bytes; they live in the timings CSV.
void write_report_csv(std::ostream& os, const TrainReport& report);

/// Columns: t, query_s, sketch_s, regression_s, maintenance_s, total_s
void write_timings_csv(std::ostream& os, const TrainReport& report);

/// Full report, configuration and timings included, as a JSON document.
std::string report_json(const TrainReport& report, int indent = 2);

/// Resolved trainer configuration as a JSON object.
std::string config_json(const TrainerConfig& config, int indent = 2);

}  // namespace sparsegn

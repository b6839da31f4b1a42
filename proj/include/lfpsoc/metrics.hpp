// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "lfpsoc/ammkf.hpp"
#include "lfpsoc/osc.hpp"

namespace lfp {

struct Metrics {
    double rmse = 0.0;
    double mae = 0.0;
    double max_abs_error = 0.0;
    // Seconds until |error| stays below the threshold for the rest of the run;
    // empty when the last sample is still above it.
    std::optional<double> convergence_time_s;
    double final_quarter_rmse = 0.0;
};

constexpr double kConvergenceThreshold = 0.05;

Metrics compute_metrics(std::span<const double> est, std::span<const double> truth, double dt = 1.0);

struct OscMetrics {
    double corrected_mae = 0.0;  // point cloud vs true curve
    double original_mae = 0.0;   // filter curve vs true curve at the same SOCs
    std::size_t points = 0;
};

OscMetrics osc_correction_metrics(std::span<const CorrectedPoint> points, const OscCurve& true_curve,
                                  const OscCurve& original_curve);

// Sample autocorrelation of `x` (mean removed) at lags 1..max_lag.
std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag);

}  // namespace lfp

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "lfpsoc/ekf.hpp"
#include "lfpsoc/innovation.hpp"

namespace lfp {

enum class CurrentMode { Charge, Discharge };

struct BankConfig {
    std::size_t n = 7;
    std::size_t interval_length = 20;
    double spread = 2.0;
    double slope_floor = 1e-4;
    double probability_floor = 1e-6;
    // Each interval anchors at the previous optimal affine model's end value;
    // when false every interval re-anchors on the original curve.
    bool chain_anchors = true;
    bool parallel = false;
    SignThresholds thresholds;
    ConvergenceConfig convergence;

    // n = 1 is accepted (degenerate bank, plain EKF).
    void validate() const;
};

std::vector<double> build_slope_set(double base_slope, const ErrorSignVerdict& verdict, CurrentMode mode,
                                    const BankConfig& cfg);

// Predicted terminal voltage of `filter` at `prior`; with a slope override this is
// the affine model anchor_ocv + s * (soc- - anchor_soc) - up- - R0 * I.
double predicted_measurement_mean(const KfState& filter, const BatteryState& prior, double current,
                                  const EcmParams& params);

double likelihood(double y, double mean, double s);

struct ProbabilityUpdate {
    std::vector<double> probs;
    bool reset = false;  // every product underflowed, back to uniform
};

ProbabilityUpdate update_probabilities(std::span<const double> probs, std::span<const double> densities,
                                       double floor = 1e-6);

struct FilterBank {
    std::vector<KfState> filters;
    std::vector<double> probabilities;
    std::size_t interval_index = 0;
    std::vector<std::vector<double>> innovations;  // per filter, current interval
    BatteryState anchor{};
    double anchor_ocv = 0.0;
};

// All filters start from `start`; with `slope_override` false the filters use the
// curve directly (only meaningful for a single filter).
FilterBank make_bank(const KfState& start, double anchor_ocv, std::span<const double> slopes,
                     std::size_t interval_index, bool slope_override = true);

struct CorrectedPoint {
    double soc;
    double ocv;
    std::size_t interval;
};

struct IntervalResult {
    std::size_t optimal_index = 0;  // zero-based
    std::vector<double> soc_trace;
    std::vector<double> up_trace;
    std::vector<CorrectedPoint> corrected_osc_points;
    BatteryState final_state{};
    Eigen::Matrix2d final_p = Eigen::Matrix2d::Zero();
    IntervalInnovations innovations;  // optimal filter
    std::vector<double> final_probabilities;
    std::vector<std::vector<double>> probability_trace;  // one vector per step
    std::vector<StepOutput> steps;                       // optimal filter
    bool probability_reset = false;
    bool degenerate = false;  // at least one filter hit a numerical failure
};

// Steps the bank over samples [start, start + length). The sample before `start`
// supplies the predict current; start == 0 runs update-only on the first sample.
IntervalResult run_interval(FilterBank& bank, const Trace& trace, std::size_t start, std::size_t length,
                            std::span<const EcmParams> params, const SimConfig& sim, const BankConfig& cfg);

struct IntervalDiagnostics {
    std::size_t interval = 0;
    std::size_t start = 0;
    int phase = 1;
    double ccm = 0.0;
    double acm_emp = 0.0;
    double acm_theo = 0.0;
    ErrorSign verdict = ErrorSign::Indeterminate;
    std::size_t optimal_index = 0;  // zero-based
    double prob_max = 1.0;
    double base_slope = 0.0;
    double optimal_slope = 0.0;
    double anchor_ocv = 0.0;
    bool probability_reset = false;
    bool degenerate = false;
};

struct AmmkfResult {
    std::vector<double> soc;
    std::vector<double> up;
    std::vector<double> innovation;
    std::vector<CorrectedPoint> osc_points;
    std::vector<IntervalDiagnostics> diagnostics;
    std::vector<IntervalInnovations> history;
    std::vector<std::vector<double>> probability_trace;
    std::optional<std::size_t> handoff_step;
};

// `initial.curve` is the original curve used by phase 1 and as the slope base.
AmmkfResult run_ammkf(const Trace& trace, const KfState& initial, std::span<const EcmParams> params,
                      const BankConfig& cfg, const SimConfig& sim);

}  // namespace lfp

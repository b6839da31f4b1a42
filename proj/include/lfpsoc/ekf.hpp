// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "lfpsoc/ecm.hpp"
#include "lfpsoc/osc.hpp"

namespace lfp {

struct NoiseConfig {
    Eigen::Matrix2d q = Eigen::Vector2d(1e-10, 1e-6).asDiagonal();
    double r = 1e-4;

    void validate() const;
};

// Replaces the curve in the measurement model by the affine form
// ocv ~ anchor_ocv + slope * (soc - anchor_soc) over one interval.
struct SlopeOverride {
    double slope;
    double anchor_soc;
    double anchor_ocv;
};

struct KfState {
    BatteryState x;
    Eigen::Matrix2d p;
    NoiseConfig noise;
    std::shared_ptr<const OscCurve> curve;
    std::optional<SlopeOverride> slope_override;
};

struct Prior {
    BatteryState x;
    Eigen::Matrix2d p;
    bool clamped = false;
};

struct StepOutput {
    Prior prior;
    Prior posterior;
    double innovation = 0.0;
    double innovation_variance = 0.0;
    Eigen::Vector2d gain = Eigen::Vector2d::Zero();
    Eigen::RowVector2d h = Eigen::RowVector2d::Zero();
    bool soc_clamped = false;
};

Eigen::Matrix2d transition_matrix(const EcmParams& params, const SimConfig& cfg);
Eigen::Vector2d input_vector(const EcmParams& params, const SimConfig& cfg);

// x- = F x+ + G u, P- = F P+ F' + Q. The prior SOC is clamped to [0, 1].
Prior predict(const KfState& state, const EcmParams& params, double current, const SimConfig& cfg);

Eigen::RowVector2d measurement_jacobian(const KfState& state, double prior_soc);

// Measurement model h(x-) without the -R0*I term.
double measurement_h(const KfState& state, const BatteryState& prior);

StepOutput update(const KfState& state, const Prior& prior, double measured_ut, double current,
                  const EcmParams& params);

// Writes the posterior of `out` back into `state`.
void commit(KfState& state, const StepOutput& out);

// A prior equal to the current posterior; used for the first sample.
Prior as_prior(const KfState& state);

// One filter step for sample k > 0 (predict with the previous current, update with
// the current sample), or update only when `prev_current` is empty.
StepOutput filter_step(KfState& state, const EcmParams& params, std::optional<double> prev_current,
                       double current, double measured_ut, const SimConfig& cfg);

// `params` holds either one entry (constant) or one entry per trace sample.
std::vector<StepOutput> run_ekf(const KfState& initial, std::span<const EcmParams> params,
                                const Trace& trace, const SimConfig& cfg);

const EcmParams& params_at(std::span<const EcmParams> params, std::size_t k);

}  // namespace lfp

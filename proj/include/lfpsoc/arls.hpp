// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "lfpsoc/ecm.hpp"

namespace lfp {

struct ArlsConfig {
    double a = 0.1;
    double lambda_min = 0.95;
    double eps_soc = 0.01;
    double p0 = 1e3;
    Eigen::Vector3d theta0{0.99, -0.05, 0.04};
    std::size_t warmup = 100;
    // Forgetting factor used when no SOC feedback is supplied.
    double lambda_const = 0.999;
    // Only update while the fed-back SOC is inside [plateau_lo, plateau_hi].
    bool plateau_only_identification = false;
    double plateau_lo = 0.2;
    double plateau_hi = 0.8;

    void validate() const;
};

struct RegressorState {
    Eigen::Vector3d theta;
    Eigen::Matrix3d p;
    double a = 0.1;
    double prev_ut[2] = {0.0, 0.0};  // U_t(k-1), U_t(k-2)
    double prev_il[2] = {0.0, 0.0};  // I_L(k-1), I_L(k-2)
    double soc_feedback[2] = {0.0, 0.0};  // SOC(k-1), SOC(k-2)
    std::size_t seen = 0;

    static RegressorState initial(const ArlsConfig& cfg);
};

struct RegressorSample {
    Eigen::RowVector3d a_row;
    double y;
};

RegressorSample build_sample(double ut_k, double ut_km1, double ut_km2, double il_k, double il_km1,
                             double il_km2);

struct ForgettingFactor {
    double lambda;
    bool degenerate = false;
};

ForgettingFactor forgetting_factor(double soc_km1, double soc_km2, double a,
                                   double lambda_min = 0.95, double eps_soc = 0.01);

RegressorState arls_step(const RegressorState& state, const RegressorSample& sample, double lambda);

// theta = [exp(-dt/tau), -R0, exp(-dt/tau) R0 - (1 - exp(-dt/tau)) Rp]
Eigen::Vector3d circuit_to_theta(const EcmParams& params, double dt);
EcmParams theta_to_circuit(const Eigen::Vector3d& theta, double dt);

struct ObserveResult {
    RegressorState state;
    double lambda;
    bool updated = false;  // a sample was formed and applied
    bool gap = false;      // numerical degeneracy, update skipped
};

// Streaming form: feeds one measurement, forms the difference sample once two
// earlier measurements are held. `soc_prev` is the posterior SOC of the
// previous step, or empty when no feedback is available.
ObserveResult arls_observe(const RegressorState& state, double ut, double il,
                           std::optional<double> soc_prev, const ArlsConfig& cfg);

struct ParamEstimate {
    std::size_t index;  // trace sample index
    double t;
    EcmParams params;
    double lambda;
    bool held = false;  // extraction failed, last valid params repeated
    bool gap = false;   // numerical degeneracy at this step, update skipped
    double p_trace = 0.0;
    // The current input never excited some direction: the covariance block of
    // the two current-difference regressors keeps an eigenvalue of at least p0 / 2.
    bool unidentifiable = false;
};

// Runs the recursion over a trace. Output starts at sample `warmup`.
std::vector<ParamEstimate> identify_stream(const Trace& trace, std::span<const double> soc_feedback,
                                           const ArlsConfig& cfg);

// Per-sample parameters for a filter: the warmup span holds `prior`, later
// samples take the identified values.
std::vector<EcmParams> params_per_sample(const std::vector<ParamEstimate>& est, std::size_t n,
                                         const EcmParams& prior);

}  // namespace lfp

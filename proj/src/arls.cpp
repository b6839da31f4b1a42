// SPDX-License-Identifier: Apache-2.0
#include "lfpsoc/arls.hpp"

#include <algorithm>
#include <cmath>

#include "lfpsoc/errors.hpp"

namespace lfp {

void ArlsConfig::validate() const
{
    if (!(a >= 0.0))
        throw ConfigError("forgetting gain a must be >= 0");
    if (!(lambda_min > 0.0 && lambda_min <= 1.0))
        throw ConfigError("lambda_min must be in (0, 1]");
    if (!(lambda_const > 0.0 && lambda_const <= 1.0))
        throw ConfigError("lambda_const must be in (0, 1]");
    if (!(eps_soc > 0.0))
        throw ConfigError("eps_soc must be positive");
    if (!(p0 > 0.0))
        throw ConfigError("p0 must be positive");
}

RegressorState RegressorState::initial(const ArlsConfig& cfg)
{
    RegressorState s;
    s.theta = cfg.theta0;
    s.p = cfg.p0 * Eigen::Matrix3d::Identity();
    s.a = cfg.a;
    return s;
}

RegressorSample build_sample(double ut_k, double ut_km1, double ut_km2, double il_k, double il_km1,
                             double il_km2)
{
    RegressorSample s;
    s.a_row << ut_km1 - ut_km2, il_k - il_km1, il_km1 - il_km2;
    s.y = ut_k - ut_km1;
    if (!s.a_row.allFinite() || !std::isfinite(s.y))
        throw InvalidInput("non-finite regressor sample");
    return s;
}

ForgettingFactor forgetting_factor(double soc_km1, double soc_km2, double a, double lambda_min,
                                   double eps_soc)
{
    if (soc_km2 <= eps_soc)
        return {lambda_min, true};
    double lam = 1.0 - a * std::abs(soc_km1 - 0.5) * soc_km1 / soc_km2;
    return {std::clamp(lam, lambda_min, 1.0), false};
}

RegressorState arls_step(const RegressorState& state, const RegressorSample& sample, double lambda)
{
    if (!(lambda > 0.0 && lambda <= 1.0))
        throw InvalidInput("forgetting factor must be in (0, 1]");
    const Eigen::RowVector3d& a = sample.a_row;
    Eigen::Vector3d pa = state.p * a.transpose();
    double denom = lambda + a.dot(pa);
    if (!(denom >= 1e-15))
        throw NumericalDegeneracy("RLS gain denominator below 1e-15");
    Eigen::Vector3d k = pa / denom;

    RegressorState out = state;
    out.theta = state.theta + k * (sample.y - a.dot(state.theta));
    Eigen::Matrix3d p = (Eigen::Matrix3d::Identity() - k * a) * state.p / lambda;
    out.p = 0.5 * (p + p.transpose());
    return out;
}

Eigen::Vector3d circuit_to_theta(const EcmParams& params, double dt)
{
    params.validate();
    double e = std::exp(-dt / params.tau());
    return {e, -params.r0, e * params.r0 - (1.0 - e) * params.rp};
}

EcmParams theta_to_circuit(const Eigen::Vector3d& theta, double dt)
{
    double t1 = theta(0), t2 = theta(1), t3 = theta(2);
    if (!theta.allFinite())
        throw PhysicalityError("non-finite theta");
    if (!(t1 > 0.0 && t1 < 1.0))
        throw PhysicalityError("theta1 outside (0, 1): no valid time constant");
    double c = t1 * t2 + t3;
    if (c == 0.0)
        throw PhysicalityError("theta1*theta2 + theta3 is zero");
    EcmParams p{-t2, c / (t1 - 1.0), (1.0 - t1) * dt / (std::log(t1) * c)};
    if (!(p.r0 > 0.0) || !(p.rp > 0.0) || !(p.cp > 0.0) || !std::isfinite(p.cp))
        throw PhysicalityError("identified circuit parameters are not all positive");
    return p;
}

ObserveResult arls_observe(const RegressorState& state, double ut, double il,
                           std::optional<double> soc_prev, const ArlsConfig& cfg)
{
    ObserveResult r{state, cfg.lambda_const};
    RegressorState& st = r.state;
    if (soc_prev && st.seen >= 2) {
        auto ff = forgetting_factor(*soc_prev, st.soc_feedback[0], cfg.a, cfg.lambda_min, cfg.eps_soc);
        r.lambda = ff.lambda;
    }
    bool active = st.seen >= 2;
    if (active && soc_prev && cfg.plateau_only_identification)
        active = *soc_prev >= cfg.plateau_lo && *soc_prev <= cfg.plateau_hi;
    if (active) {
        auto smp = build_sample(ut, st.prev_ut[0], st.prev_ut[1], il, st.prev_il[0], st.prev_il[1]);
        try {
            RegressorState next = arls_step(st, smp, r.lambda);
            st.theta = next.theta;
            st.p = next.p;
            r.updated = true;
        } catch (const NumericalDegeneracy&) {
            r.gap = true;
        }
    }
    st.prev_ut[1] = st.prev_ut[0];
    st.prev_ut[0] = ut;
    st.prev_il[1] = st.prev_il[0];
    st.prev_il[0] = il;
    if (soc_prev) {
        st.soc_feedback[1] = st.soc_feedback[0];
        st.soc_feedback[0] = *soc_prev;
    }
    ++st.seen;
    return r;
}

std::vector<ParamEstimate> identify_stream(const Trace& trace, std::span<const double> soc_feedback,
                                           const ArlsConfig& cfg)
{
    cfg.validate();
    const bool feedback = !soc_feedback.empty();
    if (feedback && soc_feedback.size() != trace.size())
        throw InvalidInput("soc feedback length does not match the trace");

    RegressorState st = RegressorState::initial(cfg);
    EcmParams last = theta_to_circuit(cfg.theta0, trace.dt);
    std::vector<ParamEstimate> out;
    for (std::size_t k = 0; k < trace.size(); ++k) {
        const auto& smp = trace.samples[k];
        std::optional<double> soc_prev;
        if (feedback && k > 0)
            soc_prev = soc_feedback[k - 1];
        ObserveResult r;
        try {
            r = arls_observe(st, smp.voltage, smp.current, soc_prev, cfg);
        } catch (const Error& e) {
            throw StepError(k, e.what());
        }
        st = r.state;
        if (k < cfg.warmup)
            continue;
        ParamEstimate pe{k, smp.t, last, r.lambda, false, r.gap, st.p.trace()};
        // Current-difference block only: the voltage-difference regressor is nearly
        // collinear with R0 * dI(k-1) and stays weak even under good excitation.
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(st.p.bottomRightCorner<2, 2>(), Eigen::EigenvaluesOnly);
        pe.unidentifiable = eig.eigenvalues().maxCoeff() >= 0.5 * cfg.p0;
        try {
            last = theta_to_circuit(st.theta, trace.dt);
            pe.params = last;
        } catch (const PhysicalityError&) {
            pe.held = true;
        }
        out.push_back(pe);
    }
    return out;
}

std::vector<EcmParams> params_per_sample(const std::vector<ParamEstimate>& est, std::size_t n,
                                         const EcmParams& prior)
{
    std::vector<EcmParams> out(n, prior);
    for (const auto& e : est)
        if (e.index < n)
            out[e.index] = e.params;
    return out;
}

}  // namespace lfp

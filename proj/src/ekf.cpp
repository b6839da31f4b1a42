// SPDX-License-Identifier: Apache-2.0
#include "lfpsoc/ekf.hpp"

#include <algorithm>
#include <cmath>

#include "lfpsoc/errors.hpp"

namespace lfp {

void NoiseConfig::validate() const
{
    if (!q.allFinite() || !std::isfinite(r))
        throw InvalidInput("non-finite noise configuration");
    if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-15)
        throw InvalidInput("process noise must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(q, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-18)
        throw InvalidInput("process noise must be positive semidefinite");
    if (!(r > 0.0))
        throw InvalidInput("measurement variance must be positive");
}

Eigen::Matrix2d transition_matrix(const EcmParams& params, const SimConfig& cfg)
{
    Eigen::Matrix2d f = Eigen::Matrix2d::Identity();
    f(1, 1) = std::exp(-cfg.dt / params.tau());
    return f;
}

Eigen::Vector2d input_vector(const EcmParams& params, const SimConfig& cfg)
{
    double a = std::exp(-cfg.dt / params.tau());
    return {-cfg.coulombic_efficiency * cfg.dt / cfg.capacity_as(), params.rp * (1.0 - a)};
}

Prior predict(const KfState& state, const EcmParams& params, double current, const SimConfig& cfg)
{
    if (!std::isfinite(current))
        throw InvalidInput("non-finite current");
    Eigen::Matrix2d f = transition_matrix(params, cfg);
    Eigen::Vector2d g = input_vector(params, cfg);
    Eigen::Vector2d x(state.x.soc, state.x.up);
    Eigen::Vector2d xm = f * x + g * current;

    Prior pr;
    pr.x = {std::clamp(xm(0), 0.0, 1.0), xm(1)};
    pr.clamped = pr.x.soc != xm(0);
    pr.p = f * state.p * f.transpose() + state.noise.q;
    return pr;
}

Eigen::RowVector2d measurement_jacobian(const KfState& state, double prior_soc)
{
    double s = state.slope_override ? state.slope_override->slope : state.curve->slope(prior_soc);
    return {s, -1.0};
}

double measurement_h(const KfState& state, const BatteryState& prior)
{
    if (state.slope_override) {
        const auto& o = *state.slope_override;
        return o.anchor_ocv + o.slope * (prior.soc - o.anchor_soc) - prior.up;
    }
    return state.curve->ocv(prior.soc) - prior.up;
}

StepOutput update(const KfState& state, const Prior& prior, double measured_ut, double current,
                  const EcmParams& params)
{
    StepOutput out;
    out.prior = prior;
    out.h = measurement_jacobian(state, prior.x.soc);
    double yhat = measurement_h(state, prior.x) - params.r0 * current;
    out.innovation = measured_ut - yhat;

    Eigen::Vector2d ph = prior.p * out.h.transpose();
    double s = out.h.dot(ph) + state.noise.r;
    if (!(s > 0.0) || !std::isfinite(s))
        throw NumericalDegeneracy("innovation variance is not positive");
    out.innovation_variance = s;
    out.gain = ph / s;

    Eigen::Vector2d x = Eigen::Vector2d(prior.x.soc, prior.x.up) + out.gain * out.innovation;
    Eigen::Matrix2d p = (Eigen::Matrix2d::Identity() - out.gain * out.h) * prior.p;
    out.posterior.p = 0.5 * (p + p.transpose());
    out.posterior.x = {std::clamp(x(0), 0.0, 1.0), x(1)};
    out.soc_clamped = out.posterior.x.soc != x(0);
    out.posterior.clamped = out.soc_clamped;
    if (!out.posterior.p.allFinite() || !std::isfinite(out.posterior.x.up))
        throw NumericalDegeneracy("non-finite posterior");
    return out;
}

void commit(KfState& state, const StepOutput& out)
{
    state.x = out.posterior.x;
    state.p = out.posterior.p;
}

Prior as_prior(const KfState& state)
{
    return {state.x, state.p, false};
}

StepOutput filter_step(KfState& state, const EcmParams& params, std::optional<double> prev_current,
                       double current, double measured_ut, const SimConfig& cfg)
{
    Prior pr = prev_current ? predict(state, params, *prev_current, cfg) : as_prior(state);
    StepOutput out = update(state, pr, measured_ut, current, params);
    commit(state, out);
    return out;
}

const EcmParams& params_at(std::span<const EcmParams> params, std::size_t k)
{
    return params.size() == 1 ? params[0] : params[k];
}

std::vector<StepOutput> run_ekf(const KfState& initial, std::span<const EcmParams> params,
                                const Trace& trace, const SimConfig& cfg)
{
    if (!initial.curve)
        throw InvalidInput("filter has no curve");
    if (params.size() != 1 && params.size() != trace.size())
        throw InvalidInput("params stream is not aligned with the trace");
    initial.noise.validate();

    KfState st = initial;
    std::vector<StepOutput> out;
    out.reserve(trace.size());
    for (std::size_t k = 0; k < trace.size(); ++k) {
        const auto& s = trace.samples[k];
        std::optional<double> prev;
        if (k > 0)
            prev = trace.samples[k - 1].current;
        try {
            out.push_back(filter_step(st, params_at(params, k), prev, s.current, s.voltage, cfg));
        } catch (const Error& e) {
            throw StepError(k, e.what());
        }
    }
    return out;
}

}  // namespace lfp

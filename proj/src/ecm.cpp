// SPDX-License-Identifier: Apache-2.0
#include "lfpsoc/ecm.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "lfpsoc/errors.hpp"

namespace lfp {

void EcmParams::validate() const
{
    if (!std::isfinite(r0) || !std::isfinite(rp) || !std::isfinite(cp))
        throw InvalidInput("non-finite circuit parameter");
    if (r0 <= 0.0 || rp <= 0.0 || cp <= 0.0)
        throw InvalidInput("circuit parameters must be positive");
}

void SimConfig::validate() const
{
    if (!(capacity_ah > 0.0) || !std::isfinite(capacity_ah))
        throw InvalidInput("capacity must be positive");
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw InvalidInput("dt must be positive");
    if (!(coulombic_efficiency > 0.0 && coulombic_efficiency <= 1.0))
        throw InvalidInput("coulombic efficiency must be in (0, 1]");
    if (!(voltage_noise_sigma >= 0.0) || !(current_noise_sigma >= 0.0))
        throw InvalidInput("noise sigmas must be non-negative");
}

StepResult step_state(const BatteryState& state, const EcmParams& params, double current,
                      const SimConfig& cfg)
{
    if (!std::isfinite(state.soc) || !std::isfinite(state.up) || !std::isfinite(current))
        throw InvalidInput("non-finite input to step_state");
    double a = std::exp(-cfg.dt / params.tau());
    StepResult r;
    r.state.up = a * state.up + (1.0 - a) * params.rp * current;
    double soc = state.soc - cfg.coulombic_efficiency * cfg.dt * current / cfg.capacity_as();
    r.state.soc = std::clamp(soc, 0.0, 1.0);
    r.clamped = r.state.soc != soc;
    return r;
}

double terminal_voltage(const BatteryState& state, const EcmParams& params, double current,
                        const OscCurve& curve)
{
    return curve.ocv(state.soc) - state.up - params.r0 * current;
}

Cutoff cutoff_flag(double ut, const SimConfig& cfg)
{
    if (ut < cfg.discharge_cutoff_v)
        return Cutoff::Discharge;
    if (ut > cfg.charge_cutoff_v)
        return Cutoff::Charge;
    return Cutoff::None;
}

std::vector<double> Trace::currents() const
{
    std::vector<double> v;
    v.reserve(samples.size());
    for (const auto& s : samples)
        v.push_back(s.current);
    return v;
}

std::vector<double> Trace::voltages() const
{
    std::vector<double> v;
    v.reserve(samples.size());
    for (const auto& s : samples)
        v.push_back(s.voltage);
    return v;
}

std::vector<double> Trace::true_socs() const
{
    std::vector<double> v;
    v.reserve(samples.size());
    for (const auto& s : samples)
        v.push_back(s.true_soc);
    return v;
}

void Trace::validate() const
{
    if (!(dt > 0.0))
        throw InvalidInput("trace dt must be positive");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (!std::isfinite(s.t) || !std::isfinite(s.current) || !std::isfinite(s.voltage))
            throw InvalidInput("non-finite trace sample at index " + std::to_string(i));
        if (i > 0) {
            double step = s.t - samples[i - 1].t;
            if (!(step > 0.0))
                throw InvalidInput("trace time not strictly increasing at index " + std::to_string(i));
            if (std::abs(step - dt) > 1e-6 * dt)
                throw InvalidInput("trace spacing is not uniform at index " + std::to_string(i));
        }
    }
}

Trace simulate_profile(const BatteryState& initial, const EcmParams& params, const OscCurve& curve,
                       std::span<const double> profile, const SimConfig& cfg)
{
    if (profile.empty())
        throw InvalidInput("profile is empty");
    params.validate();
    cfg.validate();
    if (initial.soc < 0.0 || initial.soc > 1.0)
        throw InvalidInput("initial soc outside [0, 1]");

    std::mt19937_64 rng(cfg.rng_seed);
    std::normal_distribution<double> vnoise(0.0, cfg.voltage_noise_sigma > 0 ? cfg.voltage_noise_sigma : 1.0);
    std::normal_distribution<double> inoise(0.0, cfg.current_noise_sigma > 0 ? cfg.current_noise_sigma : 1.0);

    Trace tr;
    tr.dt = cfg.dt;
    tr.samples.reserve(profile.size());
    BatteryState x = initial;
    for (std::size_t k = 0; k < profile.size(); ++k) {
        if (k > 0) {
            auto r = step_state(x, params, profile[k - 1], cfg);
            x = r.state;
            if (r.clamped)
                tr.clamp_steps.push_back(k);
        }
        double ut = terminal_voltage(x, params, profile[k], curve);
        double v = ut;
        double i = profile[k];
        if (cfg.voltage_noise_sigma > 0.0)
            v += vnoise(rng);
        if (cfg.current_noise_sigma > 0.0)
            i += inoise(rng);
        tr.samples.push_back({static_cast<double>(k) * cfg.dt, i, v, x.soc, x.up});
        Cutoff c = cutoff_flag(ut, cfg);
        if (c != Cutoff::None) {
            tr.cutoff = c;
            tr.cutoff_index = k;
            break;
        }
    }
    return tr;
}

}  // namespace lfp

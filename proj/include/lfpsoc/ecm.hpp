// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lfpsoc/osc.hpp"

namespace lfp {

// First-order Thevenin model. Current is positive on discharge.
struct EcmParams {
    double r0;  // ohm
    double rp;  // ohm
    double cp;  // farad

    double tau() const { return rp * cp; }
    void validate() const;
};

struct BatteryState {
    double soc;
    double up;  // volt
};

struct SimConfig {
    double capacity_ah = 1.063;
    double coulombic_efficiency = 1.0;
    double dt = 1.0;
    double voltage_noise_sigma = 0.0;
    double current_noise_sigma = 0.0;
    std::uint64_t rng_seed = 0;
    double discharge_cutoff_v = 2.0;
    double charge_cutoff_v = 3.6;

    void validate() const;
    double capacity_as() const { return capacity_ah * 3600.0; }
};

struct StepResult {
    BatteryState state;
    bool clamped = false;
};

StepResult step_state(const BatteryState& state, const EcmParams& params, double current,
                      const SimConfig& cfg);

double terminal_voltage(const BatteryState& state, const EcmParams& params, double current,
                        const OscCurve& curve);

enum class Cutoff { None, Discharge, Charge };

Cutoff cutoff_flag(double ut, const SimConfig& cfg);

struct TraceSample {
    double t;
    double current;  // measured, ampere
    double voltage;  // measured, volt
    double true_soc;
    double true_up;
};

struct Trace {
    double dt = 1.0;
    std::vector<TraceSample> samples;
    bool has_truth = true;
    // Index of the sample that crossed a voltage cutoff (last sample kept).
    std::optional<std::size_t> cutoff_index;
    Cutoff cutoff = Cutoff::None;
    // Samples whose state came out of a SOC clamp.
    std::vector<std::size_t> clamp_steps;

    std::size_t size() const { return samples.size(); }
    std::vector<double> currents() const;
    std::vector<double> voltages() const;
    std::vector<double> true_socs() const;
    void validate() const;
};

// Sample k holds the state reached by applying currents 0..k-1; its terminal
// voltage uses current k.
Trace simulate_profile(const BatteryState& initial, const EcmParams& params, const OscCurve& curve,
                       std::span<const double> profile, const SimConfig& cfg);

}  // namespace lfp

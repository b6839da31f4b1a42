// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lfpsoc/ammkf.hpp"
#include "lfpsoc/arls.hpp"
#include "lfpsoc/config.hpp"
#include "lfpsoc/csv.hpp"
#include "lfpsoc/ekf.hpp"
#include "lfpsoc/metrics.hpp"
#include "lfpsoc/profile.hpp"

namespace lfp {

struct ScenarioConfig {
    std::string true_curve = "builtin";  // "builtin" or a curve CSV path
    std::string filter_curve;            // empty: transform of the true curve
    double offset_v = 0.0;
    std::optional<SocWindow> offset_window;
    double soc_shift = 0.0;
    double slope_scale = 1.0;

    ProfileKind profile = ProfileKind::DstLike;
    ProfileParams profile_params;
    bool profile_target_auto = true;  // 98% of the initial charge per two hours
    std::string trace_file;           // use a recorded trace instead of simulating
    IngestOptions ingest;

    double initial_soc_true = 1.0;
    double initial_soc_error = -0.1;

    EcmParams ecm{0.075, 0.025, 1500.0};
    bool identify_online = false;
    ArlsConfig arls;

    SimConfig sim;
    NoiseConfig noise;
    double p0_soc = 0.04;
    double p0_up = 1e-4;
    BankConfig bank;
    std::uint64_t seed = 1;

    // Optional pass/fail thresholds.
    std::optional<double> check_ammkf_rmse_max;
    std::optional<double> check_ratio_to_ekf_max;
    std::optional<double> check_osc_mae_ratio_max;
    std::optional<double> check_ammkf_final_error_max;

    static ScenarioConfig from_config(const Config& c);
    std::string to_text() const;
    void validate() const;
};

struct ScenarioResult {
    std::shared_ptr<const OscCurve> true_curve;
    std::shared_ptr<const OscCurve> filter_curve;
    Trace trace;
    std::vector<EcmParams> params;
    std::vector<StepOutput> ekf;
    std::vector<double> ekf_soc;
    AmmkfResult ammkf;
    Metrics ekf_metrics;
    Metrics ammkf_metrics;
    OscMetrics osc;
    std::vector<std::string> violations;
    std::vector<std::string> warnings;
};

struct ScenarioCurves {
    std::shared_ptr<const OscCurve> truth;
    std::shared_ptr<const OscCurve> filter;
};

// "builtin" names the reference curve; anything else is a curve CSV path.
std::shared_ptr<const OscCurve> load_curve(const std::string& spec);
ScenarioCurves make_curves(const ScenarioConfig& cfg);
// Simulated from the profile, or ingested when trace_file is set.
Trace make_trace(const ScenarioConfig& cfg, const OscCurve& true_curve, std::vector<std::string>& warnings);
KfState initial_filter_state(const ScenarioConfig& cfg, std::shared_ptr<const OscCurve> curve);

ScenarioResult run_scenario(const ScenarioConfig& cfg);

// Writes the scenario artifacts (CSVs, metrics summary, manifest) into `dir`.
void write_scenario_outputs(const ScenarioConfig& cfg, const ScenarioResult& res, const std::filesystem::path& dir);

void write_ekf_csv(const std::filesystem::path& path, const Trace& trace, const std::vector<StepOutput>& out);
void write_ammkf_csvs(const std::filesystem::path& dir, const Trace& trace, const AmmkfResult& res);
void write_innovation_log(const std::filesystem::path& path, const std::vector<IntervalInnovations>& history);

}  // namespace lfp

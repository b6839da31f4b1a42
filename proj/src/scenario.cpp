// SPDX-License-Identifier: Apache-2.0
#include "lfpsoc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lfpsoc/csv.hpp"
#include "lfpsoc/errors.hpp"

namespace lfp {

ScenarioConfig ScenarioConfig::from_config(const Config& c)
{
    ScenarioConfig s;
    s.true_curve = c.get_string("true_curve", s.true_curve);
    s.filter_curve = c.get_string("filter_curve", s.filter_curve);
    s.offset_v = c.get_double("offset_v", s.offset_v);
    auto lo = c.get_optional_double("offset_lo");
    auto hi = c.get_optional_double("offset_hi");
    auto ramp = c.get_optional_double("offset_ramp");
    if (lo || hi || ramp)
        s.offset_window = SocWindow{lo.value_or(0.0), hi.value_or(1.0), ramp.value_or(0.0)};
    s.soc_shift = c.get_double("soc_shift", s.soc_shift);
    s.slope_scale = c.get_double("slope_scale", s.slope_scale);

    s.profile = parse_profile_kind(c.get_string("profile", std::string(to_string(s.profile))));
    auto& pp = s.profile_params;
    pp.steps = c.get_size("profile_steps", pp.steps);
    pp.current = c.get_double("profile_current", pp.current);
    if (auto t = c.get_optional_double("profile_target_ah")) {
        pp.target_ah = *t;
        s.profile_target_auto = false;
    }
    pp.pulse_on = c.get_size("pulse_on", pp.pulse_on);
    pp.pulse_off = c.get_size("pulse_off", pp.pulse_off);
    pp.walk_sigma = c.get_double("walk_sigma", pp.walk_sigma);
    pp.walk_limit = c.get_double("walk_limit", pp.walk_limit);
    s.trace_file = c.get_string("trace_file", s.trace_file);

    s.initial_soc_true = c.get_double("initial_soc_true", s.initial_soc_true);
    s.initial_soc_error = c.get_double("initial_soc_error", s.initial_soc_error);

    s.ecm.r0 = c.get_double("r0", s.ecm.r0);
    s.ecm.rp = c.get_double("rp", s.ecm.rp);
    s.ecm.cp = c.get_double("cp", s.ecm.cp);
    s.identify_online = c.get_bool("identify_online", s.identify_online);
    s.arls.a = c.get_double("a_ff", s.arls.a);
    s.arls.lambda_min = c.get_double("lambda_min", s.arls.lambda_min);
    s.arls.lambda_const = c.get_double("lambda_const", s.arls.lambda_const);
    s.arls.warmup = c.get_size("arls_warmup", s.arls.warmup);
    s.arls.p0 = c.get_double("arls_p0", s.arls.p0);
    s.arls.plateau_only_identification =
        c.get_bool("plateau_only_identification", s.arls.plateau_only_identification);

    s.sim.capacity_ah = c.get_double("capacity_ah", s.sim.capacity_ah);
    s.sim.dt = c.get_double("dt", s.sim.dt);
    s.sim.coulombic_efficiency = c.get_double("eta", s.sim.coulombic_efficiency);
    s.sim.voltage_noise_sigma = c.get_double("sigma_v", s.sim.voltage_noise_sigma);
    s.sim.current_noise_sigma = c.get_double("sigma_i", s.sim.current_noise_sigma);
    s.sim.discharge_cutoff_v = c.get_double("discharge_cutoff_v", s.sim.discharge_cutoff_v);
    s.sim.charge_cutoff_v = c.get_double("charge_cutoff_v", s.sim.charge_cutoff_v);
    pp.dt = s.sim.dt;

    s.noise.q(0, 0) = c.get_double("q00", s.noise.q(0, 0));
    s.noise.q(1, 1) = c.get_double("q11", s.noise.q(1, 1));
    double sv = s.sim.voltage_noise_sigma;
    s.noise.r = c.get_double("r", std::max(sv * sv, 1e-6));
    s.p0_soc = c.get_double("p0_soc", s.p0_soc);
    s.p0_up = c.get_double("p0_up", s.p0_up);

    auto& b = s.bank;
    b.n = c.get_size("n", b.n);
    b.interval_length = c.get_size("interval_len", b.interval_length);
    b.spread = c.get_double("spread", b.spread);
    b.slope_floor = c.get_double("slope_floor", b.slope_floor);
    b.probability_floor = c.get_double("prob_floor", b.probability_floor);
    b.chain_anchors = c.get_bool("chain_anchors", b.chain_anchors);
    b.parallel = c.get_bool("parallel", b.parallel);
    b.convergence.window = c.get_size("conv_window", b.convergence.window);
    b.convergence.rho = c.get_double("conv_rho", b.convergence.rho);
    b.convergence.noise_sigmas = c.get_double("conv_noise_sigmas", b.convergence.noise_sigmas);
    b.thresholds.floor = c.get_double("ccm_floor", b.thresholds.floor);
    b.thresholds.acm_fraction = c.get_double("ccm_acm_fraction", b.thresholds.acm_fraction);

    s.seed = c.get_u64("seed", s.seed);
    s.check_ammkf_rmse_max = c.get_optional_double("check.ammkf_rmse_max");
    s.check_ratio_to_ekf_max = c.get_optional_double("check.ammkf_over_ekf_max");
    s.check_osc_mae_ratio_max = c.get_optional_double("check.osc_mae_ratio_max");
    s.check_ammkf_final_error_max = c.get_optional_double("check.ammkf_final_error_max");
    return s;
}

std::string ScenarioConfig::to_text() const
{
    std::ostringstream os;
    auto kv = [&](const char* k, auto v) { os << k << " = " << v << '\n'; };
    auto num = [&](const char* k, double v) { kv(k, format_number(v)); };
    kv("true_curve", true_curve);
    kv("filter_curve", filter_curve);
    num("offset_v", offset_v);
    if (offset_window) {
        num("offset_lo", offset_window->lo);
        num("offset_hi", offset_window->hi);
        num("offset_ramp", offset_window->ramp);
    }
    num("soc_shift", soc_shift);
    num("slope_scale", slope_scale);
    kv("profile", to_string(profile));
    kv("profile_steps", profile_params.steps);
    num("profile_current", profile_params.current);
    if (!profile_target_auto)
        num("profile_target_ah", profile_params.target_ah);
    kv("pulse_on", profile_params.pulse_on);
    kv("pulse_off", profile_params.pulse_off);
    num("walk_sigma", profile_params.walk_sigma);
    num("walk_limit", profile_params.walk_limit);
    kv("trace_file", trace_file);
    num("initial_soc_true", initial_soc_true);
    num("initial_soc_error", initial_soc_error);
    num("r0", ecm.r0);
    num("rp", ecm.rp);
    num("cp", ecm.cp);
    kv("identify_online", identify_online ? "true" : "false");
    num("a_ff", arls.a);
    num("lambda_min", arls.lambda_min);
    num("lambda_const", arls.lambda_const);
    kv("arls_warmup", arls.warmup);
    num("arls_p0", arls.p0);
    kv("plateau_only_identification", arls.plateau_only_identification ? "true" : "false");
    num("capacity_ah", sim.capacity_ah);
    num("dt", sim.dt);
    num("eta", sim.coulombic_efficiency);
    num("sigma_v", sim.voltage_noise_sigma);
    num("sigma_i", sim.current_noise_sigma);
    num("discharge_cutoff_v", sim.discharge_cutoff_v);
    num("charge_cutoff_v", sim.charge_cutoff_v);
    num("q00", noise.q(0, 0));
    num("q11", noise.q(1, 1));
    num("r", noise.r);
    num("p0_soc", p0_soc);
    num("p0_up", p0_up);
    kv("n", bank.n);
    kv("interval_len", bank.interval_length);
    num("spread", bank.spread);
    num("slope_floor", bank.slope_floor);
    num("prob_floor", bank.probability_floor);
    kv("chain_anchors", bank.chain_anchors ? "true" : "false");
    kv("parallel", bank.parallel ? "true" : "false");
    kv("conv_window", bank.convergence.window);
    num("conv_rho", bank.convergence.rho);
    num("conv_noise_sigmas", bank.convergence.noise_sigmas);
    num("ccm_floor", bank.thresholds.floor);
    num("ccm_acm_fraction", bank.thresholds.acm_fraction);
    kv("seed", seed);
    if (check_ammkf_rmse_max)
        num("check.ammkf_rmse_max", *check_ammkf_rmse_max);
    if (check_ratio_to_ekf_max)
        num("check.ammkf_over_ekf_max", *check_ratio_to_ekf_max);
    if (check_osc_mae_ratio_max)
        num("check.osc_mae_ratio_max", *check_osc_mae_ratio_max);
    if (check_ammkf_final_error_max)
        num("check.ammkf_final_error_max", *check_ammkf_final_error_max);
    return os.str();
}

void ScenarioConfig::validate() const
{
    if (initial_soc_true < 0.0 || initial_soc_true > 1.0)
        throw ConfigError("initial_soc_true must be in [0, 1]");
    double init = initial_soc_true + initial_soc_error;
    if (init < 0.0 || init > 1.0)
        throw ConfigError("initial_soc_true + initial_soc_error must be in [0, 1]");
    if (!(p0_soc >= 0.0) || !(p0_up >= 0.0))
        throw ConfigError("initial covariance must be non-negative");
    ecm.validate();
    sim.validate();
    noise.validate();
    bank.validate();
    arls.validate();
}

std::shared_ptr<const OscCurve> load_curve(const std::string& spec)
{
    if (spec.empty() || spec == "builtin")
        return std::make_shared<const OscCurve>(reference_lfp_curve());
    return std::make_shared<const OscCurve>(read_curve(std::filesystem::path(spec)));
}

ScenarioCurves make_curves(const ScenarioConfig& cfg)
{
    ScenarioCurves out;
    out.truth = load_curve(cfg.true_curve);
    if (!cfg.filter_curve.empty()) {
        out.filter = load_curve(cfg.filter_curve);
        return out;
    }
    OscCurve c = *out.truth;
    if (cfg.offset_v != 0.0)
        c = apply_transform(c, cfg.offset_window ? CurveTransform::plateau_offset(cfg.offset_v, *cfg.offset_window)
                                                 : CurveTransform::offset(cfg.offset_v));
    if (cfg.soc_shift != 0.0)
        c = apply_transform(c, CurveTransform::soc_shift(cfg.soc_shift));
    if (cfg.slope_scale != 1.0)
        c = apply_transform(c, CurveTransform::slope_scale(cfg.slope_scale));
    out.filter = std::make_shared<const OscCurve>(std::move(c));
    return out;
}

Trace make_trace(const ScenarioConfig& cfg, const OscCurve& true_curve, std::vector<std::string>& warnings)
{
    if (!cfg.trace_file.empty()) {
        auto ing = ingest_trace(std::filesystem::path(cfg.trace_file), cfg.ingest);
        warnings.insert(warnings.end(), ing.warnings.begin(), ing.warnings.end());
        return std::move(ing.trace);
    }
    SimConfig sim = cfg.sim;
    sim.rng_seed = cfg.seed;
    ProfileParams pp = cfg.profile_params;
    pp.dt = sim.dt;
    // Auto target: the rate that drains 98% of the initial charge in two hours,
    // capped at that charge for longer runs.
    if (cfg.profile_target_auto)
        pp.target_ah = 0.98 * cfg.initial_soc_true * sim.capacity_ah *
                       std::min(1.0, static_cast<double>(pp.steps) * pp.dt / 7200.0);
    DriveProfile prof = generate_profile(cfg.profile, pp, cfg.seed);
    Trace tr = simulate_profile({cfg.initial_soc_true, 0.0}, cfg.ecm, true_curve, prof.samples, sim);
    if (tr.cutoff_index)
        warnings.push_back("simulation stopped at a voltage cutoff, sample " + std::to_string(*tr.cutoff_index));
    if (!tr.clamp_steps.empty())
        warnings.push_back("true SOC clamped on " + std::to_string(tr.clamp_steps.size()) + " samples");
    return tr;
}

KfState initial_filter_state(const ScenarioConfig& cfg, std::shared_ptr<const OscCurve> curve)
{
    KfState init;
    init.x = {std::clamp(cfg.initial_soc_true + cfg.initial_soc_error, 0.0, 1.0), 0.0};
    init.p = Eigen::Vector2d(cfg.p0_soc, cfg.p0_up).asDiagonal();
    init.noise = cfg.noise;
    init.curve = std::move(curve);
    return init;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg)
{
    cfg.validate();
    ScenarioResult res;
    try {
        auto curves = make_curves(cfg);
        res.true_curve = curves.truth;
        res.filter_curve = curves.filter;
        for (const auto& w : res.filter_curve->warnings())
            res.warnings.push_back("filter curve: " + w);

        res.trace = make_trace(cfg, *res.true_curve, res.warnings);
        SimConfig sim = cfg.sim;
        sim.dt = res.trace.dt;

        if (cfg.identify_online) {
            auto est = identify_stream(res.trace, {}, cfg.arls);
            res.params = params_per_sample(est, res.trace.size(), theta_to_circuit(cfg.arls.theta0, sim.dt));
        } else {
            res.params = {cfg.ecm};
        }

        KfState init = initial_filter_state(cfg, res.filter_curve);
        res.ekf = run_ekf(init, res.params, res.trace, sim);
        for (const auto& o : res.ekf)
            res.ekf_soc.push_back(o.posterior.x.soc);
        res.ammkf = run_ammkf(res.trace, init, res.params, cfg.bank, sim);
    } catch (const Error& e) {
        throw Error(std::string("scenario: ") + e.what());
    }

    if (res.trace.has_truth) {
        auto truth = res.trace.true_socs();
        res.ekf_metrics = compute_metrics(res.ekf_soc, truth, res.trace.dt);
        res.ammkf_metrics = compute_metrics(res.ammkf.soc, truth, res.trace.dt);
    }
    res.osc = osc_correction_metrics(res.ammkf.osc_points, *res.true_curve, *res.filter_curve);

    auto check = [&](bool ok, const std::string& what) {
        if (!ok)
            res.violations.push_back(what);
    };
    if (cfg.check_ammkf_rmse_max)
        check(res.ammkf_metrics.rmse < *cfg.check_ammkf_rmse_max,
              "ammkf rmse " + format_number(res.ammkf_metrics.rmse) + " >= " + format_number(*cfg.check_ammkf_rmse_max));
    if (cfg.check_ratio_to_ekf_max)
        check(res.ammkf_metrics.rmse < *cfg.check_ratio_to_ekf_max * res.ekf_metrics.rmse,
              "ammkf rmse not below " + format_number(*cfg.check_ratio_to_ekf_max) + " x ekf rmse");
    if (cfg.check_osc_mae_ratio_max)
        check(res.osc.points > 0 && res.osc.corrected_mae < *cfg.check_osc_mae_ratio_max * res.osc.original_mae,
              "corrected osc mae ratio above " + format_number(*cfg.check_osc_mae_ratio_max));
    if (cfg.check_ammkf_final_error_max && !res.ammkf.soc.empty())
        check(std::abs(res.ammkf.soc.back() - res.trace.samples.back().true_soc) < *cfg.check_ammkf_final_error_max,
              "ammkf final error above " + format_number(*cfg.check_ammkf_final_error_max));
    return res;
}

void write_ekf_csv(const std::filesystem::path& path, const Trace& trace, const std::vector<StepOutput>& out)
{
    CsvWriter w(path, {"t", "soc_est", "up_est", "innovation_v", "p00", "p11"});
    for (std::size_t k = 0; k < out.size(); ++k) {
        const auto& o = out[k];
        w.row({trace.samples[k].t, o.posterior.x.soc, o.posterior.x.up, o.innovation, o.posterior.p(0, 0),
               o.posterior.p(1, 1)});
    }
}

void write_innovation_log(const std::filesystem::path& path, const std::vector<IntervalInnovations>& history)
{
    CsvWriter w(path, {"interval", "step", "innovation_v", "acm_theo_v2"});
    for (const auto& iv : history) {
        double theo = theoretical_acm(iv.h_used, iv.p_minus_last, iv.r);
        for (std::size_t i = 0; i < iv.values.size(); ++i)
            w.row({static_cast<double>(iv.index), static_cast<double>(i), iv.values[i], theo});
    }
}

void write_ammkf_csvs(const std::filesystem::path& dir, const Trace& trace, const AmmkfResult& res)
{
    {
        CsvWriter w(dir / "ammkf_estimate.csv", {"t", "soc_est", "up_est", "innovation_v"});
        for (std::size_t k = 0; k < res.soc.size(); ++k)
            w.row({trace.samples[k].t, res.soc[k], res.up[k], res.innovation[k]});
    }
    {
        CsvWriter w(dir / "corrected_osc.csv", {"soc", "ocv_v", "interval"});
        for (const auto& p : res.osc_points)
            w.row({p.soc, p.ocv, static_cast<double>(p.interval)});
    }
    {
        CsvWriter w(dir / "diagnostics.csv", {"interval", "ccm", "verdict", "optimal_index", "prob_max"});
        for (const auto& d : res.diagnostics)
            w.row({std::to_string(d.interval), format_number(d.ccm), std::string(to_string(d.verdict)),
                   std::to_string(d.optimal_index + 1), format_number(d.prob_max)});
    }
    write_innovation_log(dir / "innovations.csv", res.history);
}

void write_scenario_outputs(const ScenarioConfig& cfg, const ScenarioResult& res, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    write_trace(dir / "trace.csv", res.trace);
    write_curve(dir / "true_curve.csv", *res.true_curve);
    write_curve(dir / "filter_curve.csv", *res.filter_curve);
    write_ekf_csv(dir / "ekf_estimate.csv", res.trace, res.ekf);
    write_ammkf_csvs(dir, res.trace, res.ammkf);
    {
        CsvWriter w(dir / "metrics.csv", {"method", "rmse", "mae", "max_abs_error", "convergence_time_s",
                                          "final_quarter_rmse"});
        auto row = [&](const char* name, const Metrics& m) {
            w.row({name, format_number(m.rmse), format_number(m.mae), format_number(m.max_abs_error),
                   m.convergence_time_s ? format_number(*m.convergence_time_s) : "inf",
                   format_number(m.final_quarter_rmse)});
        };
        row("ekf-baseline", res.ekf_metrics);
        row("ammkf", res.ammkf_metrics);
    }
    std::ofstream man(dir / "manifest.txt");
    man << "# resolved scenario configuration\n" << cfg.to_text();
    man << "# osc_corrected_mae_v = " << format_number(res.osc.corrected_mae) << '\n';
    man << "# osc_original_mae_v = " << format_number(res.osc.original_mae) << '\n';
    if (res.ammkf.handoff_step)
        man << "# handoff_step = " << *res.ammkf.handoff_step << '\n';
    for (const auto& w : res.warnings)
        man << "# warning: " << w << '\n';
    for (const auto& v : res.violations)
        man << "# violation: " << v << '\n';
}

}  // namespace lfp

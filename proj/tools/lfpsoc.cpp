// SPDX-License-Identifier: Apache-2.0
// lfpsoc: command-line front end for simulation, identification and estimation.
#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "lfpsoc/csv.hpp"
#include "lfpsoc/errors.hpp"
#include "lfpsoc/innovation.hpp"
#include "lfpsoc/scenario.hpp"

namespace fs = std::filesystem;
using namespace lfp;

namespace {

struct Globals {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    bool strict = false;
    std::optional<double> resample;
};

ScenarioConfig load_config(const Globals& g)
{
    Config c = g.config.empty() ? Config{} : Config::load(g.config);
    if (g.seed)
        c.set("seed", std::to_string(*g.seed));
    ScenarioConfig cfg = ScenarioConfig::from_config(c);
    cfg.ingest.strict = g.strict;
    cfg.ingest.resample_dt = g.resample;
    for (const auto& k : c.unused_keys())
        std::cerr << "warning: unknown config key '" << k << "'\n";
    return cfg;
}

void write_manifest(const fs::path& dir, const std::string& command, const ScenarioConfig& cfg,
                    const std::vector<std::string>& notes)
{
    std::ofstream man(dir / "manifest.txt");
    man << "# command = " << command << '\n' << cfg.to_text();
    for (const auto& n : notes)
        man << "# " << n << '\n';
}

Trace read_trace(const std::string& path, const ScenarioConfig& cfg, std::vector<std::string>& notes)
{
    auto ing = ingest_trace(fs::path(path), cfg.ingest);
    for (const auto& w : ing.warnings) {
        std::cerr << "warning: " << w << '\n';
        notes.push_back("warning: " + w);
    }
    return std::move(ing.trace);
}

// Rest-voltage guess for the starting SOC.
double invert_ocv(const OscCurve& curve, double v)
{
    double lo = 0.0, hi = 1.0;
    if (v <= curve.ocv(lo))
        return lo;
    if (v >= curve.ocv(hi))
        return hi;
    for (int i = 0; i < 60; ++i) {
        double mid = 0.5 * (lo + hi);
        (curve.ocv(mid) < v ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

void print_metrics(const char* name, const Metrics& m)
{
    std::cout << name << ": rmse=" << format_number(m.rmse) << " mae=" << format_number(m.mae)
              << " max=" << format_number(m.max_abs_error) << " convergence_time_s="
              << (m.convergence_time_s ? format_number(*m.convergence_time_s) : "inf") << '\n';
}

int cmd_simulate(const Globals& g)
{
    ScenarioConfig cfg = load_config(g);
    cfg.validate();
    cfg.trace_file.clear();
    fs::create_directories(g.out);
    std::vector<std::string> notes;
    auto curve = load_curve(cfg.true_curve);
    Trace tr = make_trace(cfg, *curve, notes);
    write_trace(fs::path(g.out) / "trace.csv", tr);
    write_curve(fs::path(g.out) / "true_curve.csv", *curve);
    write_manifest(g.out, "simulate", cfg, notes);
    std::cout << "wrote " << tr.size() << " samples to " << (fs::path(g.out) / "trace.csv").string() << '\n';
    return 0;
}

int cmd_identify(const Globals& g, const std::string& trace_path)
{
    ScenarioConfig cfg = load_config(g);
    cfg.arls.validate();
    std::vector<std::string> notes;
    Trace tr = read_trace(trace_path, cfg, notes);
    auto est = identify_stream(tr, {}, cfg.arls);
    fs::create_directories(g.out);
    CsvWriter w(fs::path(g.out) / "identify.csv", {"t", "r0_ohm", "rp_ohm", "cp_f", "lambda"});
    std::size_t held = 0;
    for (const auto& e : est) {
        w.row({e.t, e.params.r0, e.params.rp, e.params.cp, e.lambda});
        held += e.held ? 1 : 0;
    }
    if (held)
        notes.push_back("non-physical estimates held on " + std::to_string(held) + " samples");
    write_manifest(g.out, "identify", cfg, notes);
    if (!est.empty()) {
        const auto& p = est.back().params;
        std::cout << "final r0=" << format_number(p.r0) << " rp=" << format_number(p.rp)
                  << " cp=" << format_number(p.cp) << '\n';
    }
    return 0;
}

int cmd_estimate(const Globals& g, const std::string& trace_path, const std::string& curve_path,
                 const std::string& method, std::optional<double> initial_soc)
{
    ScenarioConfig cfg = load_config(g);
    std::vector<std::string> notes;
    Trace tr = read_trace(trace_path, cfg, notes);
    SimConfig sim = cfg.sim;
    sim.dt = tr.dt;
    sim.validate();
    cfg.noise.validate();

    auto curve = curve_path.empty() ? make_curves(cfg).filter : load_curve(curve_path);
    KfState init = initial_filter_state(cfg, curve);
    init.x.soc = initial_soc ? *initial_soc : invert_ocv(*curve, tr.samples.front().voltage);
    if (init.x.soc < 0.0 || init.x.soc > 1.0)
        throw ConfigError("initial SOC must be in [0, 1]");
    notes.push_back("initial_soc_estimate = " + format_number(init.x.soc));

    std::vector<EcmParams> params{cfg.ecm};
    if (cfg.identify_online) {
        auto est = identify_stream(tr, {}, cfg.arls);
        params = params_per_sample(est, tr.size(), theta_to_circuit(cfg.arls.theta0, sim.dt));
    }

    fs::create_directories(g.out);
    std::vector<double> soc;
    if (method == "ekf") {
        auto out = run_ekf(init, params, tr, sim);
        write_ekf_csv(fs::path(g.out) / "ekf_estimate.csv", tr, out);
        for (const auto& o : out)
            soc.push_back(o.posterior.x.soc);
    } else {
        cfg.bank.validate();
        auto res = run_ammkf(tr, init, params, cfg.bank, sim);
        write_ammkf_csvs(g.out, tr, res);
        soc = res.soc;
        if (!res.handoff_step)
            notes.push_back("phase-1 filter never converged; no bank intervals ran");
    }
    write_manifest(g.out, "estimate --method " + method, cfg, notes);
    if (tr.has_truth)
        print_metrics(method.c_str(), compute_metrics(soc, tr.true_socs(), tr.dt));
    return 0;
}

int cmd_analyze(const Globals& g, const std::string& log_path)
{
    ScenarioConfig cfg = load_config(g);
    CsvTable t = read_csv(fs::path(log_path));
    auto ci = t.column("interval");
    auto cv = t.column("innovation_v");
    t.column("step");
    auto cth = t.find("acm_theo_v2");

    std::map<long, IntervalInnovations> intervals;
    std::map<long, double> theo;
    for (const auto& row : t.rows) {
        long m = static_cast<long>(row[ci]);
        auto& iv = intervals[m];
        iv.index = static_cast<std::size_t>(m);
        iv.values.push_back(row[cv]);
        if (cth)
            theo[m] = row[*cth];
    }

    fs::create_directories(g.out);
    CsvWriter w(fs::path(g.out) / "analyze.csv", {"m", "ccm", "acm_emp", "acm_theo", "verdict"});
    const IntervalInnovations* prev = nullptr;
    for (const auto& [m, iv] : intervals) {
        if (prev && prev->values.size() == iv.values.size()) {
            double ccm = interval_ccm(*prev, iv);
            double emp = empirical_acm(iv);
            std::optional<double> th;
            if (theo.count(m))
                th = theo[m];
            double ratio = th && *th > 0.0 ? emp / *th : 0.0;
            auto v = infer_error_sign(ccm, ratio, cfg.bank.thresholds.ccm_threshold(emp));
            w.row({std::to_string(m), format_number(ccm), format_number(emp), th ? format_number(*th) : "nan",
                   std::string(to_string(v.sign))});
        }
        prev = &iv;
    }
    write_manifest(g.out, "analyze", cfg, {});
    return 0;
}

void print_warnings(const ScenarioResult& res)
{
    for (const auto& w : res.warnings)
        std::cerr << "warning: " << w << '\n';
}

int cmd_scenario(const Globals& g)
{
    ScenarioConfig cfg = load_config(g);
    auto res = run_scenario(cfg);
    print_warnings(res);
    write_scenario_outputs(cfg, res, g.out);
    print_metrics("ekf-baseline", res.ekf_metrics);
    print_metrics("ammkf", res.ammkf_metrics);
    std::cout << "osc mae corrected=" << format_number(res.osc.corrected_mae)
              << " original=" << format_number(res.osc.original_mae) << " points=" << res.osc.points << '\n';
    for (const auto& v : res.violations)
        std::cerr << "violation: " << v << '\n';
    return res.violations.empty() ? 0 : 1;
}

int cmd_sweep(const Globals& g, const std::vector<double>& errors, unsigned jobs)
{
    ScenarioConfig base = load_config(g);
    base.validate();
    jobs = std::max(1u, jobs);

    struct Run {
        double error;
        fs::path dir;
        ScenarioConfig cfg;
        ScenarioResult res;
        std::string failure;
    };
    std::vector<Run> runs;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        ScenarioConfig c = base;
        c.initial_soc_error = errors[i];
        c.seed = base.seed + i;
        runs.push_back({errors[i], fs::path(g.out) / ("run_" + std::to_string(i)), c, {}, {}});
    }

    auto work = [](Run& r) {
        try {
            r.res = run_scenario(r.cfg);
            write_scenario_outputs(r.cfg, r.res, r.dir);
        } catch (const std::exception& e) {
            r.failure = e.what();
        }
    };
    for (std::size_t i = 0; i < runs.size(); i += jobs) {
        std::vector<std::future<void>> batch;
        for (std::size_t j = i; j < std::min(runs.size(), i + jobs); ++j)
            batch.push_back(std::async(std::launch::async, work, std::ref(runs[j])));
        for (auto& f : batch)
            f.get();
    }

    fs::create_directories(g.out);
    CsvWriter w(fs::path(g.out) / "sweep.csv", {"run", "initial_soc_error", "seed", "ekf_rmse", "ammkf_rmse",
                                                 "ammkf_convergence_time_s", "status"});
    bool ok = true;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& r = runs[i];
        std::string status = !r.failure.empty() ? "error" : r.res.violations.empty() ? "ok" : "violation";
        ok = ok && status == "ok";
        if (!r.failure.empty())
            std::cerr << "run " << i << ": " << r.failure << '\n';
        const auto& ct = r.res.ammkf_metrics.convergence_time_s;
        w.row({std::to_string(i), format_number(r.error), std::to_string(r.cfg.seed),
               format_number(r.res.ekf_metrics.rmse), format_number(r.res.ammkf_metrics.rmse),
               ct ? format_number(*ct) : "inf", status});
        std::cout << "error " << format_number(r.error) << ": ammkf rmse=" << format_number(r.res.ammkf_metrics.rmse)
                  << " convergence_time_s=" << (ct ? format_number(*ct) : "inf") << " " << status << '\n';
    }
    write_manifest(g.out, "sweep", base, {});
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"LiFePO4 SOC estimation toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config, "flat key=value config file")->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "output directory");
    app.add_option("--seed", g.seed, "RNG seed (overrides the config)");
    app.add_flag("--strict", g.strict, "reject non-uniform timestamps instead of resampling");
    app.add_option("--resample", g.resample, "resample input traces to this dt in seconds")
        ->check(CLI::PositiveNumber);

    auto* sim = app.add_subcommand("simulate", "simulate a drive profile on the true curve");

    std::string trace_path;
    auto* ident = app.add_subcommand("identify", "online circuit identification from a trace");
    ident->add_option("--trace", trace_path, "trace CSV")->required()->check(CLI::ExistingFile);

    std::string curve_path, method = "ekf";
    std::optional<double> initial_soc;
    auto* est = app.add_subcommand("estimate", "run the EKF or the filter bank on a trace");
    est->add_option("--trace", trace_path, "trace CSV")->required()->check(CLI::ExistingFile);
    est->add_option("--curve", curve_path, "filter OCV curve CSV (default: from the config)")
        ->check(CLI::ExistingFile);
    est->add_option("--method", method, "ekf or ammkf")->check(CLI::IsMember({"ekf", "ammkf"}));
    est->add_option("--initial-soc", initial_soc, "starting SOC estimate (default: OCV inversion)");

    std::string log_path;
    auto* ana = app.add_subcommand("analyze", "interval innovation statistics");
    ana->add_option("--innovations", log_path, "innovation log CSV")->required()->check(CLI::ExistingFile);

    auto* scen = app.add_subcommand("scenario", "simulate, estimate with both methods and score");

    std::vector<double> errors{-0.2, -0.1, 0.1, 0.2};
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    auto* sweep = app.add_subcommand("sweep", "scenario over several initial SOC errors");
    sweep->add_option("--errors", errors, "initial SOC errors")->delimiter(',');
    sweep->add_option("--jobs", jobs, "parallel scenarios");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim)
            return cmd_simulate(g);
        if (*ident)
            return cmd_identify(g, trace_path);
        if (*est)
            return cmd_estimate(g, trace_path, curve_path, method, initial_soc);
        if (*ana)
            return cmd_analyze(g, log_path);
        if (*scen)
            return cmd_scenario(g);
        if (*sweep)
            return cmd_sweep(g, errors, jobs);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

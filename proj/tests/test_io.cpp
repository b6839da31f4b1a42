// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "lfpsoc/config.hpp"
#include "lfpsoc/csv.hpp"
#include "lfpsoc/errors.hpp"
#include "lfpsoc/metrics.hpp"
#include "lfpsoc/profile.hpp"
#include "lfpsoc/scenario.hpp"

using namespace lfp;

TEST(Profile, Constant)
{
    ProfileParams pp;
    pp.steps = 100;
    pp.current = 0.5;
    auto p = generate_profile(ProfileKind::Constant, pp, 0);
    ASSERT_EQ(p.samples.size(), 100u);
    for (double v : p.samples)
        EXPECT_EQ(v, 0.5);
}

TEST(Profile, DstLikeDrainsTarget)
{
    ProfileParams pp;
    pp.steps = 7200;
    pp.target_ah = 1.063;
    auto p = generate_profile(ProfileKind::DstLike, pp, 0);
    double ah = std::accumulate(p.samples.begin(), p.samples.end(), 0.0) / 3600.0;
    EXPECT_NEAR(ah, 1.063, 1.063e-3);
    EXPECT_TRUE(std::any_of(p.samples.begin(), p.samples.end(), [](double v) { return v < 0; }));
}

TEST(Profile, SeedDeterminism)
{
    ProfileParams pp;
    pp.steps = 500;
    auto a = generate_profile(ProfileKind::RandomWalk, pp, 4);
    auto b = generate_profile(ProfileKind::RandomWalk, pp, 4);
    auto c = generate_profile(ProfileKind::RandomWalk, pp, 5);
    EXPECT_EQ(a.samples, b.samples);
    EXPECT_NE(a.samples, c.samples);
}

TEST(Profile, BadParams)
{
    ProfileParams pp;
    pp.steps = 0;
    EXPECT_THROW(generate_profile(ProfileKind::Constant, pp, 0), ConfigError);
    EXPECT_THROW(parse_profile_kind("fuds"), ConfigError);
}

TEST(Metrics, PerfectEstimate)
{
    std::vector<double> x{0.9, 0.8, 0.7};
    auto m = compute_metrics(x, x);
    EXPECT_EQ(m.rmse, 0.0);
    EXPECT_EQ(m.mae, 0.0);
    EXPECT_EQ(m.max_abs_error, 0.0);
    ASSERT_TRUE(m.convergence_time_s);
    EXPECT_EQ(*m.convergence_time_s, 0.0);
}

TEST(Metrics, ConstantError)
{
    std::vector<double> t{0.9, 0.8, 0.7}, e{0.92, 0.82, 0.72};
    auto m = compute_metrics(e, t);
    EXPECT_NEAR(m.rmse, 0.02, 1e-12);
    EXPECT_NEAR(m.mae, 0.02, 1e-12);
    EXPECT_NEAR(m.max_abs_error, 0.02, 1e-12);
}

TEST(Metrics, AlternatingError)
{
    std::vector<double> t{0.5, 0.5}, e{0.6, 0.4};
    auto m = compute_metrics(e, t);
    EXPECT_NEAR(m.rmse, 0.1, 1e-12);
    EXPECT_NEAR(m.mae, 0.1, 1e-12);
    EXPECT_NEAR(m.max_abs_error, 0.1, 1e-12);
    EXPECT_FALSE(m.convergence_time_s);
}

TEST(Metrics, ConvergenceTime)
{
    std::vector<double> t(10, 0.5), e{0.7, 0.6, 0.52, 0.56, 0.53, 0.51, 0.5, 0.5, 0.5, 0.5};
    auto m = compute_metrics(e, t, 2.0);
    ASSERT_TRUE(m.convergence_time_s);
    EXPECT_EQ(*m.convergence_time_s, 8.0);  // last bad sample is index 3
    EXPECT_THROW(compute_metrics(e, std::vector<double>(3, 0.5)), InvalidInput);
}

TEST(Metrics, OrderFreeExceptConvergence)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    std::vector<double> t(200, 0.5), e(200);
    for (auto& v : e)
        v = 0.5 + u(rng);
    auto a = compute_metrics(e, t);
    std::shuffle(e.begin(), e.end(), rng);
    auto b = compute_metrics(e, t);
    EXPECT_NEAR(a.rmse, b.rmse, 1e-15);
    EXPECT_NEAR(a.mae, b.mae, 1e-15);
    EXPECT_EQ(a.max_abs_error, b.max_abs_error);
    EXPECT_LE(a.rmse, a.max_abs_error);
}

TEST(Csv, TraceRoundTrip)
{
    Trace tr;
    tr.dt = 1.0;
    for (int k = 0; k < 50; ++k)
        tr.samples.push_back({double(k), 0.1 * k - 1.7, 3.3 + 1e-7 * k, 0.5 - 1e-4 * k, 1e-3 / (k + 1)});
    std::stringstream ss;
    write_trace(ss, tr);
    auto back = ingest_trace(ss).trace;
    ASSERT_EQ(back.size(), tr.size());
    for (std::size_t k = 0; k < tr.size(); ++k) {
        EXPECT_EQ(back.samples[k].t, tr.samples[k].t);
        EXPECT_EQ(back.samples[k].current, tr.samples[k].current);
        EXPECT_EQ(back.samples[k].voltage, tr.samples[k].voltage);
        EXPECT_EQ(back.samples[k].true_soc, tr.samples[k].true_soc);
        EXPECT_EQ(back.samples[k].true_up, tr.samples[k].true_up);
    }
}

TEST(Csv, MissingColumnIsNamed)
{
    std::stringstream ss("t,current_a\n0,1\n1,1\n");
    try {
        ingest_trace(ss);
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("voltage_v"), std::string::npos);
    }
}

TEST(Csv, MalformedRowReportsLine)
{
    std::stringstream ss("t,current_a,voltage_v\n0,1,3.3\n# note\n1,x,3.3\n");
    try {
        ingest_trace(ss);
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 4u);
    }
    std::stringstream short_row("t,current_a,voltage_v\n0,1,3.3\n1,1\n");
    EXPECT_THROW(ingest_trace(short_row), ParseError);
}

TEST(Csv, ResampleHoldsValues)
{
    std::stringstream ss("t,current_a,voltage_v\n0,1.0,3.30\n5,2.0,3.29\n10,-1.0,3.31\n");
    IngestOptions opt;
    opt.resample_dt = 1.0;
    auto tr = ingest_trace(ss, opt).trace;
    ASSERT_EQ(tr.size(), 15u);
    EXPECT_EQ(tr.dt, 1.0);
    for (std::size_t k = 0; k < 15; ++k) {
        EXPECT_EQ(tr.samples[k].t, static_cast<double>(k));
        EXPECT_EQ(tr.samples[k].current, k < 5 ? 1.0 : k < 10 ? 2.0 : -1.0);
    }
}

TEST(Csv, NonUniformWarnsOrRejects)
{
    const char* text = "t,current_a,voltage_v\n0,1,3.3\n1,1,3.3\n3,2,3.2\n4,2,3.2\n";
    std::stringstream a(text);
    auto res = ingest_trace(a);
    EXPECT_EQ(res.warnings.size(), 1u);
    EXPECT_EQ(res.trace.size(), 5u);
    EXPECT_EQ(res.trace.samples[2].current, 1.0);
    std::stringstream b(text);
    IngestOptions strict;
    strict.strict = true;
    EXPECT_THROW(ingest_trace(b, strict), ParseError);
}

TEST(Csv, CurveRoundTrip)
{
    auto dir = std::filesystem::temp_directory_path() / "lfpsoc_curve_test";
    std::filesystem::create_directories(dir);
    auto c = reference_lfp_curve();
    write_curve(dir / "c.csv", c);
    auto back = read_curve(dir / "c.csv");
    ASSERT_EQ(back.knots().size(), c.knots().size());
    for (std::size_t i = 0; i < c.knots().size(); ++i)
        EXPECT_EQ(back.knots()[i].ocv, c.knots()[i].ocv);
    std::stringstream bad("soc,ocv_v\n0,3.0\n0.5,3.3\n0.4,3.31\n1,3.5\n");
    EXPECT_THROW(read_curve(bad), ParseError);
}

TEST(Config, ParseAndTypes)
{
    std::stringstream ss("# comment\nn = 5\nspread=3.5 # inline\nparallel = yes\nname = x\n");
    auto c = Config::parse(ss);
    EXPECT_EQ(c.get_size("n", 7), 5u);
    EXPECT_EQ(c.get_double("spread", 2.0), 3.5);
    EXPECT_TRUE(c.get_bool("parallel", false));
    EXPECT_EQ(c.get_double("missing", 1.25), 1.25);
    EXPECT_EQ(c.unused_keys(), std::vector<std::string>{"name"});
    std::stringstream bad("n = five\n");
    auto b = Config::parse(bad);
    EXPECT_THROW(b.get_size("n", 1), ConfigError);
    std::stringstream no_eq("just words\n");
    EXPECT_THROW(Config::parse(no_eq), ParseError);
}

namespace {

ScenarioConfig quick_scenario()
{
    ScenarioConfig s;
    s.sim.voltage_noise_sigma = 0.002;
    s.noise.q = Eigen::Vector2d(3e-9, 1e-6).asDiagonal();
    s.noise.r = 4e-6;
    s.bank.spread = 4.0;
    s.bank.interval_length = 30;
    return s;
}

}  // namespace

TEST(Scenario, ConsistentModelBothAccurate)
{
    auto s = quick_scenario();
    s.initial_soc_error = 0.0;
    auto r = run_scenario(s);
    EXPECT_LT(r.ekf_metrics.rmse, 0.005);
    EXPECT_LT(r.ammkf_metrics.rmse, 0.005);
}

TEST(Scenario, PlateauOffsetOrdering)
{
    auto s = quick_scenario();
    s.offset_v = 0.02;
    s.offset_window = SocWindow{0.2, 0.85, 0.1};
    auto r = run_scenario(s);
    EXPECT_LT(r.ammkf_metrics.rmse, r.ekf_metrics.rmse);
}

TEST(Scenario, DeterministicUnderSeed)
{
    auto s = quick_scenario();
    s.offset_v = 0.04;
    s.offset_window = SocWindow{0.2, 0.85, 0.1};
    s.profile_params.steps = 3000;
    auto a = run_scenario(s);
    auto b = run_scenario(s);
    EXPECT_EQ(a.ammkf.soc, b.ammkf.soc);
    EXPECT_EQ(a.ekf_soc, b.ekf_soc);
    s.seed = 2;
    auto c = run_scenario(s);
    EXPECT_NE(a.trace.samples[10].voltage, c.trace.samples[10].voltage);
}

TEST(Scenario, ThresholdViolationsReported)
{
    auto s = quick_scenario();
    s.profile_params.steps = 2000;
    s.check_ammkf_rmse_max = 1e-9;
    auto r = run_scenario(s);
    EXPECT_EQ(r.violations.size(), 1u);
}

TEST(Scenario, ConfigTextRoundTrip)
{
    auto s = quick_scenario();
    s.offset_window = SocWindow{0.2, 0.85, 0.1};
    s.check_osc_mae_ratio_max = 0.25;
    std::stringstream ss(s.to_text());
    auto c = Config::parse(ss);
    auto back = ScenarioConfig::from_config(c);
    EXPECT_TRUE(c.unused_keys().empty());
    EXPECT_EQ(back.to_text(), s.to_text());
    EXPECT_TRUE(back.profile_target_auto);

    s.profile_target_auto = false;
    s.profile_params.target_ah = 0.4;
    std::stringstream fixed(s.to_text());
    auto again = ScenarioConfig::from_config(Config::parse(fixed));
    EXPECT_FALSE(again.profile_target_auto);
    EXPECT_EQ(again.profile_params.target_ah, 0.4);
}

TEST(Scenario, ErrorsCarryContext)
{
    auto s = quick_scenario();
    s.true_curve = "/nonexistent/curve.csv";
    try {
        run_scenario(s);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(std::string(e.what()).rfind("scenario: ", 0), 0u);
    }
    s = quick_scenario();
    s.initial_soc_error = 0.5;
    EXPECT_THROW(run_scenario(s), ConfigError);
}

TEST(Scenario, WrittenOutputsAreReadable)
{
    auto s = quick_scenario();
    s.profile_params.steps = 1500;
    auto r = run_scenario(s);
    auto dir = std::filesystem::temp_directory_path() / "lfpsoc_scenario_test";
    std::filesystem::remove_all(dir);
    write_scenario_outputs(s, r, dir);
    auto tr = ingest_trace(dir / "trace.csv").trace;
    EXPECT_EQ(tr.size(), r.trace.size());
    auto c = read_curve(dir / "filter_curve.csv");
    EXPECT_EQ(c.knots().size(), r.filter_curve->knots().size());
    auto innov = read_csv(dir / "innovations.csv");
    EXPECT_EQ(innov.header, (std::vector<std::string>{"interval", "step", "innovation_v", "acm_theo_v2"}));
    auto osc = read_csv(dir / "corrected_osc.csv");
    EXPECT_EQ(osc.rows.size(), r.ammkf.osc_points.size());
    EXPECT_TRUE(std::filesystem::exists(dir / "manifest.txt"));
    EXPECT_TRUE(std::filesystem::exists(dir / "metrics.csv"));
}

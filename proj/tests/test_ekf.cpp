// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "lfpsoc/ekf.hpp"
#include "lfpsoc/errors.hpp"
#include "lfpsoc/profile.hpp"
#include "support.hpp"

using namespace lfp;
using lfp::test::shared;

namespace {

KfState filter_on(std::shared_ptr<const OscCurve> c, BatteryState x = {0.5, 0.0})
{
    KfState s;
    s.x = x;
    s.p = Eigen::Vector2d(0.01, 0.001).asDiagonal();
    s.curve = std::move(c);
    return s;
}

Trace dst(const OscCurve& c, double soc0, std::size_t steps = 7200, double sigma_v = 0.0)
{
    SimConfig cfg;
    cfg.voltage_noise_sigma = sigma_v;
    cfg.rng_seed = 5;
    ProfileParams pp;
    pp.steps = steps;
    pp.target_ah = 0.98 * soc0 * cfg.capacity_ah;
    auto prof = generate_profile(ProfileKind::DstLike, pp, 1);
    return simulate_profile({soc0, 0.0}, {0.075, 0.025, 1500.0}, c, prof.samples, cfg);
}

const EcmParams kParams{0.075, 0.025, 1500.0};

}  // namespace

TEST(Predict, NoInputNoNoise)
{
    auto s = filter_on(shared(reference_lfp_curve()), {0.6, 0.02});
    s.noise.q.setZero();
    SimConfig cfg;
    auto pr = predict(s, kParams, 0.0, cfg);
    double a = std::exp(-1.0 / kParams.tau());
    EXPECT_EQ(pr.x.soc, 0.6);
    EXPECT_NEAR(pr.x.up, 0.02 * a, 1e-15);
    Eigen::Matrix2d f = Eigen::Vector2d(1.0, a).asDiagonal();
    EXPECT_NEAR((pr.p - f * s.p * f.transpose()).norm(), 0.0, 1e-15);
}

TEST(Predict, ZeroCovarianceStaysZero)
{
    auto s = filter_on(shared(reference_lfp_curve()));
    s.noise.q.setZero();
    s.p.setZero();
    auto pr = predict(s, kParams, 1.3, SimConfig{});
    EXPECT_EQ(pr.p, Eigen::Matrix2d::Zero());
}

TEST(Predict, MatchesSimulatorStep)
{
    auto s = filter_on(shared(reference_lfp_curve()), {0.7, 0.013});
    SimConfig cfg;
    for (double i : {-1.0, 0.0, 0.4, 2.5}) {
        auto pr = predict(s, kParams, i, cfg);
        auto st = step_state(s.x, kParams, i, cfg).state;
        EXPECT_NEAR(pr.x.soc, st.soc, 1e-12);
        EXPECT_NEAR(pr.x.up, st.up, 1e-12);
    }
}

TEST(Jacobian, OverrideWins)
{
    auto s = filter_on(shared(reference_lfp_curve()));
    s.slope_override = SlopeOverride{0.3, 0.5, 3.3};
    EXPECT_EQ(measurement_jacobian(s, 0.1), Eigen::RowVector2d(0.3, -1.0));
}

TEST(Jacobian, FlatCurve)
{
    auto s = filter_on(shared(lfp::test::curve_of({{0.0, 3.3}, {1.0, 3.3}})));
    EXPECT_EQ(measurement_jacobian(s, 0.4), Eigen::RowVector2d(0.0, -1.0));
}

TEST(Jacobian, SegmentSlope)
{
    auto s = filter_on(shared(lfp::test::small_curve()));
    auto h = measurement_jacobian(s, 0.3);
    EXPECT_NEAR(h(0), 0.5, 1e-12);
    EXPECT_EQ(h(1), -1.0);
}

TEST(Update, HugeMeasurementNoiseIgnoresData)
{
    auto s = filter_on(shared(reference_lfp_curve()));
    s.noise.r = 1e12;
    auto out = update(s, as_prior(s), 3.0, 0.5, kParams);
    EXPECT_NEAR(out.posterior.x.soc, s.x.soc, 1e-6);
    EXPECT_NEAR(out.posterior.x.up, s.x.up, 1e-6);
    EXPECT_LT(out.gain.norm(), 1e-6);
}

TEST(Update, ZeroInnovation)
{
    auto s = filter_on(shared(reference_lfp_curve()), {0.45, 0.01});
    double y = s.curve->ocv(0.45) - 0.01 - kParams.r0 * 0.7;
    auto out = update(s, as_prior(s), y, 0.7, kParams);
    EXPECT_NEAR(out.innovation, 0.0, 1e-15);
    EXPECT_NEAR(out.posterior.x.soc, 0.45, 1e-15);
    EXPECT_NEAR(out.posterior.x.up, 0.01, 1e-15);
    EXPECT_LE(out.posterior.p.trace(), s.p.trace());
}

TEST(Update, HandComputedGain)
{
    auto s = filter_on(shared(lfp::test::small_curve()), {0.3, 0.0});
    s.p = Eigen::Vector2d(0.01, 0.001).asDiagonal();
    s.noise.r = 1e-4;
    auto out = update(s, as_prior(s), 3.26, 0.0, kParams);
    // h = [0.5, -1]; P h' = (0.005, -0.001); S = 0.0025 + 0.001 + 0.0001 = 0.0036
    const double sv = 0.0036;
    EXPECT_NEAR(out.innovation_variance, sv, 1e-15);
    EXPECT_NEAR(out.gain(0), 0.005 / sv, 1e-12);
    EXPECT_NEAR(out.gain(1), -0.001 / sv, 1e-12);
    // P+ = P - K h P
    double k0 = 0.005 / sv, k1 = -0.001 / sv;
    EXPECT_NEAR(out.posterior.p(0, 0), 0.01 - k0 * 0.005, 1e-14);
    EXPECT_NEAR(out.posterior.p(0, 1), 0.0 - k0 * (-0.001), 1e-14);
    EXPECT_NEAR(out.posterior.p(1, 1), 0.001 - k1 * (-0.001), 1e-14);
    EXPECT_NEAR(out.innovation, 0.01, 1e-12);
    EXPECT_NEAR(out.posterior.x.soc, 0.3 + k0 * 0.01, 1e-12);
}

TEST(RunEkf, ConsistentModelIsExact)
{
    auto c = shared(reference_lfp_curve());
    auto tr = dst(*c, 0.95);
    auto init = filter_on(c, {0.95, 0.0});
    std::vector<EcmParams> p{kParams};
    auto out = run_ekf(init, p, tr, SimConfig{});
    ASSERT_EQ(out.size(), tr.size());
    for (std::size_t k = 0; k < out.size(); ++k)
        ASSERT_LT(std::abs(out[k].posterior.x.soc - tr.samples[k].true_soc), 1e-9) << "k=" << k;
}

TEST(RunEkf, InitialErrorDecays)
{
    auto c = shared(reference_lfp_curve());
    auto tr = dst(*c, 0.9, 7200, 0.002);
    auto init = filter_on(c, {0.7, 0.0});
    init.p = Eigen::Vector2d(0.04, 1e-4).asDiagonal();
    // Enough SOC process noise that the gain does not stall on the plateau.
    init.noise.q(0, 0) = 3e-8;
    init.noise.r = 4e-6;
    std::vector<EcmParams> p{kParams};
    auto out = run_ekf(init, p, tr, SimConfig{});
    EXPECT_LT(std::abs(out.back().posterior.x.soc - tr.samples.back().true_soc), 0.01);
}

TEST(RunEkf, PlateauOffsetBiasesEstimate)
{
    auto truth = reference_lfp_curve();
    auto wrong = shared(apply_transform(truth, CurveTransform::plateau_offset(0.02, {0.2, 0.85, 0.1})));
    auto tr = dst(truth, 0.95, 7200, 0.002);
    auto init = filter_on(wrong, {0.95, 0.0});
    init.p = Eigen::Vector2d(1e-4, 1e-4).asDiagonal();
    init.noise.q(0, 0) = 1e-8;
    init.noise.r = 4e-6;
    std::vector<EcmParams> p{kParams};
    auto out = run_ekf(init, p, tr, SimConfig{});
    // A filter curve above the truth pulls the estimate below the true SOC.
    std::size_t on_plateau = 0, below = 0;
    for (std::size_t k = 0; k < out.size(); ++k) {
        double s = tr.samples[k].true_soc;
        if (s > 0.3 && s < 0.75) {
            ++on_plateau;
            below += out[k].posterior.x.soc < s ? 1 : 0;
        }
    }
    ASSERT_GT(on_plateau, 1000u);
    EXPECT_GT(below, on_plateau * 95 / 100);
}

TEST(RunEkf, MisalignedParamsThrow)
{
    auto c = shared(reference_lfp_curve());
    auto tr = dst(*c, 0.9, 100);
    std::vector<EcmParams> p(5, kParams);
    EXPECT_THROW(run_ekf(filter_on(c), p, tr, SimConfig{}), InvalidInput);
}

// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lfpsoc/errors.hpp"
#include "lfpsoc/osc.hpp"
#include "support.hpp"

using namespace lfp;
using lfp::test::curve_of;
using lfp::test::small_curve;

TEST(OcvLookup, KnotsAreExact)
{
    auto c = reference_lfp_curve();
    for (const auto& k : c.knots())
        EXPECT_EQ(c.ocv(k.soc), k.ocv);
}

TEST(OcvLookup, SegmentMidpoint)
{
    EXPECT_NEAR(small_curve().ocv(0.3), 3.25, 1e-15);
}

TEST(OcvLookup, ResampledCurveReproducesOriginal)
{
    auto c = reference_lfp_curve();
    std::vector<OcvKnot> samples;
    for (int i = 0; i <= 1000; ++i) {
        double s = i / 1000.0;
        samples.push_back({s, c.ocv(s)});
    }
    OscCurve rebuilt(samples);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 5000; ++i) {
        double s = u(rng);
        ASSERT_NEAR(rebuilt.ocv(s), c.ocv(s), 1e-9) << "soc " << s;
    }
}

TEST(OcvLookup, OutsideDomainThrows)
{
    auto c = small_curve();
    EXPECT_THROW(c.ocv(-0.01), DomainError);
    EXPECT_THROW(c.ocv(1.01), DomainError);
    EXPECT_THROW(c.slope(1.5), DomainError);
}

TEST(OcvSlope, InsideSegment)
{
    EXPECT_NEAR(small_curve().slope(0.25), 0.5, 1e-12);
}

TEST(OcvSlope, InteriorKnotAveragesNeighbours)
{
    EXPECT_NEAR(small_curve().slope(0.4), 0.3, 1e-12);
}

TEST(OcvSlope, ConstantCurveIsFlat)
{
    auto c = curve_of({{0.0, 3.3}, {0.5, 3.3}, {1.0, 3.3}});
    for (double s : {0.0, 0.1, 0.5, 0.77, 1.0})
        EXPECT_EQ(c.slope(s), 0.0);
}

TEST(OcvCurve, RejectsBadKnots)
{
    EXPECT_THROW(curve_of({{0.0, 3.0}}), InvalidInput);
    EXPECT_THROW(curve_of({{0.0, 3.0}, {0.5, 3.1}, {0.5, 3.2}, {1.0, 3.3}}), InvalidInput);
    EXPECT_THROW(curve_of({{0.1, 3.0}, {1.0, 3.3}}), InvalidInput);
    EXPECT_THROW(curve_of({{0.0, 3.0}, {0.5, NAN}, {1.0, 3.3}}), InvalidInput);
    // 5 mV dip
    EXPECT_THROW(curve_of({{0.0, 3.0}, {0.4, 3.30}, {0.6, 3.295}, {1.0, 3.4}}), InvalidInput);
}

TEST(OcvCurve, SmallDipWarns)
{
    auto c = curve_of({{0.0, 3.0}, {0.4, 3.30}, {0.6, 3.299}, {1.0, 3.4}});
    EXPECT_EQ(c.warnings().size(), 1u);
    EXPECT_TRUE(small_curve().warnings().empty());
}

TEST(CurveError, IdenticalCurvesGiveZero)
{
    auto c = reference_lfp_curve();
    for (int i = 0; i <= 100; ++i)
        EXPECT_EQ(curve_error(c, c, i / 100.0), 0.0);
}

TEST(CurveError, ConstantOffset)
{
    auto c = reference_lfp_curve();
    auto shifted = apply_transform(c, CurveTransform::offset(0.020));
    for (int i = 0; i <= 100; ++i)
        EXPECT_NEAR(curve_error(shifted, c, i / 100.0), 0.020, 1e-12);
}

TEST(CurveError, SignChangesMatchCrossings)
{
    // b - a is +0.1 at both ends and -0.1 in the middle: crossings at 0.25 and 0.75.
    auto a = curve_of({{0.0, 3.0}, {1.0, 3.5}});
    auto b = curve_of({{0.0, 3.1}, {0.5, 3.15}, {1.0, 3.6}});
    int changes = 0;
    double prev = curve_error(b, a, 0.0);
    for (int i = 1; i <= 10000; ++i) {
        double e = curve_error(b, a, i / 10000.0);
        if ((e > 0) != (prev > 0))
            ++changes;
        prev = e;
    }
    EXPECT_EQ(changes, 2);
    EXPECT_NEAR(curve_error(b, a, 0.25), 0.0, 1e-12);
    EXPECT_NEAR(curve_error(b, a, 0.75), 0.0, 1e-12);
}

TEST(CurveTransform, ZeroOffsetIsIdentity)
{
    auto c = reference_lfp_curve();
    auto t = apply_transform(c, CurveTransform::offset(0.0));
    ASSERT_EQ(t.knots().size(), c.knots().size());
    for (std::size_t i = 0; i < c.knots().size(); ++i) {
        EXPECT_EQ(t.knots()[i].soc, c.knots()[i].soc);
        EXPECT_EQ(t.knots()[i].ocv, c.knots()[i].ocv);
    }
}

TEST(CurveTransform, BlendEndpointsAndMidpoint)
{
    auto a = reference_lfp_curve();
    auto b = std::make_shared<const OscCurve>(curve_of({{0.0, 2.8}, {0.3, 3.2}, {0.65, 3.31}, {1.0, 3.5}}));
    auto one = apply_transform(a, CurveTransform::blend_toward(b, 1.0));
    auto half = apply_transform(a, CurveTransform::blend_toward(b, 0.5));
    for (int i = 0; i <= 200; ++i) {
        double s = i / 200.0;
        EXPECT_NEAR(one.ocv(s), b->ocv(s), 1e-12);
        EXPECT_NEAR(half.ocv(s), 0.5 * (a.ocv(s) + b->ocv(s)), 1e-12);
    }
    EXPECT_THROW(apply_transform(a, CurveTransform::blend_toward(b, 1.5)), InvalidTransform);
}

TEST(CurveTransform, PlateauOffsetFollowsWindow)
{
    auto c = reference_lfp_curve();
    // The offset is applied at the curve knots, so only knot-aligned points are exact.
    SocWindow w{0.2, 0.85, 0.1};
    auto t = apply_transform(c, CurveTransform::plateau_offset(0.02, w));
    EXPECT_NEAR(t.ocv(0.5) - c.ocv(0.5), 0.02, 1e-12);
    EXPECT_NEAR(t.ocv(0.15) - c.ocv(0.15), 0.01, 1e-12);
    EXPECT_NEAR(t.ocv(0.05) - c.ocv(0.05), 0.0, 1e-12);
    EXPECT_NEAR(t.ocv(0.9) - c.ocv(0.9), 0.01, 0.01);
    EXPECT_NEAR(t.ocv(1.0) - c.ocv(1.0), 0.0, 1e-12);
    EXPECT_THROW(apply_transform(c, CurveTransform::plateau_offset(0.02, {0.3, 0.7, 0.0})), InvalidTransform);
}

TEST(CurveTransform, SocShift)
{
    auto c = reference_lfp_curve();
    auto t = apply_transform(c, CurveTransform::soc_shift(0.05));
    for (double s : {0.05, 0.2, 0.5, 0.93, 1.0})
        EXPECT_NEAR(t.ocv(s), c.ocv(s - 0.05), 1e-12);
    EXPECT_NEAR(t.ocv(0.01), c.ocv(0.0), 1e-12);
}

TEST(CurveTransform, SlopeScaleKeepsMeanAndScalesDifferences)
{
    auto c = small_curve();
    auto t = apply_transform(c, CurveTransform::slope_scale(2.0));
    EXPECT_NEAR(t.slope(0.25), 1.0, 1e-12);
    EXPECT_NEAR(t.ocv(0.6) - t.ocv(0.2), 2.0 * (c.ocv(0.6) - c.ocv(0.2)), 1e-12);
    EXPECT_THROW(apply_transform(c, CurveTransform::slope_scale(-1.0)), InvalidTransform);
}

TEST(CurveTransform, InvalidResultIsReported)
{
    // A windowed negative offset larger than the local rise breaks monotonicity.
    auto c = reference_lfp_curve();
    EXPECT_THROW(apply_transform(c, CurveTransform::plateau_offset(-0.2, {0.4, 0.6, 0.01})), InvalidTransform);
}

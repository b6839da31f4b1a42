// SPDX-License-Identifier: Apache-2.0
#include "lfpsoc/osc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lfpsoc/errors.hpp"

namespace lfp {

namespace {

constexpr double kEdgeTol = 1e-12;

void check_domain(double soc)
{
    if (!std::isfinite(soc) || soc < 0.0 || soc > 1.0) {
        std::ostringstream os;
        os << "soc " << soc << " outside curve domain [0, 1]";
        throw DomainError(os.str());
    }
}

}  // namespace

OscCurve::OscCurve(std::vector<OcvKnot> knots) : knots_(std::move(knots))
{
    if (knots_.size() < 2)
        throw InvalidInput("curve needs at least 2 knots");
    for (std::size_t i = 0; i < knots_.size(); ++i) {
        const auto& k = knots_[i];
        if (!std::isfinite(k.soc) || !std::isfinite(k.ocv))
            throw InvalidInput("non-finite knot at index " + std::to_string(i));
        if (i > 0 && !(k.soc > knots_[i - 1].soc))
            throw InvalidInput("knot soc not strictly increasing at index " + std::to_string(i));
    }
    if (std::abs(knots_.front().soc) > kEdgeTol || std::abs(knots_.back().soc - 1.0) > kEdgeTol)
        throw InvalidInput("curve knots must span soc 0 to 1");
    knots_.front().soc = 0.0;
    knots_.back().soc = 1.0;

    for (std::size_t i = 1; i < knots_.size(); ++i) {
        double dip = knots_[i - 1].ocv - knots_[i].ocv;
        if (dip <= 0.0)
            continue;
        std::ostringstream os;
        os << "ocv decreases by " << dip * 1e3 << " mV at index " << i;
        if (dip > kDipTolerance)
            throw InvalidInput(os.str());
        warnings_.push_back(os.str());
    }
}

std::size_t OscCurve::segment(double soc) const
{
    auto it = std::upper_bound(knots_.begin(), knots_.end(), soc,
                               [](double s, const OcvKnot& k) { return s < k.soc; });
    std::size_t i = static_cast<std::size_t>(it - knots_.begin());
    if (i == 0)
        return 0;
    return std::min(i - 1, knots_.size() - 2);
}

double OscCurve::segment_slope(std::size_t i) const
{
    const auto& a = knots_[i];
    const auto& b = knots_[i + 1];
    return (b.ocv - a.ocv) / (b.soc - a.soc);
}

double OscCurve::ocv(double soc) const
{
    check_domain(soc);
    std::size_t i = segment(soc);
    const auto& a = knots_[i];
    if (soc == a.soc)
        return a.ocv;
    const auto& b = knots_[i + 1];
    if (soc == b.soc)
        return b.ocv;
    double w = (soc - a.soc) / (b.soc - a.soc);
    return a.ocv + w * (b.ocv - a.ocv);
}

double OscCurve::slope(double soc) const
{
    check_domain(soc);
    std::size_t i = segment(soc);
    if (soc == knots_[i].soc && i > 0)
        return 0.5 * (segment_slope(i - 1) + segment_slope(i));
    return segment_slope(i);
}

double OscCurve::max_segment_slope() const
{
    double m = 0.0;
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i)
        m = std::max(m, std::abs(segment_slope(i)));
    return m;
}

double curve_error(const OscCurve& actual, const OscCurve& original, double soc)
{
    return actual.ocv(soc) - original.ocv(soc);
}

CurveTransform CurveTransform::offset(double volts)
{
    return {Kind::VoltageOffset, volts, nullptr, std::nullopt};
}

CurveTransform CurveTransform::plateau_offset(double volts, SocWindow window)
{
    return {Kind::VoltageOffset, volts, nullptr, window};
}

CurveTransform CurveTransform::soc_shift(double shift)
{
    return {Kind::SocShift, shift, nullptr, std::nullopt};
}

CurveTransform CurveTransform::slope_scale(double factor)
{
    return {Kind::SlopeScale, factor, nullptr, std::nullopt};
}

CurveTransform CurveTransform::blend_toward(std::shared_ptr<const OscCurve> other, double weight)
{
    return {Kind::BlendToward, weight, std::move(other), std::nullopt};
}

double window_weight(const SocWindow& w, double soc)
{
    if (soc >= w.lo && soc <= w.hi)
        return 1.0;
    if (w.ramp <= 0.0)
        return 0.0;
    double d = soc < w.lo ? w.lo - soc : soc - w.hi;
    return std::max(0.0, 1.0 - d / w.ramp);
}

namespace {

std::vector<OcvKnot> with_breakpoints(const OscCurve& c, std::vector<double> extra)
{
    std::vector<double> socs;
    for (const auto& k : c.knots())
        socs.push_back(k.soc);
    for (double s : extra)
        if (s > 0.0 && s < 1.0)
            socs.push_back(s);
    std::sort(socs.begin(), socs.end());
    std::vector<OcvKnot> out;
    for (double s : socs) {
        if (!out.empty() && std::abs(s - out.back().soc) < 1e-12)
            continue;
        out.push_back({s, c.ocv(s)});
    }
    return out;
}

OscCurve checked(std::vector<OcvKnot> knots)
{
    try {
        return OscCurve(std::move(knots));
    } catch (const InvalidInput& e) {
        throw InvalidTransform(std::string("transformed curve is invalid: ") + e.what());
    }
}

}  // namespace

OscCurve apply_transform(const OscCurve& curve, const CurveTransform& t)
{
    if (!std::isfinite(t.magnitude))
        throw InvalidTransform("non-finite transform magnitude");
    std::vector<OcvKnot> knots(curve.knots().begin(), curve.knots().end());

    switch (t.kind) {
    case CurveTransform::Kind::VoltageOffset: {
        if (t.magnitude == 0.0)
            return curve;
        if (!t.window) {
            for (auto& k : knots)
                k.ocv += t.magnitude;
            return checked(std::move(knots));
        }
        const SocWindow& w = *t.window;
        if (!(w.lo <= w.hi) || w.ramp < 0.0)
            throw InvalidTransform("offset window needs lo <= hi and ramp >= 0");
        if (w.ramp == 0.0 && (w.lo > 0.0 || w.hi < 1.0))
            throw InvalidTransform("interior offset window needs a positive ramp");
        knots = with_breakpoints(curve, {w.lo - w.ramp, w.lo, w.hi, w.hi + w.ramp});
        for (auto& k : knots)
            k.ocv += t.magnitude * window_weight(w, k.soc);
        return checked(std::move(knots));
    }
    case CurveTransform::Kind::SocShift: {
        if (t.magnitude == 0.0)
            return curve;
        if (std::abs(t.magnitude) >= 1.0)
            throw InvalidTransform("soc shift must be within (-1, 1)");
        // g(s) = f(clamp(s - shift)), knots at the shifted breakpoints plus the domain ends.
        std::vector<double> socs{0.0, 1.0};
        for (const auto& k : curve.knots()) {
            double s = k.soc + t.magnitude;
            if (s > 0.0 && s < 1.0)
                socs.push_back(s);
        }
        std::sort(socs.begin(), socs.end());
        std::vector<OcvKnot> out;
        for (double s : socs) {
            if (!out.empty() && std::abs(s - out.back().soc) < 1e-12)
                continue;
            out.push_back({s, curve.ocv(std::clamp(s - t.magnitude, 0.0, 1.0))});
        }
        return checked(std::move(out));
    }
    case CurveTransform::Kind::SlopeScale: {
        if (t.magnitude == 1.0)
            return curve;
        if (t.magnitude < 0.0)
            throw InvalidTransform("negative slope scale reverses the curve");
        double mean = 0.0;
        for (const auto& k : knots)
            mean += k.ocv;
        mean /= static_cast<double>(knots.size());
        for (auto& k : knots)
            k.ocv = mean + t.magnitude * (k.ocv - mean);
        return checked(std::move(knots));
    }
    case CurveTransform::Kind::BlendToward: {
        if (!t.other)
            throw InvalidTransform("blend needs a target curve");
        double w = t.magnitude;
        if (w < 0.0 || w > 1.0)
            throw InvalidTransform("blend weight must be in [0, 1]");
        if (w == 0.0)
            return curve;
        if (w == 1.0)
            return *t.other;
        std::vector<double> extra;
        for (const auto& k : t.other->knots())
            extra.push_back(k.soc);
        auto out = with_breakpoints(curve, extra);
        for (auto& k : out)
            k.ocv = (1.0 - w) * curve.ocv(k.soc) + w * t.other->ocv(k.soc);
        return checked(std::move(out));
    }
    }
    throw InvalidTransform("unknown transform kind");
}

OscCurve reference_lfp_curve()
{
    return OscCurve({{0.00, 2.500}, {0.02, 2.900}, {0.05, 3.050}, {0.10, 3.180}, {0.15, 3.220},
                     {0.20, 3.245}, {0.30, 3.270}, {0.40, 3.285}, {0.50, 3.295}, {0.60, 3.305},
                     {0.70, 3.318}, {0.80, 3.330}, {0.85, 3.340}, {0.90, 3.360}, {0.95, 3.400},
                     {0.98, 3.450}, {1.00, 3.550}});
}

}  // namespace lfp

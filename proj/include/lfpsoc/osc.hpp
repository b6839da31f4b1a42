// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lfp {

struct OcvKnot {
    double soc;
    double ocv;
};

// Piecewise-linear OCV-SOC curve over [0, 1]. Immutable after construction.
class OscCurve {
public:
    // Dips in ocv up to this size are accepted with a warning.
    static constexpr double kDipTolerance = 2e-3;

    explicit OscCurve(std::vector<OcvKnot> knots);

    double ocv(double soc) const;
    // Segment slope; mean of the adjacent slopes at interior knots.
    double slope(double soc) const;

    std::span<const OcvKnot> knots() const { return knots_; }
    const std::vector<std::string>& warnings() const { return warnings_; }
    double max_segment_slope() const;

private:
    std::size_t segment(double soc) const;
    double segment_slope(std::size_t i) const;

    std::vector<OcvKnot> knots_;
    std::vector<std::string> warnings_;
};

double curve_error(const OscCurve& actual, const OscCurve& original, double soc);

struct SocWindow {
    double lo = 0.0;
    double hi = 1.0;
    double ramp = 0.0;  // linear fade width outside [lo, hi]
};

struct CurveTransform {
    enum class Kind { VoltageOffset, SocShift, SlopeScale, BlendToward };

    Kind kind = Kind::VoltageOffset;
    // volt for VoltageOffset, fraction for SocShift, factor for SlopeScale,
    // weight for BlendToward.
    double magnitude = 0.0;
    std::shared_ptr<const OscCurve> other;  // BlendToward only
    std::optional<SocWindow> window;        // VoltageOffset only

    static CurveTransform offset(double volts);
    static CurveTransform plateau_offset(double volts, SocWindow window);
    static CurveTransform soc_shift(double shift);
    static CurveTransform slope_scale(double factor);
    static CurveTransform blend_toward(std::shared_ptr<const OscCurve> other, double weight);
};

OscCurve apply_transform(const OscCurve& curve, const CurveTransform& t);

// Weight of a windowed offset at `soc`: 1 inside the window, linear ramps outside.
double window_weight(const SocWindow& w, double soc);

// Synthetic LiFePO4-like reference curve with a flat mid-SOC plateau.
OscCurve reference_lfp_curve();

}  // namespace lfp

// SPDX-License-Identifier: Apache-2.0
#include "lfpsoc/innovation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lfpsoc/errors.hpp"

namespace lfp {

std::string_view to_string(ErrorSign s)
{
    switch (s) {
    case ErrorSign::PositiveG:
        return "positive-g";
    case ErrorSign::NegativeG:
        return "negative-g";
    case ErrorSign::Indeterminate:
        return "indeterminate";
    }
    return "indeterminate";
}

ErrorSign parse_error_sign(std::string_view s)
{
    if (s == "positive-g")
        return ErrorSign::PositiveG;
    if (s == "negative-g")
        return ErrorSign::NegativeG;
    if (s == "indeterminate")
        return ErrorSign::Indeterminate;
    throw InvalidInput("unknown verdict '" + std::string(s) + "'");
}

double SignThresholds::ccm_threshold(double empirical_acm) const
{
    return std::max(floor, acm_fraction * empirical_acm);
}

double interval_ccm(const IntervalInnovations& prev, const IntervalInnovations& curr)
{
    if (prev.values.size() != curr.values.size())
        throw InvalidInput("interval lengths differ");
    if (curr.values.empty())
        throw InvalidInput("empty interval");
    double sum = 0.0;
    for (std::size_t i = 0; i < curr.values.size(); ++i)
        sum += prev.values[i] * curr.values[i];
    return sum / static_cast<double>(curr.values.size());
}

double empirical_acm(const IntervalInnovations& curr)
{
    if (curr.values.empty())
        throw InvalidInput("empty interval");
    double sum = 0.0;
    for (double v : curr.values)
        sum += v * v;
    return sum / static_cast<double>(curr.values.size());
}

double theoretical_acm(const Eigen::RowVector2d& h, const Eigen::Matrix2d& p_minus, double r)
{
    double v = h * p_minus * h.transpose() + r;
    if (v < 0.0)
        throw NumericalDegeneracy("negative theoretical innovation variance");
    return v;
}

ErrorSignVerdict infer_error_sign(double ccm, double acm_ratio, double ccm_threshold)
{
    ErrorSignVerdict v;
    v.ccm_value = ccm;
    v.acm_ratio = acm_ratio;
    if (ccm > ccm_threshold)
        v.sign = ErrorSign::NegativeG;
    else if (ccm < -ccm_threshold)
        v.sign = ErrorSign::PositiveG;
    return v;
}

double interval_rms(std::span<const IntervalInnovations> intervals)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& iv : intervals) {
        for (double v : iv.values)
            sum += v * v;
        n += iv.values.size();
    }
    return n == 0 ? 0.0 : std::sqrt(sum / static_cast<double>(n));
}

bool detect_convergence(std::span<const IntervalInnovations> history, const ConvergenceConfig& cfg)
{
    const std::size_t w = std::max<std::size_t>(cfg.window, 2);
    if (history.size() < w)
        return false;
    const std::size_t n = history.size();
    double now = interval_rms(history.subspan(n - w, w));
    double prev = interval_rms(history.subspan(n - w, w - 1));
    double initial = interval_rms(history.subspan(0, 1));

    double s = 0.0;
    for (std::size_t i = n - w; i < n; ++i)
        s += theoretical_acm(history[i].h_used, history[i].p_minus_last, history[i].r);
    double floor = cfg.noise_sigmas * std::sqrt(s / static_cast<double>(w));

    // Differences at rounding level count as stable.
    double rel = 0.0;
    if (std::abs(now - prev) > 1e-12)
        rel = prev > 0.0 ? std::abs(now - prev) / prev : std::numeric_limits<double>::infinity();

    bool small = now < cfg.rho * initial || now <= floor;
    return small && rel < cfg.max_relative_change;
}

}  // namespace lfp

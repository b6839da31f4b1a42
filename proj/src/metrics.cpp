// SPDX-License-Identifier: Apache-2.0
#include "lfpsoc/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "lfpsoc/errors.hpp"

namespace lfp {

Metrics compute_metrics(std::span<const double> est, std::span<const double> truth, double dt)
{
    if (est.size() != truth.size())
        throw InvalidInput("estimate and truth lengths differ");
    Metrics m;
    const std::size_t n = est.size();
    if (n == 0)
        return m;
    double se = 0.0, ae = 0.0;
    std::size_t last_bad = n;  // n means none
    for (std::size_t i = 0; i < n; ++i) {
        double e = est[i] - truth[i];
        se += e * e;
        ae += std::abs(e);
        m.max_abs_error = std::max(m.max_abs_error, std::abs(e));
        if (std::abs(e) >= kConvergenceThreshold)
            last_bad = i;
    }
    m.rmse = std::sqrt(se / static_cast<double>(n));
    m.mae = ae / static_cast<double>(n);
    if (last_bad == n)
        m.convergence_time_s = 0.0;
    else if (last_bad + 1 < n)
        m.convergence_time_s = static_cast<double>(last_bad + 1) * dt;

    std::size_t q0 = n - n / 4;
    if (q0 >= n)
        q0 = 0;
    double sq = 0.0;
    for (std::size_t i = q0; i < n; ++i)
        sq += (est[i] - truth[i]) * (est[i] - truth[i]);
    m.final_quarter_rmse = std::sqrt(sq / static_cast<double>(n - q0));
    return m;
}

OscMetrics osc_correction_metrics(std::span<const CorrectedPoint> points, const OscCurve& true_curve,
                                  const OscCurve& original_curve)
{
    OscMetrics m;
    m.points = points.size();
    if (points.empty())
        return m;
    for (const auto& p : points) {
        double s = std::clamp(p.soc, 0.0, 1.0);
        double t = true_curve.ocv(s);
        m.corrected_mae += std::abs(p.ocv - t);
        m.original_mae += std::abs(original_curve.ocv(s) - t);
    }
    m.corrected_mae /= static_cast<double>(points.size());
    m.original_mae /= static_cast<double>(points.size());
    return m;
}

std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag)
{
    const std::size_t n = x.size();
    if (n <= max_lag)
        throw InvalidInput("series shorter than the requested lag");
    double mean = 0.0;
    for (double v : x)
        mean += v;
    mean /= static_cast<double>(n);
    double c0 = 0.0;
    for (double v : x)
        c0 += (v - mean) * (v - mean);
    std::vector<double> out(max_lag, 0.0);
    if (c0 == 0.0)
        return out;
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        double c = 0.0;
        for (std::size_t i = lag; i < n; ++i)
            c += (x[i] - mean) * (x[i - lag] - mean);
        out[lag - 1] = c / c0;
    }
    return out;
}

}  // namespace lfp

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <span>
#include <string_view>
#include <vector>

namespace lfp {

struct IntervalInnovations {
    std::size_t index = 0;
    std::vector<double> values;
    Eigen::RowVector2d h_used = Eigen::RowVector2d::Zero();
    Eigen::Matrix2d p_minus_last = Eigen::Matrix2d::Zero();
    double r = 0.0;
};

enum class ErrorSign { PositiveG, NegativeG, Indeterminate };

std::string_view to_string(ErrorSign s);
ErrorSign parse_error_sign(std::string_view s);

struct ErrorSignVerdict {
    ErrorSign sign = ErrorSign::Indeterminate;
    double ccm_value = 0.0;
    double acm_ratio = 0.0;
};

struct SignThresholds {
    double floor = 1e-8;          // volt^2
    double acm_fraction = 0.05;

    // tau = max(floor, acm_fraction * empirical ACM)
    double ccm_threshold(double empirical_acm) const;
};

double interval_ccm(const IntervalInnovations& prev, const IntervalInnovations& curr);
double empirical_acm(const IntervalInnovations& curr);
double theoretical_acm(const Eigen::RowVector2d& h, const Eigen::Matrix2d& p_minus, double r);

// ccm > tau: the measured voltage sits below the model (g < 0); ccm < -tau: g > 0.
ErrorSignVerdict infer_error_sign(double ccm, double acm_ratio, double ccm_threshold);

struct ConvergenceConfig {
    std::size_t window = 3;
    double rho = 0.2;
    double max_relative_change = 0.1;
    // Innovations within this many predicted standard deviations count as converged.
    double noise_sigmas = 1.5;
};

bool detect_convergence(std::span<const IntervalInnovations> history, const ConvergenceConfig& cfg);

double interval_rms(std::span<const IntervalInnovations> intervals);

}  // namespace lfp

// SPDX-License-Identifier: Apache-2.0
#include "lfpsoc/ammkf.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>

#include "lfpsoc/errors.hpp"

namespace lfp {

void BankConfig::validate() const
{
    if (n == 0 || (n > 1 && (n < 3 || n % 2 == 0)))
        throw ConfigError("bank size must be an odd integer >= 3 (or 1 for testing)");
    if (interval_length < 5)
        throw ConfigError("interval length must be at least 5 steps");
    if (!(spread > 1.0))
        throw ConfigError("slope spread must be > 1");
    if (!(slope_floor > 0.0))
        throw ConfigError("slope floor must be positive");
    if (!(probability_floor >= 0.0) || probability_floor * static_cast<double>(n) >= 1.0)
        throw ConfigError("probability floor must be in [0, 1/n)");
    if (convergence.window < 2)
        throw ConfigError("convergence window must be at least 2 intervals");
}

std::vector<double> build_slope_set(double base_slope, const ErrorSignVerdict& verdict, CurrentMode mode,
                                    const BankConfig& cfg)
{
    if (!(base_slope >= 0.0))
        throw InvalidInput("base slope must be non-negative");
    const std::size_t n = cfg.n;
    if (n == 1)
        return {std::max(base_slope, cfg.slope_floor)};

    // Exponent range of spread: [-1, 1] symmetric, [0, 1] upward, [-1, 0] downward.
    double lo = -1.0, hi = 1.0;
    if (verdict.sign != ErrorSign::Indeterminate) {
        bool negative_g = verdict.sign == ErrorSign::NegativeG;
        bool up = (mode == CurrentMode::Discharge) == negative_g;
        lo = up ? 0.0 : -1.0;
        hi = up ? 1.0 : 0.0;
    }
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        double e = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(n - 1);
        double s = e == 0.0 ? base_slope : base_slope * std::pow(cfg.spread, e);
        out[j] = std::max(s, cfg.slope_floor);
    }
    return out;
}

double predicted_measurement_mean(const KfState& filter, const BatteryState& prior, double current,
                                  const EcmParams& params)
{
    return measurement_h(filter, prior) - params.r0 * current;
}

double likelihood(double y, double mean, double s)
{
    if (!(s > 0.0))
        throw InvalidInput("likelihood variance must be positive");
    double d = y - mean;
    return std::exp(-d * d / (2.0 * s)) / std::sqrt(2.0 * std::numbers::pi * s);
}

ProbabilityUpdate update_probabilities(std::span<const double> probs, std::span<const double> densities,
                                       double floor)
{
    if (probs.size() != densities.size() || probs.empty())
        throw InvalidInput("probability and density vectors differ in length");
    const std::size_t n = probs.size();
    ProbabilityUpdate out;
    out.probs.resize(n);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (!(densities[j] >= 0.0))
            throw InvalidInput("densities must be non-negative");
        out.probs[j] = probs[j] * densities[j];
        sum += out.probs[j];
    }
    if (!(sum > 0.0) || !std::isfinite(sum)) {
        std::fill(out.probs.begin(), out.probs.end(), 1.0 / static_cast<double>(n));
        out.reset = true;
        return out;
    }
    for (auto& p : out.probs)
        p /= sum;
    if (floor > 0.0) {
        double s2 = 0.0;
        for (auto& p : out.probs) {
            p = std::max(p, floor);
            s2 += p;
        }
        for (auto& p : out.probs)
            p /= s2;
    }
    return out;
}

FilterBank make_bank(const KfState& start, double anchor_ocv, std::span<const double> slopes,
                     std::size_t interval_index, bool slope_override)
{
    if (slopes.empty())
        throw InvalidInput("empty slope set");
    FilterBank b;
    b.interval_index = interval_index;
    b.anchor = start.x;
    b.anchor_ocv = anchor_ocv;
    for (double s : slopes) {
        KfState f = start;
        f.slope_override.reset();
        if (slope_override)
            f.slope_override = SlopeOverride{s, start.x.soc, anchor_ocv};
        b.filters.push_back(std::move(f));
    }
    b.probabilities.assign(slopes.size(), 1.0 / static_cast<double>(slopes.size()));
    b.innovations.assign(slopes.size(), {});
    return b;
}

namespace {

struct Lane {
    std::vector<StepOutput> steps;
    std::vector<double> density;
    bool failed = false;
};

void run_lane(KfState& f, Lane& lane, const Trace& trace, std::size_t start, std::size_t length,
              std::span<const EcmParams> params, const SimConfig& sim)
{
    lane.steps.reserve(length);
    lane.density.assign(length, 0.0);
    for (std::size_t i = 0; i < length; ++i) {
        std::size_t k = start + i;
        const auto& s = trace.samples[k];
        std::optional<double> prev;
        if (k > 0)
            prev = trace.samples[k - 1].current;
        try {
            StepOutput out = filter_step(f, params_at(params, k), prev, s.current, s.voltage, sim);
            lane.density[i] = likelihood(s.voltage, s.voltage - out.innovation, out.innovation_variance);
            lane.steps.push_back(out);
        } catch (const Error&) {
            lane.failed = true;
            return;
        }
    }
}

double model_ocv(const KfState& f, double soc)
{
    if (f.slope_override)
        return f.slope_override->anchor_ocv + f.slope_override->slope * (soc - f.slope_override->anchor_soc);
    return f.curve->ocv(soc);
}

}  // namespace

IntervalResult run_interval(FilterBank& bank, const Trace& trace, std::size_t start, std::size_t length,
                            std::span<const EcmParams> params, const SimConfig& sim, const BankConfig& cfg)
{
    const std::size_t n = bank.filters.size();
    if (length == 0 || start + length > trace.size())
        throw InvalidInput("interval exceeds the trace");
    if (params.size() != 1 && params.size() != trace.size())
        throw InvalidInput("params stream is not aligned with the trace");

    std::vector<Lane> lanes(n);
    if (cfg.parallel && n > 1) {
        std::vector<std::future<void>> jobs;
        for (std::size_t j = 0; j < n; ++j)
            jobs.push_back(std::async(std::launch::async, run_lane, std::ref(bank.filters[j]), std::ref(lanes[j]),
                                      std::cref(trace), start, length, params, std::cref(sim)));
        for (auto& j : jobs)
            j.get();
    } else {
        for (std::size_t j = 0; j < n; ++j)
            run_lane(bank.filters[j], lanes[j], trace, start, length, params, sim);
    }

    IntervalResult res;
    std::vector<double> dens(n);
    for (std::size_t i = 0; i < length; ++i) {
        bool any = false;
        for (std::size_t j = 0; j < n; ++j) {
            bool ok = i < lanes[j].steps.size();
            dens[j] = ok ? lanes[j].density[i] : 0.0;
            any = any || ok;
        }
        if (!any)
            throw StepError(start + i, "every filter in the bank failed");
        auto upd = update_probabilities(bank.probabilities, dens, cfg.probability_floor);
        bank.probabilities = std::move(upd.probs);
        res.probability_reset = res.probability_reset || upd.reset;
        res.probability_trace.push_back(bank.probabilities);
    }

    std::size_t op = n;
    for (std::size_t j = 0; j < n; ++j) {
        res.degenerate = res.degenerate || lanes[j].failed;
        bank.innovations[j].clear();
        for (const auto& s : lanes[j].steps)
            bank.innovations[j].push_back(s.innovation);
        if (lanes[j].failed)
            continue;
        if (op == n || bank.probabilities[j] > bank.probabilities[op])
            op = j;
    }
    if (op == n)
        throw StepError(start, "no filter completed the interval");

    res.optimal_index = op;
    res.final_probabilities = bank.probabilities;
    res.steps = std::move(lanes[op].steps);
    const KfState& best = bank.filters[op];
    for (const auto& s : res.steps) {
        res.soc_trace.push_back(s.posterior.x.soc);
        res.up_trace.push_back(s.posterior.x.up);
        res.corrected_osc_points.push_back({s.posterior.x.soc, model_ocv(best, s.posterior.x.soc), bank.interval_index});
    }
    res.final_state = best.x;
    res.final_p = best.p;
    res.innovations.index = bank.interval_index;
    res.innovations.values = bank.innovations[op];
    res.innovations.h_used = res.steps.back().h;
    res.innovations.p_minus_last = res.steps.back().prior.p;
    res.innovations.r = best.noise.r;
    return res;
}

AmmkfResult run_ammkf(const Trace& trace, const KfState& initial, std::span<const EcmParams> params,
                      const BankConfig& cfg, const SimConfig& sim)
{
    cfg.validate();
    if (!initial.curve)
        throw InvalidInput("filter has no curve");
    initial.noise.validate();
    const std::size_t N = trace.size();
    const std::size_t L = cfg.interval_length;
    if (N < 2 * L)
        throw InvalidInput("trace shorter than two intervals");
    if (params.size() != 1 && params.size() != N)
        throw InvalidInput("params stream is not aligned with the trace");
    const OscCurve& original = *initial.curve;

    AmmkfResult res;
    res.soc.resize(N);
    res.up.resize(N);
    res.innovation.resize(N);

    KfState f = initial;
    f.slope_override.reset();
    std::size_t k = 0;
    std::size_t idx = 0;
    bool converged = false;

    auto sign_stats = [&](IntervalDiagnostics& d) {
        const auto& prev = res.history[res.history.size() - 2];
        const auto& curr = res.history.back();
        d.ccm = interval_ccm(prev, curr);
        d.acm_emp = empirical_acm(curr);
        d.acm_theo = theoretical_acm(curr.h_used, curr.p_minus_last, curr.r);
        double ratio = d.acm_theo > 0.0 ? d.acm_emp / d.acm_theo : 0.0;
        return infer_error_sign(d.ccm, ratio, cfg.thresholds.ccm_threshold(d.acm_emp));
    };

    // Phase 1: single filter on the original curve until the innovations settle.
    while (k < N && !converged) {
        std::size_t len = std::min(L, N - k);
        IntervalInnovations iv;
        iv.index = idx;
        iv.r = f.noise.r;
        for (std::size_t i = 0; i < len; ++i, ++k) {
            const auto& s = trace.samples[k];
            std::optional<double> prev;
            if (k > 0)
                prev = trace.samples[k - 1].current;
            StepOutput out;
            try {
                out = filter_step(f, params_at(params, k), prev, s.current, s.voltage, sim);
            } catch (const Error& e) {
                throw StepError(k, e.what());
            }
            res.soc[k] = out.posterior.x.soc;
            res.up[k] = out.posterior.x.up;
            res.innovation[k] = out.innovation;
            iv.values.push_back(out.innovation);
            iv.h_used = out.h;
            iv.p_minus_last = out.prior.p;
        }
        IntervalDiagnostics d;
        d.interval = idx;
        d.start = k - len;
        d.phase = 1;
        d.anchor_ocv = original.ocv(f.x.soc);
        res.history.push_back(std::move(iv));
        if (res.history.size() >= 2 && res.history.back().values.size() == L)
            d.verdict = sign_stats(d).sign;
        res.diagnostics.push_back(d);
        if (res.history.back().values.size() == L)
            converged = detect_convergence(res.history, cfg.convergence);
        ++idx;
    }
    if (!converged)
        return res;
    res.handoff_step = k;

    // Phase 2: per-interval banks around the original curve slope.
    double anchor_ocv = original.ocv(f.x.soc);
    while (k < N) {
        std::size_t len = std::min(L, N - k);
        IntervalDiagnostics d;
        d.interval = idx;
        d.start = k;
        d.phase = 2;
        ErrorSignVerdict verdict = sign_stats(d);
        d.verdict = verdict.sign;

        double mean_i = 0.0;
        for (std::size_t i = k; i < k + len; ++i)
            mean_i += trace.samples[i].current;
        CurrentMode mode = mean_i >= 0.0 ? CurrentMode::Discharge : CurrentMode::Charge;

        d.base_slope = std::max(0.0, original.slope(f.x.soc));
        auto slopes = build_slope_set(d.base_slope, verdict, mode, cfg);
        if (!cfg.chain_anchors)
            anchor_ocv = original.ocv(f.x.soc);
        d.anchor_ocv = anchor_ocv;

        FilterBank bank = make_bank(f, anchor_ocv, slopes, idx, cfg.n > 1);
        IntervalResult r = run_interval(bank, trace, k, len, params, sim, cfg);

        for (std::size_t i = 0; i < len; ++i) {
            res.soc[k + i] = r.soc_trace[i];
            res.up[k + i] = r.up_trace[i];
            res.innovation[k + i] = r.steps[i].innovation;
        }
        res.osc_points.insert(res.osc_points.end(), r.corrected_osc_points.begin(), r.corrected_osc_points.end());
        for (auto& p : r.probability_trace)
            res.probability_trace.push_back(std::move(p));

        d.optimal_index = r.optimal_index;
        d.prob_max = r.final_probabilities[r.optimal_index];
        d.optimal_slope = slopes[r.optimal_index];
        d.probability_reset = r.probability_reset;
        d.degenerate = r.degenerate;
        res.diagnostics.push_back(d);

        if (cfg.chain_anchors)
            anchor_ocv += slopes[r.optimal_index] * (r.final_state.soc - f.x.soc);
        f.x = r.final_state;
        f.p = r.final_p;
        res.history.push_back(std::move(r.innovations));
        k += len;
        ++idx;
    }
    return res;
}

}  // namespace lfp

// SPDX-License-Identifier: Apache-2.0
#include "lfpsoc/profile.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

#include "lfpsoc/errors.hpp"

namespace lfp {

ProfileKind parse_profile_kind(std::string_view s)
{
    if (s == "dst-like")
        return ProfileKind::DstLike;
    if (s == "pulse")
        return ProfileKind::Pulse;
    if (s == "constant")
        return ProfileKind::Constant;
    if (s == "random-walk")
        return ProfileKind::RandomWalk;
    throw ConfigError("unknown profile kind '" + std::string(s) + "'");
}

std::string_view to_string(ProfileKind k)
{
    switch (k) {
    case ProfileKind::DstLike:
        return "dst-like";
    case ProfileKind::Pulse:
        return "pulse";
    case ProfileKind::Constant:
        return "constant";
    case ProfileKind::RandomWalk:
        return "random-walk";
    }
    return "constant";
}

namespace {

// One 360 s block of (duration s, relative current); charge pulses are negative.
const std::pair<int, double> kDstBlock[] = {
    {16, 0.0}, {28, -0.5}, {12, 1.0}, {8, 0.0},  {16, 0.5}, {24, 2.0},  {12, -1.0},
    {8, 0.0},  {16, 1.0},  {24, 1.5}, {12, -0.5}, {8, 0.0}, {16, 0.5},  {36, 2.5},
    {8, -1.0}, {24, 0.0},  {8, 1.0},  {36, 1.0}, {8, -0.5}, {12, 3.0}, {40, 0.0},
};

}  // namespace

DriveProfile generate_profile(ProfileKind kind, const ProfileParams& p, std::uint64_t seed)
{
    if (!(p.dt > 0.0))
        throw ConfigError("profile dt must be positive");
    if (p.steps == 0)
        throw ConfigError("profile needs at least one step");
    if (!std::isfinite(p.current))
        throw ConfigError("profile current must be finite");

    DriveProfile out;
    out.name = std::string(to_string(kind));
    out.dt = p.dt;
    out.samples.reserve(p.steps);

    switch (kind) {
    case ProfileKind::Constant:
        out.samples.assign(p.steps, p.current);
        break;
    case ProfileKind::Pulse: {
        if (p.pulse_on == 0)
            throw ConfigError("pulse_on must be positive");
        std::size_t period = p.pulse_on + p.pulse_off;
        for (std::size_t k = 0; k < p.steps; ++k)
            out.samples.push_back(k % period < p.pulse_on ? p.current : 0.0);
        break;
    }
    case ProfileKind::DstLike: {
        if (!(p.target_ah > 0.0))
            throw ConfigError("dst-like target charge must be positive");
        std::vector<double> block;
        for (auto [d, c] : kDstBlock) {
            auto len = std::max<long>(1, std::lround(d / p.dt));
            block.insert(block.end(), static_cast<std::size_t>(len), c);
        }
        double sum = 0.0;
        for (std::size_t k = 0; k < p.steps; ++k) {
            out.samples.push_back(block[k % block.size()]);
            sum += out.samples.back();
        }
        if (!(sum > 0.0))
            throw ConfigError("dst-like profile too short for a net discharge");
        double scale = p.target_ah * 3600.0 / (sum * p.dt);
        for (auto& v : out.samples)
            v *= scale;
        break;
    }
    case ProfileKind::RandomWalk: {
        if (!(p.walk_sigma >= 0.0) || !(p.walk_limit >= 0.0))
            throw ConfigError("random-walk sigma and limit must be non-negative");
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> step(0.0, p.walk_sigma > 0 ? p.walk_sigma : 1.0);
        double w = 0.0;
        for (std::size_t k = 0; k < p.steps; ++k) {
            if (p.walk_sigma > 0.0)
                w = std::clamp(w + step(rng), -p.walk_limit, p.walk_limit);
            out.samples.push_back(p.current + w);
        }
        break;
    }
    }
    return out;
}

}  // namespace lfp

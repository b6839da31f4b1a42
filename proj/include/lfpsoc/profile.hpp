// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lfp {

enum class ProfileKind { DstLike, Pulse, Constant, RandomWalk };

ProfileKind parse_profile_kind(std::string_view s);
std::string_view to_string(ProfileKind k);

struct ProfileParams {
    double dt = 1.0;
    std::size_t steps = 7200;
    // Constant: the current. Pulse: the pulse current. RandomWalk: the mean current.
    double current = 0.5;
    // DstLike: net discharged charge over `steps` samples.
    double target_ah = 1.063;
    // Pulse: samples on and off per period.
    std::size_t pulse_on = 60;
    std::size_t pulse_off = 60;
    // RandomWalk: per-step increment sigma and bound on the deviation from `current`.
    double walk_sigma = 0.05;
    double walk_limit = 2.0;
};

struct DriveProfile {
    std::string name;
    double dt = 1.0;
    std::vector<double> samples;  // ampere, discharge positive
};

DriveProfile generate_profile(ProfileKind kind, const ProfileParams& params, std::uint64_t seed);

}  // namespace lfp

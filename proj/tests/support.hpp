// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <initializer_list>
#include <memory>
#include <utility>
#include <vector>

#include "lfpsoc/ecm.hpp"
#include "lfpsoc/osc.hpp"

namespace lfp::test {

inline OscCurve curve_of(std::initializer_list<std::pair<double, double>> pts)
{
    std::vector<OcvKnot> k;
    for (auto [s, v] : pts)
        k.push_back({s, v});
    return OscCurve(std::move(k));
}

// Contains the segments (0.2, 3.20)-(0.4, 3.30)-(0.6, 3.32).
inline OscCurve small_curve()
{
    return curve_of({{0.0, 3.0}, {0.2, 3.20}, {0.4, 3.30}, {0.6, 3.32}, {1.0, 3.5}});
}

inline std::shared_ptr<const OscCurve> shared(OscCurve c)
{
    return std::make_shared<const OscCurve>(std::move(c));
}

}  // namespace lfp::test

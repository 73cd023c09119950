// Copyright 2026 drift authors. Apache 2.0 License.
//
// Small trajectory arithmetic shared by the evaluation metrics and the
// dataset challenge filters.

#pragma once

#include <cmath>
#include <stdexcept>

#include "drift/common.hpp"

namespace drift::metrics {

inline double trajectory_length(const Trajectory& t) {
    double len = 0;
    for (int i = 1; i < t.rows(); ++i) len += (t.row(i) - t.row(i - 1)).norm();
    return len;
}

/// Mean magnitude of the discrete third derivative,
/// (w_{i+3} - 3 w_{i+2} + 3 w_{i+1} - w_i) / dt^3 over all windows.
inline double trajectory_jerk(const Trajectory& t, double dt = 1.0) {
    if (t.rows() < 4) throw std::invalid_argument("trajectory_jerk: needs at least 4 waypoints");
    if (dt <= 0) throw std::invalid_argument("trajectory_jerk: dt must be positive");
    const double dt3 = dt * dt * dt;
    double total = 0;
    const int n = static_cast<int>(t.rows()) - 3;
    for (int i = 0; i < n; ++i) {
        const Vec2 j =
            (t.row(i + 3) - 3.0 * t.row(i + 2) + 3.0 * t.row(i + 1) - t.row(i)) / dt3;
        total += j.norm();
    }
    return total / n;
}

}  // namespace drift::metrics

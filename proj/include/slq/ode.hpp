#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "slq/model.hpp"

namespace slq {

/// Embedded Dormand–Prince 5(4) integrator with PI step-size control.
/// Integration runs forward in t; callers working backward in time
/// integrate in the reversed variable.
struct OdeOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    double h_init = 0.0; ///< 0 selects a starting step automatically
    double h_max = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 50'000'000;
};

using OdeRhs = std::function<void(double t, const Vector& y, Vector& dy)>;

/// Applied to the state after every accepted step (symmetrization, PSD projection).
using OdeProjection = std::function<void(Vector& y)>;

/// Called after every accepted step; return false to stop early.
using OdeObserver = std::function<bool(double t, const Vector& y, const Vector& dy)>;

struct OdeResult {
    std::vector<Vector> y;  ///< state at each stop
    std::vector<Vector> dy; ///< derivative at each stop
    double t_final = 0.0;
    Vector y_final;
    bool stopped_early = false;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
};

/// Integrates from (t0, y0) and lands exactly on every time in `stops`
/// (ascending, each >= t0). Throws NumericalError(step_underflow) when the
/// step size collapses, with the time of failure in the message.
OdeResult integrate_dopri(const OdeRhs& rhs, double t0, const Vector& y0,
                          std::span<const double> stops, const OdeOptions& opts,
                          const OdeProjection& project = {}, const OdeObserver& observe = {});

/// Cubic Hermite interpolant on [t0, t1] from values and derivatives.
Vector hermite(double t0, const Vector& y0, const Vector& dy0, double t1, const Vector& y1,
               const Vector& dy1, double t);

} // namespace slq

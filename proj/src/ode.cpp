#include "slq/ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "slq/errors.hpp"

namespace slq {

namespace {

// Dormand–Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

double error_norm(const Vector& err, const Vector& y0, const Vector& y1, double atol, double rtol) {
    const auto n = err.size();
    if (n == 0) return 0.0;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sc = atol + rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
        const double r = err(i) / sc;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(n));
}

double initial_step(const OdeRhs& rhs, double t0, const Vector& y0, const Vector& f0,
                    const OdeOptions& o) {
    const double d0 = error_norm(y0, y0, y0, o.atol, o.rtol);
    const double d1 = error_norm(f0, y0, y0, o.atol, o.rtol);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, o.h_max);
    Vector y1 = y0 + h0 * f0;
    Vector f1(y0.size());
    rhs(t0 + h0, y1, f1);
    const double d2 = error_norm(f1 - f0, y0, y0, o.atol, o.rtol) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 5.0);
    return std::min({100 * h0, h1, o.h_max});
}

} // namespace

OdeResult integrate_dopri(const OdeRhs& rhs, double t0, const Vector& y0,
                          std::span<const double> stops, const OdeOptions& opts,
                          const OdeProjection& project, const OdeObserver& observe) {
    OdeResult res;
    const auto dim = y0.size();
    Vector y = y0;
    Vector k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim), ytmp(dim), ynew(dim),
        err(dim);
    rhs(t0, y, k1);
    double t = t0;
    res.y.reserve(stops.size());
    res.dy.reserve(stops.size());

    std::size_t next = 0;
    while (next < stops.size() && stops[next] <= t0) {
        res.y.push_back(y);
        res.dy.push_back(k1);
        ++next;
    }
    if (next == stops.size()) {
        res.t_final = t;
        res.y_final = y;
        return res;
    }

    double h = opts.h_init > 0.0 ? opts.h_init : initial_step(rhs, t0, y, k1, opts);
    double facold = 1e-4;
    constexpr double beta = 0.04, expo1 = 0.2 - beta * 0.75, safe = 0.9;
    constexpr double facc1 = 1.0 / 0.2, facc2 = 1.0 / 10.0;
    bool last_rejected = false;

    while (next < stops.size()) {
        if (res.accepted + res.rejected >= opts.max_steps) {
            std::ostringstream os;
            os << "maximum step count exceeded at t = " << t;
            throw NumericalError(NumericalError::Kind::step_underflow, os.str());
        }
        const double target = stops[next];
        const double h_proposed = std::min(h, opts.h_max);
        h = h_proposed;
        bool lands = false;
        if (t + h >= target || target - (t + h) < 1e-12 * std::max(1.0, std::abs(target))) {
            h = target - t;
            lands = true;
        }
        const double h_floor = 1e-14 * std::max(1.0, std::abs(t));
        if (h < h_floor) {
            std::ostringstream os;
            os << "step size underflow at t = " << t;
            throw NumericalError(NumericalError::Kind::step_underflow, os.str());
        }

        ytmp = y + h * a21 * k1;
        rhs(t + c2 * h, ytmp, k2);
        ytmp = y + h * (a31 * k1 + a32 * k2);
        rhs(t + c3 * h, ytmp, k3);
        ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(t + c4 * h, ytmp, k4);
        ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(t + c5 * h, ytmp, k5);
        ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(t + h, ytmp, k6);
        ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        rhs(t + h, ynew, k7);
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        const double en = error_norm(err, y, ynew, opts.atol, opts.rtol);
        if (!std::isfinite(en)) {
            ++res.rejected;
            h *= 0.1;
            last_rejected = true;
            continue;
        }
        const double fac11 = std::pow(std::max(en, 1e-300), expo1);
        if (en <= 1.0) {
            double fac = fac11 / std::pow(facold, beta);
            fac = std::clamp(fac / safe, facc2, facc1);
            double hnew = h / fac;
            if (last_rejected) hnew = std::min(hnew, h);
            facold = std::max(en, 1e-4);
            ++res.accepted;
            last_rejected = false;

            t = lands ? target : t + h;
            y.swap(ynew);
            if (project) {
                project(y);
                rhs(t, y, k1);
            } else {
                k1.swap(k7);
            }
            while (next < stops.size() && stops[next] <= t) {
                res.y.push_back(y);
                res.dy.push_back(k1);
                ++next;
            }
            if (observe && !observe(t, y, k1)) {
                res.stopped_early = true;
                break;
            }
            // a truncated landing step must not shrink the next proposal
            h = lands ? std::max(hnew, std::min(h_proposed, hnew * 5.0)) : hnew;
        } else {
            ++res.rejected;
            last_rejected = true;
            h = h / std::min(facc1, fac11 / safe);
        }
    }
    res.t_final = t;
    res.y_final = y;
    return res;
}

Vector hermite(double t0, const Vector& y0, const Vector& dy0, double t1, const Vector& y1,
               const Vector& dy1, double t) {
    const double h = t1 - t0;
    if (h == 0.0) return y0;
    const double s = (t - t0) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * y0 + h10 * h * dy0 + h01 * y1 + h11 * h * dy1;
}

} // namespace slq

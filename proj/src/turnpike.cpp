#include "slq/turnpike.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "slq/errors.hpp"
#include "slq/stability.hpp"

namespace slq {

std::string to_string(GapKind kind) {
    switch (kind) {
    case GapKind::riccati_gap: return "riccati_gap";
    case GapKind::gain_gap: return "gain_gap";
    case GapKind::state_gap: return "state_gap";
    case GapKind::control_gap: return "control_gap";
    case GapKind::integral_gap: return "integral_gap";
    }
    return "unknown";
}

FitWindow FitWindow::all() {
    return {0.0, std::numeric_limits<double>::infinity()};
}

RateFit fit_exponential_rate(const GapSeries& series, const FitWindow& window) {
    if (series.abscissa.size() != series.values.size()) {
        throw StructuralError("fit_exponential_rate: abscissa and values differ in length");
    }
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < series.values.size(); ++k) {
        const double v = series.values[k];
        if (v > 0.0 && v >= window.lo && v <= window.hi && std::isfinite(v)) {
            xs.push_back(series.abscissa[k]);
            ys.push_back(std::log(v));
        }
    }
    if (xs.size() < 5) {
        std::ostringstream os;
        os << "fit_exponential_rate: " << xs.size() << " usable points in " << to_string(series.kind)
           << " (need 5)";
        throw NumericalError(NumericalError::Kind::insufficient_data, os.str());
    }
    const auto N = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        mx += xs[k];
        my += ys[k];
    }
    mx /= N;
    my /= N;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxx += (xs[k] - mx) * (xs[k] - mx);
        sxy += (xs[k] - mx) * (ys[k] - my);
        syy += (ys[k] - my) * (ys[k] - my);
    }
    if (!(sxx > 0.0)) {
        throw NumericalError(NumericalError::Kind::insufficient_data,
                             "fit_exponential_rate: abscissa has no spread in the window");
    }
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double ss_res = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double r = ys[k] - (intercept + slope * xs[k]);
        ss_res += r * r;
    }
    RateFit fit;
    fit.K_hat = std::exp(intercept);
    fit.delta_hat = -slope;
    fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    fit.tau_lo = *std::min_element(xs.begin(), xs.end());
    fit.tau_hi = *std::max_element(xs.begin(), xs.end());
    fit.points = xs.size();
    return fit;
}

// ---------------------------------------------------------------------------
// Riccati and gain gaps
// ---------------------------------------------------------------------------

namespace {

void check_pair(const ARESolution& are, const DRESolution& dre) {
    if (are.P.size() != dre.problem.regimes()) throw StructuralError("gap: ARE and DRE regime counts differ");
    if (dre.grid.empty()) throw StructuralError("gap: empty DRE solution");
}

double op_norm(const Matrix& M) {
    if (M.size() == 0) return 0.0;
    if (M.rows() == 1 || M.cols() == 1) return M.norm();
    Eigen::JacobiSVD<Matrix> svd(M);
    return svd.singularValues()(0);
}

} // namespace

GapSeries riccati_gap(const ARESolution& are, const DRESolution& dre) {
    check_pair(are, dre);
    GapSeries s;
    s.kind = GapKind::riccati_gap;
    const std::size_t N = dre.grid.size();
    for (std::size_t r = 0; r < N; ++r) {
        const std::size_t k = N - 1 - r;
        double gap = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < are.P.size(); ++i) {
            gap = std::max(gap, max_eigenvalue(symmetrize(are.P[i] - dre.P[k][i])));
        }
        if (gap < -1e-9) {
            std::ostringstream os;
            os << "riccati gap negative (" << gap << ") at t = " << dre.grid[k]
               << ": P_T exceeds P_inf, monotone limit violated";
            throw NumericalError(NumericalError::Kind::monotonicity_violated, os.str());
        }
        s.abscissa.push_back(dre.horizon - dre.grid[k]);
        s.values.push_back(std::max(gap, 0.0));
    }
    return s;
}

GapSeries gain_gap(const ARESolution& are, const DRESolution& dre) {
    check_pair(are, dre);
    GapSeries s;
    s.kind = GapKind::gain_gap;
    const std::size_t N = dre.grid.size();
    for (std::size_t r = 0; r < N; ++r) {
        const std::size_t k = N - 1 - r;
        double gap = 0.0;
        for (std::size_t i = 0; i < are.theta.size(); ++i) {
            gap = std::max(gap, op_norm(are.theta[i] - dre.theta[k][i]));
        }
        s.abscissa.push_back(dre.horizon - dre.grid[k]);
        s.values.push_back(gap);
    }
    return s;
}

GapAnalysis riccati_gap_series(const LQProblem& p, double T, const std::vector<double>& grid, double tol,
                               const FitWindow& window) {
    AreOptions ao;
    ao.tol = tol;
    const ARESolution are = solve_are(p, ao);
    const DRESolution dre = solve_dre(p, T, grid, tol);
    GapAnalysis g;
    g.series = riccati_gap(are, dre);
    g.fit = fit_exponential_rate(g.series, window);
    return g;
}

GapAnalysis gain_gap_series(const LQProblem& p, double T, const std::vector<double>& grid, double tol,
                            const FitWindow& window) {
    AreOptions ao;
    ao.tol = tol;
    const ARESolution are = solve_are(p, ao);
    const DRESolution dre = solve_dre(p, T, grid, tol);
    GapAnalysis g;
    g.series = gain_gap(are, dre);
    g.fit = fit_exponential_rate(g.series, window);
    return g;
}

double gain_lipschitz_constant(const LQProblem& p, const ARESolution& are, const DRESolution& dre) {
    check_pair(are, dre);
    const double delta = std::min(are.delta_margin, dre.delta_margin);
    if (!(delta > 0.0)) throw NumericalError(NumericalError::Kind::regularity_lost, "gain bound: margin not positive");
    double c = 0.0;
    for (std::size_t i = 0; i < p.regimes(); ++i) {
        const double nB = op_norm(p.B(i)), nC = op_norm(p.C(i)), nD = op_norm(p.D(i));
        const Matrix L = p.B(i).transpose() * are.P[i] + p.D(i).transpose() * are.P[i] * p.C(i) + p.S(i);
        c = std::max(c, (nB + nD * nC) / delta + nD * nD * op_norm(L) / (delta * delta));
    }
    return c;
}

// ---------------------------------------------------------------------------
// Joint second moment of the coupled pair
// ---------------------------------------------------------------------------

namespace {

struct JointGaps {
    std::vector<double> state;
    std::vector<double> control;
};

// Works in the coordinates (E, X_∞) with E = X_T − X_∞, so that
//   dE = A_T E ds + (A_T − A_∞) X_∞ ds + (C_T E + (C_T − C_∞) X_∞) dW
// and the gaps are read off the E block without cancellation.
JointGaps joint_gaps(const LQProblem& p, const ARESolution& are, const DRESolution& dre, const Vector& xT,
                     const Vector& xInf, std::size_t regime, double t, const std::vector<double>& grid,
                     double tol) {
    const auto n = p.n(), m0 = p.regimes();
    if (static_cast<std::size_t>(xT.size()) != n || static_cast<std::size_t>(xInf.size()) != n) {
        throw StructuralError("turnpike: initial states have wrong size");
    }
    if (regime >= m0) throw StructuralError("turnpike: regime out of range");
    if (grid.empty() || grid.front() != t) throw StructuralError("turnpike: grid must start at t");
    if (t < dre.grid.front() || grid.back() > dre.horizon) {
        throw StructuralError("turnpike: grid outside the DRE horizon");
    }
    const auto ni = static_cast<Eigen::Index>(n);
    const ClosedLoopMatrices inf = closed_loop(p, are.theta);

    const ClosedLoopFn coeff = [&](double s, std::size_t i, Matrix& A, Matrix& C) {
        const Matrix th = dre.gain_at(s, i);
        const Matrix AT = p.A(i) + p.B(i) * th;
        const Matrix CT = p.C(i) + p.D(i) * th;
        A.setZero(2 * ni, 2 * ni);
        C.setZero(2 * ni, 2 * ni);
        A.topLeftCorner(ni, ni) = AT;
        A.topRightCorner(ni, ni) = AT - inf.A[i];
        A.bottomRightCorner(ni, ni) = inf.A[i];
        C.topLeftCorner(ni, ni) = CT;
        C.topRightCorner(ni, ni) = CT - inf.C[i];
        C.bottomRightCorner(ni, ni) = inf.C[i];
    };
    Vector z(2 * ni);
    z << xT - xInf, xInf;
    const SecondMomentState Y0 = point_mass_moment(z, regime, m0, t);
    const MomentTrajectory traj = propagate_moment(p.generator(), 2 * n, coeff, Y0, grid, tol);

    JointGaps out;
    out.state.reserve(grid.size());
    out.control.reserve(grid.size());
    const double scale = z.squaredNorm();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        double gs = 0.0, gc = 0.0;
        for (std::size_t i = 0; i < m0; ++i) {
            const Matrix& Y = traj[k].Y[i];
            gs += Y.topLeftCorner(ni, ni).trace();
            const Matrix th = dre.gain_at(grid[k], i);
            Matrix K(static_cast<Eigen::Index>(p.m()), 2 * ni);
            K << th, th - are.theta[i];
            gc += (K * Y * K.transpose()).trace();
        }
        for (double* g : {&gs, &gc}) {
            if (*g < -1e-9 * std::max(1.0, scale)) {
                std::ostringstream os;
                os << "joint second moment not PSD at s = " << grid[k] << " (gap " << *g << ")";
                throw NumericalError(NumericalError::Kind::internal, os.str());
            }
            *g = std::max(*g, 0.0);
        }
        out.state.push_back(gs);
        out.control.push_back(gc);
    }
    return out;
}

} // namespace

BoundVerdict fit_turnpike_bound(const GapSeries& series, double t, double T, double xdiff_sq, double xT_sq,
                                double rate_hint, const BoundOptions& opts) {
    BoundVerdict v;
    v.K_cap = opts.K_cap;
    const double dmin = opts.delta_min;
    v.delta_max = std::max(2.0 * rate_hint, 2.0 * dmin);
    const std::size_t M = std::max<std::size_t>(2, opts.delta_points);
    const double ratio = std::log(v.delta_max / dmin);
    auto K_of = [&](double delta) {
        double K = 0.0;
        for (std::size_t k = 0; k < series.values.size(); ++k) {
            const double g = series.values[k];
            if (g <= 0.0) continue;
            const double s = t + series.abscissa[k];
            const double shape =
                std::exp(-delta * (s - t)) * (xdiff_sq + std::exp(-2.0 * delta * (T - s)) * xT_sq);
            if (!(shape > 0.0)) return std::numeric_limits<double>::infinity();
            K = std::max(K, g / shape);
        }
        return K;
    };
    v.K_at_smallest_delta = K_of(dmin);
    for (std::size_t j = 0; j < M; ++j) {
        const double delta = dmin * std::exp(ratio * static_cast<double>(j) / static_cast<double>(M - 1));
        const double K = K_of(delta);
        if (K <= opts.K_cap) {
            v.passed = true;
            v.delta = delta;
            v.K = K;
        }
    }
    return v;
}

TurnpikeBound verify_turnpike_bound(const LQProblem& p, const ARESolution& are, const DRESolution& dre,
                                    const Vector& xT, const Vector& xInf, std::size_t regime, double t,
                                    const std::vector<double>& grid, const BoundOptions& opts) {
    const JointGaps g = joint_gaps(p, are, dre, xT, xInf, regime, t, grid, opts.tol);
    TurnpikeBound b;
    b.times = grid;
    b.state.kind = GapKind::state_gap;
    b.control.kind = GapKind::control_gap;
    for (double s : grid) {
        b.state.abscissa.push_back(s - t);
        b.control.abscissa.push_back(s - t);
    }
    b.state.values = g.state;
    b.control.values = g.control;
    const double rate = -are.closed_loop_rate;
    const double xd = (xT - xInf).squaredNorm(), xs = xT.squaredNorm();
    b.state_verdict = fit_turnpike_bound(b.state, t, dre.horizon, xd, xs, rate, opts);
    b.control_verdict = fit_turnpike_bound(b.control, t, dre.horizon, xd, xs, rate, opts);
    return b;
}

GapSeries integral_gap(const LQProblem& p, const ARESolution& are, const Vector& x, std::size_t regime,
                       const std::vector<double>& horizons, double tol, std::size_t points_per_unit) {
    GapSeries s;
    s.kind = GapKind::integral_gap;
    for (std::size_t k = 0; k < horizons.size(); ++k) {
        const double T = horizons[k];
        if (!(T > 0.0)) throw StructuralError("integral_gap: horizons must be positive");
        if (k > 0 && !(horizons[k - 1] < T)) throw StructuralError("integral_gap: horizons must increase");
        const auto points = static_cast<std::size_t>(std::ceil(T * static_cast<double>(points_per_unit))) + 1;
        const std::vector<double> grid = uniform_grid(0.0, T, std::max<std::size_t>(points, 3));
        const DRESolution dre = solve_dre(p, T, grid, tol);
        const JointGaps g = joint_gaps(p, are, dre, x, x, regime, 0.0, grid, tol);
        double I = 0.0;
        for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
            I += 0.5 * (grid[j + 1] - grid[j]) * (g.state[j] + g.control[j] + g.state[j + 1] + g.control[j + 1]);
        }
        s.abscissa.push_back(T);
        s.values.push_back(I);
    }
    return s;
}

double semigroup_check(const LQProblem& p, double T, double t, double tol) {
    if (!(t >= 0.0 && t < T)) throw StructuralError("semigroup_check: need 0 <= t < T");
    std::vector<double> g1 = uniform_grid(0.0, T, 101);
    std::vector<double> g2;
    if (t == 0.0) {
        g2 = g1;
    } else {
        g1.push_back(t);
        std::sort(g1.begin(), g1.end());
        g1.erase(std::unique(g1.begin(), g1.end()), g1.end());
        g2 = uniform_grid(0.0, T - t, 77);
    }
    const DRESolution a = solve_dre(p, T, g1, tol);
    const DRESolution b = solve_dre(p, T - t, g2, tol);
    const auto k = static_cast<std::size_t>(std::find(g1.begin(), g1.end(), t) - g1.begin());
    double d = 0.0;
    for (std::size_t i = 0; i < p.regimes(); ++i) {
        d = std::max(d, (a.P[k][i] - b.P.front()[i]).cwiseAbs().maxCoeff());
    }
    return d;
}

McAgreement check_mc_agreement(const std::vector<double>& exact, const std::vector<Estimate>& mc, double dt,
                               const std::vector<McProbe>& probes) {
    if (exact.size() != mc.size()) throw StructuralError("check_mc_agreement: series lengths differ");
    if (probes.empty()) throw StructuralError("check_mc_agreement: need at least one probe");
    for (const auto& pr : probes) {
        if (pr.values.size() != exact.size()) throw StructuralError("check_mc_agreement: series lengths differ");
        if (!(pr.dt > 0.0)) throw StructuralError("check_mc_agreement: probe dt must be positive");
    }
    McAgreement a;
    for (std::size_t k = 0; k < exact.size(); ++k) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (const auto& pr : probes) {
            const double slope = (std::abs(pr.values[k].value - exact[k]) + 3.0 * pr.values[k].std_error) / pr.dt;
            lo = std::min(lo, slope);
            hi = std::max(hi, slope);
        }
        a.bias_constant = std::max(a.bias_constant, hi + (hi - lo));
    }
    for (std::size_t k = 0; k < exact.size(); ++k) {
        const double allowance =
            3.0 * mc[k].std_error + a.bias_constant * dt + 1e-12 * std::max(1.0, std::abs(exact[k]));
        const double ratio = std::abs(mc[k].value - exact[k]) / allowance;
        if (ratio > a.worst_ratio) {
            a.worst_ratio = ratio;
            a.worst_index = k;
        }
    }
    a.passed = a.worst_ratio <= 1.0;
    return a;
}

// ---------------------------------------------------------------------------
// End-to-end report
// ---------------------------------------------------------------------------

bool TurnpikeReport::all_passed() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

void add(TurnpikeReport& r, std::string name, bool ok, std::string series, std::string detail) {
    r.verdicts.push_back({std::move(name), ok, std::move(series), std::move(detail)});
}

void fit_or_fail(TurnpikeReport& r, GapAnalysis& g, const FitWindow& w, const std::string& name) {
    const std::string series = to_string(g.series.kind);
    try {
        g.fit = fit_exponential_rate(g.series, w);
        add(r, name, g.fit.delta_hat > 0.0, series,
            "delta_hat=" + fmt(g.fit.delta_hat) + " K_hat=" + fmt(g.fit.K_hat) + " r2=" + fmt(g.fit.r_squared) +
                " points=" + std::to_string(g.fit.points));
    } catch (const NumericalError& e) {
        add(r, name, false, series, e.what());
    }
}

} // namespace

TurnpikeReport run_turnpike(const LQProblem& p, const std::string& id, const Vector& x, std::size_t regime,
                            const TurnpikeOptions& opts) {
    if (!(opts.tol > 0.0)) throw StructuralError("turnpike: tolerance must be positive");
    if (!(opts.horizon > 0.0)) throw StructuralError("turnpike: horizon must be positive");
    TurnpikeReport r;
    r.problem_id = id;
    r.options = opts;
    r.x = x;
    r.regime = regime;

    AreOptions ao;
    ao.tol = opts.tol;
    r.are = solve_are(p, ao);
    r.moment_decay_rate = -r.are.closed_loop_rate;

    const double T = opts.horizon;
    const std::vector<double> grid = uniform_grid(0.0, T, std::max<std::size_t>(opts.grid_points, 3));
    const DRESolution dre = solve_dre(p, T, grid, opts.tol);

    r.riccati.series = riccati_gap(r.are, dre);
    r.gain.series = gain_gap(r.are, dre);
    {
        const auto& v = r.riccati.series.values;
        bool mono = true;
        for (std::size_t k = 0; k + 1 < v.size(); ++k) mono = mono && v[k + 1] <= v[k] + 1e-9;
        add(r, "riccati_gap_monotone", mono, "riccati_gap", "nonnegative and nonincreasing in T - t");
    }
    fit_or_fail(r, r.riccati, opts.window, "riccati_gap_exponential");
    if (r.riccati.fit.points > 0) {
        const bool ok = r.riccati.fit.delta_hat <= 1.1 * r.moment_decay_rate;
        add(r, "riccati_rate_ordering", ok, "riccati_gap",
            "delta_hat=" + fmt(r.riccati.fit.delta_hat) + " moment_decay_rate=" + fmt(r.moment_decay_rate));
    }
    fit_or_fail(r, r.gain, opts.window, "gain_gap_exponential");

    r.lipschitz = gain_lipschitz_constant(p, r.are, dre);
    {
        double worst = 0.0;
        bool ok = true;
        const auto& gp = r.riccati.series.values;
        const auto& gg = r.gain.series.values;
        for (std::size_t k = 0; k < gg.size(); ++k) {
            const double bound = r.lipschitz * gp[k];
            ok = ok && gg[k] <= bound * (1.0 + 1e-9) + 1e-12;
            if (bound > 0.0) worst = std::max(worst, gg[k] / bound);
        }
        add(r, "gain_gap_lipschitz", ok, "gain_gap",
            "c=" + fmt(r.lipschitz) + " max gain_gap/(c*riccati_gap)=" + fmt(worst));
    }

    r.bound = verify_turnpike_bound(p, r.are, dre, x, x, regime, 0.0, grid, opts.bound);
    for (const auto* pr : {&r.bound.state_verdict, &r.bound.control_verdict}) {
        const bool is_state = pr == &r.bound.state_verdict;
        add(r, is_state ? "turnpike_state_bound" : "turnpike_control_bound", pr->passed,
            is_state ? "state_gap" : "control_gap",
            "delta=" + fmt(pr->delta) + " K=" + fmt(pr->K) + " K_cap=" + fmt(pr->K_cap) +
                " delta_max=" + fmt(pr->delta_max));
    }

    if (!opts.integral_horizons.empty()) {
        r.integral = integral_gap(p, r.are, x, regime, opts.integral_horizons, opts.tol);
        const auto& v = r.integral.values;
        bool ok = true;
        for (std::size_t k = 0; k + 1 < v.size(); ++k) ok = ok && v[k + 1] <= v[k] + 1e-12;
        add(r, "integral_gap_decreasing", ok, "integral_gap",
            "first=" + fmt(v.front()) + " last=" + fmt(v.back()));
    }

    r.semigroup_discrepancy = semigroup_check(p, T, 0.4 * T, opts.tol);
    add(r, "semigroup_identity", r.semigroup_discrepancy <= 10.0 * opts.tol, "riccati_gap",
        "discrepancy=" + fmt(r.semigroup_discrepancy) + " limit=" + fmt(10.0 * opts.tol));

    if (opts.mc_paths > 0) {
        SimulationConfig cfg;
        cfg.dt = opts.mc_dt;
        cfg.n_paths = opts.mc_paths;
        cfg.seed = opts.seed;
        cfg.out_intervals = 50;
        const GainSchedule gT = dre.gain_schedule();
        const GainSchedule gI = GainSchedule::constant(r.are.theta);
        const CoupledGapStats mc = simulate_coupled(p, gT, gI, x, x, regime, 0.0, T, cfg);
        std::vector<McProbe> ps, pc;
        for (double factor : {2.0, 4.0}) {
            SimulationConfig probe_cfg = cfg;
            probe_cfg.dt = factor * cfg.dt;
            const CoupledGapStats probe = simulate_coupled(p, gT, gI, x, x, regime, 0.0, T, probe_cfg);
            ps.push_back({probe.gap_state, probe_cfg.dt});
            pc.push_back({probe.gap_control, probe_cfg.dt});
        }
        const TurnpikeBound exact = verify_turnpike_bound(p, r.are, dre, x, x, regime, 0.0, mc.times, opts.bound);
        r.mc_ran = true;
        r.mc_times = mc.times;
        r.mc_state = mc.gap_state;
        r.mc_control = mc.gap_control;
        const McAgreement as = check_mc_agreement(exact.state.values, mc.gap_state, cfg.dt, ps);
        const McAgreement ac = check_mc_agreement(exact.control.values, mc.gap_control, cfg.dt, pc);
        add(r, "mc_state_gap_agreement", as.passed, "state_gap",
            "worst_ratio=" + fmt(as.worst_ratio) + " bias_c=" + fmt(as.bias_constant));
        add(r, "mc_control_gap_agreement", ac.passed, "control_gap",
            "worst_ratio=" + fmt(ac.worst_ratio) + " bias_c=" + fmt(ac.bias_constant));
    }
    return r;
}

} // namespace slq

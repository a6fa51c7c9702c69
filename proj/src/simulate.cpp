#include "slq/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "slq/errors.hpp"
#include "slq/markov.hpp"

namespace slq {

namespace {

constexpr std::size_t kChunk = 64;
constexpr double kOverflow = 1e150;

// ---------------------------------------------------------------------------
// Deterministic reduction
// ---------------------------------------------------------------------------

struct Moments {
    double count = 0.0;
    std::vector<double> mean;
    std::vector<double> m2;

    explicit Moments(std::size_t dim = 0) : mean(dim, 0.0), m2(dim, 0.0) {}

    void add(const std::vector<double>& x) {
        count += 1.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double d = x[j] - mean[j];
            mean[j] += d / count;
            m2[j] += d * (x[j] - mean[j]);
        }
    }
};

Moments merge(const Moments& a, const Moments& b) {
    if (a.count == 0.0) return b;
    if (b.count == 0.0) return a;
    Moments out(a.mean.size());
    out.count = a.count + b.count;
    for (std::size_t j = 0; j < a.mean.size(); ++j) {
        const double d = b.mean[j] - a.mean[j];
        out.mean[j] = a.mean[j] + d * (b.count / out.count);
        out.m2[j] = a.m2[j] + b.m2[j] + d * d * (a.count * b.count / out.count);
    }
    return out;
}

Moments reduce_pairwise(const std::vector<Moments>& chunks, std::size_t lo, std::size_t hi) {
    if (hi - lo == 1) return chunks[lo];
    const std::size_t mid = lo + (hi - lo) / 2;
    return merge(reduce_pairwise(chunks, lo, mid), reduce_pairwise(chunks, mid, hi));
}

using PathFn = std::function<void(std::size_t path, std::vector<double>& sample)>;

// Runs every path, accumulating Welford moments per fixed chunk of paths and
// combining the chunks in a fixed tree, so the result does not depend on the
// number of threads or their scheduling.
std::vector<Estimate> monte_carlo(std::size_t n_paths, std::size_t dim, const PathFn& path_fn) {
    const std::size_t n_chunks = (n_paths + kChunk - 1) / kChunk;
    std::vector<Moments> chunks(n_chunks, Moments(dim));
    std::vector<std::exception_ptr> errors(n_chunks);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        std::vector<double> sample(dim);
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= n_chunks) return;
            try {
                const std::size_t end = std::min(n_paths, (c + 1) * kChunk);
                for (std::size_t k = c * kChunk; k < end; ++k) {
                    path_fn(k, sample);
                    chunks[c].add(sample);
                }
            } catch (...) {
                errors[c] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(simulation_threads(), n_chunks));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    const Moments total = reduce_pairwise(chunks, 0, n_chunks);
    std::vector<Estimate> out(dim);
    for (std::size_t j = 0; j < dim; ++j) {
        out[j].value = total.mean[j];
        out[j].std_error =
            total.count > 1.0 ? std::sqrt(std::max(0.0, total.m2[j]) / (total.count - 1.0) / total.count)
                              : 0.0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Time grid and closed-loop tables
// ---------------------------------------------------------------------------

struct TimeGrid {
    double t0 = 0.0;
    double T = 0.0;
    std::size_t steps = 0;
    std::size_t stride = 0;
    std::vector<double> times;     ///< all base times
    std::vector<double> out_times; ///< every stride-th base time
};

TimeGrid make_grid(double t0, double T, const SimulationConfig& cfg) {
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw StructuralError("simulation: dt must be positive");
    if (cfg.n_paths < 1) throw StructuralError("simulation: n_paths must be at least 1");
    if (cfg.out_intervals < 1) throw StructuralError("simulation: out_intervals must be at least 1");
    if (!(T > t0)) throw StructuralError("simulation: horizon must exceed the start time");
    TimeGrid g;
    g.t0 = t0;
    g.T = T;
    const double raw = std::ceil((T - t0) / cfg.dt - 1e-9);
    const auto base = static_cast<std::size_t>(std::max(1.0, raw));
    g.stride = (base + cfg.out_intervals - 1) / cfg.out_intervals;
    g.steps = g.stride * cfg.out_intervals;
    const double h = (T - t0) / static_cast<double>(g.steps);
    g.times.resize(g.steps + 1);
    for (std::size_t k = 0; k <= g.steps; ++k) g.times[k] = t0 + h * static_cast<double>(k);
    g.times.back() = T;
    for (std::size_t k = 0; k <= g.steps; k += g.stride) g.out_times.push_back(g.times[k]);
    return g;
}

struct Coefficients {
    Matrix theta;
    Matrix A; // A + BΘ
    Matrix C; // C + DΘ
};

class ClosedLoopSystem {
public:
    ClosedLoopSystem(const LQProblem& p, const GainSchedule& gains, const TimeGrid& grid)
        : p_(p), gains_(gains) {
        if (gains.regimes() != p.regimes()) throw StructuralError("simulation: gain schedule regime count");
        if (!gains.covers(grid.t0, grid.T)) {
            throw StructuralError("simulation: gains not defined on the simulated interval");
        }
        const std::size_t rows = gains.is_constant() ? 1 : grid.times.size();
        table_.resize(rows);
        for (std::size_t k = 0; k < rows; ++k) {
            table_[k].reserve(p.regimes());
            for (std::size_t i = 0; i < p.regimes(); ++i) table_[k].push_back(make(grid.times[k], i));
        }
    }

    const Coefficients& at_step(std::size_t k, std::size_t regime) const {
        return table_[gains_.is_constant() ? 0 : k][regime];
    }

    Coefficients make(double t, std::size_t regime) const {
        Coefficients c;
        c.theta = gains_.at(t, regime);
        if (static_cast<std::size_t>(c.theta.rows()) != p_.m() ||
            static_cast<std::size_t>(c.theta.cols()) != p_.n()) {
            throw StructuralError("simulation: gain has wrong shape");
        }
        c.A = p_.A(regime) + p_.B(regime) * c.theta;
        c.C = p_.C(regime) + p_.D(regime) * c.theta;
        return c;
    }

    const LQProblem& problem() const { return p_; }

private:
    const LQProblem& p_;
    const GainSchedule& gains_;
    std::vector<std::vector<Coefficients>> table_;
};

// Scratch space so the inner loop does not allocate. Products use lazyProduct:
// the matrices are tiny and the blocked GEMV path costs more than it saves.
struct Workspace {
    Vector ax, cx, qx, sx, ru;
    explicit Workspace(std::size_t n, std::size_t m) : ax(n), cx(n), qx(n), sx(m), ru(m) {}
};

double running_cost(const LQProblem& p, std::size_t i, const Vector& x, const Vector& u, Workspace& w) {
    w.qx.noalias() = p.Q(i).lazyProduct(x);
    w.sx.noalias() = p.S(i).lazyProduct(x);
    w.ru.noalias() = p.R(i).lazyProduct(u);
    return 0.5 * (x.dot(w.qx) + 2.0 * u.dot(w.sx) + u.dot(w.ru));
}

struct PathRecord {
    std::vector<Vector> X; ///< at output times
    std::vector<Vector> u;
    bool want_cost = true;
    double cost = 0.0;
    std::vector<double> occupation;
};

void run_path(const ClosedLoopSystem& sys, const TimeGrid& g, const Vector& x0, std::size_t regime0,
              std::uint64_t chain_seed, std::uint64_t bm_seed, std::size_t path_index,
              PathRecord& rec, SampledTrajectory* traj) {
    const LQProblem& p = sys.problem();
    const ChainPath chain = sample_chain_path(p.generator(), regime0, g.t0, g.T, chain_seed);
    Engine bm(bm_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Workspace w(p.n(), p.m());

    rec.X.assign(g.out_times.size(), Vector());
    rec.u.assign(g.out_times.size(), Vector());
    rec.occupation.assign(p.regimes(), 0.0);
    rec.cost = 0.0;

    std::size_t regime = regime0;
    std::size_t jump = 0;
    Coefficients local;           // coefficients evaluated off the grid after a jump
    const Coefficients* cur = &sys.at_step(0, regime);
    Vector X = x0;
    Vector Xn(p.n());
    Vector u = cur->theta * X;
    Vector un(p.m());
    auto record = [&](double s) {
        if (!traj) return;
        traj->times.push_back(s);
        traj->regimes.push_back(regime);
        traj->X.push_back(X);
        traj->u.push_back(u);
    };
    double g_left = rec.want_cost ? running_cost(p, regime, X, u, w) : 0.0;
    record(g.t0);
    rec.X[0] = X;
    rec.u[0] = u;

    std::size_t out = 1;
    for (std::size_t k = 0; k < g.steps; ++k) {
        double s = g.times[k];
        const double s_end = g.times[k + 1];
        for (;;) {
            while (jump < chain.jumps() && chain.jump_times[jump] <= s) {
                regime = chain.states[jump + 1];
                ++jump;
                local = sys.make(s, regime);
                cur = &local;
                u.noalias() = cur->theta.lazyProduct(X);
                if (rec.want_cost) g_left = running_cost(p, regime, X, u, w);
                record(s);
            }
            const bool jump_inside = jump < chain.jumps() && chain.jump_times[jump] < s_end;
            const double end = jump_inside ? chain.jump_times[jump] : s_end;
            const double hs = end - s;
            const double dw = std::sqrt(hs) * normal(bm);
            w.ax.noalias() = cur->A.lazyProduct(X);
            w.cx.noalias() = cur->C.lazyProduct(X);
            Xn.noalias() = X + hs * w.ax + dw * w.cx;

            const Coefficients* right;
            if (jump_inside) {
                local = sys.make(end, regime);
                right = &local;
            } else {
                right = &sys.at_step(k + 1, regime);
            }
            un.noalias() = right->theta.lazyProduct(Xn);
            if (rec.want_cost) {
                const double g_right = running_cost(p, regime, Xn, un, w);
                rec.cost += 0.5 * hs * (g_left + g_right);
                g_left = g_right;
            }
            rec.occupation[regime] += hs;
            X.swap(Xn);
            u.swap(un);
            cur = right;
            s = end;
            record(s);
            if (!jump_inside) break;
        }
        const double sq = X.squaredNorm();
        if (!std::isfinite(sq) || sq > kOverflow * kOverflow) {
            std::ostringstream os;
            os << "unstable simulation: state overflow on path " << path_index << " at t = " << s_end;
            throw NumericalError(NumericalError::Kind::unstable_simulation, os.str());
        }
        if ((k + 1) % g.stride == 0) {
            rec.X[out] = X;
            rec.u[out] = u;
            ++out;
        }
    }
}

void check_initial(const LQProblem& p, const Vector& x, std::size_t regime) {
    if (static_cast<std::size_t>(x.size()) != p.n()) throw StructuralError("simulation: initial state has wrong size");
    if (regime >= p.regimes()) throw StructuralError("simulation: initial regime out of range");
    if (!x.allFinite()) throw StructuralError("simulation: initial state not finite");
}

} // namespace

std::size_t simulation_threads() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SLQ_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && cap >= 1) n = std::min(n, static_cast<std::size_t>(cap));
    }
    return n;
}

PathStats simulate_closed_loop(const LQProblem& p, const GainSchedule& gains,
                               const InitialTriple& init, double T, const SimulationConfig& cfg) {
    check_initial(p, init.x, init.regime);
    const TimeGrid g = make_grid(init.t, T, cfg);
    const ClosedLoopSystem sys(p, gains, g);
    const std::size_t n_out = g.out_times.size();
    const std::size_t m0 = p.regimes();
    const double span = T - init.t;

    PathStats stats;
    stats.times = g.out_times;
    stats.n_paths = cfg.n_paths;
    stats.steps = g.steps;
    if (cfg.keep_paths) stats.paths.resize(cfg.n_paths);

    const auto est = monte_carlo(cfg.n_paths, n_out + 1 + m0, [&](std::size_t k, std::vector<double>& out) {
        const std::uint64_t pk = derive_seed(cfg.seed, k);
        PathRecord rec;
        SampledTrajectory* traj = cfg.keep_paths ? &stats.paths[k] : nullptr;
        run_path(sys, g, init.x, init.regime, derive_seed(pk, kChainStream), derive_seed(pk, kBrownianStream),
                 k, rec, traj);
        for (std::size_t j = 0; j < n_out; ++j) out[j] = rec.X[j].squaredNorm();
        out[n_out] = rec.cost;
        for (std::size_t i = 0; i < m0; ++i) out[n_out + 1 + i] = rec.occupation[i] / span;
    });
    stats.mean_sq_state.assign(est.begin(), est.begin() + static_cast<std::ptrdiff_t>(n_out));
    stats.mean_cost = est[n_out];
    stats.occupation.assign(est.begin() + static_cast<std::ptrdiff_t>(n_out + 1), est.end());
    return stats;
}

CoupledGapStats simulate_coupled(const LQProblem& p, const GainSchedule& gains_T,
                                 const GainSchedule& gains_inf, const Vector& xT,
                                 const Vector& xInf, std::size_t regime, double t, double T,
                                 const SimulationConfig& cfg, Coupling coupling) {
    check_initial(p, xT, regime);
    check_initial(p, xInf, regime);
    const TimeGrid g = make_grid(t, T, cfg);
    const ClosedLoopSystem sys_T(p, gains_T, g);
    const ClosedLoopSystem sys_inf(p, gains_inf, g);
    const std::size_t n_out = g.out_times.size();

    CoupledGapStats stats;
    stats.times = g.out_times;
    stats.n_paths = cfg.n_paths;
    // streams 3 and 4 give the infinite-horizon system its own noise when uncoupled
    const std::uint64_t inf_chain = coupling == Coupling::common ? kChainStream : 3;
    const std::uint64_t inf_bm = coupling == Coupling::common ? kBrownianStream : 4;

    const auto est = monte_carlo(cfg.n_paths, 2 * n_out, [&](std::size_t k, std::vector<double>& out) {
        const std::uint64_t pk = derive_seed(cfg.seed, k);
        PathRecord a, b;
        a.want_cost = b.want_cost = false;
        run_path(sys_T, g, xT, regime, derive_seed(pk, kChainStream), derive_seed(pk, kBrownianStream), k, a,
                 nullptr);
        run_path(sys_inf, g, xInf, regime, derive_seed(pk, inf_chain), derive_seed(pk, inf_bm), k, b, nullptr);
        for (std::size_t j = 0; j < n_out; ++j) {
            out[j] = (a.X[j] - b.X[j]).squaredNorm();
            out[n_out + j] = (a.u[j] - b.u[j]).squaredNorm();
        }
    });
    stats.gap_state.assign(est.begin(), est.begin() + static_cast<std::ptrdiff_t>(n_out));
    stats.gap_control.assign(est.begin() + static_cast<std::ptrdiff_t>(n_out), est.end());
    return stats;
}

Estimate estimate_cost(const LQProblem& p, const std::vector<SampledTrajectory>& paths, double t,
                       double T) {
    if (paths.empty()) return {};
    Workspace w(p.n(), p.m());
    const double slack = 1e-12 * std::max({1.0, std::abs(t), std::abs(T)});
    Moments acc(1);
    std::vector<double> sample(1);
    for (const auto& path : paths) {
        const std::size_t N = path.times.size();
        if (path.regimes.size() != N || path.X.size() != N || path.u.size() != N) {
            throw StructuralError("estimate_cost: trajectory fields have different lengths");
        }
        if (N == 0 || path.times.front() > t + slack || path.times.back() < T - slack) {
            throw StructuralError("estimate_cost: trajectory does not cover [t, T]");
        }
        double J = 0.0;
        for (std::size_t k = 0; k + 1 < N; ++k) {
            const double a = std::max(path.times[k], t);
            const double b = std::min(path.times[k + 1], T);
            if (!(b > a)) continue;
            // full-interval trapezoid, clipped pro rata when [t, T] cuts the interval
            const double width = path.times[k + 1] - path.times[k];
            const double gl = running_cost(p, path.regimes[k], path.X[k], path.u[k], w);
            const double gr = running_cost(p, path.regimes[k], path.X[k + 1], path.u[k + 1], w);
            J += 0.5 * width * (gl + gr) * ((b - a) / width);
        }
        sample[0] = J;
        acc.add(sample);
    }
    Estimate e;
    e.value = acc.mean[0];
    e.std_error = acc.count > 1.0 ? std::sqrt(std::max(0.0, acc.m2[0]) / (acc.count - 1.0) / acc.count) : 0.0;
    return e;
}

} // namespace slq

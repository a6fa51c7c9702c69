// Python bindings. Matrices cross as numpy arrays, families as lists of
// arrays, regimes count from 0 as in the C++ API.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "slq/config.hpp"
#include "slq/errors.hpp"
#include "slq/markov.hpp"
#include "slq/report.hpp"
#include "slq/riccati.hpp"
#include "slq/simulate.hpp"
#include "slq/stability.hpp"
#include "slq/turnpike.hpp"

namespace py = pybind11;
using namespace slq;

namespace {

LQProblem make_problem(const MatrixFamily& A, const MatrixFamily& B, const MatrixFamily& C, const MatrixFamily& D,
                       const MatrixFamily& Q, const MatrixFamily& S, const MatrixFamily& R, const Matrix& generator) {
    if (A.empty() || B.empty()) throw StructuralError("A and B must hold at least one regime");
    Dimensions d{static_cast<std::size_t>(A[0].rows()), static_cast<std::size_t>(B[0].cols()), A.size()};
    return LQProblem(d, {A, B, C, D}, {Q, S, R}, {generator});
}

py::dict fit_dict(const RateFit& f) {
    py::dict d;
    d["K_hat"] = f.K_hat;
    d["delta_hat"] = f.delta_hat;
    d["r_squared"] = f.r_squared;
    d["tau_lo"] = f.tau_lo;
    d["tau_hi"] = f.tau_hi;
    d["points"] = f.points;
    return d;
}

py::dict bound_dict(const BoundVerdict& v) {
    py::dict d;
    d["passed"] = v.passed;
    d["delta"] = v.delta;
    d["K"] = v.K;
    d["delta_max"] = v.delta_max;
    d["K_cap"] = v.K_cap;
    return d;
}

py::dict estimates(const std::vector<Estimate>& e) {
    std::vector<double> v, se;
    for (const auto& x : e) {
        v.push_back(x.value);
        se.push_back(x.std_error);
    }
    py::dict d;
    d["value"] = v;
    d["std_error"] = se;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Switched stochastic LQ control: Riccati solvers, stability, simulation and turnpike checks";
    m.attr("__version__") = SLQ_VERSION;

    static py::exception<NumericalError> numerical(m, "NumericalError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const StructuralError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const NumericalError& e) {
            numerical(e.what());
        }
    });

    py::class_<LQProblem>(m, "Problem")
        .def(py::init(&make_problem), py::arg("A"), py::arg("B"), py::arg("C"), py::arg("D"), py::arg("Q"),
             py::arg("S"), py::arg("R"), py::arg("generator"))
        .def_property_readonly("n", &LQProblem::n)
        .def_property_readonly("m", &LQProblem::m)
        .def_property_readonly("regimes", &LQProblem::regimes)
        .def_property_readonly("A", [](const LQProblem& p) { return p.coeffs().A; })
        .def_property_readonly("B", [](const LQProblem& p) { return p.coeffs().B; })
        .def_property_readonly("C", [](const LQProblem& p) { return p.coeffs().C; })
        .def_property_readonly("D", [](const LQProblem& p) { return p.coeffs().D; })
        .def_property_readonly("Q", [](const LQProblem& p) { return p.cost().Q; })
        .def_property_readonly("S", [](const LQProblem& p) { return p.cost().S; })
        .def_property_readonly("R", [](const LQProblem& p) { return p.cost().R; })
        .def_property_readonly("generator", [](const LQProblem& p) { return p.generator().lambda; })
        .def("to_json", [](const LQProblem& p, const std::string& id) { return problem_to_json(p, id); },
             py::arg("id") = "problem");

    m.def("scalar_problem", &scalar_problem, py::arg("a"), py::arg("b"), py::arg("c"), py::arg("d"), py::arg("q"),
          py::arg("s"), py::arg("r"));

    m.def(
        "load_problem",
        [](const std::filesystem::path& path) {
            auto cfg = load_problem_config(path);
            py::dict d;
            d["id"] = cfg.id;
            d["problem"] = cfg.problem;
            d["stem"] = artifact_stem(cfg);
            if (cfg.initial) {
                d["x"] = cfg.initial->x;
                d["regime"] = cfg.initial->regime;
                d["t"] = cfg.initial->t;
            }
            return d;
        },
        py::arg("path"), "Load a problem file; returns a dict with id, problem and the optional initial data.");

    m.def(
        "validate",
        [](const LQProblem& p) {
            const auto r = validate_problem(p);
            py::dict d;
            d["ok"] = r.ok;
            d["generator_ok"] = r.generator_ok;
            d["messages"] = r.messages;
            std::vector<double> rmin, smin;
            for (const auto& c : r.a3_margins) {
                rmin.push_back(c.r_min);
                smin.push_back(c.schur_min);
            }
            d["R_min_eigenvalue"] = rmin;
            d["schur_min_eigenvalue"] = smin;
            return d;
        },
        py::arg("problem"));

    m.def("apply_feedback_shift", &apply_feedback_shift, py::arg("problem"), py::arg("theta"));
    m.def("stage_cost", &stage_cost, py::arg("problem"), py::arg("x"), py::arg("regime"), py::arg("u"));

    // chain
    m.def("transition_matrix",
          [](const Matrix& lambda, double t) { return transition_matrix(SwitchingGenerator{lambda}, t); },
          py::arg("generator"), py::arg("t"));
    m.def("stationary_distribution",
          [](const Matrix& lambda) { return stationary_distribution(SwitchingGenerator{lambda}); },
          py::arg("generator"));
    m.def(
        "sample_chain_path",
        [](const Matrix& lambda, std::size_t start, double t0, double t1, std::uint64_t seed) {
            const auto path = sample_chain_path(SwitchingGenerator{lambda}, start, t0, t1, seed);
            return py::make_tuple(path.jump_times, path.states);
        },
        py::arg("generator"), py::arg("start"), py::arg("t0"), py::arg("t1"), py::arg("seed"),
        "Returns (jump_times, states) with len(states) == len(jump_times) + 1.");

    // Riccati
    m.def("riccati_residual", &are_residual, py::arg("problem"), py::arg("P"));
    m.def("gain_from_P", &gain_from_P, py::arg("problem"), py::arg("P"));
    m.def("uniform_grid", &uniform_grid, py::arg("t0"), py::arg("t1"), py::arg("points"));

    py::class_<DRESolution>(m, "DRESolution")
        .def_readonly("horizon", &DRESolution::horizon)
        .def_readonly("grid", &DRESolution::grid)
        .def_readonly("P", &DRESolution::P)
        .def_readonly("theta", &DRESolution::theta)
        .def_readonly("delta_margin", &DRESolution::delta_margin)
        .def_readonly("monotone", &DRESolution::monotone)
        .def("P_at", &DRESolution::P_at, py::arg("t"))
        .def("gain_at", &DRESolution::gain_at, py::arg("t"), py::arg("regime"));
    m.def("solve_dre", &solve_dre, py::arg("problem"), py::arg("T"), py::arg("grid"), py::arg("tol") = 1e-10);

    py::class_<ARESolution>(m, "ARESolution")
        .def_readonly("P", &ARESolution::P)
        .def_readonly("theta", &ARESolution::theta)
        .def_readonly("residual_norm", &ARESolution::residual_norm)
        .def_readonly("delta_margin", &ARESolution::delta_margin)
        .def_readonly("closed_loop_rate", &ARESolution::closed_loop_rate)
        .def_readonly("horizon_used", &ARESolution::horizon_used)
        .def_readonly("newton_iterations", &ARESolution::newton_iterations);
    m.def(
        "solve_are",
        [](const LQProblem& p, double tol, std::optional<double> t_max, bool newton) {
            AreOptions o;
            o.tol = tol;
            o.t_max = t_max;
            o.newton = newton;
            return solve_are(p, o);
        },
        py::arg("problem"), py::arg("tol") = 1e-10, py::arg("t_max") = py::none(), py::arg("newton") = true);

    // stability
    m.def("moment_spectral_abscissa", &moment_spectral_abscissa, py::arg("problem"), py::arg("theta"));
    m.def("quadratic_generator",
          py::overload_cast<const LQProblem&, const MatrixFamily&, const MatrixFamily&>(&quadratic_generator),
          py::arg("problem"), py::arg("theta"), py::arg("sigma"));
    m.def(
        "second_moment",
        [](const LQProblem& p, const MatrixFamily& theta, const Vector& x, std::size_t regime,
           const std::vector<double>& grid, double tol) {
            const auto traj = propagate_second_moment(p, GainSchedule::constant(theta),
                                                      point_mass_moment(x, regime, p.regimes()), grid, tol);
            std::vector<double> ms;
            for (const auto& s : traj) ms.push_back(s.mean_square());
            return ms;
        },
        py::arg("problem"), py::arg("theta"), py::arg("x"), py::arg("regime"), py::arg("grid"),
        py::arg("tol") = 1e-10, "E|X(t)|^2 on the grid under constant gains.");

    // simulation
    m.def(
        "simulate",
        [](const LQProblem& p, const MatrixFamily& theta, const Vector& x, std::size_t regime, double T, double dt,
           std::size_t n_paths, std::uint64_t seed, std::size_t out_intervals) {
            SimulationConfig cfg;
            cfg.dt = dt;
            cfg.n_paths = n_paths;
            cfg.seed = seed;
            cfg.out_intervals = out_intervals;
            InitialTriple init;
            init.x = x;
            init.regime = regime;
            PathStats st;
            {
                py::gil_scoped_release release;
                st = simulate_closed_loop(p, GainSchedule::constant(theta), init, T, cfg);
            }
            py::dict d;
            d["times"] = st.times;
            d["mean_sq_state"] = estimates(st.mean_sq_state);
            d["mean_cost"] = py::make_tuple(st.mean_cost.value, st.mean_cost.std_error);
            d["occupation"] = estimates(st.occupation);
            return d;
        },
        py::arg("problem"), py::arg("theta"), py::arg("x"), py::arg("regime") = 0, py::arg("T") = 5.0,
        py::arg("dt") = 1e-3, py::arg("n_paths") = 1000, py::arg("seed") = 0, py::arg("out_intervals") = 100,
        "Monte Carlo of the closed loop under constant gains.");

    // turnpike
    m.def(
        "run_turnpike",
        [](const LQProblem& p, const Vector& x, std::size_t regime, double horizon, double tol, std::size_t mc_paths,
           double mc_dt, std::uint64_t seed) {
            TurnpikeOptions o;
            o.horizon = horizon;
            o.tol = tol;
            o.mc_paths = mc_paths;
            o.mc_dt = mc_dt;
            o.seed = seed;
            TurnpikeReport r;
            {
                py::gil_scoped_release release;
                r = run_turnpike(p, "python", x, regime, o);
            }
            py::dict d;
            d["all_passed"] = r.all_passed();
            d["moment_decay_rate"] = r.moment_decay_rate;
            d["riccati_fit"] = fit_dict(r.riccati.fit);
            d["gain_fit"] = fit_dict(r.gain.fit);
            d["state_bound"] = bound_dict(r.bound.state_verdict);
            d["control_bound"] = bound_dict(r.bound.control_verdict);
            d["semigroup_discrepancy"] = r.semigroup_discrepancy;
            d["riccati_gap"] = py::make_tuple(r.riccati.series.abscissa, r.riccati.series.values);
            d["integral_gap"] = py::make_tuple(r.integral.abscissa, r.integral.values);
            py::dict verdicts;
            for (const auto& v : r.verdicts) verdicts[py::str(v.name)] = py::make_tuple(v.passed, v.detail);
            d["verdicts"] = verdicts;
            d["report"] = turnpike_text(r);
            return d;
        },
        py::arg("problem"), py::arg("x"), py::arg("regime") = 0, py::arg("horizon") = 10.0, py::arg("tol") = 1e-10,
        py::arg("mc_paths") = 0, py::arg("mc_dt") = 1e-3, py::arg("seed") = 0);
}

#include "slq/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace slq {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0"; // also folds -0
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_matrix(const Matrix& M) {
    std::string s = "[";
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        if (r) s += ", ";
        s += "[";
        for (Eigen::Index c = 0; c < M.cols(); ++c) {
            if (c) s += ", ";
            s += format_number(M(r, c));
        }
        s += "]";
    }
    return s + "]";
}

namespace {

std::string family_csv(const std::vector<double>& grid, const std::vector<MatrixFamily>& fam) {
    std::string out = "t,regime,row,col,value\n";
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const std::string t = format_number(grid[k]);
        for (std::size_t i = 0; i < fam[k].size(); ++i) {
            const Matrix& M = fam[k][i];
            for (Eigen::Index r = 0; r < M.rows(); ++r) {
                for (Eigen::Index c = 0; c < M.cols(); ++c) {
                    out += t;
                    out += ',' + std::to_string(i + 1) + ',' + std::to_string(r + 1) + ',' +
                           std::to_string(c + 1) + ',' + format_number(M(r, c)) + '\n';
                }
            }
        }
    }
    return out;
}

void kv(std::ostringstream& os, const std::string& k, const std::string& v) { os << k << " = " << v << '\n'; }
void kv(std::ostringstream& os, const std::string& k, double v) { kv(os, k, format_number(v)); }
std::string quoted(const std::string& s) { return '"' + s + '"'; }
std::string boolean(bool b) { return b ? "true" : "false"; }

std::string estimate_str(const Estimate& e) {
    return "{ value = " + format_number(e.value) + ", std_error = " + format_number(e.std_error) + " }";
}

std::string fit_str(const RateFit& f) {
    return "{ K_hat = " + format_number(f.K_hat) + ", delta_hat = " + format_number(f.delta_hat) +
           ", r_squared = " + format_number(f.r_squared) + ", window = [" + format_number(f.tau_lo) + ", " +
           format_number(f.tau_hi) + "], points = " + std::to_string(f.points) + " }";
}

} // namespace

std::string dre_P_csv(const DRESolution& sol) { return family_csv(sol.grid, sol.P); }
std::string dre_theta_csv(const DRESolution& sol) { return family_csv(sol.grid, sol.theta); }

std::string estimate_csv(const std::vector<double>& times, const std::vector<Estimate>& est) {
    std::string out = "t,estimate,std_error\n";
    for (std::size_t k = 0; k < times.size(); ++k) {
        out += format_number(times[k]) + ',' + format_number(est[k].value) + ',' + format_number(est[k].std_error) + '\n';
    }
    return out;
}

std::string moment_csv(const MomentTrajectory& traj) {
    std::vector<double> times;
    std::vector<MatrixFamily> Y;
    for (const auto& st : traj) {
        times.push_back(st.t);
        Y.push_back(st.Y);
    }
    return family_csv(times, Y);
}

std::string mean_square_csv(const MomentTrajectory& traj) {
    std::string out = "t,mean_square\n";
    for (const auto& st : traj) out += format_number(st.t) + ',' + format_number(st.mean_square()) + '\n';
    return out;
}

std::string chain_paths_csv(const std::vector<ChainPath>& paths) {
    std::string out = "path,t,regime\n";
    for (std::size_t k = 0; k < paths.size(); ++k) {
        const auto& c = paths[k];
        const std::string id = std::to_string(k) + ',';
        out += id + format_number(c.t0) + ',' + std::to_string(c.states.front() + 1) + '\n';
        for (std::size_t j = 0; j < c.jumps(); ++j) {
            out += id + format_number(c.jump_times[j]) + ',' + std::to_string(c.states[j + 1] + 1) + '\n';
        }
    }
    return out;
}

std::string gap_series_csv(const GapSeries& s) {
    std::string out = "abscissa,value\n";
    for (std::size_t k = 0; k < s.values.size(); ++k) {
        out += format_number(s.abscissa[k]) + ',' + format_number(s.values[k]) + '\n';
    }
    return out;
}

std::string validation_text(const std::string& id, const ValidationReport& r) {
    std::ostringstream os;
    os << "[validation]\n";
    kv(os, "problem", quoted(id));
    kv(os, "ok", boolean(r.ok));
    kv(os, "generator_ok", boolean(r.generator_ok));
    for (std::size_t i = 0; i < r.a3_margins.size(); ++i) {
        const std::string pre = "regime." + std::to_string(i + 1) + ".";
        kv(os, pre + "R_min_eigenvalue", r.a3_margins[i].r_min);
        kv(os, pre + "schur_min_eigenvalue", r.a3_margins[i].schur_min);
        if (i < r.q_min.size()) kv(os, pre + "Q_min_eigenvalue", r.q_min[i]);
    }
    os << "messages = [";
    for (std::size_t k = 0; k < r.messages.size(); ++k) os << (k ? ", " : "") << quoted(r.messages[k]);
    os << "]\n";
    return os.str();
}

std::string are_text(const std::string& id, const ARESolution& s) {
    std::ostringstream os;
    os << "[are]\n";
    kv(os, "problem", quoted(id));
    kv(os, "residual_norm", s.residual_norm);
    kv(os, "delta_margin", s.delta_margin);
    kv(os, "closed_loop_rate", s.closed_loop_rate);
    kv(os, "horizon_used", s.horizon_used);
    kv(os, "newton_iterations", std::to_string(s.newton_iterations));
    for (std::size_t i = 0; i < s.P.size(); ++i) {
        kv(os, "P." + std::to_string(i + 1), format_matrix(s.P[i]));
        kv(os, "Theta." + std::to_string(i + 1), format_matrix(s.theta[i]));
    }
    return os.str();
}

std::string dre_summary_text(const std::string& id, const DRESolution& s) {
    std::ostringstream os;
    os << "[dre]\n";
    kv(os, "problem", quoted(id));
    kv(os, "horizon", s.horizon);
    kv(os, "grid_points", std::to_string(s.grid.size()));
    kv(os, "delta_margin", s.delta_margin);
    kv(os, "monotone", boolean(s.monotone));
    kv(os, "monotonicity_defect", s.monotonicity_defect);
    kv(os, "steps", std::to_string(s.steps));
    bool terminal_zero = s.grid.back() == s.horizon;
    if (terminal_zero) {
        for (const auto& M : s.P.back()) terminal_zero = terminal_zero && (M.array() == 0.0).all();
    }
    kv(os, "terminal_P_zero", s.grid.back() == s.horizon ? boolean(terminal_zero) : "\"not on grid\"");
    for (std::size_t i = 0; i < s.P.front().size(); ++i) {
        kv(os, "P_at_first_grid_point." + std::to_string(i + 1), format_matrix(s.P.front()[i]));
    }
    return os.str();
}

std::string path_stats_text(const std::string& id, const PathStats& s, const SimulationConfig& cfg) {
    std::ostringstream os;
    os << "[simulation]\n";
    kv(os, "problem", quoted(id));
    kv(os, "n_paths", std::to_string(s.n_paths));
    kv(os, "dt", cfg.dt);
    kv(os, "steps", std::to_string(s.steps));
    kv(os, "seed", std::to_string(cfg.seed));
    kv(os, "mean_cost", estimate_str(s.mean_cost));
    for (std::size_t i = 0; i < s.occupation.size(); ++i) {
        kv(os, "occupation." + std::to_string(i + 1), estimate_str(s.occupation[i]));
    }
    return os.str();
}

std::string turnpike_text(const TurnpikeReport& r) {
    std::ostringstream os;
    os << "[turnpike]\n";
    kv(os, "problem", quoted(r.problem_id));
    kv(os, "all_passed", boolean(r.all_passed()));
    kv(os, "x", format_matrix(r.x.transpose()));
    kv(os, "regime", std::to_string(r.regime + 1));
    os << "\n" << are_text(r.problem_id, r.are);
    kv(os, "moment_decay_rate", r.moment_decay_rate);
    os << "\n[fits]\n";
    kv(os, "riccati_gap", fit_str(r.riccati.fit));
    kv(os, "gain_gap", fit_str(r.gain.fit));
    kv(os, "gain_lipschitz_constant", r.lipschitz);
    os << "\n[bounds]\n";
    for (const auto& [name, v] : {std::pair{"state_gap", &r.bound.state_verdict},
                                  std::pair{"control_gap", &r.bound.control_verdict}}) {
        kv(os, name, "{ passed = " + boolean(v->passed) + ", delta = " + format_number(v->delta) +
                         ", K = " + format_number(v->K) + ", K_cap = " + format_number(v->K_cap) +
                         ", delta_max = " + format_number(v->delta_max) + " }");
    }
    kv(os, "semigroup_discrepancy", r.semigroup_discrepancy);
    os << "\n[verdicts]\n";
    for (const auto& v : r.verdicts) {
        kv(os, v.name, "{ passed = " + boolean(v.passed) + ", series = " + quoted(v.series) +
                           ", detail = " + quoted(v.detail) + " }");
    }
    os << "\n[provenance]\n";
    kv(os, "tool_version", quoted(SLQ_VERSION));
    kv(os, "tol", r.options.tol);
    kv(os, "horizon", r.options.horizon);
    kv(os, "grid_points", std::to_string(r.options.grid_points));
    kv(os, "fit_window", "[" + format_number(r.options.window.lo) + ", " + format_number(r.options.window.hi) + "]");
    kv(os, "K_cap", r.options.bound.K_cap);
    kv(os, "mc_paths", std::to_string(r.options.mc_paths));
    kv(os, "mc_dt", r.options.mc_dt);
    kv(os, "seed", std::to_string(r.options.seed));
    return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

} // namespace slq

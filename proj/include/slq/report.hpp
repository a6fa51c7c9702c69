#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "slq/markov.hpp"
#include "slq/model.hpp"
#include "slq/riccati.hpp"
#include "slq/simulate.hpp"
#include "slq/stability.hpp"
#include "slq/turnpike.hpp"

namespace slq {

// Serialization of results. Numbers are written as shortest round-trip
// decimals; CSV uses ',' and LF. Text documents are "key = value" lines
// grouped under [section] headers, with matrices as nested lists.

std::string format_number(double v);
std::string format_matrix(const Matrix& M);

/// t,regime,row,col,value (regime, row and col count from 1).
std::string dre_P_csv(const DRESolution& sol);
std::string dre_theta_csv(const DRESolution& sol);

/// t,estimate,std_error
std::string estimate_csv(const std::vector<double>& times, const std::vector<Estimate>& est);

/// t,regime,row,col,value for the per-regime second moments.
std::string moment_csv(const MomentTrajectory& traj);

/// t,mean_square
std::string mean_square_csv(const MomentTrajectory& traj);

/// path,t,regime: one row for the start and one per jump.
std::string chain_paths_csv(const std::vector<ChainPath>& paths);

/// abscissa,value
std::string gap_series_csv(const GapSeries& s);

std::string validation_text(const std::string& id, const ValidationReport& r);
std::string are_text(const std::string& id, const ARESolution& s);
std::string dre_summary_text(const std::string& id, const DRESolution& s);
std::string path_stats_text(const std::string& id, const PathStats& s, const SimulationConfig& cfg);
std::string turnpike_text(const TurnpikeReport& r);

/// Writes (binary mode, so LF stays LF). Throws std::runtime_error on failure.
void write_text_file(const std::filesystem::path& path, const std::string& content);

} // namespace slq

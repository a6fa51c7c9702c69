#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "slq/errors.hpp"
#include "slq/model.hpp"

namespace slq {

/// Malformed problem file. `line` is 0 when the error is about a field
/// rather than the JSON syntax; `field` is a path such as "regimes[0].A".
class ConfigError : public StructuralError {
public:
    ConfigError(const std::string& what, std::size_t line, std::string field)
        : StructuralError(what), line_(line), field_(std::move(field)) {}
    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

// Problem file layout (JSON):
//   {
//     "id": "scalar1",
//     "dims": {"n": 1, "m": 1, "m0": 1},
//     "regimes": [{"A": [[0]], "B": [[1]], "C": [[0]], "D": [[0]],
//                  "Q": [[1]], "S": [[0]], "R": [[1]]}],
//     "generator": [[0]],
//     "initial": {"x": [1], "regime": 1, "t": 0}        (optional)
//   }
// Matrices are row-major nested arrays; a bare number stands for a 1x1
// matrix. "initial.regime" counts from 1.
struct ProblemConfig {
    std::string id;
    LQProblem problem;
    std::optional<InitialTriple> initial;
    std::uint64_t content_hash = 0; ///< FNV-1a of the file bytes
};

ProblemConfig parse_problem_config(std::string_view text);
ProblemConfig load_problem_config(const std::filesystem::path& path);

/// JSON text for a problem, in the layout above.
std::string problem_to_json(const LQProblem& p, const std::string& id,
                            const std::optional<InitialTriple>& initial = std::nullopt);

std::uint64_t fnv1a64(std::string_view bytes);

/// "<id>-<16 hex digits of the content hash>".
std::string artifact_stem(const ProblemConfig& cfg);

} // namespace slq

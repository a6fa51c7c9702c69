#pragma once

#include <stdexcept>
#include <string>

namespace slq {

/// Malformed input: wrong shapes, non-finite entries, out-of-range indices.
/// Distinct from a failed mathematical check, which is reported, not thrown.
class StructuralError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A solver or simulator could not produce a trustworthy result.
class NumericalError : public std::runtime_error {
public:
    enum class Kind {
        singular_matrix,
        step_underflow,
        regularity_lost,
        horizon_cap_reached,
        not_stabilizing,
        unstable_simulation,
        eigen_failure,
        insufficient_data,
        monotonicity_violated,
        internal,
    };

    NumericalError(Kind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

} // namespace slq

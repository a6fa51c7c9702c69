#pragma once

#include <functional>
#include <memory>

#include "slq/model.hpp"

namespace slq {

/// Per-regime feedback gain Θ(t, ι), either constant in time or backed by a
/// time-dependent source such as a DRE solution.
class GainSchedule {
public:
    using Source = std::function<Matrix(double t, std::size_t regime)>;

    static GainSchedule constant(MatrixFamily theta);
    static GainSchedule time_varying(Source source, std::size_t regimes, double t_begin,
                                     double t_end);

    Matrix at(double t, std::size_t regime) const;
    MatrixFamily at(double t) const;

    bool is_constant() const { return !source_; }
    std::size_t regimes() const { return regimes_; }
    /// Interval on which the schedule is defined (unbounded when constant).
    double t_begin() const { return t_begin_; }
    double t_end() const { return t_end_; }
    bool covers(double t0, double t1) const;

private:
    GainSchedule() = default;
    MatrixFamily constant_;
    std::shared_ptr<const Source> source_;
    std::size_t regimes_ = 0;
    double t_begin_ = 0.0;
    double t_end_ = 0.0;
};

} // namespace slq

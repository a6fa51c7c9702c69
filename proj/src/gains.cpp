#include "slq/gains.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "slq/errors.hpp"

namespace slq {

GainSchedule GainSchedule::constant(MatrixFamily theta) {
    GainSchedule g;
    g.regimes_ = theta.size();
    g.constant_ = std::move(theta);
    g.t_begin_ = -std::numeric_limits<double>::infinity();
    g.t_end_ = std::numeric_limits<double>::infinity();
    return g;
}

GainSchedule GainSchedule::time_varying(Source source, std::size_t regimes, double t_begin,
                                        double t_end) {
    GainSchedule g;
    g.source_ = std::make_shared<const Source>(std::move(source));
    g.regimes_ = regimes;
    g.t_begin_ = t_begin;
    g.t_end_ = t_end;
    return g;
}

Matrix GainSchedule::at(double t, std::size_t regime) const {
    if (regime >= regimes_) throw StructuralError("gain schedule: regime out of range");
    if (!source_) return constant_[regime];
    return (*source_)(t, regime);
}

MatrixFamily GainSchedule::at(double t) const {
    if (!source_) return constant_;
    MatrixFamily out;
    out.reserve(regimes_);
    for (std::size_t i = 0; i < regimes_; ++i) out.push_back((*source_)(t, i));
    return out;
}

bool GainSchedule::covers(double t0, double t1) const {
    const double slack = 1e-12 * std::max(1.0, std::abs(t1));
    return t0 >= t_begin_ - slack && t1 <= t_end_ + slack;
}

} // namespace slq

#include "slq/markov.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "slq/errors.hpp"

namespace slq {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t k) {
    return splitmix64(base ^ splitmix64(k + 0x632be59bd9b4e019ULL));
}

MatrixFamily lambda_apply(const SwitchingGenerator& gen, const MatrixFamily& sigma) {
    const auto m0 = gen.regimes();
    if (sigma.size() != m0) throw StructuralError("lambda_apply: family size differs from m0");
    MatrixFamily out(m0, Matrix::Zero(sigma[0].rows(), sigma[0].cols()));
    for (std::size_t i = 0; i < m0; ++i) {
        for (std::size_t j = 0; j < m0; ++j) {
            const double l = gen.rate(i, j);
            if (l != 0.0) out[i] += l * sigma[j];
        }
    }
    return out;
}

std::size_t ChainPath::state_at(double t) const {
    // state is states[k] on [jump_k, jump_{k+1})
    const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
    return states[static_cast<std::size_t>(it - jump_times.begin())];
}

ChainPath sample_chain_path(const SwitchingGenerator& gen, std::size_t start_regime, double t0,
                            double t1, Engine& engine) {
    if (!(t0 < t1)) throw StructuralError("sample_chain_path: requires t0 < t1");
    if (start_regime >= gen.regimes()) throw StructuralError("sample_chain_path: regime out of range");
    ChainPath path;
    path.t0 = t0;
    path.t1 = t1;
    path.states.push_back(start_regime);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const auto m0 = gen.regimes();
    double t = t0;
    std::size_t cur = start_regime;
    for (;;) {
        const double rate = -gen.rate(cur, cur);
        if (!(rate > 0.0)) break; // absorbing
        std::exponential_distribution<double> hold(rate);
        t += hold(engine);
        if (t > t1) break;
        // next regime: j != cur with probability λ_cur,j / rate
        const double target = unif(engine) * rate;
        double acc = 0.0;
        std::size_t next = cur;
        for (std::size_t j = 0; j < m0; ++j) {
            if (j == cur) continue;
            acc += gen.rate(cur, j);
            next = j;
            if (target < acc) break;
        }
        path.jump_times.push_back(t);
        path.states.push_back(next);
        cur = next;
    }
    return path;
}

ChainPath sample_chain_path(const SwitchingGenerator& gen, std::size_t start_regime, double t0,
                            double t1, std::uint64_t rng_seed) {
    Engine engine(rng_seed);
    return sample_chain_path(gen, start_regime, t0, t1, engine);
}

Matrix transition_matrix(const SwitchingGenerator& gen, double t) {
    if (t < 0.0) throw StructuralError("transition_matrix: requires t >= 0");
    if (t == 0.0) return Matrix::Identity(gen.lambda.rows(), gen.lambda.cols());
    Matrix E = (t * gen.lambda).exp();
    return E;
}

Vector stationary_distribution(const SwitchingGenerator& gen) {
    const auto m0 = gen.lambda.rows();
    Matrix sys(m0 + 1, m0);
    sys.topRows(m0) = gen.lambda.transpose();
    sys.row(m0).setOnes();
    Vector rhs = Vector::Zero(m0 + 1);
    rhs(m0) = 1.0;
    return sys.colPivHouseholderQr().solve(rhs);
}

} // namespace slq

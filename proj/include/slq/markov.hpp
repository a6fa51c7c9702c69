#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "slq/model.hpp"

namespace slq {

// ---------------------------------------------------------------------------
// Seeding
// ---------------------------------------------------------------------------

using Engine = std::mt19937_64;

/// SplitMix64 finalizer; bijective on 64-bit words.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of substream k under `base`: splitmix64(base ^ splitmix64(k + golden)).
/// Path k of a run with base seed s draws its chain from
/// derive_seed(derive_seed(s, k), 1) and its Brownian increments from
/// derive_seed(derive_seed(s, k), 2), independent of the total path count.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t k);

inline constexpr std::uint64_t kChainStream = 1;
inline constexpr std::uint64_t kBrownianStream = 2;

// ---------------------------------------------------------------------------
// Chain coupling and sampling
// ---------------------------------------------------------------------------

/// out(i) = Σ_j λ_ij σ(j).
MatrixFamily lambda_apply(const SwitchingGenerator& gen, const MatrixFamily& sigma);

/// Right-continuous piecewise-constant regime path on [t0, t1].
struct ChainPath {
    double t0 = 0.0;
    double t1 = 0.0;
    std::vector<double> jump_times;  ///< strictly increasing, in (t0, t1]
    std::vector<std::size_t> states; ///< states.size() == jump_times.size() + 1

    std::size_t state_at(double t) const;
    std::size_t jumps() const { return jump_times.size(); }
};

ChainPath sample_chain_path(const SwitchingGenerator& gen, std::size_t start_regime, double t0,
                            double t1, std::uint64_t rng_seed);
ChainPath sample_chain_path(const SwitchingGenerator& gen, std::size_t start_regime, double t0,
                            double t1, Engine& engine);

/// exp(tΛ) by Padé scaling and squaring.
Matrix transition_matrix(const SwitchingGenerator& gen, double t);

/// Stationary law π with πΛ = 0, Σπ = 1 (least-squares solve).
Vector stationary_distribution(const SwitchingGenerator& gen);

} // namespace slq

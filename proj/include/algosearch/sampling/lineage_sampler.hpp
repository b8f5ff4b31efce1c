#pragma once

// Rank-based Gibbs parent selection over lineage-structured pools.
//
//   w_i  = exp(-(r_i - 1) / tau)            rank weight, r_i = 1 is best
//   p_i  = w_i / sum_j w_j                  selection probability
//   w~_i = w_i * lambda^{m_i}               crossover weight, m_i = number of
//                                           already chosen parents in i's lineage
//
// All functions are pure; randomness comes from the caller's Rng.

#include "algosearch/store/types.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace algosearch::sampling {

using Rng = std::mt19937_64;

struct SamplingConfig {
    double tau = 5.0;
    double lambda_penalty = 0.5;
    bool stochastic = true;          // false: deterministic top-k
    int top_k = 2;
    int evolve_per_lineage = 3;      // pool members kept per lineage for crossover
    std::optional<std::uint64_t> rng_seed;

    bool operator==(const SamplingConfig&) const = default;
};

// Throws Errc::parameter when the config breaks its invariants.
void validate(const SamplingConfig& cfg);

// A candidate eligible for selection.
struct Scored {
    CandidateId candidate_id = 0;
    LineageId lineage_id = 0;
    int round_index = 0;
    double value = 0.0;
};

struct RankedCandidate {
    CandidateId candidate_id = 0;
    LineageId lineage_id = 0;
    int rank = 1;
    double weight = 1.0;

    bool operator==(const RankedCandidate&) const = default;
};

// exp(-(rank-1)/tau).
double rank_weight(int rank, double tau);

// Normalized Gibbs probabilities for `ranks`. Throws Errc::parameter for
// tau <= 0 or ranks that are not a permutation of 1..n, Errc::empty_pool for
// an empty input.
std::vector<double> gibbs_distribution(std::span<const int> ranks, double tau);

// Sorts best first: better value, then earlier round, then lower id.
std::vector<Scored> rank_order(std::span<const Scored> candidates, Direction dir);

// One representative per lineage (its best member), re-ranked 1..L. Weights
// are filled for `tau` when it is positive, else left at 1.
std::vector<RankedCandidate> build_tune_pool(std::span<const Scored> candidates, Direction dir, double tau = 0.0);

// Up to `per_lineage` best members of every lineage, ranked globally 1..n.
std::vector<RankedCandidate> build_evolve_pool(std::span<const Scored> candidates, Direction dir,
                                               int per_lineage, double tau = 0.0);

// Index drawn from unnormalized non-negative weights. The total must be
// positive. Uses 53 bits of one engine output, so a seed yields the same
// sequence on every platform.
std::size_t draw_index(std::span<const double> weights, Rng& rng);

// min(workers, |pool|) distinct parents, drawn sequentially without
// replacement with renormalization. Deterministic mode returns the first
// min(workers, top_k) pool members by rank.
std::vector<CandidateId> sample_tune_parents(std::span<const RankedCandidate> pool, int workers,
                                             const SamplingConfig& cfg, Rng& rng);

// Two distinct parents. Throws Errc::insufficient_pool when the pool has
// fewer than two members (callers fall back to mutate).
std::pair<CandidateId, CandidateId> sample_evolve_parents(std::span<const RankedCandidate> pool,
                                                          const SamplingConfig& cfg, Rng& rng);

// Second-draw distribution after `parent_a`: w~ renormalized over the
// remaining members. Falls back to the unpenalized weights when every
// remaining member carries zero weight (lambda = 0, single lineage).
std::vector<double> evolve_second_distribution(std::span<const RankedCandidate> pool, std::size_t parent_a,
                                               double tau, double lambda_penalty);

} // namespace algosearch::sampling

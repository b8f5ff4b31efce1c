#include "algosearch/sampling/lineage_sampler.hpp"

#include "algosearch/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace algosearch::sampling {

void validate(const SamplingConfig& cfg)
{
    if (cfg.stochastic && !(cfg.tau > 0.0 && std::isfinite(cfg.tau))) {
        throw Error(Errc::parameter, "tau must be a positive finite number when sampling is stochastic");
    }
    if (!(cfg.lambda_penalty >= 0.0 && cfg.lambda_penalty <= 1.0)) {
        throw Error(Errc::parameter, "lambda_penalty must lie in [0, 1]");
    }
    if (cfg.top_k < 1) {
        throw Error(Errc::parameter, "top_k must be at least 1");
    }
    if (cfg.evolve_per_lineage < 1) {
        throw Error(Errc::parameter, "evolve_per_lineage must be at least 1");
    }
}

double rank_weight(int rank, double tau)
{
    return std::exp(-static_cast<double>(rank - 1) / tau);
}

std::vector<double> gibbs_distribution(std::span<const int> ranks, double tau)
{
    if (!(tau > 0.0)) {
        throw Error(Errc::parameter, "tau must be positive");
    }
    if (ranks.empty()) {
        throw Error(Errc::empty_pool, "cannot build a distribution over an empty pool");
    }
    std::vector<int> sorted(ranks.begin(), ranks.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i] != static_cast<int>(i) + 1) {
            throw Error(Errc::parameter, "ranks must be the consecutive integers 1..n");
        }
    }
    std::vector<double> p(ranks.size());
    double total = 0.0;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        p[i] = rank_weight(ranks[i], tau);
        total += p[i];
    }
    for (double& v : p) {
        v /= total;
    }
    return p;
}

std::vector<Scored> rank_order(std::span<const Scored> candidates, Direction dir)
{
    std::vector<Scored> out(candidates.begin(), candidates.end());
    std::sort(out.begin(), out.end(), [dir](const Scored& a, const Scored& b) {
        if (a.value != b.value) {
            return better(dir, a.value, b.value);
        }
        if (a.round_index != b.round_index) {
            return a.round_index < b.round_index;
        }
        return a.candidate_id < b.candidate_id;
    });
    return out;
}

namespace {

std::vector<RankedCandidate> assign_ranks(const std::vector<Scored>& ordered, double tau)
{
    std::vector<RankedCandidate> pool;
    pool.reserve(ordered.size());
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        const int rank = static_cast<int>(i) + 1;
        pool.push_back({ordered[i].candidate_id, ordered[i].lineage_id, rank,
                        tau > 0.0 ? rank_weight(rank, tau) : 1.0});
    }
    return pool;
}

double uniform01(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace

std::vector<RankedCandidate> build_tune_pool(std::span<const Scored> candidates, Direction dir, double tau)
{
    return build_evolve_pool(candidates, dir, 1, tau);
}

std::vector<RankedCandidate> build_evolve_pool(std::span<const Scored> candidates, Direction dir,
                                               int per_lineage, double tau)
{
    if (candidates.empty()) {
        throw Error(Errc::empty_pool, "no candidates with a primary metric are available");
    }
    if (per_lineage < 1) {
        throw Error(Errc::parameter, "per_lineage must be at least 1");
    }
    std::map<LineageId, int> taken;
    std::vector<Scored> kept;
    for (const Scored& s : rank_order(candidates, dir)) {
        if (taken[s.lineage_id]++ < per_lineage) {
            kept.push_back(s);
        }
    }
    return assign_ranks(kept, tau);
}

std::size_t draw_index(std::span<const double> weights, Rng& rng)
{
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) {
        throw Error(Errc::empty_pool, "no candidate carries positive weight");
    }
    const double target = uniform01(rng) * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) {
            continue;
        }
        acc += weights[i];
        last_positive = i;
        if (target < acc) {
            return i;
        }
    }
    return last_positive;  // rounding at the top end
}

std::vector<CandidateId> sample_tune_parents(std::span<const RankedCandidate> pool, int workers,
                                             const SamplingConfig& cfg, Rng& rng)
{
    if (pool.empty()) {
        throw Error(Errc::empty_pool, "tune pool is empty");
    }
    if (workers < 1) {
        throw Error(Errc::parameter, "workers must be at least 1");
    }
    validate(cfg);

    std::vector<RankedCandidate> sorted(pool.begin(), pool.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.rank < b.rank; });

    std::vector<CandidateId> out;
    if (!cfg.stochastic) {
        const auto n = std::min<std::size_t>({static_cast<std::size_t>(workers), static_cast<std::size_t>(cfg.top_k),
                                              sorted.size()});
        for (std::size_t i = 0; i < n; ++i) {
            out.push_back(sorted[i].candidate_id);
        }
        return out;
    }

    std::vector<double> w(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        w[i] = rank_weight(sorted[i].rank, cfg.tau);
    }
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(workers), sorted.size());
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = draw_index(w, rng);
        out.push_back(sorted[i].candidate_id);
        w[i] = 0.0;
    }
    return out;
}

std::vector<double> evolve_second_distribution(std::span<const RankedCandidate> pool, std::size_t parent_a,
                                               double tau, double lambda_penalty)
{
    std::vector<double> w(pool.size(), 0.0);
    std::vector<double> plain(pool.size(), 0.0);
    double total = 0.0;
    double plain_total = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (i == parent_a) {
            continue;
        }
        plain[i] = rank_weight(pool[i].rank, tau);
        const int m = pool[i].lineage_id == pool[parent_a].lineage_id ? 1 : 0;
        w[i] = plain[i] * std::pow(lambda_penalty, m);
        total += w[i];
        plain_total += plain[i];
    }
    if (!(total > 0.0)) {
        w = std::move(plain);
        total = plain_total;
    }
    for (double& v : w) {
        v /= total;
    }
    return w;
}

std::pair<CandidateId, CandidateId> sample_evolve_parents(std::span<const RankedCandidate> pool,
                                                          const SamplingConfig& cfg, Rng& rng)
{
    if (pool.size() < 2) {
        throw Error(Errc::insufficient_pool, "evolve needs at least two candidates; use mutate");
    }
    validate(cfg);

    std::vector<RankedCandidate> sorted(pool.begin(), pool.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.rank < b.rank; });

    if (!cfg.stochastic) {
        // greedy limit: the best member, then the best remaining member that
        // the penalty does not zero out
        const RankedCandidate& a = sorted[0];
        for (std::size_t i = 1; i < sorted.size(); ++i) {
            if (cfg.lambda_penalty > 0.0 || sorted[i].lineage_id != a.lineage_id) {
                return {a.candidate_id, sorted[i].candidate_id};
            }
        }
        return {a.candidate_id, sorted[1].candidate_id};
    }

    std::vector<double> w(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        w[i] = rank_weight(sorted[i].rank, cfg.tau);
    }
    const std::size_t a = draw_index(w, rng);
    const auto second = evolve_second_distribution(sorted, a, cfg.tau, cfg.lambda_penalty);
    const std::size_t b = draw_index(second, rng);
    return {sorted[a].candidate_id, sorted[b].candidate_id};
}

} // namespace algosearch::sampling

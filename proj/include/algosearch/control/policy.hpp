#pragma once

// Round branching: performance tiers, next-action selection and early stop.
// Everything here is a pure function of the history snapshot it is given.

#include "algosearch/sampling/lineage_sampler.hpp"
#include "algosearch/store/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace algosearch::control {

struct ControllerConfig {
    int total_rounds = 10;                 // discovery rounds after the baseline
    int warmup_generate_rounds = 2;
    std::optional<int> forced_generate_every = 5;
    int majority_window = 3;
    int min_excellent_for_tune = 1;
    int min_moderate_for_evolve = 2;
    double excellent_fraction = 0.9;
    double moderate_fraction = 0.5;
    int tune_workers = 2;
    int generate_workers = 1;
    std::optional<int> early_stop_patience;

    bool operator==(const ControllerConfig&) const = default;
};

// Throws Errc::validation naming the offending field.
void validate(const ControllerConfig& cfg);

enum class Tier { excellent, moderate, low };

struct TierCounts {
    int excellent = 0;
    int moderate_or_better = 0;
    int total = 0;

    bool operator==(const TierCounts&) const = default;
};

// One scored candidate, in submission order.
struct HistoryEntry {
    CandidateId candidate_id = 0;
    LineageId lineage_id = 0;
    int round_index = 0;
    double value = 0.0;
    std::optional<Action> suggestion;
};

// Fraction of the ref -> best improvement span that `value` covers.
// With a baseline, the span only exists when best strictly improves on it.
// Without one (ref = worst), a zero span puts every candidate at 1.
struct TierScale {
    Direction direction = Direction::minimize;
    double ref = 0.0;
    double best = 0.0;
    bool anchored = false;   // ref came from a baseline value

    double share(double value) const;
};

TierScale tier_scale(std::span<const HistoryEntry> history, Direction dir, std::optional<double> baseline);
Tier classify(double share, const ControllerConfig& cfg);

// Throws Errc::state for an empty history.
TierCounts compute_tiers(std::span<const HistoryEntry> history, Direction dir,
                         std::optional<double> baseline, const ControllerConfig& cfg);

struct RoundPlan {
    int round_index = 0;
    Action action = Action::generate;
    std::vector<CandidateId> parents;   // tune: one per worker; evolve: 2; mutate: 1
    int workers = 1;
    std::string rationale;
};

// Majority suggestion among the last `majority_window` moderate-or-better
// candidates, if one action holds a strict majority of them.
std::optional<Action> majority_suggestion(std::span<const HistoryEntry> history, Direction dir,
                                          std::optional<double> baseline, const ControllerConfig& cfg);

// `round_index` counts discovery rounds from 1. Always yields a plan;
// parents are drawn with `rng` according to `sampling`.
RoundPlan select_next_action(int round_index, std::span<const HistoryEntry> history, Direction dir,
                             std::optional<double> baseline, const ControllerConfig& cfg,
                             const sampling::SamplingConfig& sampling, sampling::Rng& rng);

// Per finished discovery round: whether it completed and its best primary
// value (if any candidate was scored).
struct RoundOutcome {
    int round_index = 0;
    bool completed = false;
    std::optional<double> best_value;
};

struct StopDecision {
    bool stop = false;
    std::string reason;
};

// Stops once the best-so-far primary value has not improved over `patience`
// consecutive completed discovery rounds. `initial_best` is the best value
// before the first discovery round (the baseline).
StopDecision check_early_stop(std::span<const RoundOutcome> rounds, std::optional<double> initial_best,
                              Direction dir, std::optional<int> patience);

} // namespace algosearch::control

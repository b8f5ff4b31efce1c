#include "algosearch/control/policy.hpp"

#include "algosearch/error.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace algosearch::control {

namespace {

// Shares within rounding of a threshold count as reaching it.
constexpr double kShareSlack = 1e-9;

void require(bool ok, const std::string& message)
{
    if (!ok) {
        throw Error(Errc::validation, message);
    }
}

std::vector<sampling::Scored> scored(std::span<const HistoryEntry> history)
{
    std::vector<sampling::Scored> out;
    out.reserve(history.size());
    for (const auto& h : history) {
        out.push_back({h.candidate_id, h.lineage_id, h.round_index, h.value});
    }
    return out;
}

std::string fmt(double v)
{
    std::ostringstream os;
    os << v;
    return os.str();
}

} // namespace

void validate(const ControllerConfig& cfg)
{
    require(cfg.total_rounds >= 0, "controller.total_rounds must be non-negative");
    require(cfg.warmup_generate_rounds >= 0, "controller.warmup_generate_rounds must be non-negative");
    require(cfg.total_rounds == 0 || cfg.warmup_generate_rounds < cfg.total_rounds,
            "controller.warmup_generate_rounds must be smaller than controller.total_rounds");
    require(!cfg.forced_generate_every || *cfg.forced_generate_every >= 1,
            "controller.forced_generate_every must be positive");
    require(cfg.majority_window >= 1, "controller.majority_window must be positive");
    require(cfg.min_excellent_for_tune >= 1, "controller.min_excellent_for_tune must be positive");
    require(cfg.min_moderate_for_evolve >= 1, "controller.min_moderate_for_evolve must be positive");
    require(cfg.excellent_fraction > 0.0 && cfg.excellent_fraction <= 1.0,
            "controller.excellent_fraction must lie in (0, 1]");
    require(cfg.moderate_fraction > 0.0 && cfg.moderate_fraction <= 1.0,
            "controller.moderate_fraction must lie in (0, 1]");
    require(cfg.moderate_fraction <= cfg.excellent_fraction,
            "controller.moderate_fraction must not exceed controller.excellent_fraction");
    require(cfg.tune_workers >= 1, "controller.tune_workers must be positive");
    require(cfg.generate_workers >= 1, "controller.generate_workers must be positive");
    require(!cfg.early_stop_patience || *cfg.early_stop_patience >= 1,
            "controller.early_stop_patience must be positive");
}

double TierScale::share(double value) const
{
    const double span = direction == Direction::minimize ? ref - best : best - ref;
    if (!(span > 0.0)) {
        return anchored ? 0.0 : 1.0;
    }
    const double gain = direction == Direction::minimize ? ref - value : value - ref;
    return gain / span;
}

TierScale tier_scale(std::span<const HistoryEntry> history, Direction dir, std::optional<double> baseline)
{
    if (history.empty()) {
        throw Error(Errc::state, "tiers need at least one scored candidate");
    }
    TierScale s;
    s.direction = dir;
    s.best = history.front().value;
    double worst = history.front().value;
    for (const auto& h : history) {
        if (better(dir, h.value, s.best)) {
            s.best = h.value;
        }
        if (better(dir, worst, h.value)) {
            worst = h.value;
        }
    }
    s.anchored = baseline.has_value();
    s.ref = baseline ? *baseline : worst;
    return s;
}

Tier classify(double share, const ControllerConfig& cfg)
{
    if (share >= cfg.excellent_fraction - kShareSlack) {
        return Tier::excellent;
    }
    if (share >= cfg.moderate_fraction - kShareSlack) {
        return Tier::moderate;
    }
    return Tier::low;
}

TierCounts compute_tiers(std::span<const HistoryEntry> history, Direction dir, std::optional<double> baseline,
                         const ControllerConfig& cfg)
{
    const TierScale scale = tier_scale(history, dir, baseline);
    TierCounts t;
    for (const auto& h : history) {
        const Tier tier = classify(scale.share(h.value), cfg);
        t.excellent += tier == Tier::excellent ? 1 : 0;
        t.moderate_or_better += tier != Tier::low ? 1 : 0;
        ++t.total;
    }
    return t;
}

std::optional<Action> majority_suggestion(std::span<const HistoryEntry> history, Direction dir,
                                          std::optional<double> baseline, const ControllerConfig& cfg)
{
    if (history.empty()) {
        return std::nullopt;
    }
    const TierScale scale = tier_scale(history, dir, baseline);
    std::vector<const HistoryEntry*> strong;
    for (const auto& h : history) {
        if (classify(scale.share(h.value), cfg) != Tier::low) {
            strong.push_back(&h);
        }
    }
    const std::size_t window = std::min(strong.size(), static_cast<std::size_t>(cfg.majority_window));
    if (window == 0) {
        return std::nullopt;
    }
    std::map<Action, std::size_t> votes;
    for (std::size_t i = strong.size() - window; i < strong.size(); ++i) {
        if (strong[i]->suggestion) {
            ++votes[*strong[i]->suggestion];
        }
    }
    for (const auto& [action, n] : votes) {
        if (2 * n > window) {
            return action;
        }
    }
    return std::nullopt;
}

RoundPlan select_next_action(int round_index, std::span<const HistoryEntry> history, Direction dir,
                             std::optional<double> baseline, const ControllerConfig& cfg,
                             const sampling::SamplingConfig& sampling, sampling::Rng& rng)
{
    RoundPlan plan;
    plan.round_index = round_index;

    auto generate = [&](std::string why) {
        plan.action = Action::generate;
        plan.parents.clear();
        plan.workers = cfg.generate_workers;
        plan.rationale = std::move(why);
        return plan;
    };

    if (round_index <= cfg.warmup_generate_rounds) {
        return generate("warmup round " + std::to_string(round_index) + " of " +
                        std::to_string(cfg.warmup_generate_rounds));
    }
    const int since_warmup = round_index - cfg.warmup_generate_rounds;
    if (cfg.forced_generate_every && since_warmup % *cfg.forced_generate_every == 0) {
        return generate("periodic forced exploration (every " + std::to_string(*cfg.forced_generate_every) +
                        " rounds after warmup)");
    }
    if (history.empty()) {
        return generate("no scored candidates yet");
    }

    const TierCounts tiers = compute_tiers(history, dir, baseline, cfg);
    const bool tune_ok = tiers.excellent >= cfg.min_excellent_for_tune;
    const bool evolve_ok = tiers.moderate_or_better >= cfg.min_moderate_for_evolve;
    const auto entries = scored(history);

    auto tune = [&](std::string why) {
        const auto pool = sampling::build_tune_pool(entries, dir, sampling.stochastic ? sampling.tau : 0.0);
        plan.action = Action::tune;
        plan.parents = sampling::sample_tune_parents(pool, cfg.tune_workers, sampling, rng);
        plan.workers = static_cast<int>(plan.parents.size());
        plan.rationale = std::move(why);
        return plan;
    };
    auto evolve = [&](std::string why) {
        const auto pool = sampling::build_evolve_pool(entries, dir, sampling.evolve_per_lineage,
                                                      sampling.stochastic ? sampling.tau : 0.0);
        plan.workers = 1;
        if (pool.size() == 1) {
            plan.action = Action::mutate;
            plan.parents = {pool.front().candidate_id};
            plan.rationale = why + "; single candidate in the pool, mutating it instead";
            return plan;
        }
        const auto [a, b] = sampling::sample_evolve_parents(pool, sampling, rng);
        plan.action = Action::evolve;
        plan.parents = {a, b};
        plan.rationale = std::move(why);
        return plan;
    };

    const std::string counts = "excellent " + std::to_string(tiers.excellent) + ", moderate-or-better " +
                               std::to_string(tiers.moderate_or_better) + " of " + std::to_string(tiers.total);

    if (const auto vote = majority_suggestion(history, dir, baseline, cfg)) {
        const std::string why = "majority of recent strong candidates suggest " + std::string(to_string(*vote));
        if (*vote == Action::generate) {
            return generate(why);
        }
        if (*vote == Action::tune && tune_ok) {
            return tune(why + " (" + counts + ")");
        }
        if ((*vote == Action::evolve || *vote == Action::mutate) && evolve_ok) {
            return evolve(why + " (" + counts + ")");
        }
    }
    if (tune_ok) {
        return tune("enough excellent candidates (" + counts + ")");
    }
    if (evolve_ok) {
        return evolve("enough moderate-or-better candidates (" + counts + ")");
    }
    return generate("too few strong candidates (" + counts + ")");
}

StopDecision check_early_stop(std::span<const RoundOutcome> rounds, std::optional<double> initial_best,
                              Direction dir, std::optional<int> patience)
{
    if (!patience) {
        return {};
    }
    std::optional<double> best = initial_best;
    std::optional<int> best_round;
    int stale = 0;
    for (const auto& r : rounds) {
        if (!r.completed) {
            continue;
        }
        if (r.best_value && (!best || better(dir, *r.best_value, *best))) {
            best = r.best_value;
            best_round = r.round_index;
            stale = 0;
        } else {
            ++stale;
        }
    }
    if (stale < *patience) {
        return {};
    }
    std::string reason = "early stop: no improvement over " + std::to_string(stale) + " completed discovery rounds";
    if (best) {
        reason += " (best " + fmt(*best) + (best_round ? " at round " + std::to_string(*best_round) : "") + ")";
    }
    return {true, reason};
}

} // namespace algosearch::control

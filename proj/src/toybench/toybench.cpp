#include "algosearch/toybench/toybench.hpp"

#include "algosearch/error.hpp"
#include "algosearch/kernels/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace algosearch::toybench {

namespace {

std::string num(double v)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

// Uniform in [0, 1) from 53 bits, identical on every platform.
double unit(sampling::Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int grid_count(double step)
{
    return static_cast<int>(std::lround(kExtent / step)) + 1;
}

} // namespace

double distance(Point a, Point b)
{
    return std::hypot(a.x - b.x, a.y - b.y);
}

Point clamp(Point p)
{
    return {std::clamp(p.x, 0.0, kExtent), std::clamp(p.y, 0.0, kExtent)};
}

Landscape Landscape::build(const LandscapeParams& params)
{
    if (params.n_points < 1 || !(params.bandwidth > 0) || !(params.grid_step > 0) || params.grid_step > kExtent) {
        throw Error(Errc::parameter, "landscape needs at least one point, a positive bandwidth and a grid step in "
                                     "(0, 100]");
    }
    Landscape l;
    l.params_ = params;
    sampling::Rng rng(params.seed);
    for (int i = 0; i < params.n_points; ++i) {
        l.cx_.push_back(unit(rng) * kExtent);
        l.cy_.push_back(unit(rng) * kExtent);
    }
    l.inv_two_h2_ = 1.0 / (2.0 * params.bandwidth * params.bandwidth);

    const int n = grid_count(params.grid_step);
    std::vector<double> xs(n);
    std::vector<double> ys(n);
    std::vector<double> row(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = std::min(i * params.grid_step, kExtent);
    }
    double best = -1.0;
    for (int j = 0; j < n; ++j) {
        std::fill(ys.begin(), ys.end(), xs[j]);
        kernels::kde_sum(l.cx_, l.cy_, l.inv_two_h2_, xs, ys, row);
        for (int i = 0; i < n; ++i) {
            if (row[i] > best) {
                best = row[i];
                l.argmax_ = {xs[i], xs[j]};
            }
        }
    }
    l.scale_ = kPeak / best;
    return l;
}

void Landscape::evaluate(std::span<const double> xs, std::span<const double> ys, std::span<double> out) const
{
    kernels::kde_sum(cx_, cy_, inv_two_h2_, xs, ys, out);
    for (auto& v : out.first(xs.size())) {
        v *= scale_;
    }
}

double Landscape::operator()(Point p) const
{
    double out = 0.0;
    evaluate(std::span(&p.x, 1), std::span(&p.y, 1), std::span(&out, 1));
    return out;
}

std::string Landscape::grid_csv(double step) const
{
    if (!(step > 0)) {
        throw Error(Errc::parameter, "grid step must be positive");
    }
    const int n = grid_count(step);
    std::vector<double> xs(n);
    std::vector<double> ys(n);
    std::vector<double> row(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = std::min(i * step, kExtent);
    }
    std::string out = "x,y,value\n";
    for (int j = 0; j < n; ++j) {
        std::fill(ys.begin(), ys.end(), xs[j]);
        evaluate(xs, ys, row);
        for (int i = 0; i < n; ++i) {
            out += num(xs[i]) + "," + num(xs[j]) + "," + num(row[i]) + "\n";
        }
    }
    return out;
}

Landscape build_landscape(std::uint64_t seed, double bandwidth)
{
    LandscapeParams p;
    p.seed = seed;
    p.bandwidth = bandwidth;
    return Landscape::build(p);
}

MoveResult scripted_round(const Field& f, Point start, const MovePolicy& policy)
{
    MoveResult r;
    r.end = clamp(start);
    r.start_value = f(r.end);
    r.end_value = r.start_value;
    const double s = policy.step;
    for (int m = 0; m < policy.max_moves; ++m) {
        const Point options[4] = {{r.end.x + s, r.end.y}, {r.end.x, r.end.y + s},
                                  {r.end.x - s, r.end.y}, {r.end.x, r.end.y - s}};
        std::optional<Point> best;
        double best_value = r.end_value;
        for (const Point o : options) {
            const Point c = clamp(o);
            const double v = f(c);
            if (v > best_value) {
                best = c;
                best_value = v;
            }
        }
        if (!best) {
            break;
        }
        r.end = *best;
        r.end_value = best_value;
        ++r.moves;
    }
    return r;
}

Scenario reference_scenario()
{
    // Produced by tools/calibrate_toy; provenance in
    // tests/fixtures/toy/reference_scenario.json.
    Scenario s;
    s.landscape.seed = 2376;
    s.landscape.bandwidth = 8.0;
    s.init = {{73.0, 40.0}, {36.0, 70.0}, {74.0, 76.0}};
    return s;
}

TrialResult run_trial(const Landscape& land, std::span<const Point> init, double tau, std::uint64_t seed,
                      const TrialOptions& opt)
{
    if (init.empty()) {
        throw Error(Errc::parameter, "a trial needs at least one starting point");
    }
    if (opt.rounds_cap < 0 || opt.tune_workers < 1 || opt.moves.max_moves < 0 || !(opt.moves.step >= 0)) {
        throw Error(Errc::parameter, "invalid trial options");
    }
    control::ControllerConfig cc;
    cc.total_rounds = std::max(opt.rounds_cap, 1);
    cc.warmup_generate_rounds = 0;
    cc.forced_generate_every.reset();
    cc.majority_window = opt.majority_window;
    cc.tune_workers = opt.tune_workers;
    sampling::SamplingConfig sc;
    sc.stochastic = tau > 0;
    sc.tau = tau > 0 ? tau : 1.0;
    sc.lambda_penalty = opt.lambda_penalty;
    sc.top_k = opt.tune_workers;
    sampling::Rng rng(seed);

    TrialResult result;
    result.tau = tau;
    result.seed = seed;
    std::vector<control::HistoryEntry> history;
    std::map<CandidateId, Point> where;
    LineageId next_lineage = 1;
    const Point peak = land.argmax();
    auto add = [&](int round, Action action, LineageId lineage, const MoveResult& m) {
        control::HistoryEntry h;
        h.candidate_id = static_cast<CandidateId>(history.size() + 1);
        h.lineage_id = lineage;
        h.round_index = round;
        h.value = m.end_value;
        if (action != Action::baseline) {
            h.suggestion = m.moves > 0 ? Action::tune : Action::evolve;   // stuck: ask for recombination
        }
        history.push_back(h);
        where[h.candidate_id] = m.end;
        result.visits.push_back({round, action, lineage, m.end, m.end_value});
        return distance(m.end, peak) <= opt.tolerance;
    };

    bool found = false;
    for (const Point p : init) {
        const Point c = clamp(p);
        found = add(0, Action::baseline, next_lineage++, {c, land(c), land(c), 0}) || found;
    }
    if (found) {
        result.rounds_to_discovery = 0;
        return result;
    }
    const Field field = [&land](Point p) { return land(p); };
    for (int r = 1; r <= opt.rounds_cap; ++r) {
        const auto plan = control::select_next_action(r, history, Direction::maximize, std::nullopt, cc, sc, rng);
        const auto lineage_of = [&](CandidateId id) { return history[id - 1].lineage_id; };
        switch (plan.action) {
        case Action::tune:
        case Action::mutate:
            for (const auto parent : plan.parents) {
                found = add(r, plan.action, lineage_of(parent), scripted_round(field, where[parent], opt.moves)) ||
                        found;
            }
            break;
        case Action::evolve: {
            // the mover tries both parents and keeps the better endpoint
            const auto a = scripted_round(field, where[plan.parents[0]], opt.moves);
            const auto b = scripted_round(field, where[plan.parents[1]], opt.moves);
            found = add(r, Action::evolve, next_lineage++, b.end_value > a.end_value ? b : a) || found;
            break;
        }
        case Action::generate:
        case Action::baseline:
            break;   // no source of new ideas on this landscape
        }
        if (found) {
            result.rounds_to_discovery = r;
            break;
        }
    }
    return result;
}

std::vector<TrialResult> run_trials(const Landscape& land, std::span<const Point> init, std::span<const double> taus,
                                    int trials, std::uint64_t base_seed, const TrialOptions& opt, unsigned threads)
{
    if (trials < 0) {
        throw Error(Errc::parameter, "trial count must be non-negative");
    }
    const std::size_t jobs = taus.size() * static_cast<std::size_t>(trials);
    std::vector<TrialResult> out(jobs);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto work = [&] {
        // each worker owns its landscape copy
        const Landscape local = land;
        for (std::size_t j = next++; j < jobs; j = next++) {
            try {
                out[j] = run_trial(local, init, taus[j / trials], base_seed + j % trials, opt);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                failure = std::current_exception();
            }
        }
    };
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(jobs, 1)));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) {
        pool.emplace_back(work);
    }
    work();
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return out;
}

std::vector<TauSummary> summarize(std::span<const TrialResult> results, int window)
{
    std::vector<TauSummary> out;
    for (const auto& r : results) {
        auto it = std::find_if(out.begin(), out.end(), [&](const TauSummary& s) { return s.tau == r.tau; });
        if (it == out.end()) {
            out.push_back({});
            it = out.end() - 1;
            it->tau = r.tau;
            it->window = window;
        }
        ++it->trials;
        it->rounds.push_back(r.rounds_to_discovery);
        if (r.rounds_to_discovery) {
            ++it->discovered;
            it->within_window += *r.rounds_to_discovery <= window ? 1 : 0;
        }
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (auto& s : out) {
        std::vector<double> v;
        for (const auto& r : s.rounds) {
            v.push_back(r ? *r : inf);
        }
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        s.median = n == 0 ? inf : n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
    }
    return out;
}

std::string trials_csv(std::span<const TrialResult> results, int rounds_cap)
{
    std::string out = "tau,seed,rounds_to_discovery,censored\n";
    for (const auto& r : results) {
        out += num(r.tau) + "," + std::to_string(r.seed) + "," +
               std::to_string(r.rounds_to_discovery.value_or(rounds_cap)) + "," +
               (r.rounds_to_discovery ? "false" : "true") + "\n";
    }
    return out;
}

std::string summary_text(std::span<const TauSummary> summaries, int rounds_cap)
{
    std::ostringstream o;
    for (const auto& s : summaries) {
        o << "tau=" << num(s.tau) << (s.tau > 0 ? "" : " (deterministic)") << ": " << s.discovered << "/"
          << s.trials << " trials found the maximum within " << rounds_cap << " rounds, " << s.within_window << "/"
          << s.trials << " within " << s.window << "; median rounds ";
        if (std::isinf(s.median)) {
            o << "censored";
        } else {
            o << num(s.median);
        }
        o << "; rounds:";
        for (const auto& r : s.rounds) {
            o << " " << (r ? std::to_string(*r) : std::string("-"));
        }
        o << "\n";
    }
    return o.str();
}

} // namespace algosearch::toybench

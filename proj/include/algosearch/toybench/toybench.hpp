#pragma once

// Synthetic 2-D search benchmark: a Gaussian-KDE landscape on [0,100]^2,
// a greedy cardinal-move stand-in for the agent, and a multi-trial
// temperature ablation driven by the real round controller and sampler.

#include "algosearch/control/policy.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace algosearch::toybench {

inline constexpr double kExtent = 100.0;
inline constexpr double kPeak = 10.0;

struct Point {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point&) const = default;
};

double distance(Point a, Point b);

// Clamped into the domain.
Point clamp(Point p);

struct LandscapeParams {
    std::uint64_t seed = 0;
    int n_points = 100;
    double bandwidth = 8.0;
    double grid_step = 0.5;   // normalization and argmax grid

    bool operator==(const LandscapeParams&) const = default;
};

// Scaled so the maximum over the grid is exactly kPeak; argmax is the first
// grid maximum in row-major (y, then x) order.
class Landscape {
public:
    static Landscape build(const LandscapeParams& params);

    double operator()(Point p) const;
    void evaluate(std::span<const double> xs, std::span<const double> ys, std::span<double> out) const;

    const LandscapeParams& params() const { return params_; }
    Point argmax() const { return argmax_; }
    double scale() const { return scale_; }
    std::span<const double> centers_x() const { return cx_; }
    std::span<const double> centers_y() const { return cy_; }

    // "x,y,value" rows over the grid with spacing `step`.
    std::string grid_csv(double step) const;

private:
    LandscapeParams params_;
    std::vector<double> cx_;
    std::vector<double> cy_;
    double inv_two_h2_ = 0.0;
    double scale_ = 1.0;
    Point argmax_;
};

Landscape build_landscape(std::uint64_t seed, double bandwidth = 8.0);

using Field = std::function<double(Point)>;

struct MovePolicy {
    int max_moves = 4;
    double step = 2.0;
};

struct MoveResult {
    Point end;
    double start_value = 0.0;
    double end_value = 0.0;
    int moves = 0;
};

// Greedy: per move, evaluate the four cardinal steps (east, north, west,
// south; clamped), take the strictly best improving one, stop when none
// improves. Ties keep the earlier direction.
MoveResult scripted_round(const Field& f, Point start, const MovePolicy& policy = {});

// Calibrated landscape plus the three starting points; point 0 sits
// closest to the maximum in a low valley.
struct Scenario {
    LandscapeParams landscape;
    std::vector<Point> init;
    Point target_peak{57.0, 38.0};
};

Scenario reference_scenario();

struct TrialOptions {
    int rounds_cap = 30;
    int tune_workers = 2;
    double tolerance = 2.0;
    double lambda_penalty = 0.5;
    int majority_window = 3;
    MovePolicy moves;
};

struct Visit {
    int round_index = 0;
    Action action = Action::baseline;
    LineageId lineage_id = 0;
    Point point;
    double value = 0.0;
};

struct TrialResult {
    double tau = 0.0;
    std::uint64_t seed = 0;
    std::optional<int> rounds_to_discovery;   // empty: censored at rounds_cap
    std::vector<Visit> visits;
};

// tau <= 0 runs the sampler's deterministic mode.
TrialResult run_trial(const Landscape& land, std::span<const Point> init, double tau, std::uint64_t seed,
                      const TrialOptions& opt = {});

// Trial i of every tau uses seed base_seed + i. Trials run on up to
// `threads` threads (0: hardware concurrency); results are ordered by tau,
// then trial.
std::vector<TrialResult> run_trials(const Landscape& land, std::span<const Point> init, std::span<const double> taus,
                                    int trials, std::uint64_t base_seed, const TrialOptions& opt = {},
                                    unsigned threads = 0);

struct TauSummary {
    double tau = 0.0;
    int trials = 0;
    int discovered = 0;
    int within_window = 0;
    int window = 10;
    double median = 0.0;   // censored trials count as +inf
    std::vector<std::optional<int>> rounds;
};

std::vector<TauSummary> summarize(std::span<const TrialResult> results, int window = 10);

// Header: tau,seed,rounds_to_discovery,censored.
std::string trials_csv(std::span<const TrialResult> results, int rounds_cap);
std::string summary_text(std::span<const TauSummary> summaries, int rounds_cap);

} // namespace algosearch::toybench

// Searches landscape seeds and starting points for the reference toy
// scenario and writes the result, with its selection criteria, as JSON.
//
// Selection, in order:
//   landscape: bandwidth 8, grid argmax within 3 of (57, 38);
//   point 1:   5..14 from the maximum, the lowest value among the three,
//              greedy rounds from it reach the maximum within 4 rounds;
//   points 2-3: at least 30 from the maximum and 20 apart, higher values than
//              point 1, greedy rounds from them stall away from the maximum;
//   ablation:  over 20 seeds, median rounds-to-discovery and the 10-round
//              discovery rate at tau 5 beat tau 0.

#include "algosearch/toybench/toybench.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>

using namespace algosearch::toybench;

namespace {

constexpr double kTolerance = 2.0;

// Rounds of greedy moves until the maximum is reached or progress stops.
std::optional<int> rounds_to_peak(const Landscape& land, Point p, int max_rounds)
{
    const Field f = [&land](Point q) { return land(q); };
    for (int r = 1; r <= max_rounds; ++r) {
        const auto m = scripted_round(f, p, {});
        p = m.end;
        if (distance(p, land.argmax()) <= kTolerance) {
            return r;
        }
        if (m.moves == 0) {
            return std::nullopt;
        }
    }
    return std::nullopt;
}

Point ascent_end(const Landscape& land, Point p)
{
    const Field f = [&land](Point q) { return land(q); };
    for (int r = 0; r < 200; ++r) {
        const auto m = scripted_round(f, p, {});
        p = m.end;
        if (m.moves == 0) {
            break;
        }
    }
    return p;
}

std::optional<std::vector<Point>> pick_points(const Landscape& land)
{
    const Point peak = land.argmax();
    std::optional<Point> p1;
    double v1 = 1e300;
    for (int x = 0; x <= 100; ++x) {
        for (int y = 0; y <= 100; ++y) {
            const Point p{double(x), double(y)};
            const double d = distance(p, peak);
            if (d < 5 || d > 14) {
                continue;
            }
            const double v = land(p);
            if (v < v1 && rounds_to_peak(land, p, 4)) {
                p1 = p;
                v1 = v;
            }
        }
    }
    if (!p1) {
        return std::nullopt;
    }
    std::vector<Point> out{*p1};
    for (int k = 0; k < 2; ++k) {
        std::optional<Point> best;
        double bv = v1 + 1.0;
        for (int x = 0; x <= 100; x += 2) {
            for (int y = 0; y <= 100; y += 2) {
                const Point p{double(x), double(y)};
                if (distance(p, peak) < 30 || (k == 1 && distance(p, out[1]) < 20)) {
                    continue;
                }
                // starting points are not themselves at a local peak
                const double v = land(p);
                if (v <= bv || v > 7.5) {
                    continue;
                }
                const Point end = ascent_end(land, p);
                if (distance(end, peak) < 10 || (k == 1 && distance(end, ascent_end(land, out[1])) < 4)) {
                    continue;
                }
                best = p;
                bv = v;
            }
        }
        if (!best) {
            return std::nullopt;
        }
        out.push_back(*best);
    }
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Calibrate the reference toy landscape"};
    std::string out_path;
    std::uint64_t first_seed = 0;
    int max_seeds = 5000;
    app.add_option("--out", out_path, "fixture JSON to write")->required();
    app.add_option("--first-seed", first_seed);
    app.add_option("--max-seeds", max_seeds);
    CLI11_PARSE(app, argc, argv);

    const double taus[] = {5.0, 0.0};
    for (std::uint64_t seed = first_seed; seed < first_seed + static_cast<std::uint64_t>(max_seeds); ++seed) {
        const Landscape land = build_landscape(seed, 8.0);
        if (distance(land.argmax(), {57, 38}) > 3) {
            continue;
        }
        const auto init = pick_points(land);
        if (!init) {
            std::cerr << "seed " << seed << ": peak at (" << land.argmax().x << ", " << land.argmax().y
                      << ") but no starting points fit\n";
            continue;
        }
        const auto results = run_trials(land, *init, taus, 20, 1);
        const auto s = summarize(results, 10);
        std::cerr << "seed " << seed << ":\n" << summary_text(s, 30);
        if (!(s[0].median < s[1].median && s[0].within_window > s[1].within_window && s[0].within_window == 20)) {
            continue;
        }
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : *init) {
            pts.push_back({{"x", p.x}, {"y", p.y}, {"value", land(p)}});
        }
        const nlohmann::json doc = {
            {"description", "Calibrated toy landscape and starting points, found by seed search. The targets are a "
                            "maximum near (57, 38) and a lowest-valued starting point closest to it in a valley; "
                            "bandwidth and coordinates are calibration choices."},
            {"generator", "tools/calibrate_toy --out tests/fixtures/toy/reference_scenario.json"},
            {"criteria",
             {"landscape: 100 uniform centers, bandwidth 8, grid argmax within 3 of (57, 38)",
              "point 1: 5 to 14 from the maximum, lowest value of the three, greedy rounds reach the maximum "
              "within 4 rounds",
              "points 2 and 3: at least 30 from the maximum and 20 apart, higher value than point 1, greedy "
              "ascent stalls at least 10 from the maximum",
              "ablation over 20 seeds: tau 5 finds the maximum within 10 rounds in every trial and beats tau 0 "
              "on median and 10-round rate"}},
            {"landscape_seed", seed},
            {"bandwidth", 8.0},
            {"n_points", 100},
            {"argmax", {{"x", land.argmax().x}, {"y", land.argmax().y}}},
            {"init_points", pts},
            {"calibration_summary", summary_text(s, 30)}};
        std::ofstream(out_path) << doc.dump(2) << "\n";
        std::cout << doc.dump(2) << "\n";
        return 0;
    }
    std::cerr << "no seed satisfied the criteria\n";
    return 1;
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "algosearch/error.hpp"
#include "algosearch/store/types.hpp"
#include "algosearch/toybench/toybench.hpp"
#include "test_support.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <set>

using namespace algosearch;
using namespace algosearch::toybench;

namespace {

std::vector<double> grid(double step)
{
    std::vector<double> g;
    for (int i = 0; i * step <= kExtent + 1e-12; ++i) {
        g.push_back(i * step);
    }
    return g;
}

// Independent density: direct sum with libm exp, scaled by the grid maximum.
double oracle(const Landscape& l, Point p)
{
    const double h = l.params().bandwidth;
    double s = 0.0;
    for (std::size_t i = 0; i < l.centers_x().size(); ++i) {
        const double dx = p.x - l.centers_x()[i];
        const double dy = p.y - l.centers_y()[i];
        s += std::exp(-(dx * dx + dy * dy) / (2.0 * h * h));
    }
    return s;
}

Landscape reference_landscape()
{
    return Landscape::build(reference_scenario().landscape);
}

} // namespace

TEST_CASE("landscape is reproducible and normalized to a unique maximum of 10")
{
    const Landscape a = build_landscape(11);
    const Landscape b = build_landscape(11);
    const Landscape c = build_landscape(12);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, kExtent);
    int differ = 0;
    for (int i = 0; i < 100; ++i) {
        const Point p{u(rng), u(rng)};
        CHECK(a(p) == b(p));
        differ += a(p) != c(p) ? 1 : 0;
    }
    CHECK(differ == 100);

    const auto g = grid(0.5);
    double best = -1;
    int at_best = 0;
    for (const double y : g) {
        for (const double x : g) {
            const double v = a({x, y});
            CHECK(v >= 0.0);
            CHECK(v <= kPeak + 1e-9);
            if (v > best + 1e-12) {
                best = v;
                at_best = 1;
            } else if (std::abs(v - best) <= 1e-12) {
                ++at_best;
            }
        }
    }
    CHECK(best == doctest::Approx(kPeak).epsilon(1e-9));
    CHECK(at_best == 1);
    CHECK(a(a.argmax()) == doctest::Approx(kPeak).epsilon(1e-9));
}

TEST_CASE("landscape values match a direct kernel-density oracle")
{
    for (const std::uint64_t seed : {0ull, 3ull, 2376ull}) {
        const Landscape l = build_landscape(seed, 6.5);
        const double peak_raw = oracle(l, l.argmax());
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, kExtent);
        for (int i = 0; i < 200; ++i) {
            const Point p{u(rng), u(rng)};
            CHECK(l(p) == doctest::Approx(kPeak * oracle(l, p) / peak_raw).epsilon(1e-12));
        }
        CHECK(l.centers_x().size() == 100);
        for (std::size_t i = 0; i < 100; ++i) {
            CHECK(l.centers_x()[i] >= 0.0);
            CHECK(l.centers_x()[i] < kExtent);
            CHECK(l.centers_y()[i] >= 0.0);
            CHECK(l.centers_y()[i] < kExtent);
        }
    }
}

TEST_CASE("reference scenario matches its calibration fixture")
{
    const Scenario s = reference_scenario();
    const Landscape l = Landscape::build(s.landscape);
    const Json fx = Json::parse(testsupport::read_text(testsupport::fixture_dir() / "toy" / "reference_scenario.json"));
    CHECK(fx["landscape_seed"].get<std::uint64_t>() == s.landscape.seed);
    CHECK(fx["bandwidth"].get<double>() == s.landscape.bandwidth);
    CHECK(fx["n_points"].get<int>() == s.landscape.n_points);
    CHECK(fx["argmax"]["x"].get<double>() == l.argmax().x);
    CHECK(fx["argmax"]["y"].get<double>() == l.argmax().y);
    REQUIRE(fx["init_points"].size() == s.init.size());
    for (std::size_t i = 0; i < s.init.size(); ++i) {
        CHECK(fx["init_points"][i]["x"].get<double>() == s.init[i].x);
        CHECK(fx["init_points"][i]["y"].get<double>() == s.init[i].y);
        CHECK(fx["init_points"][i]["value"].get<double>() == doctest::Approx(l(s.init[i])).epsilon(1e-12));
    }

    CHECK(distance(l.argmax(), s.target_peak) <= 3.0);
    // point 0: closest to the maximum yet the lowest-valued start
    for (std::size_t i = 1; i < s.init.size(); ++i) {
        CHECK(distance(s.init[0], l.argmax()) < distance(s.init[i], l.argmax()));
        CHECK(l(s.init[0]) < l(s.init[i]));
    }
}

TEST_CASE("greedy move rule")
{
    const Field bowl = [](Point p) { return -std::hypot(p.x - 50.0, p.y - 50.0); };
    SUBCASE("a maximum is a fixed point")
    {
        const auto r = scripted_round(bowl, {50, 50});
        CHECK(r.end == Point{50, 50});
        CHECK(r.moves == 0);
        const Landscape l = reference_landscape();
        const Field f = [&l](Point p) { return l(p); };
        const auto at_peak = scripted_round(f, l.argmax());
        CHECK(at_peak.end == l.argmax());
        CHECK(at_peak.moves == 0);
    }
    SUBCASE("two units west of the maximum on a slope: one move east")
    {
        const Field slope = [](Point p) { return -std::abs(p.x - 50.0); };
        const auto r = scripted_round(slope, {48, 50});
        CHECK(r.end == Point{50, 50});
        CHECK(r.moves == 1);
        CHECK(r.end_value == 0.0);
    }
    SUBCASE("stops at the move budget and respects the domain")
    {
        const Field east = [](Point p) { return p.x; };
        auto r = scripted_round(east, {10, 10});
        CHECK(r.end == Point{18, 10});
        CHECK(r.moves == 4);
        r = scripted_round(east, {99, 10});
        CHECK(r.end == Point{100, 10});
        CHECK(r.moves == 1);
        CHECK(scripted_round(east, {10, 10}, {2, 2.0}).end == Point{14, 10});
    }
}

TEST_CASE("property: moves stay in bounds, axis-aligned and within budget")
{
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-5.0, kExtent + 5.0);
    for (int trial = 0; trial < 40; ++trial) {
        const Landscape l = build_landscape(rng() % 1000, 3.0 + (rng() % 10));
        const Field f = [&l](Point p) { return l(p); };
        for (int k = 0; k < 25; ++k) {
            const Point start{u(rng), u(rng)};
            // record every evaluated point to reconstruct the path
            std::vector<Point> seen;
            const Field spy = [&](Point p) {
                seen.push_back(p);
                return f(p);
            };
            const auto r = scripted_round(spy, start);
            const Point s0 = clamp(start);
            CHECK(std::abs(r.end.x - s0.x) + std::abs(r.end.y - s0.y) <= 8.0 + 1e-12);
            CHECK(r.moves <= 4);
            CHECK(r.end_value >= r.start_value);
            for (const Point p : seen) {
                CHECK(p.x >= 0.0);
                CHECK(p.x <= kExtent);
                CHECK(p.y >= 0.0);
                CHECK(p.y <= kExtent);
            }
            CHECK(seen.size() == 1 + 4 * static_cast<std::size_t>(std::min(r.moves + 1, 4)));
        }
    }
}

TEST_CASE("a start at the maximum is discovered at round 0 for any tau")
{
    const Landscape l = reference_landscape();
    const std::vector<Point> init{l.argmax()};
    for (const double tau : {0.0, 1.0, 5.0}) {
        const auto r = run_trial(l, init, tau, 3);
        REQUIRE(r.rounds_to_discovery.has_value());
        CHECK(*r.rounds_to_discovery == 0);
    }
}

TEST_CASE("trials are reproducible, bounded and follow lineage rules")
{
    const Scenario s = reference_scenario();
    const Landscape l = Landscape::build(s.landscape);
    const double taus[] = {5.0, 0.0};
    const auto one = run_trials(l, s.init, taus, 6, 100, {}, 1);
    const auto many = run_trials(l, s.init, taus, 6, 100, {}, 8);
    REQUIRE(one.size() == 12);
    for (std::size_t i = 0; i < one.size(); ++i) {
        CAPTURE(i);
        CHECK(one[i].tau == taus[i / 6]);
        CHECK(one[i].seed == 100 + i % 6);
        CHECK(one[i].rounds_to_discovery == many[i].rounds_to_discovery);
        REQUIRE(one[i].visits.size() == many[i].visits.size());
        std::set<LineageId> lineages;
        for (std::size_t v = 0; v < one[i].visits.size(); ++v) {
            const auto& a = one[i].visits[v];
            CHECK(a.point == many[i].visits[v].point);
            CHECK(a.point.x >= 0.0);
            CHECK(a.point.x <= kExtent);
            CHECK(a.point.y >= 0.0);
            CHECK(a.point.y <= kExtent);
            if (a.action == Action::tune || a.action == Action::mutate) {
                CHECK(lineages.count(a.lineage_id) == 1);
            } else {
                CHECK(lineages.count(a.lineage_id) == 0);   // baseline and evolve open lineages
            }
            lineages.insert(a.lineage_id);
        }
        if (one[i].rounds_to_discovery) {
            CHECK(one[i].visits.back().round_index == *one[i].rounds_to_discovery);
        }
    }
    // deterministic mode: every seed follows the same trajectory
    for (std::size_t i = 7; i < 12; ++i) {
        CHECK(one[i].rounds_to_discovery == one[6].rounds_to_discovery);
    }
}

TEST_CASE("higher temperature finds the valley-side maximum sooner")
{
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario s = reference_scenario();
    const Landscape l = Landscape::build(s.landscape);
    const double taus[] = {5.0, 0.0};
    const auto results = run_trials(l, s.init, taus, 20, 1);
    const auto sum = summarize(results, 10);
    REQUIRE(sum.size() == 2);
    MESSAGE(summary_text(sum, 30));
    CHECK(sum[0].median < sum[1].median);
    CHECK(sum[0].within_window > sum[1].within_window);
    CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(60));
}

TEST_CASE("summary and CSV output")
{
    std::vector<TrialResult> rs(4);
    rs[0] = {5.0, 1, 3, {}};
    rs[1] = {5.0, 2, 12, {}};
    rs[2] = {0.0, 1, std::nullopt, {}};
    rs[3] = {0.0, 2, 7, {}};
    const auto s = summarize(rs, 10);
    REQUIRE(s.size() == 2);
    CHECK(s[0].median == 7.5);
    CHECK(s[0].within_window == 1);
    CHECK(s[0].discovered == 2);
    CHECK(std::isinf(s[1].median));
    CHECK(s[1].discovered == 1);
    CHECK(trials_csv(rs, 30) == "tau,seed,rounds_to_discovery,censored\n5,1,3,false\n5,2,12,false\n"
                                "0,1,30,true\n0,2,7,false\n");
    const auto text = summary_text(s, 30);
    CHECK(text.find("tau=5: 2/2 trials found the maximum within 30 rounds, 1/2 within 10; median rounds 7.5") !=
          std::string::npos);
    CHECK(text.find("tau=0 (deterministic): 1/2") != std::string::npos);
    CHECK(text.find("rounds: - 7") != std::string::npos);

    const Landscape l = build_landscape(1);
    const auto csv = l.grid_csv(25.0);
    CHECK(csv.rfind("x,y,value\n0,0,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 26);
}

TEST_CASE("invalid parameters are rejected")
{
    LandscapeParams p;
    p.bandwidth = 0;
    CHECK_THROWS_AS(Landscape::build(p), Error);
    const Landscape l = build_landscape(1);
    CHECK_THROWS_AS(run_trial(l, {}, 5.0, 1), Error);
    TrialOptions o;
    o.tune_workers = 0;
    const std::vector<Point> init{{1, 1}};
    CHECK_THROWS_AS(run_trial(l, init, 5.0, 1, o), Error);
}

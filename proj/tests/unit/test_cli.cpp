#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "algosearch/cli/commands.hpp"
#include "algosearch/cli/config.hpp"
#include "algosearch/render/image.hpp"
#include "test_support.hpp"

#include <cmath>
#include <limits>
#include <sstream>

using namespace algosearch;
using testsupport::TempDir;
using testsupport::read_text;
using testsupport::write_text;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "algosearch");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    Outcome o;
    o.code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    o.out = out.str();
    o.err = err.str();
    return o;
}

fs::path demo() { return testsupport::fixture_dir() / "demo"; }

// Demo config with paths relative to the config file's directory.
fs::path write_demo_config(const TempDir& tmp, const std::string& extra_session = "",
                           const std::string& transcripts = "transcripts_noexec")
{
    fs::create_directories(tmp / "cfg");
    const fs::path d = fs::relative(demo(), tmp / "cfg");
    write_text(tmp / "cfg" / "demo.ini",
               "[session]\nworkspace_dir = ../ws\n"
               "task_prompt = " + (d / "task.md").string() + "\n"
               "data_dir = " + (d / "data").string() + "\n" + extra_session +
               "[controller]\ntotal_rounds = 5\nwarmup_generate_rounds = 2\nforced_generate_every = 3\n"
               "tune_workers = 1\n"
               "[sampling]\nseed = 7\n"
               "[agent]\nweb_search_offline = true\n"
               "[provider]\nkind = scripted\ntranscripts_dir = " + (d / transcripts).string() + "\n");
    return tmp / "cfg" / "demo.ini";
}

std::size_t lines(const std::string& s)
{
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

} // namespace

TEST_CASE("init, run, report and resume on the demo config")
{
    TempDir tmp("cli");
    const fs::path cfg = write_demo_config(tmp);

    auto o = invoke({"init", cfg.string()});
    CHECK(o.code == cli::kExitOk);
    CHECK(o.out.find("initialized workspace") != std::string::npos);
    CHECK(fs::exists(tmp / "ws" / "state.db"));
    CHECK(fs::exists(tmp / "ws" / "sandbox" / "data" / "target.json"));
    CHECK(fs::exists(tmp / "ws" / "session.ini"));

    o = invoke({"init", cfg.string()});
    CHECK(o.code == cli::kExitOk);
    CHECK(o.out.find("already initialized") != std::string::npos);

    o = invoke({"run", cfg.string()});
    CHECK(o.code == cli::kExitOk);
    CHECK(o.out.find("session: finished") != std::string::npos);
    CHECK(o.err.find("round 5 finished") != std::string::npos);

    o = invoke({"report", (tmp / "ws").string()});
    CHECK(o.code == cli::kExitOk);
    CHECK(lines(o.out) == 7);
    CHECK(o.out == read_text(tmp / "ws" / "reports" / "history.csv"));

    o = invoke({"report", (tmp / "ws").string(), "--format", "json", "--out", (tmp / "elsewhere").string()});
    CHECK(o.code == cli::kExitOk);
    CHECK(Json::parse(o.out)["rounds"].size() == 6);
    CHECK(fs::exists(tmp / "elsewhere" / "report.txt"));

    // finished session: prints the report, runs nothing
    o = invoke({"resume", (tmp / "ws").string()});
    CHECK(o.code == cli::kExitOk);
    CHECK(o.err.find("started") == std::string::npos);
    CHECK(o.out.find("best candidate: #5 (0.45)") != std::string::npos);
}

TEST_CASE("the workspace copy of the config resumes from another directory")
{
    TempDir tmp("cli");
    const fs::path cfg = write_demo_config(tmp);
    REQUIRE(invoke({"init", cfg.string(), "--workspace", (tmp / "other").string()}).code == 0);
    const auto copy = cli::load_config(tmp / "other" / "session.ini");
    CHECK(copy.workspace_dir == fs::weakly_canonical(tmp / "other"));
    CHECK(copy.task_prompt_path == fs::canonical(demo() / "task.md"));
    const auto o = invoke({"resume", (tmp / "other").string()});
    CHECK(o.code == cli::kExitOk);
    CHECK(o.out.find("round 5 generate completed") != std::string::npos);
}

TEST_CASE("validation failures exit with the invalid-input code")
{
    TempDir tmp("cli");
    fs::create_directories(tmp / "ws" / "hold");
    write_text(tmp / "ws" / "hold" / "x.json", "{}");
    write_text(tmp / "hp.md", "evaluate");
    const fs::path cfg = write_demo_config(tmp, "holdout_dir = ../ws/hold\nholdout_prompt = ../hp.md\n");
    auto o = invoke({"init", cfg.string()});
    CHECK(o.code == cli::kExitInvalid);
    CHECK(o.err.find("holdout") != std::string::npos);
    CHECK_FALSE(fs::exists(tmp / "ws" / "state.db"));

    write_text(tmp / "typo.ini", "[controller]\ntotal_round = 3\n");
    o = invoke({"run", (tmp / "typo.ini").string()});
    CHECK(o.code == cli::kExitInvalid);
    CHECK(o.err.find("controller.total_round") != std::string::npos);

    CHECK(invoke({"init", (tmp / "missing.ini").string()}).code == cli::kExitInvalid);
    CHECK(invoke({"resume", (tmp / "nowhere").string()}).code == cli::kExitInvalid);
    CHECK(invoke({"report", (tmp / "nowhere").string()}).code == cli::kExitInvalid);
    CHECK(invoke({}).code == cli::kExitInvalid);
    CHECK(invoke({"toy", "--tau", "-1"}).code == cli::kExitInvalid);
    CHECK(invoke({"report", (tmp / "ws").string(), "--format", "xml"}).code == cli::kExitInvalid);
    CHECK(invoke({"--help"}).code == cli::kExitOk);
}

TEST_CASE("an aborted session exits with the abort code and keeps its reason")
{
    TempDir tmp("cli");
    fs::create_directories(tmp / "t");
    write_text(tmp / "t" / "preparation.json", R"([{"final": "I will not define a metric."}])");
    const fs::path cfg = write_demo_config(tmp);
    std::string text = read_text(cfg);
    text.replace(text.find("transcripts_dir = "), std::string::npos, "transcripts_dir = ../t\n");
    write_text(cfg, text);
    const auto o = invoke({"run", cfg.string()});
    CHECK(o.code == cli::kExitAbort);
    CHECK(o.err.find("without a primary metric") != std::string::npos);
    const auto r = invoke({"report", (tmp / "ws").string(), "--format", "text"});
    CHECK(r.code == cli::kExitOk);
    CHECK(r.out.find("session: aborted") != std::string::npos);
    CHECK(r.err.find("no recorded rounds") != std::string::npos);
}

TEST_CASE("toy subcommand writes the per-trial CSV and a summary")
{
    TempDir tmp("cli");
    auto o = invoke({"toy", "--tau", "5", "--tau", "0", "--trials", "4", "--rounds", "12"});
    CHECK(o.code == cli::kExitOk);
    CHECK(o.out.rfind("tau,seed,rounds_to_discovery,censored\n", 0) == 0);
    CHECK(lines(o.out) == 9);
    CHECK(o.err.find("tau=5: ") != std::string::npos);

    o = invoke({"toy", "--trials", "3", "--csv", (tmp / "t.csv").string(), "--grid-csv", (tmp / "g.csv").string()});
    CHECK(o.code == cli::kExitOk);
    CHECK(lines(read_text(tmp / "t.csv")) == 7);
    CHECK(lines(read_text(tmp / "g.csv")) == 1 + 101 * 101);
    CHECK(o.out.find("tau=0 (deterministic): ") != std::string::npos);
}

TEST_CASE("render subcommand")
{
    TempDir tmp("cli");
    fs::copy_file(testsupport::fixture_dir() / "images" / "hedm_like.tif", tmp / "img.tif");
    auto o = invoke({"render", (tmp / "img.tif").string(), "--plow", "1", "--phigh", "99", "--log"});
    CHECK(o.code == cli::kExitOk);
    REQUIRE(fs::exists(tmp / "img.png"));
    const auto png = render::read_png(tmp / "img.png");
    CHECK(png.image.width > 0);

    render::ImageBuffer nan;
    nan.width = 4;
    nan.height = 3;
    nan.pixels.assign(12, std::numeric_limits<double>::quiet_NaN());
    render::write_raw(tmp / "nan.raw", nan);
    o = invoke({"render", (tmp / "nan.raw").string(), "-o", (tmp / "nan.png").string()});
    CHECK(o.code == cli::kExitAbort);
    CHECK_FALSE(fs::exists(tmp / "nan.png"));

    CHECK(invoke({"render", (tmp / "img.tif").string(), "--plow", "80", "--phigh", "20"}).code == cli::kExitInvalid);
}

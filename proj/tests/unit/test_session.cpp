#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "algosearch/agent/scripted_provider.hpp"
#include "algosearch/cli/config.hpp"
#include "algosearch/control/report.hpp"
#include "algosearch/control/session.hpp"
#include "algosearch/error.hpp"
#include "test_support.hpp"

#include <csignal>
#include <cstdlib>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace algosearch;
using namespace algosearch::control;
using testsupport::TempDir;
using testsupport::read_text;
using testsupport::write_text;
namespace fs = std::filesystem;

namespace {

fs::path demo() { return testsupport::fixture_dir() / "demo"; }

bool have_uv()
{
    static const bool ok = std::system("uv --version > /dev/null 2>&1") == 0;
    return ok;
}

SessionConfig demo_config(const fs::path& ws, const fs::path& transcripts)
{
    SessionConfig c;
    c.workspace_dir = ws;
    c.task_prompt_path = demo() / "task.md";
    c.data_dir = demo() / "data";
    c.controller.total_rounds = 5;
    c.controller.warmup_generate_rounds = 2;
    c.controller.forced_generate_every = 3;
    c.controller.tune_workers = 1;
    c.controller.generate_workers = 1;
    c.sampling.rng_seed = 7;
    c.agent.web_search_offline = true;
    c.agent.exec_timeout_seconds = 60;
    c.provider.kind = ProviderKind::scripted;
    c.provider.transcripts_dir = transcripts;
    return c;
}

// Copy of the no-exec demo transcripts that a test may edit.
fs::path editable_transcripts(const TempDir& tmp)
{
    const fs::path dir = tmp / "transcripts";
    fs::copy(demo() / "transcripts_noexec", dir, fs::copy_options::recursive);
    return dir;
}

Store open(const SessionConfig& c)
{
    return Store::open_or_create(db_path_of(c), WorkspaceLayout{c.workspace_dir}.sandbox());
}

std::size_t content_hash(const fs::path& p)
{
    return std::hash<std::string>{}(read_text(p));
}

std::map<std::string, std::size_t> hash_tree(const fs::path& dir)
{
    std::map<std::string, std::size_t> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) {
            out[fs::relative(e.path(), dir).string()] = content_hash(e.path());
        }
    }
    return out;
}

std::vector<std::string> csv_rows(const fs::path& ws)
{
    std::istringstream in(read_text(ws / "reports" / "history.csv"));
    std::vector<std::string> rows;
    for (std::string line; std::getline(in, line);) {
        rows.push_back(line);
    }
    return rows;
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

// Lineage rules over the whole store.
void check_lineage_dag(const Store& store)
{
    std::map<CandidateId, CandidateRecord> seen;
    std::set<LineageId> lineages;
    for (const auto& c : store.candidates()) {
        CAPTURE(c.candidate_id);
        for (const auto p : c.parent_ids) {
            REQUIRE(seen.count(p) == 1);   // parents precede children
        }
        switch (c.action) {
        case Action::baseline:
        case Action::generate:
            CHECK(c.parent_ids.empty());
            CHECK(lineages.count(c.lineage_id) == 0);
            break;
        case Action::evolve:
            CHECK(c.parent_ids.size() == 2);
            CHECK(lineages.count(c.lineage_id) == 0);
            break;
        case Action::tune:
        case Action::mutate:
            REQUIRE(c.parent_ids.size() == 1);
            CHECK(c.lineage_id == seen[c.parent_ids[0]].lineage_id);
            break;
        }
        lineages.insert(c.lineage_id);
        seen[c.candidate_id] = c;
    }
}

void check_demo_store(const Store& store)
{
    const auto rounds = store.rounds();
    REQUIRE(rounds.size() == 6);
    const std::vector<Action> actions{Action::baseline, Action::generate, Action::generate,
                                      Action::tune,     Action::evolve,   Action::generate};
    const std::vector<double> values{1.0, 0.8, 0.6, 0.5, 0.45, 0.55};
    for (std::size_t i = 0; i < rounds.size(); ++i) {
        CAPTURE(i);
        CHECK(rounds[i].action == actions[i]);
        CHECK(rounds[i].status == RoundStatus::completed);
        REQUIRE(rounds[i].winning_candidate_id.has_value());
        const auto v = store.primary_value(*rounds[i].winning_candidate_id);
        REQUIRE(v.has_value());
        CHECK(*v == doctest::Approx(values[i]).epsilon(1e-12));
    }
    CHECK(store.candidate_count() == 6);
    check_lineage_dag(store);
}

void check_demo_report(const fs::path& ws)
{
    const auto rows = csv_rows(ws);
    REQUIRE(rows.size() == 7);
    CHECK(rows[0] == "round,action,status,primary_metric,best_so_far,holdout_metric");
    CHECK(rows[1].rfind("0,baseline,completed,1.0,1.0,", 0) == 0);
    double prev = 1e300;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double best = std::stod(split(rows[i], ',')[4]);
        CHECK(best <= prev);
        prev = best;
    }
    CHECK(prev == doctest::Approx(0.45));
}

// Every transcript starts with [system, task] and its task names only its own round.
void check_fresh_contexts(const fs::path& ws)
{
    int files = 0;
    for (const auto& e : fs::directory_iterator(ws / "transcripts")) {
        const Json t = Json::parse(read_text(e.path()));
        const auto& m = t["messages"];
        REQUIRE(m.size() >= 2);
        CHECK(m[0]["role"] == "system");
        CHECK(m[1]["role"] == "user");
        const std::string label = t["run"];
        if (label.rfind("round_", 0) == 0) {
            const int round = std::stoi(label.substr(6, 3));
            const std::string all = m.dump();
            CHECK(all.find("Round " + std::to_string(round) + " (") != std::string::npos);
            for (int other = 0; other <= 5; ++other) {
                if (other != round) {
                    CHECK(all.find("Round " + std::to_string(other) + " (") == std::string::npos);
                }
            }
        }
        ++files;
    }
    CHECK(files == 7);
}

struct ThrowingProvider final : agent::Provider {
    agent::ProviderTurn next_turn(const std::vector<agent::Message>&, const std::vector<agent::ToolSchema>&) override
    {
        throw agent::ProviderError("401 unauthorized", false);
    }
};

Errc code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return Errc::io;
}

} // namespace

TEST_CASE("demo session without exec: six rounds, lineage DAG, monotone report")
{
    TempDir tmp("session");
    const auto cfg = demo_config(tmp / "ws", demo() / "transcripts_noexec");
    CHECK(init_workspace(cfg));
    CHECK_FALSE(init_workspace(cfg));   // idempotent
    const auto res = run_session(cfg);
    CHECK(res.status == SessionStatus::finished);
    CHECK(res.rounds_run == 6);
    const Store store = open(cfg);
    check_demo_store(store);
    CHECK(store.session_state().phase == Phase::finished);
    CHECK(store.primary_metric()->name == "rmse");
    CHECK(store.session_state().preparation_summary.find("rmse") != std::string::npos);
    check_demo_report(cfg.workspace_dir);
    check_fresh_contexts(cfg.workspace_dir);

    const Json report = Json::parse(read_text(cfg.workspace_dir / "reports" / "report.json"));
    CHECK(report["status"] == "finished");
    CHECK(report["best_value"].get<double>() == doctest::Approx(0.45));

    // resuming a finished session runs nothing
    const auto again = run_session(cfg);
    CHECK(again.rounds_run == 0);
    CHECK(again.status == SessionStatus::finished);
    CHECK(open(cfg).rounds().size() == 6);
}

TEST_CASE("demo session is reproducible for a fixed seed")
{
    TempDir a("session");
    TempDir b("session");
    const auto ca = demo_config(a / "ws", demo() / "transcripts_noexec");
    const auto cb = demo_config(b / "ws", demo() / "transcripts_noexec");
    init_workspace(ca);
    init_workspace(cb);
    run_session(ca);
    run_session(cb);
    CHECK(open(ca).candidates() == open(cb).candidates());
}

TEST_CASE("demo session with exec and holdout: isolation after every round")
{
    if (!have_uv()) {
        MESSAGE("uv not available; exec-dependent session skipped");
        return;
    }
    TempDir tmp("session");
    auto cfg = demo_config(tmp / "ws", demo() / "transcripts_exec");
    cfg.holdout_dir = demo() / "holdout_data";
    cfg.holdout_prompt_path = demo() / "holdout_prompt.md";
    REQUIRE(init_workspace(cfg));

    const fs::path ws = cfg.workspace_dir;
    std::set<std::size_t> holdout_hashes;
    for (const auto& e : fs::recursive_directory_iterator(*cfg.holdout_dir)) {
        if (e.is_regular_file()) {
            holdout_hashes.insert(content_hash(e.path()));
        }
    }
    std::map<std::string, std::size_t> before;
    int scans = 0;
    SessionHooks hooks;
    hooks.workers_joined = [&](int) { before = hash_tree(ws / "sandbox" / "candidates"); };
    hooks.round_finished = [&](int round) {
        CAPTURE(round);
        for (const auto& e : fs::recursive_directory_iterator(ws)) {
            if (e.is_regular_file() && e.path().parent_path().filename() != "holdout_logs") {
                CHECK(holdout_hashes.count(content_hash(e.path())) == 0);
            }
            CHECK(e.path().filename().string().rfind("_holdout_tmp_", 0) != 0);
        }
        CHECK(hash_tree(ws / "sandbox" / "candidates") == before);
        ++scans;
    };
    const auto res = run_session(cfg, {}, hooks);
    CHECK(res.status == SessionStatus::finished);
    CHECK(scans == 6);
    const Store store = open(cfg);
    check_demo_store(store);
    check_demo_report(ws);

    // holdout target 3.1: |ESTIMATE - 3.1| for every candidate
    const std::vector<double> estimates{2.0, 2.2, 2.4, 2.5, 2.55, 2.45};
    const auto hm = store.holdout_metrics();
    REQUIRE(hm.size() == 6);
    for (std::size_t i = 0; i < hm.size(); ++i) {
        REQUIRE(hm[i].value.has_value());
        CHECK(*hm[i].value == doctest::Approx(3.1 - estimates[i]).epsilon(1e-9));
    }
    const auto rows = csv_rows(ws);
    CHECK(split(rows[1], ',')[5] == "1.1");

    // blindness: development transcripts never contain holdout file contents
    const std::string holdout_text = read_text(*cfg.holdout_dir / "target.json");
    for (const auto& e : fs::directory_iterator(ws / "transcripts")) {
        CHECK(read_text(e.path()).find("3.1}") == std::string::npos);
        CHECK(read_text(e.path()).find(holdout_text) == std::string::npos);
    }
    CHECK(fs::exists(ws / "holdout_logs" / "candidate_1.json"));
}

TEST_CASE("kill during round 4, then resume")
{
    TempDir tmp("session");
    const auto cfg = demo_config(tmp / "ws", demo() / "transcripts_noexec");
    REQUIRE(init_workspace(cfg));

    const pid_t pid = fork();
    REQUIRE(pid >= 0);
    if (pid == 0) {
        SessionHooks hooks;
        hooks.workers_joined = [](int round) {
            if (round == 4) {
                std::raise(SIGKILL);
            }
        };
        try {
            run_session(cfg, {}, hooks);
        } catch (...) {
        }
        _exit(0);
    }
    int status = 0;
    REQUIRE(waitpid(pid, &status, 0) == pid);
    REQUIRE(WIFSIGNALED(status));
    CHECK(WTERMSIG(status) == SIGKILL);

    std::vector<CandidateRecord> prior;
    std::map<std::string, std::string> files;
    {
        const Store store = open(cfg);
        CHECK(store.round(4)->status == RoundStatus::running);
        for (const auto& c : store.candidates()) {
            if (c.round_index < 4) {
                prior.push_back(c);
                for (const auto& e : fs::recursive_directory_iterator(cfg.workspace_dir / "sandbox" / c.candidate_root)) {
                    if (e.is_regular_file()) {
                        files[e.path().string()] = read_text(e.path());
                    }
                }
            }
        }
    }
    REQUIRE(prior.size() == 4);

    const auto res = run_session(cfg);
    CHECK(res.interrupted_rounds == std::vector<int>{4});
    CHECK(res.status == SessionStatus::finished);
    CHECK(res.rounds_run == 1);
    const Store store = open(cfg);
    CHECK(store.round(4)->status == RoundStatus::failed);
    CHECK(store.round(5)->status == RoundStatus::completed);
    CHECK(store.round(5)->action == Action::generate);
    for (const auto& c : prior) {
        CHECK(store.candidate(c.candidate_id) == c);
    }
    for (const auto& [path, bytes] : files) {
        CHECK(read_text(path) == bytes);
    }
    bool logged = false;
    for (const auto& f : store.failures()) {
        logged = logged || (f.round_index == 4 && f.error_message.find("interrupted") != std::string::npos);
    }
    CHECK(logged);
    const auto rows = csv_rows(cfg.workspace_dir);
    REQUIRE(rows.size() == 7);
    CHECK(rows[5] == "4,evolve,failed,,0.5,");
    check_lineage_dag(store);
}

TEST_CASE("a round without a submission fails and the session continues")
{
    TempDir tmp("session");
    const fs::path dir = editable_transcripts(tmp);
    write_text(dir / "round_2.json", R"([{"final": "I could not produce a candidate."}])");
    const auto cfg = demo_config(tmp / "ws", dir);
    init_workspace(cfg);
    const auto res = run_session(cfg);
    CHECK(res.status == SessionStatus::finished);
    const Store store = open(cfg);
    CHECK(store.round(2)->status == RoundStatus::failed);
    REQUIRE(store.failures().size() == 1);
    CHECK(store.failures()[0].error_message.find("without submitting") != std::string::npos);
    CHECK(store.failures()[0].failing_code_path == "candidates/round_002_w0");
    CHECK(csv_rows(cfg.workspace_dir)[3] == "2,generate,failed,,0.8,");
    CHECK(store.rounds().size() == 6);
}

TEST_CASE("early stop after ten rounds without improvement")
{
    TempDir tmp("session");
    const fs::path dir = editable_transcripts(tmp);
    fs::remove(dir / "round_5.json");
    // every later round submits 0.6, never beating round 4's 0.45
    write_text(dir / "round.json", R"([
      {"tool_calls": [{"id": "w", "name": "write_file", "arguments": {"path": "{{candidate_root}}/algo.py", "content": "ESTIMATE = 2.4\n"}}]},
      {"tool_calls": [{"id": "s", "name": "submit_candidate", "arguments": {"description": "plateau", "artifact_path": "algo.py", "metrics": {"rmse": 0.6}}}]}
    ])");
    auto cfg = demo_config(tmp / "ws", dir);
    cfg.controller.total_rounds = 30;
    cfg.controller.early_stop_patience = 10;
    init_workspace(cfg);
    const auto res = run_session(cfg);
    CHECK(res.status == SessionStatus::early_stopped);
    CHECK(res.stop_reason.find("round 4") != std::string::npos);
    const Store store = open(cfg);
    CHECK(store.rounds().back().round_index == 14);
    CHECK(store.session_state().stop_reason == res.stop_reason);
    CHECK(Json::parse(read_text(cfg.workspace_dir / "reports" / "report.json"))["status"] == "early_stopped");
}

TEST_CASE("total_rounds = 0 runs preparation and baseline only")
{
    TempDir tmp("session");
    auto cfg = demo_config(tmp / "ws", demo() / "transcripts_noexec");
    cfg.controller.total_rounds = 0;
    cfg.controller.warmup_generate_rounds = 0;
    init_workspace(cfg);
    const auto res = run_session(cfg);
    CHECK(res.status == SessionStatus::finished);
    const Store store = open(cfg);
    REQUIRE(store.rounds().size() == 1);
    CHECK(store.rounds()[0].action == Action::baseline);
}

TEST_CASE("provider failure aborts with a persisted reason; resume continues")
{
    TempDir tmp("session");
    const auto cfg = demo_config(tmp / "ws", demo() / "transcripts_noexec");
    init_workspace(cfg);
    const auto scripted = default_provider_factory(cfg.provider);
    const ProviderFactory failing_at_2 = [&](const AgentSlot& slot) -> std::unique_ptr<agent::Provider> {
        if (slot.kind == AgentSlot::Kind::round && slot.round_index == 2) {
            return std::make_unique<ThrowingProvider>();
        }
        return scripted(slot);
    };
    const auto res = run_session(cfg, failing_at_2);
    CHECK(res.status == SessionStatus::aborted);
    CHECK(res.stop_reason.find("401") != std::string::npos);
    {
        const Store store = open(cfg);
        CHECK(store.session_state().run_status == RunStatus::stopped);
        CHECK(store.session_state().stop_reason == res.stop_reason);
        CHECK(store.round(2)->status == RoundStatus::failed);
        CHECK_FALSE(store.round(3).has_value());
    }
    CHECK(Json::parse(read_text(cfg.workspace_dir / "reports" / "report.json"))["status"] == "aborted");

    const auto resumed = run_session(cfg);
    CHECK(resumed.status == SessionStatus::finished);
    CHECK(resumed.rounds_run == 3);
    const Store store = open(cfg);
    CHECK(store.session_state().run_status == RunStatus::active);
    CHECK(store.rounds().size() == 6);
}

TEST_CASE("parallel workers get disjoint directories and distinct parents")
{
    TempDir tmp("session");
    const fs::path dir = tmp / "transcripts";
    fs::create_directories(dir);
    fs::copy_file(demo() / "transcripts_noexec" / "preparation.json", dir / "preparation.json");
    fs::copy_file(demo() / "transcripts_noexec" / "round_0.json", dir / "round_0.json");
    // generic worker: value depends on round and worker through the file it writes
    write_text(dir / "round.json", R"([
      {"tool_calls": [{"id": "w", "name": "write_file", "arguments": {"path": "{{candidate_root}}/algo.py", "content": "W = {{worker}}\n"}},
                      {"id": "x", "name": "write_file", "arguments": {"path": "candidates/round_001_w0/intrude.py", "content": "x"}}]},
      {"tool_calls": [{"id": "s", "name": "submit_candidate", "arguments": {"description": "worker {{worker}} of round {{round}}", "artifact_path": "algo.py", "metrics": {"rmse": 0.5}}}]}
    ])");
    auto cfg = demo_config(tmp / "ws", dir);
    cfg.controller.total_rounds = 4;
    cfg.controller.generate_workers = 2;
    cfg.controller.tune_workers = 2;
    cfg.controller.forced_generate_every.reset();
    init_workspace(cfg);
    CHECK(run_session(cfg).status == SessionStatus::finished);
    const Store store = open(cfg);
    std::map<int, std::vector<CandidateRecord>> by_round;
    for (const auto& c : store.candidates()) {
        by_round[c.round_index].push_back(c);
    }
    CHECK(by_round[1].size() == 2);
    CHECK(by_round[2].size() == 2);
    for (const auto& [round, cands] : by_round) {
        std::set<std::string> roots;
        std::set<CandidateId> parents;
        for (const auto& c : cands) {
            roots.insert(c.candidate_root);
            for (const auto p : c.parent_ids) {
                parents.insert(p);
            }
            if (c.action == Action::tune) {
                CHECK(c.parent_ids.size() == 1);
            }
        }
        CHECK(roots.size() == cands.size());
        if (cands[0].action == Action::tune) {
            CHECK(parents.size() == cands.size());
        }
    }
    // only round 1 worker 0 itself could write into its directory
    CHECK(read_text(cfg.workspace_dir / "sandbox" / "candidates" / "round_001_w0" / "intrude.py") == "x");
    CHECK_FALSE(fs::exists(cfg.workspace_dir / "sandbox" / "candidates" / "round_002_w0" / "intrude.py"));
    check_lineage_dag(store);
}

TEST_CASE("configuration validation")
{
    TempDir tmp("session");
    auto base = demo_config(tmp / "ws", demo() / "transcripts_noexec");
    validate(base);

    auto c = base;
    c.holdout_dir = tmp / "ws" / "holdout";
    c.holdout_prompt_path = demo() / "holdout_prompt.md";
    fs::create_directories(*c.holdout_dir);
    CHECK(code_of([&] { validate(c); }) == Errc::validation);

    c = base;
    c.holdout_dir = demo() / "holdout_data";
    CHECK(code_of([&] { validate(c); }) == Errc::validation);   // prompt missing

    c = base;
    c.workspace_dir = tmp / "ws2";
    c.task_prompt_path = tmp / "nope.md";
    CHECK(code_of([&] { init_workspace(c); }) == Errc::validation);
    CHECK_FALSE(fs::exists(tmp / "ws2"));

    c = base;
    c.controller.warmup_generate_rounds = 9;
    CHECK(code_of([&] { validate(c); }) == Errc::validation);
}

TEST_CASE("malformed transcripts fail before any round starts")
{
    TempDir tmp("session");
    const fs::path dir = editable_transcripts(tmp);
    write_text(dir / "round_3.json", R"([{"tool_calls": [], "mood": "sunny"}])");
    const auto cfg = demo_config(tmp / "ws", dir);
    init_workspace(cfg);
    CHECK(code_of([&] { run_session(cfg); }) == Errc::load);
    CHECK(open(cfg).rounds().empty());
}

TEST_CASE("scripted transcript lookup order")
{
    TempDir tmp("session");
    write_text(tmp / "round.json", "[]");
    write_text(tmp / "round_3.json", "[]");
    write_text(tmp / "round_3_w1.json", "[]");
    write_text(tmp / "holdout.json", "[]");
    AgentSlot s;
    s.round_index = 3;
    s.worker = 1;
    CHECK(scripted_transcript_for(tmp.path(), s) == tmp / "round_3_w1.json");
    s.worker = 0;
    CHECK(scripted_transcript_for(tmp.path(), s) == tmp / "round_3.json");
    s.round_index = 4;
    CHECK(scripted_transcript_for(tmp.path(), s) == tmp / "round.json");
    s.kind = AgentSlot::Kind::preparation;
    CHECK_FALSE(scripted_transcript_for(tmp.path(), s).has_value());
    s.kind = AgentSlot::Kind::holdout;
    s.candidate_id = 9;
    CHECK(scripted_transcript_for(tmp.path(), s) == tmp / "holdout.json");
}

TEST_CASE("leftover holdout directories are purged")
{
    TempDir tmp("session");
    write_text(tmp / "candidates" / "round_001_w0" / "_holdout_tmp_3" / "holdout_data" / "x.json", "{}");
    write_text(tmp / "candidates" / "round_001_w0" / "algo.py", "A = 1\n");
    CHECK(purge_holdout_leftovers(tmp.path()) == 1);
    CHECK_FALSE(fs::exists(tmp / "candidates" / "round_001_w0" / "_holdout_tmp_3"));
    CHECK(fs::exists(tmp / "candidates" / "round_001_w0" / "algo.py"));
}

TEST_CASE("property: configuration round-trips through the file format")
{
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 300; ++trial) {
        SessionConfig c;
        c.workspace_dir = "/tmp/ws" + std::to_string(rng() % 100);
        c.task_prompt_path = "/tmp/task " + std::to_string(rng() % 10) + ".md";
        c.data_dir = "/data/d" + std::to_string(rng() % 10);
        if (rng() % 2) {
            c.holdout_dir = "/holdout/h" + std::to_string(rng() % 10);
            c.holdout_prompt_path = "/holdout/p.md";
        }
        if (rng() % 2) {
            c.db_path = "/tmp/db.sqlite";
        }
        c.controller.total_rounds = static_cast<int>(rng() % 50) + 1;
        c.controller.warmup_generate_rounds = static_cast<int>(rng() % 3);
        c.controller.forced_generate_every = rng() % 2 ? std::optional<int>(1 + rng() % 9) : std::nullopt;
        c.controller.early_stop_patience = rng() % 2 ? std::optional<int>(1 + rng() % 9) : std::nullopt;
        c.controller.excellent_fraction = static_cast<double>(rng() % 1000) / 997.0;
        c.controller.moderate_fraction = std::ldexp(static_cast<double>(rng() % 1000), -10);
        c.controller.tune_workers = 1 + static_cast<int>(rng() % 4);
        c.sampling.tau = std::ldexp(static_cast<double>(rng()), -60);
        c.sampling.lambda_penalty = static_cast<double>(rng() % 101) / 100.0;
        c.sampling.stochastic = rng() % 2;
        c.sampling.rng_seed = rng() % 3 ? std::optional<std::uint64_t>(rng()) : std::nullopt;
        c.agent.turn_budget = 1 + static_cast<int>(rng() % 100);
        c.agent.exec_timeout_seconds = 0.5 + static_cast<double>(rng() % 1000) / 7.0;
        c.agent.web_search_offline = rng() % 2;
        c.agent.image_byte_cap = 1024 + rng() % 100000;
        c.provider.kind = rng() % 2 ? ProviderKind::http : ProviderKind::scripted;
        c.provider.transcripts_dir = "/t/s";
        c.provider.http.model = "m" + std::to_string(rng() % 5);
        c.provider.http.temperature = static_cast<double>(rng() % 20) / 10.0 - 1.0;
        c.provider.http.timeout = std::chrono::seconds(1 + rng() % 600);
        const std::string text = cli::serialize_config(c);
        const auto back = cli::parse_config(text, "/elsewhere");
        REQUIRE(back == c);
        CHECK(cli::serialize_config(back) == text);
    }
}

TEST_CASE("configuration parsing: relative paths, defaults and errors")
{
    const auto c = cli::parse_config("[session]\nworkspace_dir = ws\ntask_prompt = ../task.md\n"
                                     "[controller]\nforced_generate_every = none\n; comment\n",
                                     "/base/dir");
    CHECK(c.workspace_dir == "/base/dir/ws");
    CHECK(c.task_prompt_path == "/base/task.md");
    CHECK_FALSE(c.controller.forced_generate_every.has_value());
    CHECK(c.controller.total_rounds == ControllerConfig{}.total_rounds);
    CHECK(c.agent.turn_budget == 60);
    CHECK(c.agent.holdout_turn_budget == 20);

    CHECK(code_of([] { cli::parse_config("[controller]\ntotal_round = 3\n", "/"); }) == Errc::validation);
    CHECK(code_of([] { cli::parse_config("[nope]\na = 1\n", "/"); }) == Errc::validation);
    CHECK(code_of([] { cli::parse_config("[controller]\ntotal_rounds = three\n", "/"); }) == Errc::validation);
    CHECK(code_of([] { cli::parse_config("[sampling]\nstochastic = maybe\n", "/"); }) == Errc::validation);
    CHECK(code_of([] { cli::parse_config("[provider]\nkind = carrier-pigeon\n", "/"); }) == Errc::validation);
}

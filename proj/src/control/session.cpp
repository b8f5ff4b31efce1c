#include "algosearch/control/session.hpp"

#include "algosearch/agent/agent_loop.hpp"
#include "algosearch/agent/scripted_provider.hpp"
#include "algosearch/cli/config.hpp"
#include "algosearch/control/report.hpp"
#include "algosearch/error.hpp"
#include "algosearch/holdout/holdout_runner.hpp"
#include "algosearch/toolkit/exec_env.hpp"
#include "algosearch/toolkit/file_tools.hpp"
#include "algosearch/toolkit/image_tool.hpp"
#include "algosearch/toolkit/state_tools.hpp"
#include "algosearch/toolkit/web_search.hpp"
#include "algosearch/toolkit/workspace_guard.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <set>
#include <thread>

namespace algosearch::control {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kHoldoutTempPrefix = "_holdout_tmp_";

// Raised inside the session to stop it with a persisted reason.
struct SessionAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw Error(Errc::io, "cannot read " + p.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& p, const std::string& text)
{
    fs::create_directories(p.parent_path());
    const fs::path tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << text;
        if (!out) {
            throw Error(Errc::io, "cannot write " + tmp.string());
        }
    }
    fs::rename(tmp, p);
}

void require(bool ok, const std::string& message)
{
    if (!ok) {
        throw Error(Errc::validation, message);
    }
}

fs::path canonical_or_lexical(const fs::path& p)
{
    std::error_code ec;
    auto c = fs::weakly_canonical(fs::absolute(p), ec);
    return ec ? fs::absolute(p).lexically_normal() : c;
}

std::string last_assistant_text(const std::vector<agent::Message>& transcript)
{
    for (auto it = transcript.rbegin(); it != transcript.rend(); ++it) {
        if (it->role == agent::Role::assistant) {
            const auto t = it->text();
            if (!t.empty()) {
                return t;
            }
        }
    }
    return "";
}

Json run_log(const std::string& label, const agent::LoopResult& run, const std::vector<CandidateId>& submitted)
{
    return {{"run", label},
            {"loop_end", agent::to_string(run.end)},
            {"reason", run.reason},
            {"turns", run.turns},
            {"submitted", submitted},
            {"messages", agent::transcript_to_json(run.transcript)}};
}

std::string default_system_prompt()
{
    return "You are an autonomous algorithm developer working inside a sandboxed workspace. Use the tools to "
           "inspect data, write code, run it with the environment manager, and record results in the search "
           "state. Paths are relative to the workspace root. Tool errors are reported back to you; read them and "
           "correct your approach. Work only inside the directory assigned to you; the task data and earlier "
           "candidates are read-only.";
}

std::string action_instruction(Action a)
{
    switch (a) {
    case Action::baseline:
        return "Implement the user-provided baseline described in the task without improving it, evaluate it, "
               "and submit it as the reference candidate.";
    case Action::generate:
        return "Design a new algorithm that explores a direction not yet covered by earlier candidates "
               "(see view_search_history), evaluate it, and submit it.";
    case Action::tune:
        return "Refine the parent candidate: keep its approach and improve its parameters or details.";
    case Action::evolve:
        return "Combine the strengths of the two parent candidates into one new algorithm.";
    case Action::mutate:
        return "Make a substantive modification to the parent candidate's approach.";
    }
    return "";
}

struct WorkerOutcome {
    agent::LoopResult run;
    std::vector<CandidateId> submitted;
    std::string error;   // exception escaping the loop
};

class Session {
public:
    Session(const SessionConfig& cfg, Store& store, const ProviderFactory& providers, const SessionHooks& hooks)
        : cfg_(cfg), ws_{cfg.workspace_dir}, store_(store), providers_(providers), hooks_(hooks),
          task_text_(read_text(cfg.task_prompt_path)),
          holdout_text_(cfg.holdout_prompt_path ? read_text(*cfg.holdout_prompt_path) : "")
    {
    }

    int rounds_run = 0;

    void preparation()
    {
        auto guard = std::make_shared<toolkit::WorkspaceGuard>(ws_.sandbox());
        guard->add_read_only("data");
        toolkit::StateBridge bridge(store_, guard, {-1, Action::generate, {}, ".", false, 0});
        agent::ToolRegistry registry;
        add_common_tools(registry, guard, "renders/preparation");
        bridge.register_tools(registry, true, false);

        AgentSlot slot{AgentSlot::Kind::preparation, -1, 0, 0, {{"data_dir", "data"}}};
        auto provider = providers_(slot);
        const std::string task =
            task_text_ +
            "\n\nPreparation round. Inspect the task data in data/ (read-only). Establish the evaluation metrics: "
            "call set_primary_metric for the metric that ranks candidates and define_metric for any others. "
            "Construct a minimal evaluation harness under eval/ that later rounds can reuse. Do not submit "
            "candidates. Finish with a short summary of the task, the data and the evaluation protocol.";
        const auto run = agent::run_agent_loop(default_system_prompt(), task, registry, *provider, loop_options());
        write_text(ws_.transcripts() / "preparation.json", run_log("preparation", run, {}).dump(2) + "\n");
        if (run.end == agent::LoopEnd::provider_failed) {
            throw SessionAbort("preparation: model provider failed: " + run.reason);
        }
        if (!store_.primary_metric()) {
            throw SessionAbort("preparation ended without a primary metric");
        }
        store_.set_preparation_summary(last_assistant_text(run.transcript));
        store_.set_phase(Phase::baseline);
    }

    void run_round(const RoundPlan& plan)
    {
        const int r = plan.round_index;
        store_.begin_round(r, plan.action);
        ++rounds_run;
        if (hooks_.round_started) {
            hooks_.round_started(r);
        }

        const int workers = plan.action == Action::tune ? static_cast<int>(plan.parents.size())
                            : plan.action == Action::generate ? cfg_.controller.generate_workers
                                                              : 1;
        std::vector<std::string> dirs;
        for (int k = 0; k < workers; ++k) {
            dirs.push_back(candidate_dir(r, k));
            fs::create_directories(ws_.sandbox() / dirs.back());
        }
        std::set<std::string> prior_roots;
        for (const auto& c : store_.candidates()) {
            prior_roots.insert(c.candidate_root);
        }

        std::vector<std::unique_ptr<toolkit::StateBridge>> bridges;
        std::vector<agent::ToolRegistry> registries(static_cast<std::size_t>(workers));
        std::vector<std::unique_ptr<agent::Provider>> providers;
        std::vector<std::string> tasks;
        for (int k = 0; k < workers; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            std::vector<CandidateId> parents;
            if (plan.action == Action::tune) {
                parents = {plan.parents[ku]};
            } else if (plan.action != Action::generate && plan.action != Action::baseline) {
                parents = plan.parents;
            }
            auto guard = std::make_shared<toolkit::WorkspaceGuard>(ws_.sandbox());
            guard->add_read_only("data");
            for (const auto& root : prior_roots) {
                if (!root.empty() && root != ".") {
                    guard->add_read_only(root);
                }
            }
            for (int j = 0; j < workers; ++j) {
                if (j != k) {
                    guard->add_read_only(dirs[static_cast<std::size_t>(j)]);
                }
            }
            bridges.push_back(std::make_unique<toolkit::StateBridge>(
                store_, guard,
                toolkit::RoundContext{r, plan.action, parents, dirs[ku], holdout_mode(), 1}));
            add_common_tools(registries[ku], guard, "renders/" + dirs[ku].substr(dirs[ku].find('/') + 1));
            bridges.back()->register_tools(registries[ku], false, true);

            AgentSlot slot{AgentSlot::Kind::round, r, k, 0, round_vars(r, k, plan.action, parents, dirs[ku])};
            providers.push_back(providers_(slot));
            tasks.push_back(round_task(r, plan.action, parents, dirs[ku]));
        }

        std::vector<WorkerOutcome> outcomes(static_cast<std::size_t>(workers));
        {
            std::vector<std::thread> threads;
            for (int k = 0; k < workers; ++k) {
                const auto ku = static_cast<std::size_t>(k);
                threads.emplace_back([&, ku] {
                    try {
                        outcomes[ku].run = agent::run_agent_loop(default_system_prompt(), tasks[ku], registries[ku],
                                                                 *providers[ku], loop_options());
                    } catch (const std::exception& e) {
                        outcomes[ku].error = e.what();
                    }
                    outcomes[ku].submitted = bridges[ku]->submitted();
                });
            }
            for (auto& t : threads) {
                t.join();
            }
        }
        if (hooks_.workers_joined) {
            hooks_.workers_joined(r);
        }

        std::vector<CandidateId> submitted;
        std::string failures;
        std::string provider_failure;
        for (int k = 0; k < workers; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            const auto& o = outcomes[ku];
            const std::string label = dirs[ku].substr(dirs[ku].find('/') + 1);
            write_text(ws_.transcripts() / (label + ".json"), run_log(label, o.run, o.submitted).dump(2) + "\n");
            submitted.insert(submitted.end(), o.submitted.begin(), o.submitted.end());
            if (o.run.end == agent::LoopEnd::provider_failed) {
                provider_failure = "round " + std::to_string(r) + " worker " + std::to_string(k) +
                                   ": model provider failed: " + o.run.reason;
            }
            if (o.submitted.empty()) {
                std::string why = !o.error.empty() ? o.error
                                  : o.run.end == agent::LoopEnd::completed
                                      ? std::string("agent finished without submitting a candidate")
                                      : std::string(agent::to_string(o.run.end)) + ": " + o.run.reason;
                FailureRecord fr;
                fr.round_index = r;
                fr.failing_code_path = dirs[ku];
                fr.parent_ids = bridges[ku]->context().parents;
                fr.error_message = why;
                fr.metadata = {{"worker", k}, {"loop_end", agent::to_string(o.run.end)}, {"turns", o.run.turns}};
                store_.record_failure(fr);
                failures += (failures.empty() ? "" : "; ") + ("worker " + std::to_string(k) + ": " + why);
            }
        }

        if (holdout_mode()) {
            for (const CandidateId id : submitted) {
                run_holdout_for(r, id);
            }
        }

        std::string summary;
        if (submitted.empty()) {
            summary = "no candidate submitted (" + failures + ")";
        } else {
            summary = std::to_string(submitted.size()) + " candidate(s) submitted";
            if (!failures.empty()) {
                summary += "; " + failures;
            }
        }
        store_.finish_round(r, submitted.empty() ? RoundStatus::failed : RoundStatus::completed, summary);
        if (hooks_.round_finished) {
            hooks_.round_finished(r);
        }
        if (!provider_failure.empty()) {
            throw SessionAbort(provider_failure);
        }
    }

    // Candidates of non-failed rounds that carry a primary value, in submission order.
    std::vector<HistoryEntry> history() const
    {
        std::set<int> failed;
        for (const auto& rr : store_.rounds()) {
            if (rr.status == RoundStatus::failed) {
                failed.insert(rr.round_index);
            }
        }
        std::vector<HistoryEntry> h;
        for (const auto& c : store_.candidates()) {
            if (failed.count(c.round_index) != 0) {
                continue;
            }
            if (const auto v = store_.primary_value(c.candidate_id)) {
                h.push_back({c.candidate_id, c.lineage_id, c.round_index, *v, c.suggested_next_action});
            }
        }
        return h;
    }

    std::optional<double> baseline_value() const
    {
        const auto r0 = store_.round(0);
        if (!r0 || r0->status != RoundStatus::completed || !r0->winning_candidate_id) {
            return std::nullopt;
        }
        return store_.primary_value(*r0->winning_candidate_id);
    }

    std::vector<RoundOutcome> discovery_outcomes() const
    {
        std::vector<RoundOutcome> out;
        for (const auto& rr : store_.rounds()) {
            if (rr.round_index < 1) {
                continue;
            }
            RoundOutcome o{rr.round_index, rr.status == RoundStatus::completed, std::nullopt};
            if (o.completed && rr.winning_candidate_id) {
                o.best_value = store_.primary_value(*rr.winning_candidate_id);
            }
            out.push_back(o);
        }
        return out;
    }

private:
    bool holdout_mode() const { return cfg_.holdout_dir.has_value(); }

    agent::LoopOptions loop_options() const
    {
        agent::LoopOptions o;
        o.turn_budget = cfg_.agent.turn_budget;
        o.provider_retries = cfg_.agent.provider_retries;
        o.image_byte_cap = cfg_.agent.image_byte_cap;
        return o;
    }

    toolkit::ExecOptions exec_options() const
    {
        toolkit::ExecOptions o;
        o.binary = cfg_.agent.exec_binary;
        return o;
    }

    void add_common_tools(agent::ToolRegistry& reg, const std::shared_ptr<toolkit::WorkspaceGuard>& guard,
                          const std::string& render_dir) const
    {
        toolkit::register_file_tools(reg, guard);
        toolkit::register_exec_tool(reg, guard, exec_options(), cfg_.agent.exec_timeout_seconds);
        toolkit::SearchConfig sc;
        sc.offline = cfg_.agent.web_search_offline;
        toolkit::register_search_tool(reg, sc);
        toolkit::register_image_tool(reg, guard, render_dir);
    }

    std::map<std::string, std::string> round_vars(int r, int k, Action a, const std::vector<CandidateId>& parents,
                                                  const std::string& dir) const
    {
        std::map<std::string, std::string> v{{"round", std::to_string(r)},
                                             {"worker", std::to_string(k)},
                                             {"action", std::string(to_string(a))},
                                             {"candidate_root", dir},
                                             {"data_dir", "data"}};
        if (const auto pm = store_.primary_metric()) {
            v["primary_metric"] = pm->name;
        }
        for (std::size_t i = 0; i < parents.size(); ++i) {
            const auto p = store_.candidate(parents[i]);
            const std::string n = std::to_string(i);
            v["parent_" + n] = std::to_string(parents[i]);
            v["parent_root_" + n] = p ? p->candidate_root : "";
            v["parent_artifact_" + n] = p ? p->artifact_path : "";
        }
        return v;
    }

    std::string round_task(int r, Action a, const std::vector<CandidateId>& parents, const std::string& dir) const
    {
        std::string t = task_text_ + "\n\nRound " + std::to_string(r) + " (" + std::string(to_string(a)) + "). " +
                        action_instruction(a) + "\n";
        for (const CandidateId pid : parents) {
            const auto p = store_.candidate(pid);
            const auto v = store_.primary_value(pid);
            t += "Parent candidate #" + std::to_string(pid) + ": " + (p ? p->artifact_path : "?") +
                 (v ? " (primary metric " + Json(*v).dump() + ")" : "") + "\n";
        }
        const auto pm = store_.primary_metric();
        t += "Your directory is " + dir + "/; write every file of your candidate there. The task data is in data/. "
             "Evaluate your candidate, then call submit_candidate once with artifact_path relative to your "
             "directory and the value of the primary metric" +
             (pm ? " '" + pm->name + "'" : std::string()) +
             ". Use analyze_results to record what you learned and which action should come next.";
        if (holdout_mode()) {
            t += "\n\nHoldout test: " + holdout_text_ +
                 "\nYou cannot access the holdout data. Before submitting, write " + holdout::kContractFileName +
                 " in your directory with the fields files (paths of the files needed to run your algorithm), "
                 "main (the main algorithm file, one of files) and command (\"uv run <script> <args>\", run from "
                 "a directory that holds those files and the holdout data folder).";
        }
        return t;
    }

    void run_holdout_for(int r, CandidateId id)
    {
        holdout::HoldoutConfig hc;
        hc.holdout_dir = *cfg_.holdout_dir;
        hc.holdout_prompt = holdout_text_;
        hc.turn_budget = cfg_.agent.holdout_turn_budget;
        hc.exec = exec_options();
        hc.exec_timeout_seconds = cfg_.agent.exec_timeout_seconds;
        hc.loop = loop_options();
        AgentSlot slot{AgentSlot::Kind::holdout, r, 0, id, {{"candidate_id", std::to_string(id)},
                                                             {"round", std::to_string(r)}}};
        auto provider = providers_(slot);
        const auto res = holdout::run_holdout(store_, id, hc, *provider);
        Json log = {{"candidate_id", id},
                    {"round", r},
                    {"metric", res.metric ? Json(*res.metric) : Json(nullptr)},
                    {"note", res.note},
                    {"messages", agent::transcript_to_json(res.transcript)}};
        write_text(ws_.holdout_logs() / ("candidate_" + std::to_string(id) + ".json"), log.dump(2) + "\n");
    }

    const SessionConfig& cfg_;
    WorkspaceLayout ws_;
    Store& store_;
    const ProviderFactory& providers_;
    const SessionHooks& hooks_;
    std::string task_text_;
    std::string holdout_text_;
};

sampling::Rng round_rng(const sampling::SamplingConfig& cfg, int round)
{
    const std::uint64_t seed = cfg.rng_seed.value_or(0);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(round)};
    return sampling::Rng(seq);
}

} // namespace

std::string_view to_string(ProviderKind k)
{
    return k == ProviderKind::scripted ? "scripted" : "http";
}

ProviderKind parse_provider_kind(std::string_view s)
{
    if (s == "scripted") {
        return ProviderKind::scripted;
    }
    if (s == "http") {
        return ProviderKind::http;
    }
    throw Error(Errc::validation, "provider kind must be 'scripted' or 'http', got '" + std::string(s) + "'");
}

std::string_view to_string(SessionStatus s)
{
    switch (s) {
    case SessionStatus::finished: return "finished";
    case SessionStatus::early_stopped: return "early_stopped";
    case SessionStatus::aborted: return "aborted";
    case SessionStatus::in_progress: return "in_progress";
    }
    return "?";
}

void validate(const SessionConfig& cfg)
{
    require(!cfg.workspace_dir.empty(), "session.workspace_dir is required");
    require(fs::is_regular_file(cfg.task_prompt_path),
            "session.task_prompt: file '" + cfg.task_prompt_path.string() + "' does not exist");
    require(fs::is_directory(cfg.data_dir), "session.data_dir: directory '" + cfg.data_dir.string() + "' does not exist");
    require(cfg.holdout_dir.has_value() == cfg.holdout_prompt_path.has_value(),
            "session.holdout_dir and session.holdout_prompt must be set together");
    const fs::path ws = canonical_or_lexical(cfg.workspace_dir);
    const fs::path data = canonical_or_lexical(cfg.data_dir);
    require(!toolkit::path_within(data, ws), "session.data_dir must not be inside the workspace");
    if (cfg.holdout_dir) {
        require(fs::is_directory(*cfg.holdout_dir),
                "session.holdout_dir: directory '" + cfg.holdout_dir->string() + "' does not exist");
        require(fs::is_regular_file(*cfg.holdout_prompt_path),
                "session.holdout_prompt: file '" + cfg.holdout_prompt_path->string() + "' does not exist");
        const fs::path hd = canonical_or_lexical(*cfg.holdout_dir);
        require(!toolkit::path_within(hd, ws), "session.holdout_dir must not be inside the workspace");
        require(!toolkit::path_within(ws, hd), "the workspace must not be inside session.holdout_dir");
        require(!toolkit::path_within(hd, data) && !toolkit::path_within(data, hd),
                "session.holdout_dir and session.data_dir must not overlap");
    }
    try {
        validate(cfg.controller);
        sampling::validate(cfg.sampling);
    } catch (const Error& e) {
        throw Error(Errc::validation, e.what());
    }
    require(cfg.agent.turn_budget >= 1, "agent.turn_budget must be >= 1");
    require(cfg.agent.holdout_turn_budget >= 1, "agent.holdout_turn_budget must be >= 1");
    require(cfg.agent.provider_retries >= 0, "agent.provider_retries must be >= 0");
    require(cfg.agent.exec_timeout_seconds > 0, "agent.exec_timeout_seconds must be positive");
    require(!cfg.agent.exec_binary.empty(), "agent.exec_binary must not be empty");
    require(cfg.agent.image_byte_cap >= 1024, "agent.image_byte_cap must be at least 1024");
    if (cfg.provider.kind == ProviderKind::scripted) {
        require(fs::is_directory(cfg.provider.transcripts_dir),
                "provider.transcripts_dir: directory '" + cfg.provider.transcripts_dir.string() + "' does not exist");
    } else {
        require(!cfg.provider.http.endpoint.empty(), "provider.endpoint is required for the http provider");
        require(!cfg.provider.http.model.empty(), "provider.model is required for the http provider");
    }
}

fs::path db_path_of(const SessionConfig& cfg)
{
    return cfg.db_path.empty() ? cfg.workspace_dir / "state.db" : cfg.db_path;
}

std::string candidate_dir(int round, int worker)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "candidates/round_%03d_w%d", round, worker);
    return buf;
}

std::optional<fs::path> scripted_transcript_for(const fs::path& dir, const AgentSlot& slot)
{
    std::vector<std::string> names;
    switch (slot.kind) {
    case AgentSlot::Kind::preparation: names = {"preparation.json"}; break;
    case AgentSlot::Kind::round:
        names = {"round_" + std::to_string(slot.round_index) + "_w" + std::to_string(slot.worker) + ".json",
                 "round_" + std::to_string(slot.round_index) + ".json", "round.json"};
        break;
    case AgentSlot::Kind::holdout:
        names = {"holdout_" + std::to_string(slot.candidate_id) + ".json", "holdout.json"};
        break;
    }
    for (const auto& n : names) {
        if (fs::is_regular_file(dir / n)) {
            return dir / n;
        }
    }
    return std::nullopt;
}

void validate_transcripts(const fs::path& dir)
{
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".json") {
            agent::load_script(e.path());
        }
    }
}

ProviderFactory default_provider_factory(const ProviderSettings& settings)
{
    if (settings.kind == ProviderKind::scripted) {
        const fs::path dir = settings.transcripts_dir;
        return [dir](const AgentSlot& slot) -> std::unique_ptr<agent::Provider> {
            const auto file = scripted_transcript_for(dir, slot);
            auto script = file ? agent::load_script(*file) : std::vector<agent::ScriptTurn>{};
            return std::make_unique<agent::ScriptedProvider>(std::move(script), slot.vars);
        };
    }
    const agent::HttpProviderConfig http = settings.http;
    return [http](const AgentSlot&) -> std::unique_ptr<agent::Provider> {
        return std::make_unique<agent::HttpChatProvider>(http);
    };
}

bool init_workspace(const SessionConfig& cfg)
{
    validate(cfg);
    const WorkspaceLayout ws{cfg.workspace_dir};
    if (fs::exists(db_path_of(cfg))) {
        return false;
    }
    for (const auto& d : {ws.root, ws.sandbox(), ws.sandbox() / "candidates", ws.transcripts(), ws.holdout_logs(),
                          ws.reports()}) {
        fs::create_directories(d);
    }
    std::error_code ec;
    fs::remove_all(ws.data(), ec);   // partial copy from an interrupted init
    fs::copy(cfg.data_dir, ws.data(), fs::copy_options::recursive);
    write_text(ws.config_copy(), cli::serialize_config(cfg));
    Store::open_or_create(db_path_of(cfg), ws.sandbox());
    return true;
}

int purge_holdout_leftovers(const fs::path& sandbox)
{
    int removed = 0;
    const fs::path candidates = sandbox / "candidates";
    if (!fs::is_directory(candidates)) {
        return 0;
    }
    for (const auto& c : fs::directory_iterator(candidates)) {
        if (!c.is_directory()) {
            continue;
        }
        for (const auto& e : fs::directory_iterator(c.path())) {
            if (e.path().filename().string().rfind(kHoldoutTempPrefix, 0) == 0) {
                std::error_code ec;
                fs::remove_all(e.path(), ec);
                if (ec) {
                    std::cerr << "warning: could not remove " << e.path() << ": " << ec.message() << "\n";
                } else {
                    ++removed;
                }
            }
        }
    }
    return removed;
}

SessionResult run_session(const SessionConfig& cfg, const ProviderFactory& providers_in, const SessionHooks& hooks)
{
    validate(cfg);
    const WorkspaceLayout ws{cfg.workspace_dir};
    const fs::path db = db_path_of(cfg);
    if (!fs::exists(db)) {
        throw Error(Errc::state, "workspace " + cfg.workspace_dir.string() + " is not initialized");
    }
    if (cfg.provider.kind == ProviderKind::scripted) {
        validate_transcripts(cfg.provider.transcripts_dir);
    }
    const ProviderFactory providers = providers_in ? providers_in : default_provider_factory(cfg.provider);

    purge_holdout_leftovers(ws.sandbox());
    SessionResult result;
    const ResumePoint rp = Store::recover_session(db);
    result.interrupted_rounds = rp.interrupted_rounds;
    Store store = Store::open_or_create(db, ws.sandbox());

    if (rp.state.phase != Phase::finished) {
        store.set_active();
        Session s(cfg, store, providers, hooks);
        try {
            if (store.session_state().phase == Phase::preparation) {
                s.preparation();
            }
            if (store.session_state().phase == Phase::baseline) {
                if (!store.round(0)) {
                    s.run_round({0, Action::baseline, {}, 1, "baseline round"});
                }
                store.set_phase(Phase::discovery);
            }
            const auto pm = store.primary_metric();
            if (!pm) {
                throw SessionAbort("no primary metric is defined");
            }
            bool stopped = false;
            for (int r = store.next_round_index().value_or(1); r <= cfg.controller.total_rounds; ++r) {
                auto rng = round_rng(cfg.sampling, r);
                const auto h = s.history();
                const auto plan = select_next_action(r, h, pm->direction, s.baseline_value(), cfg.controller,
                                                     cfg.sampling, rng);
                s.run_round(plan);
                const auto outcomes = s.discovery_outcomes();
                const auto decision = check_early_stop(outcomes, s.baseline_value(), pm->direction,
                                                       cfg.controller.early_stop_patience);
                if (decision.stop) {
                    store.stop(decision.reason);
                    store.set_phase(Phase::finished);
                    result.status = SessionStatus::early_stopped;
                    result.stop_reason = decision.reason;
                    stopped = true;
                    break;
                }
            }
            if (!stopped) {
                store.set_phase(Phase::finished);
                result.status = SessionStatus::finished;
            }
        } catch (const SessionAbort& e) {
            store.stop(e.what());
            result.status = SessionStatus::aborted;
            result.stop_reason = e.what();
        } catch (const std::exception& e) {
            result.status = SessionStatus::aborted;
            result.stop_reason = std::string("session aborted: ") + e.what();
            try {
                store.stop(result.stop_reason);
            } catch (const std::exception& e2) {
                std::cerr << "could not persist the stop reason: " << e2.what() << "\n";
            }
        }
        result.rounds_run = s.rounds_run;
    } else {
        const auto st = store.session_state();
        result.status = st.stop_reason ? SessionStatus::early_stopped : SessionStatus::finished;
        result.stop_reason = st.stop_reason.value_or("");
    }

    write_report(build_report(store, std::string(to_string(result.status))), ws.reports());
    return result;
}

} // namespace algosearch::control

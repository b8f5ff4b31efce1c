#pragma once

// Session lifecycle: preparation (round -1), baseline (round 0), then
// discovery rounds chosen by the branching policy, each run by one or more
// agent workers with a fresh context. After every round the submitted
// candidates are holdout-tested when a holdout directory is configured, and
// the early-stop rule is checked.
//
// Workspace layout:
//   <workspace>/session.ini          canonical copy of the configuration
//   <workspace>/state.db             search state (artifact root: sandbox/)
//   <workspace>/sandbox/             everything the development agents see
//       data/                        copy of the task data
//       candidates/round_NNN_wK/     one directory per worker
//       renders/round_NNN_wK/        view_image output
//   <workspace>/transcripts/         one JSON transcript per agent run
//   <workspace>/holdout_logs/        holdout agent transcripts
//   <workspace>/reports/             report.json, report.txt, history.csv

#include "algosearch/agent/http_provider.hpp"
#include "algosearch/agent/provider.hpp"
#include "algosearch/control/policy.hpp"
#include "algosearch/sampling/lineage_sampler.hpp"
#include "algosearch/store/state_store.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

namespace algosearch::control {

enum class ProviderKind { scripted, http };

std::string_view to_string(ProviderKind k);
ProviderKind parse_provider_kind(std::string_view s);

struct ProviderSettings {
    ProviderKind kind = ProviderKind::scripted;
    std::filesystem::path transcripts_dir;   // scripted only
    agent::HttpProviderConfig http;

    bool operator==(const ProviderSettings&) const = default;
};

struct AgentSettings {
    int turn_budget = 60;
    int holdout_turn_budget = 20;
    int provider_retries = 3;
    double exec_timeout_seconds = 600.0;
    std::string exec_binary = "uv";
    bool web_search_offline = false;
    std::size_t image_byte_cap = 4u << 20;

    bool operator==(const AgentSettings&) const = default;
};

struct SessionConfig {
    std::filesystem::path workspace_dir;
    std::filesystem::path task_prompt_path;
    std::filesystem::path data_dir;
    std::optional<std::filesystem::path> holdout_dir;
    std::optional<std::filesystem::path> holdout_prompt_path;   // required iff holdout_dir
    std::filesystem::path db_path;                              // empty: <workspace>/state.db
    ControllerConfig controller;
    sampling::SamplingConfig sampling;
    ProviderSettings provider;
    AgentSettings agent;

    bool operator==(const SessionConfig&) const = default;
};

// Throws Errc::validation naming the offending field.
void validate(const SessionConfig& cfg);

struct WorkspaceLayout {
    std::filesystem::path root;

    std::filesystem::path config_copy() const { return root / "session.ini"; }
    std::filesystem::path sandbox() const { return root / "sandbox"; }
    std::filesystem::path data() const { return sandbox() / "data"; }
    std::filesystem::path transcripts() const { return root / "transcripts"; }
    std::filesystem::path holdout_logs() const { return root / "holdout_logs"; }
    std::filesystem::path reports() const { return root / "reports"; }
};

std::filesystem::path db_path_of(const SessionConfig& cfg);

// Sandbox-relative directory of worker `worker` in round `round`.
std::string candidate_dir(int round, int worker);

// Which agent run a provider is created for.
struct AgentSlot {
    enum class Kind { preparation, round, holdout } kind = Kind::round;
    int round_index = 0;
    int worker = 0;
    CandidateId candidate_id = 0;              // holdout only
    std::map<std::string, std::string> vars;   // placeholder values for scripted transcripts
};

using ProviderFactory = std::function<std::unique_ptr<agent::Provider>(const AgentSlot&)>;

// Scripted transcript lookup, first existing file wins:
//   preparation: preparation.json
//   round:       round_<N>_w<K>.json, round_<N>.json, round.json
//   holdout:     holdout_<candidate id>.json, holdout.json
// A slot without a file gets an empty script (the agent ends at once).
std::optional<std::filesystem::path> scripted_transcript_for(const std::filesystem::path& dir, const AgentSlot& slot);

// Parses every *.json transcript in `dir`; throws Errc::load on the first bad one.
void validate_transcripts(const std::filesystem::path& dir);

ProviderFactory default_provider_factory(const ProviderSettings& settings);

// Creates the workspace, copies the data, creates the store and writes the
// configuration copy. Returns false, touching nothing, when the workspace
// already holds a state database.
bool init_workspace(const SessionConfig& cfg);

enum class SessionStatus { finished, early_stopped, aborted, in_progress };

std::string_view to_string(SessionStatus s);

// Hooks for tests: called with the round index at fixed points.
struct SessionHooks {
    std::function<void(int)> round_started;     // after begin_round
    std::function<void(int)> workers_joined;    // before holdout and finish_round
    std::function<void(int)> round_finished;    // after finish_round
};

struct SessionResult {
    SessionStatus status = SessionStatus::in_progress;
    std::string stop_reason;
    std::vector<int> interrupted_rounds;   // marked failed on entry
    int rounds_run = 0;                    // rounds executed by this call
};

// Runs or resumes the session in an initialized workspace until it finishes,
// stops early or aborts, then writes the report. Configuration and
// transcript errors throw before any round starts; runtime failures are
// persisted as the stop reason and reported as aborted.
SessionResult run_session(const SessionConfig& cfg, const ProviderFactory& providers = {},
                          const SessionHooks& hooks = {});

// Removes holdout temp directories left behind by an interrupted run.
int purge_holdout_leftovers(const std::filesystem::path& sandbox);

} // namespace algosearch::control

#pragma once

// Post-round holdout test of one submitted candidate.
//
// A temporary directory `_holdout_tmp_<id>` is created inside the candidate
// root; the holdout data directory is copied into it under its own name,
// together with the contract files. A separate agent, confined to that
// directory with the contract files read-only, runs the recorded command,
// fixes only invocation details if needed, and submits a metric or a null
// result with a note. The result is written to the store and the temporary
// directory is removed on every exit path.

#include "algosearch/agent/agent_loop.hpp"
#include "algosearch/holdout/contract.hpp"
#include "algosearch/store/state_store.hpp"
#include "algosearch/toolkit/exec_env.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace algosearch::holdout {

inline constexpr int kDefaultHoldoutTurnBudget = 20;

struct HoldoutConfig {
    std::filesystem::path holdout_dir;   // outside the search workspace
    std::string holdout_prompt;          // operator description of the holdout data
    std::string system_prompt;           // empty: built-in default
    int turn_budget = kDefaultHoldoutTurnBudget;
    toolkit::ExecOptions exec;
    double exec_timeout_seconds = 600.0;
    agent::LoopOptions loop;             // turn_budget is taken from above
};

struct HoldoutResult {
    std::optional<double> metric;
    std::string note;                    // failure note when metric is null, remarks otherwise
    std::vector<agent::Message> transcript;
    std::filesystem::path temp_dir;      // already removed when run_holdout returns
};

// Directory name used for candidate `id`.
std::string temp_dir_name(CandidateId id);

std::string default_holdout_system_prompt();

// Task prompt given to the holdout agent.
std::string holdout_task_prompt(const HoldoutConfig& cfg, const HoldoutContract& contract,
                                const std::string& data_dir_name);

// Runs the holdout test and records the outcome with
// Store::record_holdout_metric. Never throws for candidate-level problems.
HoldoutResult run_holdout(Store& store, CandidateId candidate, const HoldoutConfig& config, agent::Provider& provider);

} // namespace algosearch::holdout

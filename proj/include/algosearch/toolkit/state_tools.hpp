#pragma once

// Agent-facing bridge to the state store. Each tool delegates to one store
// operation; views render compact text tables.
//
// Metrics logged without a candidate id and the latest analysis are held as
// pending and attached to this worker's next submission. Parents of a
// submission come from the round plan, never from the agent.

#include "algosearch/agent/tool_registry.hpp"
#include "algosearch/store/state_store.hpp"
#include "algosearch/toolkit/workspace_guard.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace algosearch::toolkit {

struct RoundContext {
    int round_index = 0;
    Action action = Action::generate;
    std::vector<CandidateId> parents;
    std::string candidate_root;      // guard-relative directory owned by this worker
    bool holdout_mode = false;
    int max_submissions = 1;
};

class StateBridge {
public:
    // The guard root must be the store's artifact root.
    StateBridge(Store& store, std::shared_ptr<const WorkspaceGuard> guard, RoundContext context);

    agent::ToolOutcome set_primary_metric(const Json& args);
    agent::ToolOutcome define_metric(const Json& args);
    agent::ToolOutcome log_evaluation(const Json& args);
    agent::ToolOutcome view_search_history(const Json& args);
    agent::ToolOutcome view_candidate(const Json& args);
    agent::ToolOutcome view_metric_history(const Json& args);
    agent::ToolOutcome analyze_results(const Json& args);
    agent::ToolOutcome record_failure(const Json& args);
    agent::ToolOutcome submit_candidate(const Json& args);

    // Registers the read and logging tools, plus set_primary_metric /
    // define_metric and submit_candidate when requested.
    void register_tools(agent::ToolRegistry& registry, bool metric_setup, bool allow_submit);

    std::vector<CandidateId> submitted() const;
    const RoundContext& context() const { return ctx_; }

private:
    MetricDefinition metric_from(const Json& args, bool primary) const;

    Store& store_;
    std::shared_ptr<const WorkspaceGuard> guard_;
    RoundContext ctx_;
    mutable std::mutex mu_;
    std::map<std::string, double> pending_metrics_;
    std::optional<std::string> pending_analysis_;
    std::optional<Action> pending_suggestion_;
    std::vector<CandidateId> submitted_;
};

// Text table of history rows, as shown by view_search_history.
std::string format_history(const std::vector<HistoryRow>& rows, const std::string& metric_name);

} // namespace algosearch::toolkit

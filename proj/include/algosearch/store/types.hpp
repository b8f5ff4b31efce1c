#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace algosearch {

using CandidateId = std::int64_t;
using LineageId = std::int64_t;
using Json = nlohmann::json;

enum class Direction { maximize, minimize };
enum class Action { baseline, generate, tune, evolve, mutate };
enum class RoundStatus { running, completed, failed, skipped };
enum class Phase { preparation, baseline, discovery, finished };
enum class RunStatus { active, stopped };

std::string_view to_string(Direction d);
std::string_view to_string(Action a);
std::string_view to_string(RoundStatus s);
std::string_view to_string(Phase p);
std::string_view to_string(RunStatus s);

// Parsers throw Error(Errc::parameter) on unknown names.
Direction parse_direction(std::string_view s);
Action parse_action(std::string_view s);
RoundStatus parse_round_status(std::string_view s);
Phase parse_phase(std::string_view s);
RunStatus parse_run_status(std::string_view s);

// True when `a` is strictly better than `b` under `d`.
inline bool better(Direction d, double a, double b)
{
    return d == Direction::minimize ? a < b : a > b;
}

struct MetricDefinition {
    std::string name;
    Direction direction = Direction::maximize;
    std::string description;
    std::optional<double> target_value;
    bool is_primary = false;

    bool operator==(const MetricDefinition&) const = default;
};

struct RoundRecord {
    int round_index = 0;
    Action action = Action::generate;
    RoundStatus status = RoundStatus::running;
    std::string summary;
    std::optional<CandidateId> winning_candidate_id;

    bool operator==(const RoundRecord&) const = default;
};

struct CandidateRecord {
    CandidateId candidate_id = 0;  // assigned by the store
    int round_index = 0;
    Action action = Action::generate;
    std::string description;
    std::string artifact_path;     // workspace-relative main code file
    std::string candidate_root;    // workspace-relative candidate directory
    LineageId lineage_id = 0;      // assigned by the store from the lineage rules
    std::vector<CandidateId> parent_ids;
    Json settings = Json::object();
    std::string analysis;
    std::optional<Action> suggested_next_action;
    std::string notes;

    bool operator==(const CandidateRecord&) const = default;
};

struct MetricSample {
    CandidateId candidate_id = 0;
    std::string metric_name;
    double value = 0.0;

    bool operator==(const MetricSample&) const = default;
};

// value is null exactly when failure_note is non-empty. `remarks` is free
// text for successful runs (e.g. how the holdout agent fixed the command).
struct HoldoutMetricSample {
    CandidateId candidate_id = 0;
    std::optional<double> value;
    std::string failure_note;
    std::string remarks;

    bool operator==(const HoldoutMetricSample&) const = default;
};

struct SessionState {
    Phase phase = Phase::preparation;
    RunStatus run_status = RunStatus::active;
    std::optional<int> active_round;
    std::optional<Action> active_action;
    std::string preparation_summary;
    std::optional<std::string> stop_reason;

    bool operator==(const SessionState&) const = default;
};

struct FailureRecord {
    std::int64_t failure_id = 0;  // assigned by the store
    int round_index = 0;
    std::string failing_code_path;
    std::vector<CandidateId> parent_ids;
    std::string error_message;
    Json settings = Json::object();
    Json metadata = Json::object();

    bool operator==(const FailureRecord&) const = default;
};

// One row of the ranked history: a candidate joined with its primary metric.
struct HistoryRow {
    CandidateId candidate_id = 0;
    int round_index = 0;
    Action action = Action::generate;
    LineageId lineage_id = 0;
    std::vector<CandidateId> parent_ids;
    double primary_value = 0.0;
    std::string description;
    std::string analysis_excerpt;
    std::optional<Action> suggested_next_action;

    bool operator==(const HistoryRow&) const = default;
};

} // namespace algosearch

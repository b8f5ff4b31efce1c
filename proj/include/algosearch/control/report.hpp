#pragma once

// Session report: per-round action, status, winner metric, best-so-far and
// holdout metric, plus every candidate. Plain JSON, text and CSV.

#include "algosearch/store/state_store.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace algosearch::control {

struct ReportCandidate {
    CandidateId candidate_id = 0;
    LineageId lineage_id = 0;
    Action action = Action::generate;
    std::vector<CandidateId> parent_ids;
    std::string artifact_path;
    std::optional<double> primary_value;
    std::optional<double> holdout_value;
    std::string holdout_note;
};

struct ReportRound {
    int round_index = 0;
    Action action = Action::generate;
    RoundStatus status = RoundStatus::running;
    std::string summary;
    std::optional<CandidateId> winner;
    std::optional<double> winner_value;
    std::optional<double> best_so_far;      // never worsens from one row to the next
    std::optional<double> winner_holdout;
    std::vector<ReportCandidate> candidates;
};

struct SessionReport {
    std::string status;                     // finished, early_stopped, aborted, in_progress
    std::string stop_reason;
    std::string preparation_summary;
    std::optional<MetricDefinition> primary;
    std::vector<ReportRound> rounds;
    std::optional<CandidateId> best_candidate;
    std::optional<double> best_value;
};

// `status` is the caller's view of how the session ended; empty derives it
// from the stored session state.
SessionReport build_report(const Store& store, const std::string& status = "");

Json report_to_json(const SessionReport& r);
std::string report_to_text(const SessionReport& r);

// Header: round,action,status,primary_metric,best_so_far,holdout_metric.
// Failed rounds have empty metric cells.
std::string report_to_csv(const SessionReport& r);

// Writes report.json, report.txt and history.csv into `dir`.
void write_report(const SessionReport& r, const std::filesystem::path& dir);

} // namespace algosearch::control

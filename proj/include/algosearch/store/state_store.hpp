#pragma once

// Persistent relational search state backed by a single SQLite file.
//
// Tables: metric_definitions, rounds, candidates, metrics,
// holdout_test_metrics, session_state, candidate_failures. The schema
// version lives in PRAGMA user_version.
//
// One writer per session. Every public call takes the handle's mutex, so a
// Store may be shared between round workers; their writes are serialized.

#include "algosearch/store/types.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

namespace algosearch {

inline constexpr int kSchemaVersion = 1;

struct ResumePoint {
    SessionState state;
    std::optional<int> next_round;          // none when the session is finished
    std::vector<int> interrupted_rounds;    // rounds that were running and are now failed
};

class Store {
public:
    // Opens or creates the database. `artifact_root` is the directory that
    // candidate artifact paths are relative to; it defaults to the database's
    // parent directory.
    static Store open_or_create(const std::filesystem::path& db_path,
                                const std::filesystem::path& artifact_root = {});

    // Opens an existing database, marks interrupted rounds failed and reports
    // where the session should continue.
    static ResumePoint recover_session(const std::filesystem::path& db_path);

    Store(Store&&) noexcept;
    Store& operator=(Store&&) noexcept;
    ~Store();

    const std::filesystem::path& db_path() const;
    const std::filesystem::path& artifact_root() const;

    // metric definitions
    void define_metric(const MetricDefinition& def);
    std::vector<MetricDefinition> metric_definitions() const;
    std::optional<MetricDefinition> primary_metric() const;

    // rounds
    void begin_round(int round_index, Action action);
    void finish_round(int round_index, RoundStatus status, const std::string& summary);
    std::optional<RoundRecord> round(int round_index) const;
    std::vector<RoundRecord> rounds() const;
    std::optional<int> next_round_index() const;

    // candidates and metrics
    CandidateId submit_candidate(CandidateRecord record, const std::vector<MetricSample>& metrics);
    void log_metric(const MetricSample& sample);
    std::optional<CandidateRecord> candidate(CandidateId id) const;
    std::vector<CandidateRecord> candidates() const;
    std::size_t candidate_count() const;
    std::vector<MetricSample> metrics_for(CandidateId id) const;
    std::optional<double> primary_value(CandidateId id) const;

    // Metric samples of `metric_name` for every candidate, in submission order.
    std::vector<MetricSample> metric_history(const std::string& metric_name) const;

    // Candidates joined with their primary metric, best first; ties go to the
    // earlier round, then the lower id. `top_n` of none returns every row.
    std::vector<HistoryRow> query_history(std::optional<std::size_t> top_n) const;

    // holdout
    void record_holdout_metric(const HoldoutMetricSample& sample);
    std::optional<HoldoutMetricSample> holdout_metric(CandidateId id) const;
    std::vector<HoldoutMetricSample> holdout_metrics() const;

    // failures
    std::int64_t record_failure(const FailureRecord& rec);
    std::vector<FailureRecord> failures() const;

    // session
    SessionState session_state() const;
    void set_phase(Phase phase);
    void set_preparation_summary(const std::string& summary);
    void stop(const std::string& reason);
    void set_active();

    // Marks running rounds failed, logs a failure record for each and computes
    // the resume point.
    ResumePoint recover();

private:
    struct Impl;
    explicit Store(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

} // namespace algosearch

#include "algosearch/control/report.hpp"

#include "algosearch/error.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace algosearch::control {

namespace fs = std::filesystem;

namespace {

Json opt(const std::optional<double>& v)
{
    return v ? Json(*v) : Json(nullptr);
}

std::string cell(const std::optional<double>& v)
{
    return v ? Json(*v).dump() : std::string();
}

void write_file(const fs::path& p, const std::string& text)
{
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

} // namespace

SessionReport build_report(const Store& store, const std::string& status)
{
    SessionReport r;
    const SessionState state = store.session_state();
    r.stop_reason = state.stop_reason.value_or("");
    r.preparation_summary = state.preparation_summary;
    r.primary = store.primary_metric();
    if (!status.empty()) {
        r.status = status;
    } else if (state.phase == Phase::finished) {
        r.status = state.stop_reason ? "early_stopped" : "finished";
    } else {
        r.status = state.run_status == RunStatus::stopped ? "aborted" : "in_progress";
    }

    std::map<CandidateId, HoldoutMetricSample> holdout;
    for (auto& h : store.holdout_metrics()) {
        holdout[h.candidate_id] = h;
    }
    std::map<int, std::vector<ReportCandidate>> by_round;
    for (const auto& c : store.candidates()) {
        ReportCandidate rc{c.candidate_id, c.lineage_id, c.action, c.parent_ids, c.artifact_path,
                           store.primary_value(c.candidate_id), std::nullopt, ""};
        if (const auto it = holdout.find(c.candidate_id); it != holdout.end()) {
            rc.holdout_value = it->second.value;
            rc.holdout_note = it->second.value ? it->second.remarks : it->second.failure_note;
        }
        by_round[c.round_index].push_back(std::move(rc));
    }

    std::optional<double> best;
    for (const auto& rec : store.rounds()) {
        ReportRound row;
        row.round_index = rec.round_index;
        row.action = rec.action;
        row.status = rec.status;
        row.summary = rec.summary;
        row.winner = rec.winning_candidate_id;
        row.candidates = by_round[rec.round_index];
        if (row.winner && rec.status != RoundStatus::failed) {
            for (const auto& c : row.candidates) {
                if (c.candidate_id == *row.winner) {
                    row.winner_value = c.primary_value;
                    row.winner_holdout = c.holdout_value;
                }
            }
        }
        if (row.winner_value && r.primary &&
            (!best || better(r.primary->direction, *row.winner_value, *best))) {
            best = row.winner_value;
            r.best_candidate = row.winner;
        }
        row.best_so_far = best;
        r.rounds.push_back(std::move(row));
    }
    r.best_value = best;
    return r;
}

Json report_to_json(const SessionReport& r)
{
    Json rounds = Json::array();
    for (const auto& row : r.rounds) {
        Json cands = Json::array();
        for (const auto& c : row.candidates) {
            cands.push_back({{"candidate_id", c.candidate_id},
                             {"lineage_id", c.lineage_id},
                             {"action", to_string(c.action)},
                             {"parent_ids", c.parent_ids},
                             {"artifact_path", c.artifact_path},
                             {"primary_metric", opt(c.primary_value)},
                             {"holdout_metric", opt(c.holdout_value)},
                             {"holdout_note", c.holdout_note}});
        }
        rounds.push_back({{"round", row.round_index},
                          {"action", to_string(row.action)},
                          {"status", to_string(row.status)},
                          {"summary", row.summary},
                          {"winner", row.winner ? Json(*row.winner) : Json(nullptr)},
                          {"primary_metric", opt(row.winner_value)},
                          {"best_so_far", opt(row.best_so_far)},
                          {"holdout_metric", opt(row.winner_holdout)},
                          {"candidates", cands}});
    }
    Json primary = nullptr;
    if (r.primary) {
        primary = {{"name", r.primary->name}, {"direction", to_string(r.primary->direction)}};
    }
    return {{"status", r.status},
            {"stop_reason", r.stop_reason},
            {"preparation_summary", r.preparation_summary},
            {"primary_metric", primary},
            {"best_candidate", r.best_candidate ? Json(*r.best_candidate) : Json(nullptr)},
            {"best_value", opt(r.best_value)},
            {"rounds", rounds}};
}

std::string report_to_text(const SessionReport& r)
{
    std::ostringstream out;
    out << "session: " << r.status;
    if (!r.stop_reason.empty()) {
        out << " (" << r.stop_reason << ")";
    }
    out << "\n";
    if (r.primary) {
        out << "primary metric: " << r.primary->name << " (" << to_string(r.primary->direction) << ")\n";
    }
    if (r.rounds.empty()) {
        out << "no rounds recorded\n";
        return out.str();
    }
    for (const auto& row : r.rounds) {
        out << "round " << row.round_index << " " << to_string(row.action) << " " << to_string(row.status);
        out << " candidates=" << row.candidates.size();
        if (row.winner_value) {
            out << " winner=#" << *row.winner << " metric=" << Json(*row.winner_value).dump();
        }
        if (row.best_so_far) {
            out << " best=" << Json(*row.best_so_far).dump();
        }
        if (row.winner_holdout) {
            out << " holdout=" << Json(*row.winner_holdout).dump();
        }
        out << "\n";
    }
    if (r.best_candidate) {
        out << "best candidate: #" << *r.best_candidate << " (" << Json(*r.best_value).dump() << ")\n";
    }
    return out.str();
}

std::string report_to_csv(const SessionReport& r)
{
    std::string out = "round,action,status,primary_metric,best_so_far,holdout_metric\n";
    for (const auto& row : r.rounds) {
        out += std::to_string(row.round_index) + "," + std::string(to_string(row.action)) + "," +
               std::string(to_string(row.status)) + "," + cell(row.winner_value) + "," + cell(row.best_so_far) +
               "," + cell(row.winner_holdout) + "\n";
    }
    return out;
}

void write_report(const SessionReport& r, const fs::path& dir)
{
    fs::create_directories(dir);
    write_file(dir / "report.json", report_to_json(r).dump(2) + "\n");
    write_file(dir / "report.txt", report_to_text(r));
    write_file(dir / "history.csv", report_to_csv(r));
}

} // namespace algosearch::control

#include "algosearch/toolkit/state_tools.hpp"

#include "algosearch/error.hpp"
#include "algosearch/holdout/contract.hpp"

#include <cmath>
#include <cstdio>

namespace algosearch::toolkit {

namespace {

using agent::ToolOutcome;

ToolOutcome ok(std::string text, std::optional<Json> structured = std::nullopt)
{
    return {std::move(text), std::nullopt, std::move(structured), false};
}

std::string fmt_value(double v)
{
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string ids(const std::vector<CandidateId>& v)
{
    std::string s;
    for (auto id : v) {
        s += (s.empty() ? "" : ",") + std::to_string(id);
    }
    return s.empty() ? "-" : s;
}

std::string clip(const std::string& s, std::size_t n)
{
    std::string one;
    for (char c : s) {
        one += (c == '\n' || c == '\t') ? ' ' : c;
    }
    return one.size() > n ? one.substr(0, n - 3) + "..." : one;
}

Action parse_suggestion(const std::string& s)
{
    const Action a = parse_action(s);
    if (a != Action::generate && a != Action::tune && a != Action::evolve) {
        throw Error(Errc::parameter, "suggested_next_action must be generate, tune or evolve");
    }
    return a;
}

Json schema(const std::string& props, const std::string& required)
{
    return Json::parse(R"({"type":"object","additionalProperties":false,"properties":)" + props +
                       R"(,"required":)" + required + "}");
}

const char* kMetricProps = R"({"name":{"type":"string"},
    "direction":{"type":"string","enum":["maximize","minimize"]},
    "description":{"type":"string"},
    "target_value":{"type":"number"}})";

} // namespace

std::string format_history(const std::vector<HistoryRow>& rows, const std::string& metric_name)
{
    if (rows.empty()) {
        return "(no candidates yet)\n";
    }
    std::string out = "rank | id | round | action | lineage | parents | " + metric_name +
                      " | suggests | description | analysis\n";
    int rank = 1;
    for (const auto& r : rows) {
        out += std::to_string(rank++) + " | " + std::to_string(r.candidate_id) + " | " + std::to_string(r.round_index) +
               " | " + std::string(to_string(r.action)) + " | " + std::to_string(r.lineage_id) + " | " +
               ids(r.parent_ids) + " | " + fmt_value(r.primary_value) + " | " +
               (r.suggested_next_action ? std::string(to_string(*r.suggested_next_action)) : "-") + " | " +
               clip(r.description, 60) + " | " + clip(r.analysis_excerpt, 80) + "\n";
    }
    return out;
}

StateBridge::StateBridge(Store& store, std::shared_ptr<const WorkspaceGuard> guard, RoundContext context)
    : store_(store), guard_(std::move(guard)), ctx_(std::move(context))
{
}

MetricDefinition StateBridge::metric_from(const Json& a, bool primary) const
{
    MetricDefinition d;
    d.name = a.at("name").get<std::string>();
    d.direction = parse_direction(a.at("direction").get<std::string>());
    d.description = a.value("description", "");
    if (a.contains("target_value")) {
        d.target_value = a["target_value"].get<double>();
    }
    d.is_primary = primary;
    return d;
}

ToolOutcome StateBridge::set_primary_metric(const Json& a)
{
    const auto d = metric_from(a, true);
    store_.define_metric(d);
    return ok("primary metric set: " + d.name + " (" + std::string(to_string(d.direction)) + ")");
}

ToolOutcome StateBridge::define_metric(const Json& a)
{
    const auto d = metric_from(a, false);
    store_.define_metric(d);
    return ok("metric defined: " + d.name + " (" + std::string(to_string(d.direction)) + ")");
}

ToolOutcome StateBridge::log_evaluation(const Json& a)
{
    const std::string name = a.at("metric").get<std::string>();
    const double value = a.at("value").get<double>();
    bool defined = false;
    std::string names;
    for (const auto& d : store_.metric_definitions()) {
        defined = defined || d.name == name;
        names += (names.empty() ? "" : ", ") + d.name;
    }
    if (!defined) {
        throw Error(Errc::rejected, "metric '" + name + "' is not defined; defined metrics: " +
                                        (names.empty() ? "(none)" : names));
    }
    if (!std::isfinite(value)) {
        throw Error(Errc::rejected, "metric '" + name + "' has a non-finite value");
    }
    if (a.contains("candidate_id")) {
        const CandidateId id = a["candidate_id"].get<CandidateId>();
        store_.log_metric({id, name, value});
        return ok("logged " + name + " = " + fmt_value(value) + " for candidate " + std::to_string(id));
    }
    std::lock_guard lock(mu_);
    pending_metrics_[name] = value;
    return ok("logged " + name + " = " + fmt_value(value) + "; it will be attached to your next submission");
}

ToolOutcome StateBridge::view_search_history(const Json& a)
{
    std::optional<std::size_t> top;
    if (a.contains("top_n")) {
        top = a["top_n"].get<std::size_t>();
    }
    const auto primary = store_.primary_metric();
    const auto rows = store_.query_history(top);
    return ok(format_history(rows, primary ? primary->name : "primary"), Json{{"rows", rows.size()}});
}

ToolOutcome StateBridge::view_candidate(const Json& a)
{
    const CandidateId id = a.at("candidate_id").get<CandidateId>();
    const auto c = store_.candidate(id);
    if (!c) {
        throw Error(Errc::not_found, "candidate " + std::to_string(id) + " does not exist");
    }
    std::string out = "candidate " + std::to_string(id) + "\nround: " + std::to_string(c->round_index) +
                      "\naction: " + std::string(to_string(c->action)) + "\nlineage: " + std::to_string(c->lineage_id) +
                      "\nparents: " + ids(c->parent_ids) + "\nartifact: " + c->artifact_path +
                      "\ncandidate_root: " + c->candidate_root + "\ndescription: " + c->description +
                      "\nsettings: " + c->settings.dump() + "\nsuggested_next_action: " +
                      (c->suggested_next_action ? std::string(to_string(*c->suggested_next_action)) : "-") +
                      "\nmetrics:\n";
    for (const auto& m : store_.metrics_for(id)) {
        out += "  " + m.metric_name + " = " + fmt_value(m.value) + "\n";
    }
    out += "analysis:\n" + (c->analysis.empty() ? std::string("  (none)") : c->analysis) + "\n";
    if (!c->notes.empty()) {
        out += "notes: " + c->notes + "\n";
    }
    return ok(out);
}

ToolOutcome StateBridge::view_metric_history(const Json& a)
{
    const std::string name = a.at("metric").get<std::string>();
    const auto samples = store_.metric_history(name);
    if (samples.empty()) {
        return ok("no values recorded for metric '" + name + "'\n");
    }
    std::string out = "id | round | " + name + "\n";
    for (const auto& s : samples) {
        const auto c = store_.candidate(s.candidate_id);
        out += std::to_string(s.candidate_id) + " | " + (c ? std::to_string(c->round_index) : "?") + " | " +
               fmt_value(s.value) + "\n";
    }
    return ok(out);
}

ToolOutcome StateBridge::analyze_results(const Json& a)
{
    const Json& analysis = a.at("analysis");
    std::string text = analysis.is_string() ? analysis.get<std::string>() : analysis.dump(2);
    std::optional<Action> suggestion;
    if (a.contains("suggested_next_action")) {
        suggestion = parse_suggestion(a["suggested_next_action"].get<std::string>());
    }
    std::lock_guard lock(mu_);
    pending_analysis_ = std::move(text);
    if (suggestion) {
        pending_suggestion_ = suggestion;
    }
    return ok("analysis recorded; it will be attached to your next submission");
}

ToolOutcome StateBridge::record_failure(const Json& a)
{
    FailureRecord rec;
    rec.round_index = ctx_.round_index;
    rec.parent_ids = ctx_.parents;
    rec.error_message = a.at("error_message").get<std::string>();
    rec.failing_code_path = a.value("failing_code_path", "");
    rec.settings = a.value("settings", Json::object());
    rec.metadata = a.value("metadata", Json::object());
    const auto id = store_.record_failure(rec);
    return ok("failure " + std::to_string(id) + " recorded");
}

ToolOutcome StateBridge::submit_candidate(const Json& a)
{
    std::lock_guard lock(mu_);
    if (static_cast<int>(submitted_.size()) >= ctx_.max_submissions) {
        throw Error(Errc::rejected, "this worker already submitted " + std::to_string(submitted_.size()) +
                                        " candidate(s); the limit for this round is " +
                                        std::to_string(ctx_.max_submissions));
    }
    const fs::path root = guard_->resolve(ctx_.candidate_root);
    const fs::path artifact_arg = a.at("artifact_path").get<std::string>();
    const fs::path artifact =
        artifact_arg.is_absolute() ? guard_->resolve(artifact_arg) : guard_->resolve(fs::path(ctx_.candidate_root) / artifact_arg);
    if (!path_within(artifact, root)) {
        throw Error(Errc::rejected, "artifact must be inside your candidate directory " + ctx_.candidate_root);
    }
    if (!fs::is_regular_file(artifact)) {
        throw Error(Errc::rejected, "artifact '" + artifact_arg.string() + "' does not exist");
    }
    if (ctx_.holdout_mode) {
        try {
            holdout::parse_contract(root);
        } catch (const Error& e) {
            throw Error(Errc::rejected, std::string("submission rejected: ") + e.what());
        }
    }

    std::map<std::string, double> metrics = pending_metrics_;
    if (a.contains("metrics")) {
        for (const auto& [k, v] : a["metrics"].items()) {
            if (!v.is_number()) {
                throw Error(Errc::parameter, "metric '" + k + "' must be a number");
            }
            metrics[k] = v.get<double>();
        }
    }
    const auto primary = store_.primary_metric();
    if (!primary) {
        throw Error(Errc::state, "no primary metric is defined yet");
    }
    if (!metrics.count(primary->name)) {
        throw Error(Errc::rejected, "submission needs a value for the primary metric '" + primary->name +
                                        "' (log it with log_evaluation or pass it in 'metrics')");
    }

    CandidateRecord rec;
    rec.round_index = ctx_.round_index;
    rec.action = ctx_.action;
    rec.description = a.at("description").get<std::string>();
    rec.artifact_path = guard_->relative(artifact);
    rec.candidate_root = guard_->relative(root);
    rec.parent_ids = ctx_.parents;
    rec.settings = a.value("settings", Json::object());
    rec.analysis = pending_analysis_.value_or("");
    rec.suggested_next_action = pending_suggestion_;
    if (a.contains("suggested_next_action")) {
        rec.suggested_next_action = parse_suggestion(a["suggested_next_action"].get<std::string>());
    }
    rec.notes = a.value("notes", "");
    std::vector<MetricSample> samples;
    for (const auto& [k, v] : metrics) {
        samples.push_back({0, k, v});
    }
    const CandidateId id = store_.submit_candidate(rec, samples);
    submitted_.push_back(id);
    pending_metrics_.clear();
    pending_analysis_.reset();
    pending_suggestion_.reset();
    return ok("candidate " + std::to_string(id) + " submitted (" + primary->name + " = " +
                  fmt_value(metrics[primary->name]) + ")",
              Json{{"candidate_id", id}});
}

std::vector<CandidateId> StateBridge::submitted() const
{
    std::lock_guard lock(mu_);
    return submitted_;
}

void StateBridge::register_tools(agent::ToolRegistry& registry, bool metric_setup, bool allow_submit)
{
    auto bind = [this](ToolOutcome (StateBridge::*fn)(const Json&)) {
        return [this, fn](const Json& a) { return (this->*fn)(a); };
    };
    if (metric_setup) {
        registry.add({"set_primary_metric", "Define the primary metric that ranks every candidate.",
                      schema(kMetricProps, R"(["name","direction"])")},
                     bind(&StateBridge::set_primary_metric));
        registry.add({"define_metric", "Define an additional (secondary) metric.",
                      schema(kMetricProps, R"(["name","direction"])")},
                     bind(&StateBridge::define_metric));
    }
    registry.add({"log_evaluation",
                  "Record a metric value. Without candidate_id it is attached to your next submission.",
                  schema(R"({"metric":{"type":"string"},"value":{"type":"number"},"candidate_id":{"type":"integer"}})",
                         R"(["metric","value"])")},
                 bind(&StateBridge::log_evaluation));
    registry.add({"view_search_history", "Show submitted candidates ranked by the primary metric.",
                  schema(R"({"top_n":{"type":"integer","minimum":1}})", "[]")},
                 bind(&StateBridge::view_search_history));
    registry.add({"view_candidate", "Show one candidate's details, metrics and analysis.",
                  schema(R"({"candidate_id":{"type":"integer"}})", R"(["candidate_id"])")},
                 bind(&StateBridge::view_candidate));
    registry.add({"view_metric_history", "Show every recorded value of one metric.",
                  schema(R"({"metric":{"type":"string"}})", R"(["metric"])")},
                 bind(&StateBridge::view_metric_history));
    registry.add({"analyze_results",
                  "Record your analysis of the results (text or a JSON object) and optionally suggest the next action.",
                  schema(R"({"analysis":{"type":["string","object"]},
                             "suggested_next_action":{"type":"string","enum":["generate","tune","evolve"]}})",
                         R"(["analysis"])")},
                 bind(&StateBridge::analyze_results));
    registry.add({"record_failure", "Record a failed attempt so later rounds can learn from it.",
                  schema(R"({"error_message":{"type":"string"},"failing_code_path":{"type":"string"},
                             "settings":{"type":"object"},"metadata":{"type":"object"}})",
                         R"(["error_message"])")},
                 bind(&StateBridge::record_failure));
    if (allow_submit) {
        registry.add({"submit_candidate",
                      "Formally submit your candidate. artifact_path is relative to your candidate directory.",
                      schema(R"({"description":{"type":"string"},"artifact_path":{"type":"string"},
                                 "settings":{"type":"object"},"notes":{"type":"string"},
                                 "metrics":{"type":"object"},
                                 "suggested_next_action":{"type":"string","enum":["generate","tune","evolve"]}})",
                             R"(["description","artifact_path"])")},
                     bind(&StateBridge::submit_candidate));
    }
}

} // namespace algosearch::toolkit

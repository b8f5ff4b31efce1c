#include "algosearch/holdout/holdout_runner.hpp"

#include "algosearch/error.hpp"
#include "algosearch/toolkit/file_tools.hpp"
#include "algosearch/toolkit/workspace_guard.hpp"

#include <cmath>
#include <iostream>
#include <memory>
#include <mutex>

namespace algosearch::holdout {

namespace fs = std::filesystem;

namespace {

// Removes the directory when the scope ends, whatever the exit path.
class ScopedRemoval {
public:
    explicit ScopedRemoval(fs::path p) : path_(std::move(p)) {}
    ScopedRemoval(const ScopedRemoval&) = delete;
    ScopedRemoval& operator=(const ScopedRemoval&) = delete;
    ~ScopedRemoval() { remove(); }

    // Returns an error description, empty on success.
    std::string remove()
    {
        if (done_) {
            return error_;
        }
        done_ = true;
        std::error_code ec;
        // restore write permission so nothing inside can block the removal
        for (auto it = fs::recursive_directory_iterator(path_, ec); !ec && it != fs::recursive_directory_iterator();
             it.increment(ec)) {
            std::error_code ignore;
            if (!it->is_symlink(ignore)) {
                fs::permissions(it->path(), fs::perms::owner_all, fs::perm_options::add, ignore);
            }
        }
        ec.clear();
        fs::remove_all(path_, ec);
        if (ec || fs::exists(fs::symlink_status(path_))) {
            error_ = "could not remove " + path_.string() + ": " + ec.message();
            std::cerr << "holdout cleanup: " << error_ << "\n";
        }
        return error_;
    }

private:
    fs::path path_;
    bool done_ = false;
    std::string error_;
};

struct Submission {
    std::mutex mu;
    bool submitted = false;
    std::optional<double> metric;
    std::string note;
};

void register_submit_tool(agent::ToolRegistry& reg, std::shared_ptr<Submission> sub)
{
    reg.add({"submit_holdout_result",
             "Submit the holdout test result: a numeric metric, or null with a note explaining why it could not be "
             "obtained. Describe any change you made to the command or environment in the note.",
             Json::parse(R"({"type":"object","additionalProperties":false,
                "properties":{"metric":{"type":["number","null"]},"note":{"type":"string"}},
                "required":["metric"]})")},
            [sub](const Json& a) {
                std::lock_guard lock(sub->mu);
                if (sub->submitted) {
                    throw Error(Errc::rejected, "a holdout result was already submitted");
                }
                const std::string note = a.value("note", "");
                if (a["metric"].is_null()) {
                    if (note.empty()) {
                        throw Error(Errc::parameter, "a null metric needs a note explaining the failure");
                    }
                    sub->metric.reset();
                } else {
                    const double v = a["metric"].get<double>();
                    if (!std::isfinite(v)) {
                        throw Error(Errc::parameter, "metric must be finite; submit null with a note instead");
                    }
                    sub->metric = v;
                }
                sub->note = note;
                sub->submitted = true;
                return agent::ToolOutcome{"holdout result recorded; you are done", {}, {}, false};
            });
}

void record(Store& store, CandidateId id, const HoldoutResult& r)
{
    HoldoutMetricSample s;
    s.candidate_id = id;
    s.value = r.metric;
    if (r.metric) {
        s.remarks = r.note;
    } else {
        s.failure_note = r.note.empty() ? std::string("holdout test failed") : r.note;
    }
    store.record_holdout_metric(s);
}

} // namespace

std::string temp_dir_name(CandidateId id)
{
    return "_holdout_tmp_" + std::to_string(id);
}

std::string default_holdout_system_prompt()
{
    return "You run the holdout test of an already-developed algorithm. The algorithm is read-only: do not change "
           "its logic, parameters or files. Use the recorded execution command. If it fails, you may adjust only "
           "environment details or the command invocation (working directory, data paths, arguments, missing "
           "dependencies). Finish by calling submit_holdout_result with the numeric metric printed by the "
           "evaluation, or with null and a note when no valid metric can be obtained.";
}

std::string holdout_task_prompt(const HoldoutConfig& cfg, const HoldoutContract& contract,
                                const std::string& data_dir_name)
{
    std::string files;
    for (const auto& f : contract.files) {
        files += "  - " + f + (f == contract.main ? " (main)" : "") + "\n";
    }
    return cfg.holdout_prompt + "\n\nThe holdout data is in ./" + data_dir_name +
           "/ in your working directory.\nThe candidate's files (read-only):\n" + files +
           "Recorded execution command: " + contract.command +
           "\nRun it with the run_command tool from the working directory and report the metric line it prints.";
}

HoldoutResult run_holdout(Store& store, CandidateId candidate, const HoldoutConfig& config, agent::Provider& provider)
{
    HoldoutResult result;
    const auto cand = store.candidate(candidate);
    if (!cand) {
        throw Error(Errc::not_found, "candidate " + std::to_string(candidate) + " does not exist");
    }
    const fs::path candidate_root = store.artifact_root() / cand->candidate_root;

    HoldoutContract contract;
    try {
        contract = parse_contract(candidate_root);
    } catch (const Error& e) {
        result.note = std::string("contract error: ") + e.what();
        record(store, candidate, result);
        return result;
    }

    result.temp_dir = candidate_root / temp_dir_name(candidate);
    std::string cleanup_error;
    {
        std::error_code ec;
        fs::remove_all(result.temp_dir, ec);   // leftovers of an interrupted run
        ScopedRemoval cleanup(result.temp_dir);
        try {
            fs::create_directory(result.temp_dir);
            const std::string data_name = config.holdout_dir.filename().empty()
                                              ? config.holdout_dir.parent_path().filename().string()
                                              : config.holdout_dir.filename().string();
            if (!fs::is_directory(config.holdout_dir)) {
                throw Error(Errc::io, "holdout directory " + config.holdout_dir.string() + " does not exist");
            }
            fs::copy(config.holdout_dir, result.temp_dir / data_name,
                     fs::copy_options::recursive | fs::copy_options::copy_symlinks);
            std::vector<std::string> contract_files = contract.files;
            contract_files.push_back(kContractFileName);
            for (const auto& f : contract_files) {
                const fs::path dst = result.temp_dir / f;
                fs::create_directories(dst.parent_path());
                fs::copy_file(candidate_root / f, dst, fs::copy_options::overwrite_existing);
            }

            auto guard = std::make_shared<toolkit::WorkspaceGuard>(result.temp_dir);
            for (const auto& f : contract_files) {
                guard->add_read_only(f);
            }
            agent::ToolRegistry registry;
            toolkit::register_file_tools(registry, guard);
            toolkit::register_exec_tool(registry, guard, config.exec, config.exec_timeout_seconds);
            auto sub = std::make_shared<Submission>();
            register_submit_tool(registry, sub);

            agent::LoopOptions loop = config.loop;
            loop.turn_budget = config.turn_budget;
            const auto run = agent::run_agent_loop(
                config.system_prompt.empty() ? default_holdout_system_prompt() : config.system_prompt,
                holdout_task_prompt(config, contract, data_name), registry, provider, loop);
            result.transcript = run.transcript;
            std::lock_guard lock(sub->mu);
            if (sub->submitted) {
                result.metric = sub->metric;
                result.note = sub->note;
            } else {
                result.note = "holdout agent ended without submitting a result (" +
                              std::string(agent::to_string(run.end)) + (run.reason.empty() ? "" : ": " + run.reason) +
                              ")";
            }
        } catch (const std::exception& e) {
            result.metric.reset();
            result.note = std::string("holdout run failed: ") + e.what();
        }
        cleanup_error = cleanup.remove();
    }
    if (!cleanup_error.empty()) {
        result.note += (result.note.empty() ? "" : "; ") + std::string("cleanup: ") + cleanup_error;
    }
    record(store, candidate, result);
    return result;
}

} // namespace algosearch::holdout

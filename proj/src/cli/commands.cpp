#include "algosearch/cli/commands.hpp"

#include "algosearch/cli/config.hpp"
#include "algosearch/control/report.hpp"
#include "algosearch/control/session.hpp"
#include "algosearch/error.hpp"
#include "algosearch/render/renderer.hpp"
#include "algosearch/toybench/toybench.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <ostream>

namespace algosearch::cli {

namespace fs = std::filesystem;
using namespace control;

namespace {

// Command-line paths are relative to the invocation directory.
fs::path canonical_arg(const std::string& p)
{
    std::error_code ec;
    auto c = fs::weakly_canonical(fs::absolute(p), ec);
    return ec ? fs::absolute(p).lexically_normal() : c;
}

void write_out(const fs::path& p, const std::string& text)
{
    if (p.has_parent_path()) {
        fs::create_directories(p.parent_path());
    }
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << text;
    if (!f) {
        throw Error(Errc::io, "cannot write " + p.string());
    }
}

SessionConfig load_with_override(const std::string& config_path, const std::string& workspace)
{
    SessionConfig cfg = load_config(canonical_arg(config_path));
    if (!workspace.empty()) {
        cfg.workspace_dir = canonical_arg(workspace);
    }
    return cfg;
}

int finish_session(const SessionConfig& cfg, std::ostream& out, std::ostream& err)
{
    SessionHooks hooks;
    hooks.round_started = [&err](int r) { err << "round " << r << " started\n"; };
    hooks.round_finished = [&err](int r) { err << "round " << r << " finished\n"; };
    const SessionResult res = run_session(cfg, {}, hooks);
    for (const int r : res.interrupted_rounds) {
        err << "round " << r << " was interrupted and is marked failed\n";
    }
    {
        const Store store = Store::open_or_create(db_path_of(cfg), WorkspaceLayout{cfg.workspace_dir}.sandbox());
        out << report_to_text(build_report(store));
    }
    out << "reports written to " << WorkspaceLayout{cfg.workspace_dir}.reports().string() << "\n";
    if (res.status == SessionStatus::aborted) {
        err << "session aborted: " << res.stop_reason << "\n";
        return kExitAbort;
    }
    return kExitOk;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Agentic algorithm search over lineage-structured candidates"};
    app.require_subcommand(1);

    std::string config_path;
    std::string workspace;
    auto* init = app.add_subcommand("init", "Create a workspace: data copy, state database, config copy");
    init->add_option("config", config_path, "session config file")->required();
    init->add_option("--workspace", workspace, "override the configured workspace directory");

    auto* run = app.add_subcommand("run", "Initialize if needed, then run or continue the session");
    run->add_option("config", config_path, "session config file")->required();
    run->add_option("--workspace", workspace, "override the configured workspace directory");

    std::string ws_arg;
    auto* resume = app.add_subcommand("resume", "Continue the session recorded in a workspace");
    resume->add_option("workspace", ws_arg, "workspace directory")->required();

    std::string format = "csv";
    std::string out_dir;
    auto* report = app.add_subcommand("report", "Write report.json, report.txt and history.csv; print one");
    report->add_option("workspace", ws_arg, "workspace directory")->required();
    report->add_option("--format", format, "what to print: csv, json or text")
        ->check(CLI::IsMember({"csv", "json", "text"}));
    report->add_option("--out", out_dir, "directory for the report files (default: <workspace>/reports)");

    std::vector<double> taus;
    int trials = 20;
    int rounds = 30;
    std::uint64_t seed = 1;
    toybench::TrialOptions topt;
    std::string csv_path;
    std::string grid_path;
    std::optional<std::uint64_t> landscape_seed;
    std::optional<double> bandwidth;
    unsigned threads = 0;
    auto* toy = app.add_subcommand("toy", "Temperature ablation on the 2-D toy landscape");
    toy->add_option("--tau", taus, "temperature; repeatable, 0 selects deterministic mode (default: 5 and 0)")
        ->check(CLI::NonNegativeNumber);
    toy->add_option("--trials", trials, "trials per temperature")->check(CLI::NonNegativeNumber);
    toy->add_option("--rounds", rounds, "rounds before a trial is censored")->check(CLI::NonNegativeNumber);
    toy->add_option("--seed", seed, "seed of the first trial; trial i uses seed + i");
    toy->add_option("--workers", topt.tune_workers, "tune workers")->check(CLI::PositiveNumber);
    toy->add_option("--tolerance", topt.tolerance, "discovery distance to the maximum");
    toy->add_option("--lambda", topt.lambda_penalty, "same-lineage penalty for evolve")->check(CLI::Range(0.0, 1.0));
    toy->add_option("--landscape-seed", landscape_seed, "landscape seed (default: calibrated reference)");
    toy->add_option("--bandwidth", bandwidth, "kernel bandwidth")->check(CLI::PositiveNumber);
    toy->add_option("--csv", csv_path, "write the per-trial CSV here and print the summary");
    toy->add_option("--grid-csv", grid_path, "also dump landscape values on a 1-unit grid");
    toy->add_option("--threads", threads, "worker threads (0: all cores)");

    std::string input;
    std::string output;
    render::RenderSpec spec;
    auto* rnd = app.add_subcommand("render", "Render a scientific image to an 8-bit PNG");
    rnd->add_option("input", input, "TIFF, PNG or raw image")->required();
    rnd->add_option("-o,--output", output, "output PNG (default: input with .png, or .render.png)");
    rnd->add_option("--plow", spec.p_low, "lower display percentile");
    rnd->add_option("--phigh", spec.p_high, "upper display percentile");
    rnd->add_flag("--log", spec.log_scale, "apply log(1 + I) after clipping");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    try {
        if (*init) {
            const SessionConfig cfg = load_with_override(config_path, workspace);
            if (init_workspace(cfg)) {
                out << "initialized workspace " << cfg.workspace_dir.string() << "\n";
            } else {
                out << "workspace " << cfg.workspace_dir.string() << " is already initialized; nothing to do\n";
            }
            return kExitOk;
        }
        if (*run) {
            const SessionConfig cfg = load_with_override(config_path, workspace);
            if (init_workspace(cfg)) {
                err << "initialized workspace " << cfg.workspace_dir.string() << "\n";
            }
            return finish_session(cfg, out, err);
        }
        if (*resume) {
            const WorkspaceLayout ws{canonical_arg(ws_arg)};
            if (!fs::exists(ws.config_copy())) {
                throw Error(Errc::validation, "no session config in " + ws.root.string() + "; run init first");
            }
            SessionConfig cfg = load_config(ws.config_copy());
            cfg.workspace_dir = ws.root;
            return finish_session(cfg, out, err);
        }
        if (*report) {
            const WorkspaceLayout ws{canonical_arg(ws_arg)};
            fs::path db = ws.root / "state.db";
            if (fs::exists(ws.config_copy())) {
                SessionConfig cfg = load_config(ws.config_copy());
                cfg.workspace_dir = ws.root;
                db = db_path_of(cfg);
            }
            if (!fs::exists(db)) {
                throw Error(Errc::validation, "no state database at " + db.string());
            }
            const Store store = Store::open_or_create(db, ws.sandbox());
            const SessionReport r = build_report(store);
            write_report(r, out_dir.empty() ? ws.reports() : canonical_arg(out_dir));
            if (r.rounds.empty()) {
                err << "the session has no recorded rounds yet; the report is empty\n";
            }
            if (format == "json") {
                out << report_to_json(r).dump(2) << "\n";
            } else if (format == "text") {
                out << report_to_text(r);
            } else {
                out << report_to_csv(r);
            }
            return kExitOk;
        }
        if (*toy) {
            if (taus.empty()) {
                taus = {5.0, 0.0};
            }
            toybench::Scenario sc = toybench::reference_scenario();
            if (landscape_seed) {
                sc.landscape.seed = *landscape_seed;
            }
            if (bandwidth) {
                sc.landscape.bandwidth = *bandwidth;
            }
            topt.rounds_cap = rounds;
            const auto land = toybench::Landscape::build(sc.landscape);
            const auto results = toybench::run_trials(land, sc.init, taus, trials, seed, topt, threads);
            const auto summary = toybench::summarize(results, 10);
            const std::string csv = toybench::trials_csv(results, rounds);
            if (!grid_path.empty()) {
                write_out(canonical_arg(grid_path), land.grid_csv(1.0));
            }
            if (csv_path.empty()) {
                out << csv;
                err << toybench::summary_text(summary, rounds);
            } else {
                write_out(canonical_arg(csv_path), csv);
                out << toybench::summary_text(summary, rounds);
            }
            return kExitOk;
        }
        if (*rnd) {
            const fs::path in = canonical_arg(input);
            fs::path dest;
            if (!output.empty()) {
                dest = canonical_arg(output);
            } else {
                dest = in;
                dest.replace_extension(in.extension() == ".png" ? ".render.png" : ".png");
            }
            const auto res = render::render_file(in, spec, dest);
            out << "wrote " << res.png_path.string() << " (display range " << res.bounds.low << " to "
                << res.bounds.high << (res.bounds.degenerate ? ", degenerate" : "") << ")\n";
            for (const auto& n : res.notes) {
                out << "note: " << n << "\n";
            }
            return kExitOk;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.code() == Errc::validation || e.code() == Errc::parameter ? kExitInvalid : kExitAbort;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitAbort;
    }
    return kExitInvalid;
}

} // namespace algosearch::cli

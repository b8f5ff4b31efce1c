#pragma once

// Runs the environment manager as `uv <add|remove|run> <args...>` inside a
// guarded working directory. Nothing else can be executed through the tool.
// Programs started this way are not constrained by the path guard; isolate
// the whole harness in a container when that matters.

#include "algosearch/agent/tool_registry.hpp"
#include "algosearch/toolkit/workspace_guard.hpp"

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace algosearch::toolkit {

inline constexpr std::size_t kDefaultStreamCap = 64u << 10;

enum class ExecSubcommand { add, remove, run };

std::string_view to_string(ExecSubcommand s);
// Throws Error(Errc::rejected) for anything outside the allowlist.
ExecSubcommand parse_subcommand(std::string_view s);

struct ExecRequest {
    ExecSubcommand subcommand = ExecSubcommand::run;
    std::vector<std::string> arguments;
    std::string working_dir = ".";
    std::chrono::duration<double> timeout{600.0};
};

struct ExecResult {
    int exit_code = 0;        // 128 + signal number when terminated by a signal
    std::string stdout_text;  // at most the stream cap, truncation marked inside
    std::string stderr_text;
    double duration = 0.0;    // seconds
    bool timed_out = false;
    bool stdout_truncated = false;
    bool stderr_truncated = false;
};

struct ExecOptions {
    std::string binary = "uv";
    std::size_t stream_cap = kDefaultStreamCap;
    std::map<std::string, std::string> env;   // added to the inherited environment
};

// Runs argv[0] (searched on PATH) in `cwd` in its own process group. On
// timeout the whole group is killed. Throws Error(Errc::environment) when the
// program cannot be found.
ExecResult run_process(const std::vector<std::string>& argv, const fs::path& cwd,
                       std::chrono::duration<double> timeout, const ExecOptions& options);

ExecResult exec_env(const ExecRequest& request, const WorkspaceGuard& guard, const ExecOptions& options = {});

// Splits a command line on whitespace with single/double quotes and
// backslash escapes, e.g. `uv run "my eval.py" --x 1`.
std::vector<std::string> split_command(const std::string& command);

// Keeps head and tail of `text` so that the result, marker included, fits in
// `cap` bytes.
std::string truncate_stream(const std::string& text, std::size_t cap, bool* truncated = nullptr);

// Human-readable rendering used as the tool message.
std::string format_exec_result(const ExecResult& r);

// Tool "run_command": {subcommand, args, working_dir, timeout_seconds}.
void register_exec_tool(agent::ToolRegistry& registry, std::shared_ptr<const WorkspaceGuard> guard,
                        ExecOptions options = {}, double default_timeout = 600.0);

} // namespace algosearch::toolkit

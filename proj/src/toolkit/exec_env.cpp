#include "algosearch/toolkit/exec_env.hpp"

#include "algosearch/error.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>

extern char** environ;

namespace algosearch::toolkit {

namespace {

// Keeps the first `cap` bytes and a rolling window of the last `cap` bytes.
class StreamCapture {
public:
    explicit StreamCapture(std::size_t cap) : cap_(cap) {}

    void append(const char* data, std::size_t n)
    {
        total_ += n;
        const std::size_t h = std::min(n, cap_ > head_.size() ? cap_ - head_.size() : 0);
        head_.append(data, h);
        if (total_ > cap_) {
            tail_.append(data, n);
            if (tail_.size() > 2 * cap_) {
                tail_.erase(0, tail_.size() - cap_);
            }
        }
    }

    std::string finish(bool* truncated) const
    {
        *truncated = total_ > cap_;
        if (!*truncated) {
            return head_;
        }
        const std::size_t tail_len = std::min(tail_.size(), cap_);
        return truncate_head_tail(head_, tail_.substr(tail_.size() - tail_len), total_, cap_);
    }

    static std::string truncate_head_tail(const std::string& head, const std::string& tail, std::size_t total,
                                          std::size_t cap)
    {
        std::string marker = "\n[... output truncated: " + std::to_string(total) + " bytes total ...]\n";
        if (marker.size() >= cap) {
            return marker.substr(0, cap);
        }
        const std::size_t room = cap - marker.size();
        const std::size_t keep_head = std::min(head.size(), room / 2);
        const std::size_t keep_tail = std::min(tail.size(), room - keep_head);
        return head.substr(0, keep_head) + marker + tail.substr(tail.size() - keep_tail);
    }

private:
    std::size_t cap_;
    std::size_t total_ = 0;
    std::string head_;
    std::string tail_;
};

std::optional<std::string> find_on_path(const std::string& name)
{
    if (name.find('/') != std::string::npos) {
        return ::access(name.c_str(), X_OK) == 0 ? std::optional(name) : std::nullopt;
    }
    const char* path = std::getenv("PATH");
    std::string dirs = path ? path : "/usr/local/bin:/usr/bin:/bin";
    std::size_t start = 0;
    while (start <= dirs.size()) {
        const auto end = dirs.find(':', start);
        std::string dir = dirs.substr(start, end == std::string::npos ? std::string::npos : end - start);
        if (dir.empty()) {
            dir = ".";
        }
        const std::string candidate = dir + "/" + name;
        if (::access(candidate.c_str(), X_OK) == 0) {
            return candidate;
        }
        if (end == std::string::npos) {
            break;
        }
        start = end + 1;
    }
    return std::nullopt;
}

Json obj(const std::string& props, const std::string& required)
{
    return Json::parse(R"({"type":"object","additionalProperties":false,"properties":)" + props +
                       R"(,"required":)" + required + "}");
}

} // namespace

std::string_view to_string(ExecSubcommand s)
{
    switch (s) {
    case ExecSubcommand::add: return "add";
    case ExecSubcommand::remove: return "remove";
    case ExecSubcommand::run: return "run";
    }
    return "unknown";
}

ExecSubcommand parse_subcommand(std::string_view s)
{
    for (auto c : {ExecSubcommand::add, ExecSubcommand::remove, ExecSubcommand::run}) {
        if (to_string(c) == s) {
            return c;
        }
    }
    throw Error(Errc::rejected, "subcommand '" + std::string(s) + "' is not allowed; use add, remove or run");
}

std::string truncate_stream(const std::string& text, std::size_t cap, bool* truncated)
{
    const bool t = text.size() > cap;
    if (truncated) {
        *truncated = t;
    }
    if (!t) {
        return text;
    }
    return StreamCapture::truncate_head_tail(text.substr(0, cap), text.substr(text.size() - std::min(cap, text.size())),
                                             text.size(), cap);
}

ExecResult run_process(const std::vector<std::string>& argv, const fs::path& cwd,
                       std::chrono::duration<double> timeout, const ExecOptions& options)
{
    if (argv.empty()) {
        throw Error(Errc::parameter, "empty command");
    }
    const auto exe = find_on_path(argv[0]);
    if (!exe) {
        throw Error(Errc::environment,
                    "'" + argv[0] + "' was not found on PATH. Install it (for uv: `pip install uv` or "
                    "`curl -LsSf https://astral.sh/uv/install.sh | sh`) and make sure it is on PATH.");
    }
    int out_pipe[2];
    int err_pipe[2];
    if (::pipe2(out_pipe, O_CLOEXEC) != 0 || ::pipe2(err_pipe, O_CLOEXEC) != 0) {
        throw Error(Errc::io, std::string("pipe failed: ") + std::strerror(errno));
    }

    std::vector<std::string> env_store;
    for (char** e = environ; *e; ++e) {
        const std::string entry(*e);
        const std::string key = entry.substr(0, entry.find('='));
        if (!options.env.count(key)) {
            env_store.push_back(entry);
        }
    }
    for (const auto& [k, v] : options.env) {
        env_store.push_back(k + "=" + v);
    }
    std::vector<char*> envp;
    for (auto& e : env_store) {
        envp.push_back(e.data());
    }
    envp.push_back(nullptr);
    std::vector<std::string> args = argv;
    std::vector<char*> cargv;
    for (auto& a : args) {
        cargv.push_back(a.data());
    }
    cargv.push_back(nullptr);
    const std::string cwd_s = cwd.string();
    const std::string exe_s = *exe;

    const auto start = std::chrono::steady_clock::now();
    const pid_t pid = ::fork();
    if (pid < 0) {
        throw Error(Errc::io, std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::setpgid(0, 0);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::dup2(err_pipe[1], STDERR_FILENO);
        const int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0) {
            ::dup2(devnull, STDIN_FILENO);
        }
        if (::chdir(cwd_s.c_str()) != 0) {
            _exit(126);
        }
        ::execve(exe_s.c_str(), cargv.data(), envp.data());
        _exit(127);
    }
    ::setpgid(pid, pid);
    ::close(out_pipe[1]);
    ::close(err_pipe[1]);

    StreamCapture out(options.stream_cap);
    StreamCapture err(options.stream_cap);
    pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
    bool open_fd[2] = {true, true};
    ExecResult result;
    int status = 0;
    bool exited = false;
    std::chrono::steady_clock::time_point exited_at;
    char buf[8192];

    for (;;) {
        const auto now = std::chrono::steady_clock::now();
        if (!exited && now - start >= timeout) {
            ::kill(-pid, SIGKILL);
            result.timed_out = true;
            ::waitpid(pid, &status, 0);
            exited = true;
            exited_at = now;
        }
        if (!exited && ::waitpid(pid, &status, WNOHANG) == pid) {
            exited = true;
            exited_at = now;
        }
        if (!open_fd[0] && !open_fd[1]) {
            break;
        }
        // Grandchildren may hold the pipes open; give them a short grace period.
        if (exited && now - exited_at > std::chrono::milliseconds(500)) {
            ::kill(-pid, SIGKILL);
            break;
        }
        for (auto& f : fds) {
            f.revents = 0;
        }
        pollfd active[2];
        int map[2];
        nfds_t n = 0;
        for (int i = 0; i < 2; ++i) {
            if (open_fd[i]) {
                active[n] = fds[i];
                map[n++] = i;
            }
        }
        if (::poll(active, n, 50) < 0 && errno != EINTR) {
            break;
        }
        for (nfds_t k = 0; k < n; ++k) {
            if (!(active[k].revents & (POLLIN | POLLHUP | POLLERR))) {
                continue;
            }
            const int i = map[k];
            const ssize_t got = ::read(fds[i].fd, buf, sizeof buf);
            if (got > 0) {
                (i == 0 ? out : err).append(buf, static_cast<std::size_t>(got));
            } else if (got == 0 || (errno != EINTR && errno != EAGAIN)) {
                open_fd[i] = false;
            }
        }
    }
    if (!exited) {
        ::waitpid(pid, &status, 0);
    }
    ::kill(-pid, SIGKILL);   // stray members of the group, if any
    ::close(out_pipe[0]);
    ::close(err_pipe[0]);

    result.duration = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        result.exit_code = 128 + WTERMSIG(status);
    }
    result.stdout_text = out.finish(&result.stdout_truncated);
    result.stderr_text = err.finish(&result.stderr_truncated);
    return result;
}

ExecResult exec_env(const ExecRequest& request, const WorkspaceGuard& guard, const ExecOptions& options)
{
    const fs::path cwd = guard.resolve(request.working_dir.empty() ? "." : request.working_dir);
    if (!fs::is_directory(cwd)) {
        throw Error(Errc::not_found, "working directory does not exist: " + request.working_dir);
    }
    if (request.timeout.count() <= 0) {
        throw Error(Errc::parameter, "timeout must be positive");
    }
    if (request.subcommand != ExecSubcommand::run && !fs::exists(cwd / "pyproject.toml")) {
        // `uv add/remove` need a project file; give each working directory its own.
        std::ofstream(cwd / "pyproject.toml") << "[project]\nname = \"candidate\"\nversion = \"0.0.0\"\n"
                                                 "requires-python = \">=3.8\"\ndependencies = []\n";
    }
    std::vector<std::string> argv{options.binary, std::string(to_string(request.subcommand))};
    argv.insert(argv.end(), request.arguments.begin(), request.arguments.end());
    return run_process(argv, cwd, request.timeout, options);
}

std::vector<std::string> split_command(const std::string& command)
{
    std::vector<std::string> out;
    std::string cur;
    bool in_token = false;
    char quote = 0;
    for (std::size_t i = 0; i < command.size(); ++i) {
        const char c = command[i];
        if (quote) {
            if (c == quote) {
                quote = 0;
            } else if (c == '\\' && quote == '"' && i + 1 < command.size()) {
                cur += command[++i];
            } else {
                cur += c;
            }
        } else if (c == '"' || c == '\'') {
            quote = c;
            in_token = true;
        } else if (c == '\\' && i + 1 < command.size()) {
            cur += command[++i];
            in_token = true;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            if (in_token) {
                out.push_back(std::move(cur));
                cur.clear();
                in_token = false;
            }
        } else {
            cur += c;
            in_token = true;
        }
    }
    if (quote) {
        throw Error(Errc::parameter, "unterminated quote in command: " + command);
    }
    if (in_token) {
        out.push_back(std::move(cur));
    }
    return out;
}

std::string format_exec_result(const ExecResult& r)
{
    char dur[32];
    std::snprintf(dur, sizeof dur, "%.2f", r.duration);
    std::string out = "exit_code: " + std::to_string(r.exit_code) + "\nduration_seconds: " + dur + "\n";
    if (r.timed_out) {
        out += "timed_out: true (process group killed)\n";
    }
    out += "--- stdout ---\n" + r.stdout_text;
    if (!r.stdout_text.empty() && r.stdout_text.back() != '\n') {
        out += '\n';
    }
    out += "--- stderr ---\n" + r.stderr_text;
    return out;
}

void register_exec_tool(agent::ToolRegistry& registry, std::shared_ptr<const WorkspaceGuard> guard,
                        ExecOptions options, double default_timeout)
{
    registry.add({"run_command",
                  "Run the environment manager: `uv add <pkgs>`, `uv remove <pkgs>` or `uv run <script> [args]` in a "
                  "workspace directory. Output streams are capped at " + std::to_string(options.stream_cap) + " bytes.",
                  obj(R"({"subcommand":{"type":"string","enum":["add","remove","run"]},
                          "args":{"type":"array","items":{"type":"string"}},
                          "working_dir":{"type":"string"},
                          "timeout_seconds":{"type":"number","minimum":1}})",
                      R"(["subcommand","args"])")},
                 [guard, options, default_timeout](const Json& a) {
                     ExecRequest req;
                     req.subcommand = parse_subcommand(a["subcommand"].get<std::string>());
                     req.arguments = a["args"].get<std::vector<std::string>>();
                     req.working_dir = a.value("working_dir", ".");
                     req.timeout = std::chrono::duration<double>(a.value("timeout_seconds", default_timeout));
                     const ExecResult r = exec_env(req, *guard, options);
                     agent::ToolOutcome o;
                     o.text = format_exec_result(r);
                     o.structured = Json{{"exit_code", r.exit_code}, {"timed_out", r.timed_out}, {"duration", r.duration}};
                     o.is_error = r.exit_code != 0;
                     return o;
                 });
}

} // namespace algosearch::toolkit

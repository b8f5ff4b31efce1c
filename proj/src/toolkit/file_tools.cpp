#include "algosearch/toolkit/file_tools.hpp"

#include "algosearch/error.hpp"

#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <system_error>

namespace algosearch::toolkit {

namespace {

using agent::ToolOutcome;

[[noreturn]] void io_error(const std::string& what, const std::error_code& ec = {})
{
    throw Error(Errc::io, ec ? what + ": " + ec.message() : what);
}

std::string read_all(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        io_error("cannot open " + p.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void atomic_write(const fs::path& target, const std::string& content)
{
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) {
        io_error("cannot create " + target.parent_path().string(), ec);
    }
    std::random_device rd;
    const fs::path tmp = target.parent_path() / ("." + target.filename().string() + ".tmp" + std::to_string(rd()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            io_error("cannot write " + target.string());
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            fs::remove(tmp, ec);
            io_error("write failed for " + target.string());
        }
    }
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        io_error("cannot replace " + target.string(), ec);
    }
}

std::size_t count_occurrences(const std::string& hay, const std::string& needle)
{
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
        ++n;
    }
    return n;
}

Json obj(const std::string& props, const std::string& required)
{
    return Json::parse(R"({"type":"object","additionalProperties":false,"properties":)" + props +
                       R"(,"required":)" + required + "}");
}

} // namespace

std::string list_dir(const WorkspaceGuard& guard, const fs::path& dir, bool recursive, std::size_t max_entries)
{
    const fs::path d = guard.resolve(dir);
    if (!fs::is_directory(d)) {
        throw Error(Errc::not_found, "not a directory: " + dir.string());
    }
    std::vector<std::pair<std::string, std::string>> lines;   // (relative path, line)
    std::error_code ec;
    auto describe = [&](const fs::directory_entry& e) {
        const auto st = e.symlink_status();
        char kind = fs::is_symlink(st) ? 'l' : fs::is_directory(st) ? 'd' : 'f';
        std::uintmax_t size = 0;
        if (kind == 'f') {
            size = e.file_size(ec);
        }
        const std::string rel = e.path().lexically_relative(d).string();
        lines.emplace_back(rel, std::string(1, kind) + " " + std::to_string(size) + " " + rel);
    };
    bool truncated = false;
    if (recursive) {
        for (auto it = fs::recursive_directory_iterator(d, fs::directory_options::skip_permission_denied, ec);
             it != fs::recursive_directory_iterator(); it.increment(ec)) {
            if (lines.size() >= max_entries) {
                truncated = true;
                break;
            }
            describe(*it);
        }
    } else {
        for (const auto& e : fs::directory_iterator(d, ec)) {
            if (lines.size() >= max_entries) {
                truncated = true;
                break;
            }
            describe(e);
        }
    }
    std::sort(lines.begin(), lines.end());
    std::string out;
    for (const auto& l : lines) {
        out += l.second + "\n";
    }
    if (lines.empty()) {
        out = "(empty directory)\n";
    }
    if (truncated) {
        out += "[listing truncated at " + std::to_string(max_entries) + " entries]\n";
    }
    return out;
}

FileWindow read_window(const WorkspaceGuard& guard, const fs::path& file, std::size_t offset,
                       std::optional<std::size_t> length)
{
    const fs::path p = guard.resolve(file);
    if (!fs::is_regular_file(p)) {
        throw Error(Errc::not_found, "no such file: " + file.string());
    }
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        io_error("cannot open " + file.string());
    }
    FileWindow w;
    w.total_size = static_cast<std::size_t>(fs::file_size(p));
    w.offset = std::min(offset, w.total_size);
    const std::size_t n = std::min(length.value_or(w.total_size), w.total_size - w.offset);
    w.bytes.resize(n);
    in.seekg(static_cast<std::streamoff>(w.offset));
    in.read(w.bytes.data(), static_cast<std::streamsize>(n));
    return w;
}

void write_file(const WorkspaceGuard& guard, const fs::path& file, const std::string& content)
{
    const fs::path p = guard.resolve_for_write(file);
    if (fs::is_directory(p)) {
        throw Error(Errc::parameter, "cannot write over a directory: " + file.string());
    }
    atomic_write(p, content);
}

void edit_file(const WorkspaceGuard& guard, const fs::path& file, const std::string& old_text,
               const std::string& new_text)
{
    if (old_text.empty()) {
        throw Error(Errc::parameter, "edit needs a non-empty old_text span");
    }
    const fs::path p = guard.resolve_for_write(file);
    if (!fs::is_regular_file(p)) {
        throw Error(Errc::not_found, "no such file: " + file.string());
    }
    std::string content = read_all(p);
    const std::size_t n = count_occurrences(content, old_text);
    if (n == 0) {
        throw Error(Errc::parameter, "old_text not found in " + file.string());
    }
    if (n > 1) {
        throw Error(Errc::parameter, "old_text is not unique in " + file.string() + ": it occurs " +
                                         std::to_string(n) + " times; include more surrounding context");
    }
    content.replace(content.find(old_text), old_text.size(), new_text);
    atomic_write(p, content);
}

void copy_path(const WorkspaceGuard& guard, const fs::path& from, const fs::path& to, bool overwrite)
{
    const fs::path src = guard.resolve(from);
    const fs::path dst = guard.resolve_for_write(to);
    std::error_code ec;
    if (!fs::exists(src)) {
        throw Error(Errc::not_found, "no such path: " + from.string());
    }
    if (fs::exists(dst) && !overwrite) {
        throw Error(Errc::conflict, "destination exists: " + to.string() + " (pass overwrite=true)");
    }
    if (path_within(dst, src)) {
        throw Error(Errc::parameter, "cannot copy a directory into itself");
    }
    fs::create_directories(dst.parent_path(), ec);
    auto opts = fs::copy_options::recursive | fs::copy_options::copy_symlinks;
    if (overwrite) {
        opts |= fs::copy_options::overwrite_existing;
    }
    fs::copy(src, dst, opts, ec);
    if (ec) {
        io_error("copy " + from.string() + " -> " + to.string() + " failed", ec);
    }
}

void move_path(const WorkspaceGuard& guard, const fs::path& from, const fs::path& to)
{
    const fs::path src = guard.resolve_for_write(from);
    const fs::path dst = guard.resolve_for_write(to);
    if (!fs::exists(fs::symlink_status(src))) {
        throw Error(Errc::not_found, "no such path: " + from.string());
    }
    if (src == guard.root()) {
        throw Error(Errc::parameter, "cannot move the workspace root");
    }
    if (fs::exists(dst)) {
        throw Error(Errc::conflict, "destination exists: " + to.string());
    }
    if (path_within(dst, src)) {
        throw Error(Errc::parameter, "cannot move a directory into itself");
    }
    std::error_code ec;
    fs::create_directories(dst.parent_path(), ec);
    fs::rename(src, dst, ec);
    if (ec) {
        io_error("move " + from.string() + " -> " + to.string() + " failed", ec);
    }
}

void delete_path(const WorkspaceGuard& guard, const fs::path& target, bool recursive)
{
    const fs::path p = guard.resolve_for_write(target);
    if (p == guard.root()) {
        throw Error(Errc::parameter, "cannot delete the workspace root");
    }
    const auto st = fs::symlink_status(p);
    if (!fs::exists(st)) {
        throw Error(Errc::not_found, "no such path: " + target.string());
    }
    std::error_code ec;
    if (fs::is_directory(st) && !fs::is_empty(p)) {
        if (!recursive) {
            throw Error(Errc::parameter, "directory " + target.string() + " is not empty; pass recursive=true");
        }
        fs::remove_all(p, ec);
    } else {
        fs::remove(p, ec);
    }
    if (ec) {
        io_error("delete " + target.string() + " failed", ec);
    }
}

void register_file_tools(agent::ToolRegistry& registry, std::shared_ptr<const WorkspaceGuard> guard,
                         std::size_t read_cap)
{
    registry.add({"list_files", "List a workspace directory. Each line is '<d|f|l> <bytes> <path>'.",
                  obj(R"({"path":{"type":"string"},"recursive":{"type":"boolean"}})", "[]")},
                 [guard](const Json& a) {
                     return ToolOutcome{list_dir(*guard, a.value("path", "."), a.value("recursive", false)), {}, {}, false};
                 });
    registry.add({"read_file",
                  "Read a text file. Use offset/length (bytes) to page through large files; output is capped at " +
                      std::to_string(read_cap) + " bytes.",
                  obj(R"({"path":{"type":"string"},"offset":{"type":"integer","minimum":0},"length":{"type":"integer","minimum":1}})",
                      R"(["path"])")},
                 [guard, read_cap](const Json& a) {
                     const auto offset = a.value("offset", std::size_t{0});
                     const auto length = std::min(a.value("length", read_cap), read_cap);
                     const FileWindow w = read_window(*guard, a["path"].get<std::string>(), offset, length);
                     std::string text = w.bytes;
                     if (w.offset > 0 || w.offset + w.bytes.size() < w.total_size) {
                         text += "\n[bytes " + std::to_string(w.offset) + "-" + std::to_string(w.offset + w.bytes.size()) +
                                 " of " + std::to_string(w.total_size) + "]";
                     }
                     return ToolOutcome{text, {}, Json{{"total_size", w.total_size}}, false};
                 });
    registry.add({"write_file", "Create or overwrite a file with the given content.",
                  obj(R"({"path":{"type":"string"},"content":{"type":"string"}})", R"(["path","content"])")},
                 [guard](const Json& a) {
                     const auto content = a["content"].get<std::string>();
                     write_file(*guard, a["path"].get<std::string>(), content);
                     return ToolOutcome{"wrote " + std::to_string(content.size()) + " bytes to " +
                                            a["path"].get<std::string>(),
                                        {}, {}, false};
                 });
    registry.add({"edit_file", "Replace one exact, unique text span in a file.",
                  obj(R"({"path":{"type":"string"},"old_text":{"type":"string"},"new_text":{"type":"string"}})",
                      R"(["path","old_text","new_text"])")},
                 [guard](const Json& a) {
                     edit_file(*guard, a["path"].get<std::string>(), a["old_text"].get<std::string>(),
                               a["new_text"].get<std::string>());
                     return ToolOutcome{"edited " + a["path"].get<std::string>(), {}, {}, false};
                 });
    registry.add({"copy_file", "Copy a file or directory tree.",
                  obj(R"({"source":{"type":"string"},"destination":{"type":"string"},"overwrite":{"type":"boolean"}})",
                      R"(["source","destination"])")},
                 [guard](const Json& a) {
                     copy_path(*guard, a["source"].get<std::string>(), a["destination"].get<std::string>(),
                               a.value("overwrite", false));
                     return ToolOutcome{"copied", {}, {}, false};
                 });
    registry.add({"move_file", "Move or rename a file or directory.",
                  obj(R"({"source":{"type":"string"},"destination":{"type":"string"}})", R"(["source","destination"])")},
                 [guard](const Json& a) {
                     move_path(*guard, a["source"].get<std::string>(), a["destination"].get<std::string>());
                     return ToolOutcome{"moved", {}, {}, false};
                 });
    registry.add({"delete_file", "Delete a file, or a directory (non-empty ones need recursive=true).",
                  obj(R"({"path":{"type":"string"},"recursive":{"type":"boolean"}})", R"(["path"])")},
                 [guard](const Json& a) {
                     delete_path(*guard, a["path"].get<std::string>(), a.value("recursive", false));
                     return ToolOutcome{"deleted " + a["path"].get<std::string>(), {}, {}, false};
                 });
}

} // namespace algosearch::toolkit

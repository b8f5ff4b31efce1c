#pragma once

// Guarded file operations. Every path argument passes the guard; mutating
// operations also respect the guard's read-only set. Failures throw Error
// (guard rejections throw GuardError); the tool wrappers turn them into
// error outcomes.

#include "algosearch/agent/tool_registry.hpp"
#include "algosearch/toolkit/workspace_guard.hpp"

#include <cstddef>
#include <memory>
#include <optional>
#include <string>

namespace algosearch::toolkit {

inline constexpr std::size_t kDefaultReadCap = 64u << 10;

// One line per entry: "<d|f|l> <size> <relative path>", sorted by path.
std::string list_dir(const WorkspaceGuard& guard, const fs::path& dir, bool recursive, std::size_t max_entries = 500);

struct FileWindow {
    std::string bytes;
    std::size_t offset = 0;
    std::size_t total_size = 0;
};

// Bytes [offset, offset + length) clipped to the file; `length` defaults to
// the rest of the file.
FileWindow read_window(const WorkspaceGuard& guard, const fs::path& file, std::size_t offset,
                       std::optional<std::size_t> length);

// Writes through a temporary file in the same directory and renames it into
// place. Parent directories are created.
void write_file(const WorkspaceGuard& guard, const fs::path& file, const std::string& content);

// Replaces the single occurrence of `old_text`; zero or several occurrences
// are errors.
void edit_file(const WorkspaceGuard& guard, const fs::path& file, const std::string& old_text,
               const std::string& new_text);

void copy_path(const WorkspaceGuard& guard, const fs::path& from, const fs::path& to, bool overwrite);
void move_path(const WorkspaceGuard& guard, const fs::path& from, const fs::path& to);

// A non-empty directory requires `recursive`.
void delete_path(const WorkspaceGuard& guard, const fs::path& target, bool recursive);

// list_files, read_file, write_file, edit_file, copy_file, move_file, delete_file.
void register_file_tools(agent::ToolRegistry& registry, std::shared_ptr<const WorkspaceGuard> guard,
                         std::size_t read_cap = kDefaultReadCap);

} // namespace algosearch::toolkit

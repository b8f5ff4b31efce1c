#pragma once

// Path checker for every agent-facing filesystem operation.
//
// A target is resolved component by component: "." is dropped, ".." moves to
// the parent of the already-resolved prefix, and every symbolic link met on
// the way (including a dangling final one) is replaced by its target and
// resolution continues through it. Components past the first missing one are
// appended lexically. Only then is containment checked, against the
// canonical root. Relative targets are taken relative to the root.
//
// The guard does not constrain what programs started through exec_env do.

#include <filesystem>
#include <set>
#include <string>

namespace algosearch::toolkit {

namespace fs = std::filesystem;

inline constexpr int kMaxSymlinkHops = 40;

// Resolves `target` against `base` as described above. Throws
// GuardError when more than kMaxSymlinkHops links are followed.
fs::path resolve_path(const fs::path& base, const fs::path& target);

// True when `p` equals `root` or lies below it, comparing whole components.
bool path_within(const fs::path& p, const fs::path& root);

class WorkspaceGuard {
public:
    // Throws Error(Errc::guard) when `root` is not an existing directory.
    explicit WorkspaceGuard(const fs::path& root);

    const fs::path& root() const { return root_; }

    // Canonical resolved path, or GuardError carrying the resolved offender.
    fs::path resolve(const fs::path& target) const;

    // As resolve, and additionally rejects read-only paths, anything below a
    // read-only directory and any directory that contains a read-only path.
    fs::path resolve_for_write(const fs::path& target) const;

    // Marks a path (file or directory subtree) read-only for this guard.
    void add_read_only(const fs::path& target);
    bool is_read_only(const fs::path& resolved) const;

    // Root-relative form of a resolved path ("." for the root itself).
    std::string relative(const fs::path& resolved) const;

private:
    fs::path root_;
    std::set<fs::path> read_only_;
};

} // namespace algosearch::toolkit

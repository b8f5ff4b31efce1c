#include "algosearch/toolkit/workspace_guard.hpp"

#include "algosearch/error.hpp"

#include <deque>
#include <system_error>

namespace algosearch::toolkit {

fs::path resolve_path(const fs::path& base, const fs::path& target)
{
    std::deque<fs::path> pending;
    for (const auto& c : target.relative_path()) {
        pending.push_back(c);
    }
    fs::path current = target.is_absolute() ? target.root_path() : base;
    bool missing = false;   // once a component is missing, the rest is lexical
    int hops = 0;
    while (!pending.empty()) {
        const fs::path c = pending.front();
        pending.pop_front();
        if (c.empty() || c == ".") {
            continue;
        }
        if (c == "..") {
            current = current.has_relative_path() ? current.parent_path() : current;
            continue;
        }
        fs::path next = current / c;
        if (!missing) {
            std::error_code ec;
            const auto st = fs::symlink_status(next, ec);
            if (st.type() == fs::file_type::symlink) {
                if (++hops > kMaxSymlinkHops) {
                    throw GuardError("too many levels of symbolic links while resolving " + target.string(), next);
                }
                const fs::path link = fs::read_symlink(next, ec);
                if (ec) {
                    throw GuardError("cannot read symbolic link " + next.string(), next);
                }
                std::deque<fs::path> expanded;
                for (const auto& lc : link.relative_path()) {
                    expanded.push_back(lc);
                }
                pending.insert(pending.begin(), expanded.begin(), expanded.end());
                if (link.is_absolute()) {
                    current = link.root_path();
                }
                continue;
            }
            if (ec || st.type() == fs::file_type::not_found) {
                missing = true;
            }
        }
        current = std::move(next);
    }
    return current;
}

bool path_within(const fs::path& p, const fs::path& root)
{
    auto pi = p.begin();
    for (auto ri = root.begin(); ri != root.end(); ++ri, ++pi) {
        if (ri->empty() && std::next(ri) == root.end()) {
            break;   // trailing separator on root
        }
        if (pi == p.end() || *pi != *ri) {
            return false;
        }
    }
    return true;
}

WorkspaceGuard::WorkspaceGuard(const fs::path& root)
{
    std::error_code ec;
    root_ = fs::canonical(root, ec);
    if (ec || !fs::is_directory(root_)) {
        throw Error(Errc::guard, "workspace root is not an existing directory: " + root.string());
    }
}

fs::path WorkspaceGuard::resolve(const fs::path& target) const
{
    if (target.empty()) {
        throw GuardError("empty path", root_);
    }
    const fs::path resolved = resolve_path(root_, target);
    if (!path_within(resolved, root_)) {
        throw GuardError("path '" + target.string() + "' resolves to " + resolved.string() +
                             ", outside the workspace " + root_.string(),
                         resolved);
    }
    return resolved;
}

fs::path WorkspaceGuard::resolve_for_write(const fs::path& target) const
{
    fs::path resolved = resolve(target);
    if (is_read_only(resolved)) {
        throw GuardError("path '" + target.string() + "' is read-only", resolved);
    }
    return resolved;
}

void WorkspaceGuard::add_read_only(const fs::path& target)
{
    read_only_.insert(resolve(target));
}

bool WorkspaceGuard::is_read_only(const fs::path& resolved) const
{
    for (const auto& ro : read_only_) {
        if (path_within(resolved, ro) || path_within(ro, resolved)) {
            return true;
        }
    }
    return false;
}

std::string WorkspaceGuard::relative(const fs::path& resolved) const
{
    const fs::path rel = resolved.lexically_relative(root_);
    return rel.empty() ? std::string(".") : rel.string();
}

} // namespace algosearch::toolkit

#pragma once

// Session configuration file: INI sections [session], [controller],
// [sampling], [agent] and [provider]. Relative paths are resolved against
// the file's directory; unknown sections or keys are rejected so typos do
// not pass silently. Optional numbers accept "none".

#include "algosearch/control/session.hpp"

#include <filesystem>
#include <string>

namespace algosearch::cli {

// Throws Error(Errc::validation) naming the section and key at fault.
control::SessionConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
control::SessionConfig load_config(const std::filesystem::path& path);

// Emits every field; parse_config(serialize_config(c), any) == c for
// configurations with absolute paths.
std::string serialize_config(const control::SessionConfig& cfg);

} // namespace algosearch::cli

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace algosearch {

// Error categories shared by every module. Callers branch on the code,
// the message is meant for humans (and for the agent, when surfaced as a
// tool result).
enum class Errc {
    storage,
    migration,
    corrupt,
    conflict,
    rejected,
    not_found,
    state,
    parameter,
    empty_pool,
    insufficient_pool,
    unrenderable,
    unsupported,
    decode,
    contract,
    environment,
    guard,
    provider,
    load,
    io,
    validation,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

// Raised by the workspace guard; carries the resolved offending path.
class GuardError : public Error {
public:
    GuardError(const std::string& message, std::filesystem::path resolved)
        : Error(Errc::guard, message), resolved_(std::move(resolved)) {}

    const std::filesystem::path& resolved() const noexcept { return resolved_; }

private:
    std::filesystem::path resolved_;
};

} // namespace algosearch

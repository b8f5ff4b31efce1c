#pragma once

// holdout_test_info.json: the three-field contract a candidate writes so the
// holdout agent knows what to run.
//   files:   candidate-root-relative paths the holdout run needs
//   main:    the algorithm entry point, one of `files`
//   command: a `uv run ...` command line

#include <filesystem>
#include <string>
#include <vector>

namespace algosearch::holdout {

inline constexpr const char* kContractFileName = "holdout_test_info.json";

struct HoldoutContract {
    std::vector<std::string> files;
    std::string main;
    std::string command;

    bool operator==(const HoldoutContract&) const = default;
};

// Reads and validates the contract in `candidate_root`. Every problem throws
// Error(Errc::contract) with a message that tells the agent how to fix it.
HoldoutContract parse_contract(const std::filesystem::path& candidate_root);

} // namespace algosearch::holdout

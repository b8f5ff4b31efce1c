#include "algosearch/holdout/contract.hpp"

#include "algosearch/error.hpp"
#include "algosearch/store/types.hpp"
#include "algosearch/toolkit/exec_env.hpp"
#include "algosearch/toolkit/workspace_guard.hpp"

#include <algorithm>
#include <fstream>

namespace algosearch::holdout {

namespace fs = std::filesystem;

namespace {

const std::string kSchemaHint =
    " Expected {\"files\": [\"algo.py\", \"eval.py\"], \"main\": \"algo.py\", \"command\": \"uv run eval.py\"}.";

[[noreturn]] void contract_error(const std::string& what)
{
    throw Error(Errc::contract, std::string(kContractFileName) + ": " + what + kSchemaHint);
}

} // namespace

HoldoutContract parse_contract(const fs::path& candidate_root)
{
    const fs::path file = candidate_root / kContractFileName;
    std::ifstream in(file);
    if (!in) {
        throw Error(Errc::contract, std::string(kContractFileName) + " is missing from " + candidate_root.string() +
                                        ". Write it in the candidate root so the holdout test can run." + kSchemaHint);
    }
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        contract_error(std::string("malformed JSON (") + e.what() + ").");
    }
    if (!doc.is_object()) {
        contract_error("the document must be a JSON object.");
    }
    HoldoutContract c;
    if (!doc.contains("files") || !doc["files"].is_array() || doc["files"].empty()) {
        contract_error("'files' must be a non-empty array of relative paths.");
    }
    for (const auto& f : doc["files"]) {
        if (!f.is_string() || f.get<std::string>().empty()) {
            contract_error("every entry of 'files' must be a non-empty string.");
        }
        c.files.push_back(f.get<std::string>());
    }
    if (!doc.contains("main") || !doc["main"].is_string()) {
        contract_error("'main' must be a string naming one of 'files'.");
    }
    c.main = doc["main"].get<std::string>();
    if (!doc.contains("command") || !doc["command"].is_string()) {
        contract_error("'command' must be a string such as \"uv run eval.py\".");
    }
    c.command = doc["command"].get<std::string>();

    if (std::find(c.files.begin(), c.files.end(), c.main) == c.files.end()) {
        contract_error("main '" + c.main + "' is not listed in 'files'.");
    }
    const toolkit::WorkspaceGuard guard(candidate_root);
    for (const auto& f : c.files) {
        if (fs::path(f).is_absolute()) {
            contract_error("'" + f + "' must be relative to the candidate root.");
        }
        fs::path resolved;
        try {
            resolved = guard.resolve(f);
        } catch (const GuardError&) {
            contract_error("'" + f + "' points outside the candidate root.");
        }
        if (!fs::is_regular_file(resolved)) {
            contract_error("listed file '" + f + "' does not exist in the candidate root.");
        }
    }
    std::vector<std::string> argv;
    try {
        argv = toolkit::split_command(c.command);
    } catch (const Error& e) {
        contract_error(e.what());
    }
    if (argv.size() < 3 || argv[0] != "uv" || argv[1] != "run") {
        contract_error("'command' must have the form \"uv run <script> [args]\".");
    }
    return c;
}

} // namespace algosearch::holdout

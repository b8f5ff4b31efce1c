#pragma once

// Replays a fixed list of turns, ignoring tool results.
//
// Script format: a JSON array of turn objects, each exactly one of
//   {"tool_calls": [{"name": ..., "arguments": {...}, "id": ...}], "text": ...}
//   {"final": "text"}
// ("text" and "id" are optional). Exhausting the script yields a turn with
// no tool calls.
//
// String values inside arguments may contain placeholders:
//   {{name}}          a variable supplied when the provider is created
//   {{metric:ID}}     the value of the last "metric: <number>" line in the
//                     output of the earlier tool call with id ID; when the
//                     placeholder is the whole string it becomes a number

#include "algosearch/agent/provider.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace algosearch::agent {

struct ScriptTurn {
    std::optional<std::string> text;
    std::vector<ToolCall> tool_calls;
    bool final = false;
};

// Throws Errc::load naming the file and the problem.
std::vector<ScriptTurn> parse_script(const Json& doc, const std::string& origin = "script");
std::vector<ScriptTurn> load_script(const std::filesystem::path& path);

// Last "metric: <number>" line in `text`.
std::optional<double> parse_metric_line(const std::string& text);

class ScriptedProvider final : public Provider {
public:
    explicit ScriptedProvider(std::vector<ScriptTurn> script, std::map<std::string, std::string> vars = {});

    ProviderTurn next_turn(const std::vector<Message>& context, const std::vector<ToolSchema>& tools) override;

    std::size_t turns_served() const { return next_; }

private:
    Json substitute(const Json& value, const std::vector<Message>& context) const;

    std::vector<ScriptTurn> script_;
    std::map<std::string, std::string> vars_;
    std::size_t next_ = 0;
};

} // namespace algosearch::agent

#pragma once

#include "algosearch/agent/messages.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace algosearch::agent {

using ToolHandler = std::function<ToolOutcome(const Json& arguments)>;

// Checks `value` against the supported JSON-schema subset: type, properties,
// required, enum, items, additionalProperties = false, minimum/maximum.
// Returns a description of the first problem, or nothing when valid.
std::optional<std::string> check_schema(const Json& schema, const Json& value, const std::string& where = "arguments");

// One-line summary of a parameters schema, e.g. "path (string, required), offset (integer)".
std::string describe_parameters(const Json& schema);

class ToolRegistry {
public:
    // Throws Errc::parameter on a duplicate name.
    void add(ToolSchema schema, ToolHandler handler);

    bool contains(const std::string& name) const;
    bool empty() const { return tools_.empty(); }
    std::vector<ToolSchema> schemas() const;
    std::vector<std::string> names() const;

    // Never throws for tool-level problems: unknown tools, schema violations
    // and exceptions raised by handlers come back as error outcomes.
    ToolOutcome execute(const ToolCall& call) const;

private:
    struct Entry {
        ToolSchema schema;
        ToolHandler handler;
    };
    std::vector<std::string> order_;
    std::map<std::string, Entry> tools_;
};

} // namespace algosearch::agent

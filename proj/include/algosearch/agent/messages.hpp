#pragma once

#include "algosearch/store/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace algosearch::agent {

enum class Role { system, user, assistant, tool };

std::string_view to_string(Role r);
Role parse_role(std::string_view s);

// A text part, or an image part carrying encoded PNG bytes.
struct ContentPart {
    std::string text;
    std::vector<std::uint8_t> png;
    std::string source_path;

    bool is_image() const { return !png.empty(); }

    static ContentPart make_text(std::string t) { return {std::move(t), {}, {}}; }
    static ContentPart make_image(std::vector<std::uint8_t> bytes, std::string source)
    {
        return {{}, std::move(bytes), std::move(source)};
    }

    bool operator==(const ContentPart&) const = default;
};

struct ToolCall {
    std::string id;
    std::string name;
    Json arguments = Json::object();

    bool operator==(const ToolCall&) const = default;
};

// Tool-role messages hold text parts only; the loop enforces it.
struct Message {
    Role role = Role::user;
    std::vector<ContentPart> parts;
    std::optional<std::string> tool_call_id;   // tool role only
    std::vector<ToolCall> tool_calls;          // assistant role only

    std::string text() const;   // text parts joined by newlines

    bool operator==(const Message&) const = default;
};

Message text_message(Role role, std::string text);

struct ToolSchema {
    std::string name;
    std::string description;
    Json parameters = Json::object();   // JSON-schema object
};

struct ToolOutcome {
    std::string text;
    std::optional<std::filesystem::path> image_path;
    std::optional<Json> structured;
    bool is_error = false;

    static ToolOutcome error(std::string text) { return {std::move(text), std::nullopt, std::nullopt, true}; }
};

struct ProviderTurn {
    std::optional<std::string> assistant_text;
    std::vector<ToolCall> tool_calls;   // empty ends the loop
};

// Replaces each invalid UTF-8 byte with U+FFFD so text always serializes.
std::string sanitize_utf8(const std::string& s);

// Transcript serialization. Image parts are written as their source path,
// byte count and a content digest rather than the bytes themselves.
Json to_json(const Message& m);
Json transcript_to_json(const std::vector<Message>& messages);

} // namespace algosearch::agent

#include "algosearch/agent/messages.hpp"

#include "algosearch/error.hpp"
#include "algosearch/net/http.hpp"

namespace algosearch::agent {

std::string_view to_string(Role r)
{
    switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    case Role::tool: return "tool";
    }
    return "unknown";
}

Role parse_role(std::string_view s)
{
    for (Role r : {Role::system, Role::user, Role::assistant, Role::tool}) {
        if (to_string(r) == s) {
            return r;
        }
    }
    throw Error(Errc::parameter, "unknown role '" + std::string(s) + "'");
}

std::string sanitize_utf8(const std::string& s)
{
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = 0;
        std::uint32_t min = 0;
        if (c < 0x80) {
            len = 1;
        } else if ((c & 0xE0) == 0xC0) {
            len = 2;
            min = 0x80;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            min = 0x800;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            min = 0x10000;
        }
        bool ok = len > 0 && i + len <= s.size();
        std::uint32_t cp = len == 1 ? c : (len == 2 ? c & 0x1F : len == 3 ? c & 0x0F : c & 0x07);
        for (std::size_t k = 1; ok && k < len; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            ok = (cc & 0xC0) == 0x80;
            cp = (cp << 6) | (cc & 0x3F);
        }
        ok = ok && cp >= min && cp <= 0x10FFFF && !(cp >= 0xD800 && cp <= 0xDFFF);
        if (ok) {
            out.append(s, i, len);
            i += len;
        } else {
            out += "\xEF\xBF\xBD";
            ++i;
        }
    }
    return out;
}

std::string Message::text() const
{
    std::string out;
    for (const auto& p : parts) {
        if (p.is_image()) {
            continue;
        }
        if (!out.empty()) {
            out += '\n';
        }
        out += p.text;
    }
    return out;
}

Message text_message(Role role, std::string text)
{
    Message m;
    m.role = role;
    m.parts.push_back(ContentPart::make_text(std::move(text)));
    return m;
}

Json to_json(const Message& m)
{
    Json j;
    j["role"] = to_string(m.role);
    Json parts = Json::array();
    for (const auto& p : m.parts) {
        if (p.is_image()) {
            parts.push_back({{"image", {{"source_path", p.source_path},
                                        {"bytes", p.png.size()},
                                        {"sha256", net::sha256_hex(p.png.data(), p.png.size())}}}});
        } else {
            parts.push_back({{"text", p.text}});
        }
    }
    j["parts"] = std::move(parts);
    if (m.tool_call_id) {
        j["tool_call_id"] = *m.tool_call_id;
    }
    if (!m.tool_calls.empty()) {
        Json calls = Json::array();
        for (const auto& c : m.tool_calls) {
            calls.push_back({{"id", c.id}, {"name", c.name}, {"arguments", c.arguments}});
        }
        j["tool_calls"] = std::move(calls);
    }
    return j;
}

Json transcript_to_json(const std::vector<Message>& messages)
{
    Json out = Json::array();
    for (const auto& m : messages) {
        out.push_back(to_json(m));
    }
    return out;
}

} // namespace algosearch::agent

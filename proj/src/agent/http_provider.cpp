#include "algosearch/agent/http_provider.hpp"

#include <cstdlib>

namespace algosearch::agent {

namespace {

Json message_to_wire(const Message& m)
{
    Json out{{"role", std::string(to_string(m.role))}};
    if (m.role == Role::tool) {
        out["tool_call_id"] = m.tool_call_id.value_or("");
        out["content"] = m.text();
        return out;
    }
    bool has_image = false;
    for (const auto& p : m.parts) {
        has_image = has_image || p.is_image();
    }
    if (!has_image) {
        out["content"] = m.text();
    } else {
        Json parts = Json::array();
        for (const auto& p : m.parts) {
            if (p.is_image()) {
                const std::vector<unsigned char> bytes(p.png.begin(), p.png.end());
                parts.push_back({{"type", "image_url"},
                                 {"image_url", {{"url", "data:image/png;base64," + net::base64_encode(bytes)}}}});
            } else {
                parts.push_back({{"type", "text"}, {"text", p.text}});
            }
        }
        out["content"] = std::move(parts);
    }
    if (m.role == Role::assistant && !m.tool_calls.empty()) {
        Json calls = Json::array();
        for (const auto& c : m.tool_calls) {
            calls.push_back({{"id", c.id},
                             {"type", "function"},
                             {"function", {{"name", c.name}, {"arguments", c.arguments.dump()}}}});
        }
        out["tool_calls"] = std::move(calls);
        if (m.text().empty()) {
            out["content"] = nullptr;
        }
    }
    return out;
}

} // namespace

Json build_chat_request(const HttpProviderConfig& cfg, const std::vector<Message>& context,
                        const std::vector<ToolSchema>& tools)
{
    Json body{{"model", cfg.model}, {"messages", Json::array()}};
    for (const auto& m : context) {
        body["messages"].push_back(message_to_wire(m));
    }
    if (!tools.empty()) {
        Json t = Json::array();
        for (const auto& s : tools) {
            t.push_back({{"type", "function"},
                         {"function", {{"name", s.name}, {"description", s.description}, {"parameters", s.parameters}}}});
        }
        body["tools"] = std::move(t);
    }
    if (cfg.temperature >= 0) {
        body["temperature"] = cfg.temperature;
    }
    return body;
}

ProviderTurn parse_chat_response(const std::string& body)
{
    Json doc;
    try {
        doc = Json::parse(body);
    } catch (const Json::parse_error& e) {
        throw ProviderError(std::string("malformed provider response: ") + e.what(), false);
    }
    if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
        throw ProviderError("provider response has no choices", false);
    }
    const Json& msg = doc["choices"][0].value("message", Json::object());
    ProviderTurn turn;
    if (msg.contains("content") && msg["content"].is_string()) {
        turn.assistant_text = msg["content"].get<std::string>();
    }
    if (msg.contains("tool_calls") && msg["tool_calls"].is_array()) {
        std::size_t k = 0;
        for (const auto& c : msg["tool_calls"]) {
            ToolCall call;
            call.id = c.value("id", "call_" + std::to_string(k));
            const Json fn = c.value("function", Json::object());
            call.name = fn.value("name", "");
            const Json args = fn.value("arguments", Json("{}"));
            try {
                call.arguments = args.is_string() ? Json::parse(args.get<std::string>()) : args;
            } catch (const Json::parse_error&) {
                // handed to the tool registry, which reports the schema mismatch
                call.arguments = Json{{"_unparsed_arguments", args}};
            }
            if (call.arguments.is_null()) {
                call.arguments = Json::object();
            }
            turn.tool_calls.push_back(std::move(call));
            ++k;
        }
    }
    return turn;
}

HttpChatProvider::HttpChatProvider(HttpProviderConfig cfg, std::shared_ptr<net::HttpTransport> transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport))
{
    if (cfg_.model.empty()) {
        throw Error(Errc::validation, "provider model name is empty");
    }
    if (const char* key = std::getenv(cfg_.api_key_env.c_str())) {
        api_key_ = key;
    }
    if (!transport_) {
        transport_ = net::make_http_transport();
    }
}

ProviderTurn HttpChatProvider::next_turn(const std::vector<Message>& context, const std::vector<ToolSchema>& tools)
{
    net::HttpRequest req;
    req.method = "POST";
    std::string base = cfg_.endpoint;
    while (!base.empty() && base.back() == '/') {
        base.pop_back();
    }
    req.url = base + "/chat/completions";
    req.body = build_chat_request(cfg_, context, tools).dump();
    req.timeout = cfg_.timeout;
    if (!api_key_.empty()) {
        req.headers.emplace_back("Authorization", "Bearer " + api_key_);
    }
    net::HttpResponse resp;
    try {
        resp = transport_->send(req);
    } catch (const Error& e) {
        throw ProviderError(std::string("provider transport error: ") + e.what(), true);
    }
    if (resp.status == 429 || resp.status >= 500) {
        throw ProviderError("provider returned HTTP " + std::to_string(resp.status), true);
    }
    if (resp.status != 200) {
        throw ProviderError("provider returned HTTP " + std::to_string(resp.status) + ": " + resp.body.substr(0, 500),
                            false);
    }
    return parse_chat_response(resp.body);
}

} // namespace algosearch::agent

#pragma once

// Chat-completions provider over HTTP(S) with function calling.
//
// Request: POST {endpoint}/chat/completions with {model, messages, tools}.
// Image parts are sent as data:image/png;base64 URLs. The reply's first
// choice supplies the assistant text and tool calls.

#include "algosearch/agent/provider.hpp"
#include "algosearch/net/http.hpp"

#include <chrono>
#include <memory>
#include <string>

namespace algosearch::agent {

struct HttpProviderConfig {
    std::string endpoint = "https://api.openai.com/v1";
    std::string model;
    std::string api_key_env = "ALGOSEARCH_API_KEY";
    std::chrono::seconds timeout{300};
    double temperature = -1;   // negative: omit, use the server default

    bool operator==(const HttpProviderConfig&) const = default;
};

// Serializes the request body; exposed for tests.
Json build_chat_request(const HttpProviderConfig& cfg, const std::vector<Message>& context,
                        const std::vector<ToolSchema>& tools);

// Parses a chat-completions response body. Throws ProviderError (permanent)
// on a malformed body.
ProviderTurn parse_chat_response(const std::string& body);

class HttpChatProvider final : public Provider {
public:
    // The API key is read from cfg.api_key_env at construction; an unset or
    // empty variable is allowed for servers without authentication.
    HttpChatProvider(HttpProviderConfig cfg, std::shared_ptr<net::HttpTransport> transport = nullptr);

    ProviderTurn next_turn(const std::vector<Message>& context, const std::vector<ToolSchema>& tools) override;

private:
    HttpProviderConfig cfg_;
    std::string api_key_;
    std::shared_ptr<net::HttpTransport> transport_;
};

} // namespace algosearch::agent

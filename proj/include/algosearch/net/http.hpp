#pragma once

// Minimal HTTP(S) client surface shared by the chat provider and the web
// search backends, so both can be exercised against fakes.

#include <chrono>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace algosearch::net {

struct HttpRequest {
    std::string method = "GET";   // GET or POST
    std::string url;              // absolute http:// or https:// URL
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
    std::string content_type = "application/json";
    std::chrono::seconds timeout{60};
};

struct HttpResponse {
    int status = 0;
    std::string body;
    std::map<std::string, std::string> headers;   // lower-case names

    std::string header(const std::string& lower_name) const;
};

class HttpTransport {
public:
    virtual ~HttpTransport() = default;

    // Throws Error(Errc::io) when no response could be obtained.
    virtual HttpResponse send(const HttpRequest& request) = 0;
};

// Real network transport.
std::unique_ptr<HttpTransport> make_http_transport();

// Percent-encodes a query component.
std::string url_encode(const std::string& s);

std::string base64_encode(const std::vector<unsigned char>& bytes);
std::string sha256_hex(const void* data, std::size_t size);

} // namespace algosearch::net

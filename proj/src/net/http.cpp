#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "algosearch/error.hpp"
#include "algosearch/net/http.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cstdio>

namespace algosearch::net {

std::string HttpResponse::header(const std::string& lower_name) const
{
    const auto it = headers.find(lower_name);
    return it == headers.end() ? std::string() : it->second;
}

namespace {

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

class HttplibTransport final : public HttpTransport {
public:
    HttpResponse send(const HttpRequest& request) override
    {
        const auto scheme_end = request.url.find("://");
        if (scheme_end == std::string::npos) {
            throw Error(Errc::parameter, "URL without scheme: " + request.url);
        }
        const auto path_start = request.url.find('/', scheme_end + 3);
        const std::string origin = request.url.substr(0, path_start);
        const std::string path = path_start == std::string::npos ? "/" : request.url.substr(path_start);

        httplib::Client client(origin);
        client.set_connection_timeout(std::chrono::seconds(10));
        client.set_read_timeout(request.timeout);
        client.set_write_timeout(request.timeout);
        client.set_follow_location(true);

        httplib::Headers headers;
        for (const auto& [k, v] : request.headers) {
            headers.emplace(k, v);
        }
        httplib::Result res = request.method == "POST"
                                  ? client.Post(path, headers, request.body, request.content_type)
                                  : client.Get(path, headers);
        if (!res) {
            throw Error(Errc::io, "HTTP request to " + origin + " failed: " + httplib::to_string(res.error()));
        }
        HttpResponse out;
        out.status = res->status;
        out.body = res->body;
        for (const auto& [k, v] : res->headers) {
            out.headers[lower(k)] = v;
        }
        return out;
    }
};

} // namespace

std::unique_ptr<HttpTransport> make_http_transport()
{
    return std::make_unique<HttplibTransport>();
}

std::string url_encode(const std::string& s)
{
    std::string out;
    for (const unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            char buf[4];
            std::snprintf(buf, sizeof buf, "%%%02X", c);
            out += buf;
        }
    }
    return out;
}

std::string base64_encode(const std::vector<unsigned char>& bytes)
{
    std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::string sha256_hex(const void* data, std::size_t size)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data, size, md, &len, EVP_sha256(), nullptr);
    std::string out;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        out += buf;
    }
    return out;
}

} // namespace algosearch::net

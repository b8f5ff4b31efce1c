#pragma once

// Literature and web search behind one normalized record type. Backends:
// arXiv (Atom feed), Semantic Scholar Graph API and Tavily. Transport and
// rate-limit problems come back as outcomes, never as crashes.

#include "algosearch/agent/tool_registry.hpp"
#include "algosearch/net/http.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace algosearch::toolkit {

enum class SearchBackend { arxiv, semantic_scholar, tavily };

std::string_view to_string(SearchBackend b);
SearchBackend parse_backend(std::string_view s);

struct SearchRecord {
    std::string title;
    std::string snippet;
    std::string identifier;   // arXiv id, paper URL or page URL

    bool operator==(const SearchRecord&) const = default;
};

enum class SearchStatus { ok, unavailable, rate_limited, failed };

struct SearchOutcome {
    SearchStatus status = SearchStatus::ok;
    std::vector<SearchRecord> records;
    std::string message;
    std::optional<int> retry_after_seconds;
};

struct SearchConfig {
    bool offline = false;
    std::shared_ptr<net::HttpTransport> transport;   // null: real network
    std::string arxiv_endpoint = "https://export.arxiv.org/api/query";
    std::string semantic_scholar_endpoint = "https://api.semanticscholar.org/graph/v1/paper/search";
    std::string tavily_endpoint = "https://api.tavily.com/search";
    std::string semantic_scholar_key_env = "SEMANTIC_SCHOLAR_API_KEY";
    std::string tavily_key_env = "TAVILY_API_KEY";
    std::size_t snippet_chars = 300;
};

// Throws Error(Errc::parameter) on an empty query or max_results < 1.
SearchOutcome web_search(SearchBackend backend, const std::string& query, int max_results, const SearchConfig& config);

// Response parsers, exposed for tests. Throw Error(Errc::decode).
std::vector<SearchRecord> parse_arxiv_feed(const std::string& xml, std::size_t snippet_chars);
std::vector<SearchRecord> parse_semantic_scholar(const std::string& json, std::size_t snippet_chars);
std::vector<SearchRecord> parse_tavily(const std::string& json, std::size_t snippet_chars);

// Serves fixed responses: the first rule whose key is a substring of the
// request URL wins. Unmatched requests get a 404. Records every request.
class CannedTransport final : public net::HttpTransport {
public:
    void add(std::string url_substring, net::HttpResponse response);
    net::HttpResponse send(const net::HttpRequest& request) override;

    std::vector<net::HttpRequest> requests;

private:
    std::vector<std::pair<std::string, net::HttpResponse>> rules_;
};

// Tool "web_search": {backend, query, max_results}.
void register_search_tool(agent::ToolRegistry& registry, SearchConfig config);

} // namespace algosearch::toolkit

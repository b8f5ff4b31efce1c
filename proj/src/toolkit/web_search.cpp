#include "algosearch/toolkit/web_search.hpp"

#include "algosearch/error.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <cctype>
#include <cstdlib>
#include <sstream>

namespace algosearch::toolkit {

namespace {

std::string squash(const std::string& s, std::size_t limit)
{
    std::string out;
    bool space = false;
    for (const unsigned char c : s) {
        if (std::isspace(c)) {
            space = !out.empty();
            continue;
        }
        if (space) {
            out += ' ';
            space = false;
        }
        out += static_cast<char>(c);
    }
    if (out.size() > limit) {
        out = out.substr(0, limit) + "...";
    }
    return out;
}

std::string env_or_empty(const std::string& name)
{
    const char* v = std::getenv(name.c_str());
    return v ? v : "";
}

Json parse_json(const std::string& body, std::string_view backend)
{
    try {
        return Json::parse(body);
    } catch (const Json::parse_error& e) {
        throw Error(Errc::decode, std::string(backend) + ": malformed response: " + e.what());
    }
}

std::string str_or_empty(const Json& j, const char* key)
{
    return j.contains(key) && j[key].is_string() ? j[key].get<std::string>() : std::string();
}

} // namespace

std::string_view to_string(SearchBackend b)
{
    switch (b) {
    case SearchBackend::arxiv: return "arxiv";
    case SearchBackend::semantic_scholar: return "semantic_scholar";
    case SearchBackend::tavily: return "tavily";
    }
    return "unknown";
}

SearchBackend parse_backend(std::string_view s)
{
    for (auto b : {SearchBackend::arxiv, SearchBackend::semantic_scholar, SearchBackend::tavily}) {
        if (to_string(b) == s) {
            return b;
        }
    }
    throw Error(Errc::parameter, "unknown search backend '" + std::string(s) + "'");
}

std::vector<SearchRecord> parse_arxiv_feed(const std::string& xml, std::size_t snippet_chars)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream in(xml);
        pt::read_xml(in, tree);
    } catch (const pt::xml_parser_error& e) {
        throw Error(Errc::decode, std::string("arxiv: malformed feed: ") + e.what());
    }
    const auto feed = tree.get_child_optional("feed");
    if (!feed) {
        throw Error(Errc::decode, "arxiv: response is not an Atom feed");
    }
    std::vector<SearchRecord> out;
    for (const auto& [tag, entry] : *feed) {
        if (tag != "entry") {
            continue;
        }
        SearchRecord r;
        r.title = squash(entry.get<std::string>("title", ""), 1000);
        r.snippet = squash(entry.get<std::string>("summary", ""), snippet_chars);
        std::string id = squash(entry.get<std::string>("id", ""), 1000);
        if (const auto pos = id.find("/abs/"); pos != std::string::npos) {
            id = "arXiv:" + id.substr(pos + 5);
        }
        r.identifier = id;
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<SearchRecord> parse_semantic_scholar(const std::string& json, std::size_t snippet_chars)
{
    const Json doc = parse_json(json, "semantic_scholar");
    std::vector<SearchRecord> out;
    if (!doc.contains("data")) {
        return out;
    }
    for (const auto& p : doc["data"]) {
        SearchRecord r;
        r.title = squash(str_or_empty(p, "title"), 1000);
        r.snippet = squash(str_or_empty(p, "abstract"), snippet_chars);
        r.identifier = str_or_empty(p, "url");
        if (r.identifier.empty()) {
            r.identifier = str_or_empty(p, "paperId");
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<SearchRecord> parse_tavily(const std::string& json, std::size_t snippet_chars)
{
    const Json doc = parse_json(json, "tavily");
    std::vector<SearchRecord> out;
    if (!doc.contains("results")) {
        return out;
    }
    for (const auto& p : doc["results"]) {
        out.push_back({squash(str_or_empty(p, "title"), 1000), squash(str_or_empty(p, "content"), snippet_chars),
                       str_or_empty(p, "url")});
    }
    return out;
}

SearchOutcome web_search(SearchBackend backend, const std::string& query, int max_results, const SearchConfig& config)
{
    if (squash(query, query.size()).empty()) {
        throw Error(Errc::parameter, "search query is empty");
    }
    if (max_results < 1) {
        throw Error(Errc::parameter, "max_results must be at least 1");
    }
    const std::string name(to_string(backend));
    if (config.offline) {
        return {SearchStatus::unavailable, {}, name + ": web search is disabled (offline mode)", std::nullopt};
    }
    net::HttpRequest req;
    req.timeout = std::chrono::seconds(30);
    const std::string n = std::to_string(max_results);
    switch (backend) {
    case SearchBackend::arxiv:
        req.url = config.arxiv_endpoint + "?search_query=all:" + net::url_encode(query) + "&start=0&max_results=" + n;
        break;
    case SearchBackend::semantic_scholar: {
        req.url = config.semantic_scholar_endpoint + "?query=" + net::url_encode(query) + "&limit=" + n +
                  "&fields=title,abstract,url";
        const auto key = env_or_empty(config.semantic_scholar_key_env);
        if (!key.empty()) {
            req.headers.emplace_back("x-api-key", key);
        }
        break;
    }
    case SearchBackend::tavily: {
        const auto key = env_or_empty(config.tavily_key_env);
        if (key.empty()) {
            return {SearchStatus::unavailable, {}, name + ": no API key in $" + config.tavily_key_env, std::nullopt};
        }
        req.method = "POST";
        req.url = config.tavily_endpoint;
        req.headers.emplace_back("Authorization", "Bearer " + key);
        req.body = Json{{"query", query}, {"max_results", max_results}}.dump();
        break;
    }
    }

    auto transport = config.transport;
    if (!transport) {
        transport = net::make_http_transport();
    }
    net::HttpResponse resp;
    try {
        resp = transport->send(req);
    } catch (const Error& e) {
        return {SearchStatus::unavailable, {}, name + ": " + e.what(), std::nullopt};
    }
    if (resp.status == 429) {
        SearchOutcome o{SearchStatus::rate_limited, {}, name + ": rate limited (HTTP 429)", std::nullopt};
        const std::string ra = resp.header("retry-after");
        o.retry_after_seconds = ra.empty() ? 60 : std::atoi(ra.c_str());
        o.message += "; retry after " + std::to_string(*o.retry_after_seconds) + " s";
        return o;
    }
    if (resp.status != 200) {
        return {SearchStatus::failed, {}, name + ": HTTP " + std::to_string(resp.status) +
                                               (resp.status == 401 || resp.status == 403 ? " (authentication failed)" : ""),
                std::nullopt};
    }
    SearchOutcome o;
    try {
        switch (backend) {
        case SearchBackend::arxiv: o.records = parse_arxiv_feed(resp.body, config.snippet_chars); break;
        case SearchBackend::semantic_scholar: o.records = parse_semantic_scholar(resp.body, config.snippet_chars); break;
        case SearchBackend::tavily: o.records = parse_tavily(resp.body, config.snippet_chars); break;
        }
    } catch (const Error& e) {
        return {SearchStatus::failed, {}, e.what(), std::nullopt};
    }
    if (o.records.size() > static_cast<std::size_t>(max_results)) {
        o.records.resize(static_cast<std::size_t>(max_results));
    }
    o.message = name + ": " + std::to_string(o.records.size()) + " result(s)";
    return o;
}

void CannedTransport::add(std::string url_substring, net::HttpResponse response)
{
    rules_.emplace_back(std::move(url_substring), std::move(response));
}

net::HttpResponse CannedTransport::send(const net::HttpRequest& request)
{
    requests.push_back(request);
    for (const auto& [key, resp] : rules_) {
        if (request.url.find(key) != std::string::npos) {
            return resp;
        }
    }
    return {404, "not found", {}};
}

void register_search_tool(agent::ToolRegistry& registry, SearchConfig config)
{
    registry.add({"web_search", "Search arXiv, Semantic Scholar or the web (Tavily) for literature and references.",
                  Json::parse(R"({"type":"object","additionalProperties":false,
                     "properties":{"backend":{"type":"string","enum":["arxiv","semantic_scholar","tavily"]},
                                   "query":{"type":"string"},
                                   "max_results":{"type":"integer","minimum":1,"maximum":20}},
                     "required":["backend","query"]})")},
                 [config](const Json& a) {
                     const auto o = web_search(parse_backend(a["backend"].get<std::string>()),
                                               a["query"].get<std::string>(), a.value("max_results", 5), config);
                     agent::ToolOutcome out;
                     out.text = o.message + "\n";
                     Json records = Json::array();
                     for (std::size_t i = 0; i < o.records.size(); ++i) {
                         const auto& r = o.records[i];
                         out.text += std::to_string(i + 1) + ". " + r.title + " [" + r.identifier + "]\n   " + r.snippet + "\n";
                         records.push_back({{"title", r.title}, {"snippet", r.snippet}, {"identifier", r.identifier}});
                     }
                     out.structured = Json{{"records", records}};
                     out.is_error = o.status != SearchStatus::ok;
                     return out;
                 });
}

} // namespace algosearch::toolkit

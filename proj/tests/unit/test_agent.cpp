#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "algosearch/agent/agent_loop.hpp"
#include "algosearch/agent/http_provider.hpp"
#include "algosearch/agent/scripted_provider.hpp"
#include "algosearch/error.hpp"
#include "algosearch/render/image.hpp"
#include "algosearch/render/renderer.hpp"
#include "test_support.hpp"

#include <atomic>
#include <random>
#include <thread>

using namespace algosearch;
using namespace algosearch::agent;
using testsupport::TempDir;
namespace fs = std::filesystem;

namespace {

LoopOptions fast_options(int budget = 60)
{
    LoopOptions o;
    o.turn_budget = budget;
    o.retry_backoff = std::chrono::milliseconds(1);
    return o;
}

// Registry with an echo tool, a failing tool and an image tool writing into `dir`.
ToolRegistry test_registry(const fs::path& dir)
{
    ToolRegistry reg;
    reg.add({"echo", "Echo text", Json::parse(R"({"type":"object","properties":{"text":{"type":"string"}},"required":["text"],"additionalProperties":false})")},
            [](const Json& a) { return ToolOutcome{a["text"].get<std::string>(), std::nullopt, std::nullopt, false}; });
    reg.add({"boom", "Always throws", Json::parse(R"({"type":"object"})")},
            [](const Json&) -> ToolOutcome { throw std::runtime_error("kaboom"); });
    reg.add({"view_image", "Render an image", Json::parse(R"({"type":"object","properties":{"name":{"type":"string"}},"required":["name"]})")},
            [dir](const Json& a) {
                render::ImageBuffer img{16, 8, 1, {}};
                for (int i = 0; i < 128; ++i) {
                    img.pixels.push_back(i);
                }
                const fs::path out = dir / (a["name"].get<std::string>() + ".png");
                render::render_to_png(img, {}, out);
                return ToolOutcome{"rendered " + out.string(), out, std::nullopt, false};
            });
    return reg;
}

ScriptedProvider scripted(const std::string& json, std::map<std::string, std::string> vars = {})
{
    return ScriptedProvider(parse_script(Json::parse(json)), std::move(vars));
}

class CountingProvider final : public Provider {
public:
    explicit CountingProvider(Provider& inner) : inner_(inner) {}
    ProviderTurn next_turn(const std::vector<Message>& c, const std::vector<ToolSchema>& t) override
    {
        ++calls;
        return inner_.next_turn(c, t);
    }
    int calls = 0;

private:
    Provider& inner_;
};

// Always asks for another echo.
class LoopingProvider final : public Provider {
public:
    ProviderTurn next_turn(const std::vector<Message>&, const std::vector<ToolSchema>&) override
    {
        return {std::nullopt, {{"c" + std::to_string(n++), "echo", Json{{"text", "again"}}}}};
    }
    int n = 0;
};

class FlakyProvider final : public Provider {
public:
    FlakyProvider(int failures, bool transient) : failures_(failures), transient_(transient) {}
    ProviderTurn next_turn(const std::vector<Message>&, const std::vector<ToolSchema>&) override
    {
        ++calls;
        if (failures_-- > 0) {
            throw ProviderError("flaky", transient_);
        }
        return {std::string("done"), {}};
    }
    int calls = 0;

private:
    int failures_;
    bool transient_;
};

void check_purity(const std::vector<Message>& t)
{
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i].role != Role::tool) {
            continue;
        }
        for (const auto& p : t[i].parts) {
            REQUIRE_FALSE(p.is_image());
        }
    }
}

} // namespace

TEST_CASE("immediate final turn: two messages in, one assistant turn out")
{
    TempDir dir("agent");
    auto reg = test_registry(dir.path());
    auto p = scripted(R"([{"final": "nothing to do"}])");
    const auto r = run_agent_loop("SYS", "TASK", reg, p, fast_options());
    CHECK(r.end == LoopEnd::completed);
    REQUIRE(r.transcript.size() == 3);
    CHECK(r.transcript[0] == text_message(Role::system, "SYS"));
    CHECK(r.transcript[1] == text_message(Role::user, "TASK"));
    CHECK(r.transcript[2].role == Role::assistant);
    CHECK(r.transcript[2].text() == "nothing to do");
    CHECK(r.turns == 1);
}

TEST_CASE("view_image call yields a tool message, one image follow-up and the final turn")
{
    TempDir dir("agent");
    auto reg = test_registry(dir.path());
    auto p = scripted(R"([{"tool_calls":[{"name":"view_image","arguments":{"name":"a"},"id":"v1"}]},{"final":"seen"}])");
    const auto r = run_agent_loop("S", "T", reg, p, fast_options());
    REQUIRE(r.transcript.size() == 6);
    CHECK(r.transcript[2].tool_calls.size() == 1);
    CHECK(r.transcript[3].role == Role::tool);
    CHECK(r.transcript[3].tool_call_id == std::optional<std::string>("v1"));
    CHECK(r.transcript[4].role == Role::user);
    int images = 0;
    for (const auto& part : r.transcript[4].parts) {
        images += part.is_image() ? 1 : 0;
    }
    CHECK(images == 1);
    CHECK(r.transcript[5].text() == "seen");
    check_purity(r.transcript);

    // all images of one turn share a single follow-up message
    auto p2 = scripted(R"([{"tool_calls":[{"name":"view_image","arguments":{"name":"x"}},
                                          {"name":"echo","arguments":{"text":"hi"}},
                                          {"name":"view_image","arguments":{"name":"y"}}]}])");
    const auto r2 = run_agent_loop("S", "T", reg, p2, fast_options());
    REQUIRE(r2.transcript.size() == 8);
    CHECK(r2.transcript[3].role == Role::tool);
    CHECK(r2.transcript[4].role == Role::tool);
    CHECK(r2.transcript[5].role == Role::tool);
    CHECK(r2.transcript[6].role == Role::user);
    CHECK(r2.transcript[6].parts.size() == 4);
}

TEST_CASE("turn budget exhaustion is reported")
{
    TempDir dir("agent");
    auto reg = test_registry(dir.path());
    LoopingProvider p;
    const auto r = run_agent_loop("S", "T", reg, p, fast_options(1));
    CHECK(r.end == LoopEnd::budget_exhausted);
    CHECK(r.reason.find("budget") != std::string::npos);
    CHECK(r.turns == 1);
}

TEST_CASE("tool errors return to the model and the loop continues")
{
    TempDir dir("agent");
    auto reg = test_registry(dir.path());
    auto p = scripted(R"([{"tool_calls":[{"name":"frobnicate","arguments":{}},
                                         {"name":"echo","arguments":{"txt":"x"}},
                                         {"name":"boom","arguments":{}}]},
                          {"tool_calls":[{"name":"echo","arguments":{"text":"recovered"}}]},
                          {"final":"ok"}])");
    const auto r = run_agent_loop("S", "T", reg, p, fast_options());
    CHECK(r.end == LoopEnd::completed);
    REQUIRE(r.transcript.size() == 9);
    const std::string unknown = r.transcript[3].text();
    CHECK(unknown.find("frobnicate") != std::string::npos);
    CHECK(unknown.find("echo") != std::string::npos);
    CHECK(unknown.find("view_image") != std::string::npos);
    CHECK(r.transcript[4].text().find("text (string, required)") != std::string::npos);
    CHECK(r.transcript[5].text().find("kaboom") != std::string::npos);
    CHECK(r.transcript[7].text() == "recovered");
}

TEST_CASE("scripted provider: turn counts, empty script and load errors")
{
    TempDir dir("agent");
    auto reg = test_registry(dir.path());
    auto inner = scripted(R"([{"tool_calls":[{"name":"echo","arguments":{"text":"1"}}]},
                              {"tool_calls":[{"name":"echo","arguments":{"text":"2"}}]},
                              {"final":"3"}])");
    CountingProvider counting(inner);
    run_agent_loop("S", "T", reg, counting, fast_options());
    CHECK(counting.calls == 3);

    auto empty = scripted("[]");
    const auto r = run_agent_loop("S", "T", reg, empty, fast_options());
    CHECK(r.end == LoopEnd::completed);
    CHECK(r.transcript.size() == 3);
    CHECK(r.transcript[2].tool_calls.empty());

    auto load_code = [](const std::string& text) {
        try {
            parse_script(Json::parse(text));
        } catch (const Error& e) {
            return e.code();
        }
        return Errc::io;
    };
    CHECK(load_code(R"([{"final":"x","mood":"happy"}])") == Errc::load);
    CHECK(load_code(R"([{"tool_calls":[{"name":"echo","argz":{}}]}])") == Errc::load);
    CHECK(load_code(R"([{"final":"x","tool_calls":[]}])") == Errc::load);
    CHECK(load_code(R"([{}])") == Errc::load);
    CHECK(load_code(R"({"final":"x"})") == Errc::load);

    testsupport::write_text(dir / "bad.json", "[{\"final\": ");
    CHECK_THROWS_AS(load_script(dir / "bad.json"), Error);
    CHECK_THROWS_AS(load_script(dir / "missing.json"), Error);
}

TEST_CASE("scripted provider placeholders")
{
    CHECK(parse_metric_line("log\nmetric: 0.25\nmore\nmetric: 1e-3\n") == 1e-3);
    CHECK_FALSE(parse_metric_line("no metric here").has_value());
    CHECK_FALSE(parse_metric_line("metric: abc").has_value());

    ToolRegistry reg;
    std::vector<Json> seen;
    reg.add({"run", "", Json::object()}, [](const Json&) { return ToolOutcome{"step 1\nmetric: 0.6125\n", {}, {}, false}; });
    reg.add({"log", "", Json::object()}, [&](const Json& a) {
        seen.push_back(a);
        return ToolOutcome{"ok", {}, {}, false};
    });
    auto p = scripted(R"([{"tool_calls":[{"name":"run","arguments":{},"id":"r1"}]},
                          {"tool_calls":[{"name":"log","arguments":{"value":"{{metric:r1}}","path":"{{root}}/x","note":"got {{metric:r1}}","keep":"{{unknown}}"}}]}])",
                      {{"root", "/w/c1"}});
    run_agent_loop("S", "T", reg, p, fast_options());
    REQUIRE(seen.size() == 1);
    CHECK(seen[0]["value"].is_number());
    CHECK(seen[0]["value"].get<double>() == 0.6125);
    CHECK(seen[0]["path"] == "/w/c1/x");
    CHECK(seen[0]["note"] == "got 0.6125");
    CHECK(seen[0]["keep"] == "{{unknown}}");
}

TEST_CASE("provider retries: transient failures are retried, permanent ones end the loop")
{
    ToolRegistry reg;
    reg.add({"noop", "", Json::object()}, [](const Json&) { return ToolOutcome{}; });
    FlakyProvider transient(2, true);
    auto r = run_agent_loop("S", "T", reg, transient, fast_options());
    CHECK(r.end == LoopEnd::completed);
    CHECK(transient.calls == 3);

    FlakyProvider hopeless(10, true);
    r = run_agent_loop("S", "T", reg, hopeless, fast_options());
    CHECK(r.end == LoopEnd::provider_failed);
    CHECK(hopeless.calls == 4);

    FlakyProvider permanent(1, false);
    r = run_agent_loop("S", "T", reg, permanent, fast_options());
    CHECK(r.end == LoopEnd::provider_failed);
    CHECK(permanent.calls == 1);
}

TEST_CASE("oversized images are downscaled by integer factors under the cap")
{
    TempDir dir("agent");
    render::Image8 noise{300, 200, 1, {}};
    std::mt19937 rng(1);
    for (int i = 0; i < 300 * 200; ++i) {
        noise.pixels.push_back(static_cast<std::uint8_t>(rng()));
    }
    const auto bytes = render::encode_png(noise);
    render::write_file_bytes(dir / "n.png", bytes);
    const auto whole = load_image_part(dir / "n.png", bytes.size());
    CHECK(whole.png == bytes);
    const std::size_t cap = bytes.size() / 5;
    const auto part = load_image_part(dir / "n.png", cap);
    CHECK(part.png.size() <= cap);
    const auto small = render::decode_png8(part.png);
    const std::uint32_t f = 300 / small.width;
    CHECK(f >= 3);
    CHECK(small.width == 300 / f);
    CHECK(small.height == 200 / f);
    CHECK(part.source_path == (dir / "n.png").string());
}

TEST_CASE("property: loops terminate, tool messages stay text-only, images follow within one step")
{
    TempDir dir("agent");
    auto reg = test_registry(dir.path());
    std::mt19937_64 gen(31);
    const std::vector<std::string> names{"echo", "boom", "view_image", "nope"};
    for (int trial = 0; trial < 150; ++trial) {
        Json script = Json::array();
        const int turns = static_cast<int>(gen() % 6);
        for (int t = 0; t < turns; ++t) {
            Json calls = Json::array();
            const int k = 1 + static_cast<int>(gen() % 3);
            for (int c = 0; c < k; ++c) {
                const std::string& n = names[gen() % names.size()];
                Json args = n == "echo" ? Json{{"text", "t"}} : Json{{"name", "img" + std::to_string(gen() % 3)}};
                calls.push_back({{"name", n}, {"arguments", args}});
            }
            script.push_back({{"tool_calls", calls}});
        }
        if (gen() % 2) {
            script.push_back({{"final", "end"}});
        }
        ScriptedProvider p(parse_script(script));
        const int budget = 1 + static_cast<int>(gen() % 6);
        const auto r = run_agent_loop("S", "T", reg, p, fast_options(budget));
        CHECK(r.turns <= budget);
        check_purity(r.transcript);
        for (std::size_t i = 0; i < r.transcript.size(); ++i) {
            const Message& m = r.transcript[i];
            if (m.role != Role::assistant) {
                continue;
            }
            bool wants_image = false;
            for (const auto& c : m.tool_calls) {
                wants_image = wants_image || c.name == "view_image";
            }
            const std::size_t after = i + 1 + m.tool_calls.size();
            if (wants_image) {
                REQUIRE(after < r.transcript.size());
                CHECK(r.transcript[after].role == Role::user);
                CHECK(r.transcript[after].parts.size() >= 2);
            }
        }
    }
}

TEST_CASE("replay determinism")
{
    TempDir dir("agent");
    auto reg = test_registry(dir.path());
    const std::string script = R"([{"tool_calls":[{"name":"view_image","arguments":{"name":"a"}},{"name":"echo","arguments":{"text":"z"}}]},
                                   {"tool_calls":[{"name":"boom","arguments":{}}]},{"final":"f"}])";
    auto p1 = scripted(script);
    auto p2 = scripted(script);
    const auto a = run_agent_loop("S", "T", reg, p1, fast_options());
    const auto b = run_agent_loop("S", "T", reg, p2, fast_options());
    CHECK(transcript_to_json(a.transcript) == transcript_to_json(b.transcript));
    CHECK(a.transcript == b.transcript);
}

TEST_CASE("http provider against a local chat-completions server")
{
    httplib::Server server;
    std::atomic<int> hits{0};
    std::atomic<int> fail_first{1};
    Json last_request;
    std::string last_auth;
    std::mutex mu;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        ++hits;
        {
            std::lock_guard lock(mu);
            last_request = Json::parse(req.body);
            last_auth = req.get_header_value("Authorization");
        }
        if (fail_first-- > 0) {
            res.status = 503;
            return;
        }
        const Json msgs = Json::parse(req.body)["messages"];
        const char* reply = msgs.size() == 2
            ? R"({"choices":[{"message":{"role":"assistant","content":null,"tool_calls":[
                 {"id":"call_9","type":"function","function":{"name":"view_image","arguments":"{\"name\":\"srv\"}"}}]}}]})"
            : R"({"choices":[{"message":{"role":"assistant","content":"all done"}}]})";
        res.set_content(reply, "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    ::setenv("ALGOSEARCH_TEST_KEY", "sekret", 1);
    HttpProviderConfig cfg;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/";
    cfg.model = "test-model";
    cfg.api_key_env = "ALGOSEARCH_TEST_KEY";
    cfg.timeout = std::chrono::seconds(10);
    HttpChatProvider provider(cfg);

    TempDir dir("agent");
    auto reg = test_registry(dir.path());
    const auto r = run_agent_loop("S", "T", reg, provider, fast_options());
    server.stop();
    th.join();

    CAPTURE(r.reason);
    CHECK(r.end == LoopEnd::completed);
    CHECK(hits == 3);   // one 503 retried, then two turns
    REQUIRE(r.transcript.size() == 6);
    CHECK(r.transcript[2].tool_calls[0].id == "call_9");
    CHECK(r.transcript[2].tool_calls[0].arguments == Json{{"name", "srv"}});
    CHECK(r.transcript[5].text() == "all done");
    CHECK(last_auth == "Bearer sekret");
    CHECK(last_request["model"] == "test-model");
    CHECK(last_request["tools"].size() == 3);
    const auto& msgs = last_request["messages"];
    REQUIRE(msgs.size() == 5);
    CHECK(msgs[2]["tool_calls"][0]["function"]["name"] == "view_image");
    CHECK(msgs[3]["role"] == "tool");
    CHECK(msgs[3]["tool_call_id"] == "call_9");
    CHECK(msgs[3]["content"].is_string());
    CHECK(msgs[4]["role"] == "user");
    bool data_url = false;
    for (const auto& part : msgs[4]["content"]) {
        if (part["type"] == "image_url") {
            data_url = part["image_url"]["url"].get<std::string>().rfind("data:image/png;base64,", 0) == 0;
        }
    }
    CHECK(data_url);
}

TEST_CASE("http provider error classification")
{
    CHECK_THROWS_AS(parse_chat_response("not json"), ProviderError);
    CHECK_THROWS_AS(parse_chat_response(R"({"choices":[]})"), ProviderError);
    const auto t = parse_chat_response(R"({"choices":[{"message":{"content":"hi"}}]})");
    CHECK(t.tool_calls.empty());
    CHECK(t.assistant_text == std::optional<std::string>("hi"));

    httplib::Server server;
    server.Post("/chat/completions", [](const httplib::Request&, httplib::Response& res) {
        res.status = 401;
        res.set_content("bad key", "text/plain");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    HttpProviderConfig cfg;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port);
    cfg.model = "m";
    HttpChatProvider provider(cfg);
    try {
        provider.next_turn({}, {});
        FAIL("expected a provider error");
    } catch (const ProviderError& e) {
        CHECK_FALSE(e.transient());
        CHECK(std::string(e.what()).find("401") != std::string::npos);
    }
    server.stop();
    th.join();

    cfg.endpoint = "http://127.0.0.1:1";
    HttpChatProvider unreachable(cfg);
    try {
        unreachable.next_turn({}, {});
        FAIL("expected a provider error");
    } catch (const ProviderError& e) {
        CHECK(e.transient());
    }
}

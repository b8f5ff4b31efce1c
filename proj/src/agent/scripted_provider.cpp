#include "algosearch/agent/scripted_provider.hpp"

#include "algosearch/error.hpp"

#include <fstream>
#include <regex>

namespace algosearch::agent {

namespace {

[[noreturn]] void load_error(const std::string& origin, const std::string& what)
{
    throw Error(Errc::load, origin + ": " + what);
}

const std::regex kMetricLine(R"((?:^|\n)\s*metric\s*:\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(?=\n|$))");
const std::regex kPlaceholder(R"(\{\{([A-Za-z0-9_]+)(?::([^}]*))?\}\})");

std::string tool_output(const std::vector<Message>& context, const std::string& call_id)
{
    for (auto it = context.rbegin(); it != context.rend(); ++it) {
        if (it->role == Role::tool && it->tool_call_id == call_id) {
            return it->text();
        }
    }
    return {};
}

} // namespace

std::optional<double> parse_metric_line(const std::string& text)
{
    std::optional<double> out;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), kMetricLine); it != std::sregex_iterator(); ++it) {
        out = std::stod((*it)[1].str());
    }
    return out;
}

std::vector<ScriptTurn> parse_script(const Json& doc, const std::string& origin)
{
    if (!doc.is_array()) {
        load_error(origin, "a script must be a JSON array of turns");
    }
    std::vector<ScriptTurn> turns;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const Json& t = doc[i];
        const std::string where = "turn " + std::to_string(i);
        if (!t.is_object()) {
            load_error(origin, where + " is not an object");
        }
        ScriptTurn turn;
        for (const auto& [key, value] : t.items()) {
            if (key == "final") {
                if (!value.is_string()) {
                    load_error(origin, where + ": 'final' must be a string");
                }
                turn.final = true;
                turn.text = value.get<std::string>();
            } else if (key == "text") {
                if (!value.is_string()) {
                    load_error(origin, where + ": 'text' must be a string");
                }
                turn.text = value.get<std::string>();
            } else if (key == "tool_calls") {
                if (!value.is_array()) {
                    load_error(origin, where + ": 'tool_calls' must be an array");
                }
                for (std::size_t k = 0; k < value.size(); ++k) {
                    const Json& c = value[k];
                    if (!c.is_object() || !c.contains("name") || !c["name"].is_string()) {
                        load_error(origin, where + ": tool call " + std::to_string(k) + " needs a string 'name'");
                    }
                    ToolCall call;
                    for (const auto& [ck, cv] : c.items()) {
                        if (ck == "name") {
                            call.name = cv.get<std::string>();
                        } else if (ck == "arguments") {
                            if (!cv.is_object()) {
                                load_error(origin, where + ": 'arguments' must be an object");
                            }
                            call.arguments = cv;
                        } else if (ck == "id") {
                            if (!cv.is_string()) {
                                load_error(origin, where + ": 'id' must be a string");
                            }
                            call.id = cv.get<std::string>();
                        } else {
                            load_error(origin, where + ": unknown tool-call field '" + ck + "'");
                        }
                    }
                    if (call.id.empty()) {
                        call.id = "call_" + std::to_string(i) + "_" + std::to_string(k);
                    }
                    turn.tool_calls.push_back(std::move(call));
                }
            } else {
                load_error(origin, where + ": unknown field '" + key + "'");
            }
        }
        if (turn.final == t.contains("tool_calls")) {
            load_error(origin, where + " must have exactly one of 'final' or 'tool_calls'");
        }
        if (turn.final && t.contains("text")) {
            load_error(origin, where + ": 'text' is not allowed next to 'final'");
        }
        turns.push_back(std::move(turn));
    }
    return turns;
}

std::vector<ScriptTurn> load_script(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        load_error(path.string(), "cannot open transcript");
    }
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        load_error(path.string(), std::string("malformed JSON: ") + e.what());
    }
    return parse_script(doc, path.string());
}

ScriptedProvider::ScriptedProvider(std::vector<ScriptTurn> script, std::map<std::string, std::string> vars)
    : script_(std::move(script)), vars_(std::move(vars))
{
}

Json ScriptedProvider::substitute(const Json& value, const std::vector<Message>& context) const
{
    if (value.is_object()) {
        Json out = Json::object();
        for (const auto& [k, v] : value.items()) {
            out[k] = substitute(v, context);
        }
        return out;
    }
    if (value.is_array()) {
        Json out = Json::array();
        for (const auto& v : value) {
            out.push_back(substitute(v, context));
        }
        return out;
    }
    if (!value.is_string()) {
        return value;
    }
    const std::string s = value.get<std::string>();
    std::smatch whole;
    if (std::regex_match(s, whole, kPlaceholder) && whole[1] == "metric") {
        if (auto v = parse_metric_line(tool_output(context, whole[2]))) {
            return *v;
        }
        return s;   // left unresolved; the tool reports the type mismatch
    }
    std::string out;
    auto begin = s.cbegin();
    for (std::sregex_iterator it(s.begin(), s.end(), kPlaceholder), end; it != end; ++it) {
        const std::smatch& m = *it;
        out.append(begin, m[0].first);
        std::string repl = m[0].str();
        if (m[1] == "metric") {
            if (auto v = parse_metric_line(tool_output(context, m[2]))) {
                repl = Json(*v).dump();   // shortest round-trip form
            }
        } else if (!m[2].matched) {
            if (auto var = vars_.find(m[1]); var != vars_.end()) {
                repl = var->second;
            }
        }
        out += repl;
        begin = m[0].second;
    }
    out.append(begin, s.cend());
    return out;
}

ProviderTurn ScriptedProvider::next_turn(const std::vector<Message>& context, const std::vector<ToolSchema>&)
{
    if (next_ >= script_.size()) {
        ++next_;
        return ProviderTurn{std::string("(script exhausted)"), {}};
    }
    const ScriptTurn& t = script_[next_++];
    ProviderTurn out;
    out.assistant_text = t.text;
    for (const auto& c : t.tool_calls) {
        out.tool_calls.push_back({c.id, c.name, substitute(c.arguments, context)});
    }
    return out;
}

} // namespace algosearch::agent

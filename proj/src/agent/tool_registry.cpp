#include "algosearch/agent/tool_registry.hpp"

#include "algosearch/error.hpp"

#include <algorithm>
#include <cmath>

namespace algosearch::agent {

namespace {

bool type_matches(const std::string& type, const Json& v)
{
    if (type == "object") {
        return v.is_object();
    }
    if (type == "array") {
        return v.is_array();
    }
    if (type == "string") {
        return v.is_string();
    }
    if (type == "boolean") {
        return v.is_boolean();
    }
    if (type == "number") {
        return v.is_number();
    }
    if (type == "integer") {
        return v.is_number_integer() || (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>());
    }
    if (type == "null") {
        return v.is_null();
    }
    return true;
}

std::string type_list(const Json& t)
{
    if (t.is_string()) {
        return t.get<std::string>();
    }
    std::string out;
    for (const auto& x : t) {
        out += (out.empty() ? "" : " or ") + x.get<std::string>();
    }
    return out;
}

} // namespace

std::optional<std::string> check_schema(const Json& schema, const Json& value, const std::string& where)
{
    if (!schema.is_object()) {
        return std::nullopt;
    }
    if (const auto t = schema.find("type"); t != schema.end()) {
        bool ok = false;
        if (t->is_string()) {
            ok = type_matches(t->get<std::string>(), value);
        } else if (t->is_array()) {
            for (const auto& x : *t) {
                ok = ok || type_matches(x.get<std::string>(), value);
            }
        }
        if (!ok) {
            return where + " must be of type " + type_list(*t) + " (got " + value.type_name() + ")";
        }
    }
    if (const auto e = schema.find("enum"); e != schema.end()) {
        bool found = false;
        for (const auto& x : *e) {
            found = found || x == value;
        }
        if (!found) {
            return where + " must be one of " + e->dump();
        }
    }
    if (value.is_number()) {
        if (const auto m = schema.find("minimum"); m != schema.end() && value.get<double>() < m->get<double>()) {
            return where + " must be >= " + m->dump();
        }
        if (const auto m = schema.find("maximum"); m != schema.end() && value.get<double>() > m->get<double>()) {
            return where + " must be <= " + m->dump();
        }
    }
    if (value.is_object()) {
        const auto props = schema.find("properties");
        if (const auto req = schema.find("required"); req != schema.end()) {
            for (const auto& name : *req) {
                if (!value.contains(name.get<std::string>())) {
                    return "missing required parameter '" + name.get<std::string>() + "' in " + where;
                }
            }
        }
        for (const auto& [key, sub] : value.items()) {
            if (props != schema.end() && props->contains(key)) {
                if (auto problem = check_schema((*props)[key], sub, where + "." + key)) {
                    return problem;
                }
            } else if (schema.value("additionalProperties", true) == false) {
                return "unexpected parameter '" + key + "' in " + where;
            }
        }
    }
    if (value.is_array()) {
        if (const auto items = schema.find("items"); items != schema.end()) {
            for (std::size_t i = 0; i < value.size(); ++i) {
                if (auto problem = check_schema(*items, value[i], where + "[" + std::to_string(i) + "]")) {
                    return problem;
                }
            }
        }
    }
    return std::nullopt;
}

std::string describe_parameters(const Json& schema)
{
    const auto props = schema.find("properties");
    if (props == schema.end() || props->empty()) {
        return "(no parameters)";
    }
    std::vector<std::string> required;
    if (schema.contains("required")) {
        required = schema["required"].get<std::vector<std::string>>();
    }
    std::string out;
    for (const auto& [name, sub] : props->items()) {
        if (!out.empty()) {
            out += ", ";
        }
        out += name;
        const bool req = std::find(required.begin(), required.end(), name) != required.end();
        std::string info = sub.contains("type") ? type_list(sub["type"]) : "any";
        if (req) {
            info += ", required";
        }
        out += " (" + info + ")";
    }
    return out;
}

void ToolRegistry::add(ToolSchema schema, ToolHandler handler)
{
    if (schema.name.empty() || tools_.count(schema.name) != 0) {
        throw Error(Errc::parameter, "tool name '" + schema.name + "' is empty or already registered");
    }
    order_.push_back(schema.name);
    const std::string name = schema.name;
    tools_.emplace(name, Entry{std::move(schema), std::move(handler)});
}

bool ToolRegistry::contains(const std::string& name) const
{
    return tools_.count(name) != 0;
}

std::vector<ToolSchema> ToolRegistry::schemas() const
{
    std::vector<ToolSchema> out;
    for (const auto& n : order_) {
        out.push_back(tools_.at(n).schema);
    }
    return out;
}

std::vector<std::string> ToolRegistry::names() const
{
    return order_;
}

ToolOutcome ToolRegistry::execute(const ToolCall& call) const
{
    const auto it = tools_.find(call.name);
    if (it == tools_.end()) {
        std::string avail;
        for (const auto& n : order_) {
            avail += (avail.empty() ? "" : ", ") + n;
        }
        return ToolOutcome::error("error: unknown tool '" + call.name + "'. Available tools: " + avail);
    }
    const Entry& entry = it->second;
    if (auto problem = check_schema(entry.schema.parameters, call.arguments)) {
        return ToolOutcome::error("error: invalid arguments for " + call.name + ": " + *problem +
                                  ". Expected parameters: " + describe_parameters(entry.schema.parameters));
    }
    try {
        ToolOutcome out = entry.handler(call.arguments);
        out.text = sanitize_utf8(out.text);
        return out;
    } catch (const Error& e) {
        return ToolOutcome::error(sanitize_utf8("error (" + std::string(to_string(e.code())) + "): " + e.what()));
    } catch (const std::exception& e) {
        return ToolOutcome::error(sanitize_utf8(std::string("error: ") + e.what()));
    }
}

} // namespace algosearch::agent

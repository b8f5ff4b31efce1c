#include "algosearch/cli/config.hpp"

#include "algosearch/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace algosearch::cli {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;
using control::SessionConfig;

namespace {

const std::map<std::string, std::set<std::string>> kKeys{
    {"session", {"workspace_dir", "task_prompt", "data_dir", "holdout_dir", "holdout_prompt", "db_path"}},
    {"controller",
     {"total_rounds", "warmup_generate_rounds", "forced_generate_every", "majority_window", "min_excellent_for_tune",
      "min_moderate_for_evolve", "excellent_fraction", "moderate_fraction", "tune_workers", "generate_workers",
      "early_stop_patience"}},
    {"sampling", {"tau", "lambda", "stochastic", "top_k", "evolve_per_lineage", "seed"}},
    {"agent",
     {"turn_budget", "holdout_turn_budget", "provider_retries", "exec_timeout_seconds", "exec_binary",
      "web_search_offline", "image_byte_cap"}},
    {"provider", {"kind", "transcripts_dir", "endpoint", "model", "api_key_env", "timeout_seconds", "temperature"}},
};

[[noreturn]] void bad(const std::string& key, const std::string& what)
{
    throw Error(Errc::validation, "config " + key + ": " + what);
}

std::string fmt_double(double v)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

// Reads the typed fields of one section, tracking the full key for errors.
class Section {
public:
    Section(const pt::ptree& root, std::string name, fs::path base)
        : name_(std::move(name)), base_(std::move(base))
    {
        if (const auto child = root.get_child_optional(name_)) {
            tree_ = *child;
        }
    }

    std::optional<std::string> raw(const std::string& key) const
    {
        const auto v = tree_.get_optional<std::string>(key);
        if (!v) {
            return std::nullopt;
        }
        const auto b = v->find_first_not_of(" \t");
        const auto e = v->find_last_not_of(" \t");
        return b == std::string::npos ? std::string() : v->substr(b, e - b + 1);
    }

    void str(const std::string& key, std::string& out) const
    {
        if (auto v = raw(key)) {
            out = *v;
        }
    }

    void path(const std::string& key, fs::path& out) const
    {
        if (auto v = raw(key); v && !v->empty()) {
            out = resolve(*v);
        }
    }

    void opt_path(const std::string& key, std::optional<fs::path>& out) const
    {
        if (auto v = raw(key)) {
            if (v->empty() || *v == "none") {
                out.reset();
            } else {
                out = resolve(*v);
            }
        }
    }

    template <class Int>
    void integer(const std::string& key, Int& out) const
    {
        if (auto v = raw(key)) {
            out = parse_int<Int>(key, *v);
        }
    }

    void opt_int(const std::string& key, std::optional<int>& out) const
    {
        if (auto v = raw(key)) {
            if (v->empty() || *v == "none") {
                out.reset();
            } else {
                out = parse_int<int>(key, *v);
            }
        }
    }

    void real(const std::string& key, double& out) const
    {
        if (auto v = raw(key)) {
            double d = 0;
            const auto r = std::from_chars(v->data(), v->data() + v->size(), d);
            if (r.ec != std::errc() || r.ptr != v->data() + v->size()) {
                bad(full(key), "expected a number, got '" + *v + "'");
            }
            out = d;
        }
    }

    void boolean(const std::string& key, bool& out) const
    {
        if (auto v = raw(key)) {
            if (*v == "true" || *v == "1" || *v == "yes") {
                out = true;
            } else if (*v == "false" || *v == "0" || *v == "no") {
                out = false;
            } else {
                bad(full(key), "expected true or false, got '" + *v + "'");
            }
        }
    }

    std::string full(const std::string& key) const { return name_ + "." + key; }

private:
    template <class Int>
    Int parse_int(const std::string& key, const std::string& v) const
    {
        Int n{};
        const auto r = std::from_chars(v.data(), v.data() + v.size(), n);
        if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
            bad(full(key), "expected an integer, got '" + v + "'");
        }
        return n;
    }

    fs::path resolve(const std::string& v) const
    {
        fs::path p(v);
        if (p.is_relative()) {
            p = base_ / p;
        }
        std::error_code ec;
        auto c = fs::weakly_canonical(p, ec);
        return ec ? p.lexically_normal() : c;
    }

    std::string name_;
    fs::path base_;
    pt::ptree tree_;
};

} // namespace

SessionConfig parse_config(const std::string& text, const fs::path& base_dir)
{
    pt::ptree root;
    try {
        std::istringstream in(text);
        pt::read_ini(in, root);
    } catch (const pt::ini_parser_error& e) {
        throw Error(Errc::validation, "config: " + std::string(e.what()));
    }
    for (const auto& [section, tree] : root) {
        const auto known = kKeys.find(section);
        if (known == kKeys.end()) {
            bad(section, "unknown section");
        }
        if (!tree.data().empty()) {
            bad(section, "keys must be inside a section");
        }
        for (const auto& [key, _] : tree) {
            if (known->second.count(key) == 0) {
                bad(section + "." + key, "unknown key");
            }
        }
    }

    const fs::path base = fs::absolute(base_dir);
    SessionConfig c;
    const Section s(root, "session", base);
    s.path("workspace_dir", c.workspace_dir);
    s.path("task_prompt", c.task_prompt_path);
    s.path("data_dir", c.data_dir);
    s.opt_path("holdout_dir", c.holdout_dir);
    s.opt_path("holdout_prompt", c.holdout_prompt_path);
    s.path("db_path", c.db_path);

    const Section ct(root, "controller", base);
    ct.integer("total_rounds", c.controller.total_rounds);
    ct.integer("warmup_generate_rounds", c.controller.warmup_generate_rounds);
    ct.opt_int("forced_generate_every", c.controller.forced_generate_every);
    ct.integer("majority_window", c.controller.majority_window);
    ct.integer("min_excellent_for_tune", c.controller.min_excellent_for_tune);
    ct.integer("min_moderate_for_evolve", c.controller.min_moderate_for_evolve);
    ct.real("excellent_fraction", c.controller.excellent_fraction);
    ct.real("moderate_fraction", c.controller.moderate_fraction);
    ct.integer("tune_workers", c.controller.tune_workers);
    ct.integer("generate_workers", c.controller.generate_workers);
    ct.opt_int("early_stop_patience", c.controller.early_stop_patience);

    const Section sm(root, "sampling", base);
    sm.real("tau", c.sampling.tau);
    sm.real("lambda", c.sampling.lambda_penalty);
    sm.boolean("stochastic", c.sampling.stochastic);
    sm.integer("top_k", c.sampling.top_k);
    sm.integer("evolve_per_lineage", c.sampling.evolve_per_lineage);
    if (auto v = sm.raw("seed")) {
        if (v->empty() || *v == "none") {
            c.sampling.rng_seed.reset();
        } else {
            std::uint64_t seed = 0;
            sm.integer("seed", seed);
            c.sampling.rng_seed = seed;
        }
    }

    const Section ag(root, "agent", base);
    ag.integer("turn_budget", c.agent.turn_budget);
    ag.integer("holdout_turn_budget", c.agent.holdout_turn_budget);
    ag.integer("provider_retries", c.agent.provider_retries);
    ag.real("exec_timeout_seconds", c.agent.exec_timeout_seconds);
    ag.str("exec_binary", c.agent.exec_binary);
    ag.boolean("web_search_offline", c.agent.web_search_offline);
    ag.integer("image_byte_cap", c.agent.image_byte_cap);

    const Section pv(root, "provider", base);
    if (auto v = pv.raw("kind")) {
        c.provider.kind = control::parse_provider_kind(*v);
    }
    pv.path("transcripts_dir", c.provider.transcripts_dir);
    pv.str("endpoint", c.provider.http.endpoint);
    pv.str("model", c.provider.http.model);
    pv.str("api_key_env", c.provider.http.api_key_env);
    long long timeout = c.provider.http.timeout.count();
    pv.integer("timeout_seconds", timeout);
    c.provider.http.timeout = std::chrono::seconds(timeout);
    pv.real("temperature", c.provider.http.temperature);
    return c;
}

SessionConfig load_config(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::validation, "cannot read config file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), fs::absolute(path).parent_path());
}

std::string serialize_config(const SessionConfig& c)
{
    auto opt_int = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string("none"); };
    std::ostringstream o;
    o << "[session]\n"
      << "workspace_dir = " << c.workspace_dir.string() << "\n"
      << "task_prompt = " << c.task_prompt_path.string() << "\n"
      << "data_dir = " << c.data_dir.string() << "\n"
      << "holdout_dir = " << (c.holdout_dir ? c.holdout_dir->string() : "none") << "\n"
      << "holdout_prompt = " << (c.holdout_prompt_path ? c.holdout_prompt_path->string() : "none") << "\n"
      << "db_path = " << c.db_path.string() << "\n\n"
      << "[controller]\n"
      << "total_rounds = " << c.controller.total_rounds << "\n"
      << "warmup_generate_rounds = " << c.controller.warmup_generate_rounds << "\n"
      << "forced_generate_every = " << opt_int(c.controller.forced_generate_every) << "\n"
      << "majority_window = " << c.controller.majority_window << "\n"
      << "min_excellent_for_tune = " << c.controller.min_excellent_for_tune << "\n"
      << "min_moderate_for_evolve = " << c.controller.min_moderate_for_evolve << "\n"
      << "excellent_fraction = " << fmt_double(c.controller.excellent_fraction) << "\n"
      << "moderate_fraction = " << fmt_double(c.controller.moderate_fraction) << "\n"
      << "tune_workers = " << c.controller.tune_workers << "\n"
      << "generate_workers = " << c.controller.generate_workers << "\n"
      << "early_stop_patience = " << opt_int(c.controller.early_stop_patience) << "\n\n"
      << "[sampling]\n"
      << "tau = " << fmt_double(c.sampling.tau) << "\n"
      << "lambda = " << fmt_double(c.sampling.lambda_penalty) << "\n"
      << "stochastic = " << (c.sampling.stochastic ? "true" : "false") << "\n"
      << "top_k = " << c.sampling.top_k << "\n"
      << "evolve_per_lineage = " << c.sampling.evolve_per_lineage << "\n"
      << "seed = " << (c.sampling.rng_seed ? std::to_string(*c.sampling.rng_seed) : "none") << "\n\n"
      << "[agent]\n"
      << "turn_budget = " << c.agent.turn_budget << "\n"
      << "holdout_turn_budget = " << c.agent.holdout_turn_budget << "\n"
      << "provider_retries = " << c.agent.provider_retries << "\n"
      << "exec_timeout_seconds = " << fmt_double(c.agent.exec_timeout_seconds) << "\n"
      << "exec_binary = " << c.agent.exec_binary << "\n"
      << "web_search_offline = " << (c.agent.web_search_offline ? "true" : "false") << "\n"
      << "image_byte_cap = " << c.agent.image_byte_cap << "\n\n"
      << "[provider]\n"
      << "kind = " << control::to_string(c.provider.kind) << "\n"
      << "transcripts_dir = " << c.provider.transcripts_dir.string() << "\n"
      << "endpoint = " << c.provider.http.endpoint << "\n"
      << "model = " << c.provider.http.model << "\n"
      << "api_key_env = " << c.provider.http.api_key_env << "\n"
      << "timeout_seconds = " << c.provider.http.timeout.count() << "\n"
      << "temperature = " << fmt_double(c.provider.http.temperature) << "\n";
    return o.str();
}

} // namespace algosearch::cli

#include "algosearch/store/types.hpp"

#include "algosearch/error.hpp"

#include <array>
#include <utility>

namespace algosearch {
namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<std::string_view, E>, N>& table, const char* what)
{
    for (const auto& [name, value] : table) {
        if (name == s) {
            return value;
        }
    }
    std::string msg = std::string("unknown ") + what + " '" + std::string(s) + "' (expected one of:";
    for (const auto& [name, value] : table) {
        msg += " ";
        msg += name;
    }
    msg += ")";
    throw Error(Errc::parameter, msg);
}

constexpr std::array<std::pair<std::string_view, Direction>, 2> kDirections{{
    {"maximize", Direction::maximize},
    {"minimize", Direction::minimize},
}};

constexpr std::array<std::pair<std::string_view, Action>, 5> kActions{{
    {"baseline", Action::baseline},
    {"generate", Action::generate},
    {"tune", Action::tune},
    {"evolve", Action::evolve},
    {"mutate", Action::mutate},
}};

constexpr std::array<std::pair<std::string_view, RoundStatus>, 4> kRoundStatuses{{
    {"running", RoundStatus::running},
    {"completed", RoundStatus::completed},
    {"failed", RoundStatus::failed},
    {"skipped", RoundStatus::skipped},
}};

constexpr std::array<std::pair<std::string_view, Phase>, 4> kPhases{{
    {"preparation", Phase::preparation},
    {"baseline", Phase::baseline},
    {"discovery", Phase::discovery},
    {"finished", Phase::finished},
}};

constexpr std::array<std::pair<std::string_view, RunStatus>, 2> kRunStatuses{{
    {"active", RunStatus::active},
    {"stopped", RunStatus::stopped},
}};

template <typename E, std::size_t N>
std::string_view name_of(E value, const std::array<std::pair<std::string_view, E>, N>& table)
{
    for (const auto& [name, v] : table) {
        if (v == value) {
            return name;
        }
    }
    return "unknown";
}

} // namespace

std::string_view to_string(Direction d) { return name_of(d, kDirections); }
std::string_view to_string(Action a) { return name_of(a, kActions); }
std::string_view to_string(RoundStatus s) { return name_of(s, kRoundStatuses); }
std::string_view to_string(Phase p) { return name_of(p, kPhases); }
std::string_view to_string(RunStatus s) { return name_of(s, kRunStatuses); }

Direction parse_direction(std::string_view s) { return parse_enum(s, kDirections, "direction"); }
Action parse_action(std::string_view s) { return parse_enum(s, kActions, "action"); }
RoundStatus parse_round_status(std::string_view s) { return parse_enum(s, kRoundStatuses, "round status"); }
Phase parse_phase(std::string_view s) { return parse_enum(s, kPhases, "phase"); }
RunStatus parse_run_status(std::string_view s) { return parse_enum(s, kRunStatuses, "run status"); }

} // namespace algosearch

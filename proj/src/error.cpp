#include "algosearch/error.hpp"

namespace algosearch {

std::string_view to_string(Errc code)
{
    switch (code) {
    case Errc::storage: return "storage";
    case Errc::migration: return "migration";
    case Errc::corrupt: return "corrupt";
    case Errc::conflict: return "conflict";
    case Errc::rejected: return "rejected";
    case Errc::not_found: return "not_found";
    case Errc::state: return "state";
    case Errc::parameter: return "parameter";
    case Errc::empty_pool: return "empty_pool";
    case Errc::insufficient_pool: return "insufficient_pool";
    case Errc::unrenderable: return "unrenderable";
    case Errc::unsupported: return "unsupported";
    case Errc::decode: return "decode";
    case Errc::contract: return "contract";
    case Errc::environment: return "environment";
    case Errc::guard: return "guard";
    case Errc::provider: return "provider";
    case Errc::load: return "load";
    case Errc::io: return "io";
    case Errc::validation: return "validation";
    }
    return "unknown";
}

} // namespace algosearch

#pragma once

#include "algosearch/agent/messages.hpp"
#include "algosearch/error.hpp"

#include <vector>

namespace algosearch::agent {

// Raised by providers. Transient failures (transport errors, 429, 5xx) may be
// retried by the loop; permanent ones end the round.
class ProviderError : public Error {
public:
    ProviderError(const std::string& message, bool transient)
        : Error(Errc::provider, message), transient_(transient) {}

    bool transient() const noexcept { return transient_; }

private:
    bool transient_;
};

class Provider {
public:
    virtual ~Provider() = default;

    // Next assistant turn given the full context and the available tools.
    virtual ProviderTurn next_turn(const std::vector<Message>& context, const std::vector<ToolSchema>& tools) = 0;
};

} // namespace algosearch::agent

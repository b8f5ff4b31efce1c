#pragma once

// ingest -> model -> tool execution -> (image follow-up) -> model ...
//
// The context starts as exactly [system, task]. Each provider turn is
// appended as an assistant message; its tool calls are executed in order and
// answered by tool messages. Tool outcomes that carry an image path are
// followed by one user message holding the encoded images, since tool
// messages may not contain images. A turn without tool calls ends the loop.

#include "algosearch/agent/provider.hpp"
#include "algosearch/agent/tool_registry.hpp"

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace algosearch::agent {

inline constexpr std::size_t kDefaultImageByteCap = 4u << 20;

struct LoopOptions {
    int turn_budget = 60;
    std::size_t image_byte_cap = kDefaultImageByteCap;
    int provider_retries = 3;                       // extra attempts after a transient failure
    std::chrono::milliseconds retry_backoff{250};   // doubled per attempt
    std::function<void(const Message&)> on_message; // observer, e.g. a transcript writer
};

enum class LoopEnd { completed, budget_exhausted, provider_failed };

std::string_view to_string(LoopEnd e);

struct LoopResult {
    std::vector<Message> transcript;
    LoopEnd end = LoopEnd::completed;
    std::string reason;
    int turns = 0;
};

LoopResult run_agent_loop(const std::string& system_prompt, const std::string& task_prompt,
                          const ToolRegistry& tools, Provider& provider, const LoopOptions& options);

// Loads a PNG and, while its encoding exceeds `byte_cap`, downsamples it by
// the next integer factor (box average) and re-encodes. Throws on unreadable
// files.
ContentPart load_image_part(const std::filesystem::path& png_path, std::size_t byte_cap);

} // namespace algosearch::agent

#include "algosearch/agent/agent_loop.hpp"

#include "algosearch/render/image.hpp"

#include <thread>

namespace algosearch::agent {

std::string_view to_string(LoopEnd e)
{
    switch (e) {
    case LoopEnd::completed: return "completed";
    case LoopEnd::budget_exhausted: return "budget_exhausted";
    case LoopEnd::provider_failed: return "provider_failed";
    }
    return "unknown";
}

namespace {

render::Image8 box_downsample(const render::Image8& src, std::uint32_t f)
{
    render::Image8 dst;
    dst.width = std::max<std::uint32_t>(1, src.width / f);
    dst.height = std::max<std::uint32_t>(1, src.height / f);
    dst.channels = src.channels;
    dst.pixels.resize(static_cast<std::size_t>(dst.width) * dst.height * dst.channels);
    for (std::uint32_t y = 0; y < dst.height; ++y) {
        for (std::uint32_t x = 0; x < dst.width; ++x) {
            for (std::uint32_t c = 0; c < dst.channels; ++c) {
                unsigned sum = 0;
                unsigned n = 0;
                for (std::uint32_t dy = 0; dy < f && y * f + dy < src.height; ++dy) {
                    for (std::uint32_t dx = 0; dx < f && x * f + dx < src.width; ++dx) {
                        sum += src.pixels[((static_cast<std::size_t>(y * f + dy) * src.width) + x * f + dx) *
                                              src.channels + c];
                        ++n;
                    }
                }
                dst.pixels[(static_cast<std::size_t>(y) * dst.width + x) * dst.channels + c] =
                    static_cast<std::uint8_t>((sum + n / 2) / n);
            }
        }
    }
    return dst;
}

} // namespace

ContentPart load_image_part(const std::filesystem::path& png_path, std::size_t byte_cap)
{
    auto bytes = render::read_file_bytes(png_path);
    if (bytes.size() <= byte_cap) {
        render::decode_png8(bytes);  // validates the file
        return ContentPart::make_image(std::move(bytes), png_path.string());
    }
    const render::Image8 full = render::decode_png8(bytes);
    for (std::uint32_t f = 2;; ++f) {
        auto smaller = render::encode_png(box_downsample(full, f));
        if (smaller.size() <= byte_cap || (full.width / f <= 1 && full.height / f <= 1)) {
            return ContentPart::make_image(std::move(smaller), png_path.string());
        }
    }
}

LoopResult run_agent_loop(const std::string& system_prompt, const std::string& task_prompt,
                          const ToolRegistry& tools, Provider& provider, const LoopOptions& options)
{
    LoopResult result;
    auto append = [&](Message m) {
        if (options.on_message) {
            options.on_message(m);
        }
        result.transcript.push_back(std::move(m));
    };
    append(text_message(Role::system, system_prompt));
    append(text_message(Role::user, task_prompt));
    const auto schemas = tools.schemas();

    while (result.turns < options.turn_budget) {
        ProviderTurn turn;
        for (int attempt = 0;; ++attempt) {
            try {
                turn = provider.next_turn(result.transcript, schemas);
                break;
            } catch (const ProviderError& e) {
                if (!e.transient() || attempt >= options.provider_retries) {
                    result.end = LoopEnd::provider_failed;
                    result.reason = std::string("provider failed after ") + std::to_string(attempt + 1) +
                                    " attempt(s): " + e.what();
                    return result;
                }
                std::this_thread::sleep_for(options.retry_backoff * (1 << attempt));
            }
        }
        ++result.turns;

        Message assistant;
        assistant.role = Role::assistant;
        if (turn.assistant_text) {
            assistant.parts.push_back(ContentPart::make_text(*turn.assistant_text));
        }
        assistant.tool_calls = turn.tool_calls;
        append(assistant);
        if (turn.tool_calls.empty()) {
            result.end = LoopEnd::completed;
            return result;
        }

        Message follow_up;
        follow_up.role = Role::user;
        for (const ToolCall& call : turn.tool_calls) {
            ToolOutcome outcome = tools.execute(call);
            Message tool_msg = text_message(Role::tool, outcome.text);
            tool_msg.tool_call_id = call.id;
            append(tool_msg);
            if (outcome.image_path) {
                try {
                    follow_up.parts.push_back(ContentPart::make_text(
                        "Image returned by " + call.name + " (" + call.id + "): " + outcome.image_path->string()));
                    follow_up.parts.push_back(load_image_part(*outcome.image_path, options.image_byte_cap));
                } catch (const std::exception& e) {
                    follow_up.parts.push_back(ContentPart::make_text(
                        "Image " + outcome.image_path->string() + " could not be attached: " + e.what()));
                }
            }
        }
        if (!follow_up.parts.empty()) {
            append(std::move(follow_up));
        }
    }
    result.end = LoopEnd::budget_exhausted;
    result.reason = "turn budget of " + std::to_string(options.turn_budget) + " exhausted";
    return result;
}

} // namespace algosearch::agent

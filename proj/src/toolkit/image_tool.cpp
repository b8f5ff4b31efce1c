#include "algosearch/toolkit/image_tool.hpp"

#include "algosearch/render/renderer.hpp"

#include <atomic>
#include <cstdio>

namespace algosearch::toolkit {

void register_image_tool(agent::ToolRegistry& registry, std::shared_ptr<const WorkspaceGuard> guard,
                         std::string render_dir)
{
    auto counter = std::make_shared<std::atomic<int>>(0);
    registry.add(
        {"view_image",
         "Render an image file (TIFF, PNG or .raw float array) for inspection. Display bounds are the p_low/p_high "
         "percentiles of the finite pixels (default 1 and 99); log_scale applies log(1 + (x - low)).",
         Json::parse(R"({"type":"object","additionalProperties":false,
            "properties":{"path":{"type":"string"},
                          "p_low":{"type":"number","minimum":0,"maximum":100},
                          "p_high":{"type":"number","minimum":0,"maximum":100},
                          "log_scale":{"type":"boolean"}},
            "required":["path"]})")},
        [guard, render_dir, counter](const Json& a) {
            const fs::path input = guard->resolve(a["path"].get<std::string>());
            render::RenderSpec spec;
            spec.p_low = a.value("p_low", spec.p_low);
            spec.p_high = a.value("p_high", spec.p_high);
            spec.log_scale = a.value("log_scale", false);
            const std::string name = input.stem().string() + "_" + std::to_string(++*counter) + ".png";
            const fs::path out = guard->resolve_for_write(fs::path(render_dir) / name);
            fs::create_directories(out.parent_path());
            const auto r = render::render_file(input, spec, out);
            char bounds[96];
            std::snprintf(bounds, sizeof bounds, "display bounds [%.6g, %.6g]%s", r.bounds.low, r.bounds.high,
                          r.bounds.degenerate ? " (degenerate range, rendered mid-gray)" : "");
            std::string text = "rendered " + guard->relative(out) + "; " + bounds;
            for (const auto& n : r.notes) {
                text += "\nnote: " + n;
            }
            return agent::ToolOutcome{text, out, Json{{"png", guard->relative(out)}}, false};
        });
}

} // namespace algosearch::toolkit

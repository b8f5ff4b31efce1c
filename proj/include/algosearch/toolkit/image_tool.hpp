#pragma once

#include "algosearch/agent/tool_registry.hpp"
#include "algosearch/toolkit/workspace_guard.hpp"

#include <memory>
#include <string>

namespace algosearch::toolkit {

// Tool "view_image": renders a TIFF, PNG or raw image from the workspace to a
// PNG under `render_dir` (guard-relative) and returns its path, which the
// agent loop turns into an image follow-up.
void register_image_tool(agent::ToolRegistry& registry, std::shared_ptr<const WorkspaceGuard> guard,
                         std::string render_dir);

} // namespace algosearch::toolkit

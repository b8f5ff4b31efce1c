#pragma once

#include "algosearch/render/image.hpp"

#include <filesystem>
#include <vector>

namespace algosearch::render {

struct RenderSpec {
    double p_low = 1.0;
    double p_high = 99.0;
    bool log_scale = false;
};

struct DisplayBounds {
    double low = 0.0;
    double high = 0.0;
    bool degenerate = false;
};

// Nearest-rank percentile of a non-empty sample set: the value at 1-based
// rank max(1, ceil(p * n / 100)) of the ascending order.
std::size_t nearest_rank(double percentile, std::size_t n);

// Percentile bounds over the finite samples of `image`. Throws
// Errc::unrenderable when no sample is finite, Errc::parameter for bad
// percentiles.
DisplayBounds display_bounds(const ImageBuffer& image, double p_low, double p_high);

// Clip to the display bounds, optionally apply log(1 + (x - low)), then map
// linearly to 0..255. Non-finite samples render as 0; a degenerate range
// renders finite samples as 128.
Image8 render_image(const ImageBuffer& image, const RenderSpec& spec);

struct RenderResult {
    std::filesystem::path png_path;
    DisplayBounds bounds;
    std::vector<std::string> notes;
};

// Renders `image` and writes it as PNG to `out_path`.
RenderResult render_to_png(const ImageBuffer& image, const RenderSpec& spec,
                           const std::filesystem::path& out_path);

// Loads any supported image file, renders it and writes the PNG.
RenderResult render_file(const std::filesystem::path& input, const RenderSpec& spec,
                         const std::filesystem::path& out_path);

} // namespace algosearch::render

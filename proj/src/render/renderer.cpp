#include "algosearch/render/renderer.hpp"

#include "algosearch/error.hpp"
#include "algosearch/kernels/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace algosearch::render {

std::size_t nearest_rank(double percentile, std::size_t n)
{
    const double raw = std::ceil(percentile * static_cast<double>(n) / 100.0);
    if (raw < 1.0) {
        return 1;
    }
    return std::min(n, static_cast<std::size_t>(raw));
}

DisplayBounds display_bounds(const ImageBuffer& image, double p_low, double p_high)
{
    if (!(p_low >= 0.0 && p_high <= 100.0 && p_low < p_high)) {
        throw Error(Errc::parameter, "percentiles must satisfy 0 <= p_low < p_high <= 100");
    }
    std::vector<double> finite;
    finite.reserve(image.pixels.size());
    for (const double v : image.pixels) {
        if (std::isfinite(v)) {
            finite.push_back(v);
        }
    }
    if (finite.empty()) {
        throw Error(Errc::unrenderable, "image has no finite pixel values");
    }
    const std::size_t n = finite.size();
    const std::size_t lo_idx = nearest_rank(p_low, n) - 1;
    const std::size_t hi_idx = nearest_rank(p_high, n) - 1;

    // selection instead of a full sort; the high index is >= the low one
    std::nth_element(finite.begin(), finite.begin() + static_cast<std::ptrdiff_t>(hi_idx), finite.end());
    const double high = finite[hi_idx];
    std::nth_element(finite.begin(), finite.begin() + static_cast<std::ptrdiff_t>(lo_idx),
                     finite.begin() + static_cast<std::ptrdiff_t>(hi_idx));
    const double low = lo_idx == hi_idx ? high : finite[lo_idx];

    return DisplayBounds{low, high, !(high > low)};
}

Image8 render_image(const ImageBuffer& image, const RenderSpec& spec)
{
    const DisplayBounds b = display_bounds(image, spec.p_low, spec.p_high);
    Image8 out;
    out.width = image.width;
    out.height = image.height;
    out.channels = image.channels;
    out.pixels.assign(image.pixels.size(), 0);

    if (b.degenerate) {
        for (std::size_t i = 0; i < image.pixels.size(); ++i) {
            out.pixels[i] = std::isfinite(image.pixels[i]) ? 128 : 0;
        }
        return out;
    }

    if (!spec.log_scale) {
        kernels::clip_scale_u8(image.pixels, out.pixels, b.low, b.high, 255.0 / (b.high - b.low));
        return out;
    }

    // clip, shift to zero, then log1p; the kernel then maps [0, log1p(span)] linearly
    std::vector<double> t(image.pixels.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double x = image.pixels[i];
        t[i] = std::isfinite(x) ? std::log1p(std::min(std::max(x, b.low), b.high) - b.low) : x;
    }
    const double t_max = std::log1p(b.high - b.low);
    kernels::clip_scale_u8(t, out.pixels, 0.0, t_max, 255.0 / t_max);
    return out;
}

RenderResult render_to_png(const ImageBuffer& image, const RenderSpec& spec,
                           const std::filesystem::path& out_path)
{
    RenderResult result;
    result.bounds = display_bounds(image, spec.p_low, spec.p_high);
    const Image8 img = render_image(image, spec);
    if (out_path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(out_path.parent_path(), ec);
    }
    write_file_bytes(out_path, encode_png(img));
    result.png_path = out_path;
    if (result.bounds.degenerate) {
        result.notes.push_back("degenerate display range: finite pixels rendered mid-gray");
    }
    return result;
}

RenderResult render_file(const std::filesystem::path& input, const RenderSpec& spec,
                         const std::filesystem::path& out_path)
{
    DecodedImage decoded = load_image(input);
    RenderResult result = render_to_png(decoded.image, spec, out_path);
    result.notes.insert(result.notes.begin(), decoded.notes.begin(), decoded.notes.end());
    return result;
}

} // namespace algosearch::render

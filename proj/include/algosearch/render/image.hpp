#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace algosearch::render {

// Real-valued image, row-major, channels interleaved. Non-finite samples are
// allowed and are skipped by statistics.
struct ImageBuffer {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t channels = 1;  // 1 or 3
    std::vector<double> pixels;

    std::size_t sample_count() const
    {
        return static_cast<std::size_t>(width) * height * channels;
    }
};

// Result of decoding a file; `notes` carries non-fatal remarks such as
// "multi-page TIFF, first page used".
struct DecodedImage {
    ImageBuffer image;
    std::vector<std::string> notes;
};

// 8-bit output image.
struct Image8 {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t channels = 1;
    std::vector<std::uint8_t> pixels;
};

// TIFF: uncompressed, LZW, Deflate and PackBits; 8/16/32-bit integers and
// 32/64-bit floats; grayscale or chunky RGB; strips or tiles.
DecodedImage read_tiff(const std::filesystem::path& path);
DecodedImage decode_tiff(const std::vector<std::uint8_t>& bytes);

DecodedImage read_png(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_png(const Image8& image);
Image8 decode_png8(const std::vector<std::uint8_t>& bytes);

// Raw sidecar format (little-endian):
//   8 bytes  magic "ASRAWIMG"
//   uint32   width, height, channels
//   uint32   dtype: 1 = float32, 2 = float64
//   then width*height*channels samples, row-major, channels interleaved.
DecodedImage read_raw(const std::filesystem::path& path);
void write_raw(const std::filesystem::path& path, const ImageBuffer& image, bool as_float32 = false);

// Picks a decoder from the extension (.tif/.tiff, .png, .raw).
DecodedImage load_image(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

} // namespace algosearch::render

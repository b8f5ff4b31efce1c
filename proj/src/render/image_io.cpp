#include "algosearch/error.hpp"
#include "algosearch/render/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>

namespace algosearch::render {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::io, "cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(Errc::io, "cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error(Errc::io, "short write to " + path.string());
    }
}

namespace {

void png_error_fn(png_structp png, png_const_charp msg)
{
    auto* text = static_cast<std::string*>(png_get_error_ptr(png));
    *text = msg;
    png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

struct ReadCursor {
    const std::vector<std::uint8_t>* bytes;
    std::size_t pos;
};

void png_read_fn(png_structp png, png_bytep out, png_size_t len)
{
    auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cur->pos + len > cur->bytes->size()) {
        png_error(png, "unexpected end of PNG data");
    }
    std::memcpy(out, cur->bytes->data() + cur->pos, len);
    cur->pos += len;
}

void png_write_fn(png_structp png, png_bytep data, png_size_t len)
{
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
}

void png_flush_fn(png_structp) {}

// Decodes to 8- or 16-bit gray/RGB samples, dropping alpha and expanding palettes.
struct PngPixels {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t channels = 0;
    int bit_depth = 8;
    std::vector<std::uint8_t> rows;
};

PngPixels decode_png_pixels(const std::vector<std::uint8_t>& bytes, bool force8)
{
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
        throw Error(Errc::decode, "not a PNG file");
    }
    std::string err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
    if (png == nullptr) {
        throw Error(Errc::decode, "libpng initialisation failed");
    }
    png_infop info = png_create_info_struct(png);
    PngPixels px;
    ReadCursor cursor{&bytes, 0};
    std::vector<png_bytep> row_ptrs;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(Errc::decode, "PNG decode error: " + err);
    }
    png_set_read_fn(png, &cursor, png_read_fn);
    png_read_info(png, info);

    const int color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) {
        png_set_palette_to_rgb(png);
    }
    if (png_get_bit_depth(png, info) < 8) {
        if (color == PNG_COLOR_TYPE_GRAY) {
            png_set_expand_gray_1_2_4_to_8(png);
        } else {
            png_set_packing(png);
        }
    }
    if (png_get_valid(png, info, PNG_INFO_tRNS)) {
        png_set_tRNS_to_alpha(png);
    }
    if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) {
        png_set_strip_alpha(png);
    }
    if (force8) {
        png_set_strip_16(png);
    } else if (png_get_bit_depth(png, info) == 16) {
        png_set_swap(png);  // host little-endian 16-bit samples
    }
    png_read_update_info(png, info);

    px.width = png_get_image_width(png, info);
    px.height = png_get_image_height(png, info);
    px.channels = png_get_channels(png, info);
    px.bit_depth = png_get_bit_depth(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    px.rows.resize(stride * px.height);
    row_ptrs.resize(px.height);
    for (std::uint32_t y = 0; y < px.height; ++y) {
        row_ptrs[y] = px.rows.data() + y * stride;
    }
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    if (px.channels != 1 && px.channels != 3) {
        throw Error(Errc::unsupported, "PNG with " + std::to_string(px.channels) + " channels after conversion");
    }
    return px;
}

} // namespace

std::vector<std::uint8_t> encode_png(const Image8& image)
{
    if (image.channels != 1 && image.channels != 3) {
        throw Error(Errc::parameter, "PNG output needs 1 or 3 channels");
    }
    std::string err;
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
    if (png == nullptr) {
        throw Error(Errc::io, "libpng initialisation failed");
    }
    png_infop info = png_create_info_struct(png);
    std::vector<png_bytep> rows(image.height);

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(Errc::io, "PNG encode error: " + err);
    }
    png_set_write_fn(png, &out, png_write_fn, png_flush_fn);
    png_set_IHDR(png, info, image.width, image.height, 8,
                 image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(image.width) * image.channels;
    for (std::uint32_t y = 0; y < image.height; ++y) {
        rows[y] = const_cast<png_bytep>(image.pixels.data() + y * stride);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

Image8 decode_png8(const std::vector<std::uint8_t>& bytes)
{
    PngPixels px = decode_png_pixels(bytes, true);
    Image8 img;
    img.width = px.width;
    img.height = px.height;
    img.channels = px.channels;
    img.pixels = std::move(px.rows);
    return img;
}

DecodedImage read_png(const std::filesystem::path& path)
{
    const PngPixels px = decode_png_pixels(read_file_bytes(path), false);
    DecodedImage result;
    ImageBuffer& img = result.image;
    img.width = px.width;
    img.height = px.height;
    img.channels = px.channels;
    img.pixels.resize(img.sample_count());
    if (px.bit_depth == 16) {
        for (std::size_t i = 0; i < img.pixels.size(); ++i) {
            img.pixels[i] = px.rows[2 * i] | (px.rows[2 * i + 1] << 8);
        }
    } else {
        std::copy(px.rows.begin(), px.rows.begin() + static_cast<std::ptrdiff_t>(img.pixels.size()),
                  img.pixels.begin());
    }
    return result;
}

namespace {

constexpr char kRawMagic[8] = {'A', 'S', 'R', 'A', 'W', 'I', 'M', 'G'};

std::uint32_t le32(const std::uint8_t* p)
{
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_le32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int b = 0; b < 4; ++b) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
    }
}

} // namespace

DecodedImage read_raw(const std::filesystem::path& path)
{
    const auto bytes = read_file_bytes(path);
    if (bytes.size() < 24 || std::memcmp(bytes.data(), kRawMagic, 8) != 0) {
        throw Error(Errc::decode, "raw image: bad header in " + path.string());
    }
    DecodedImage result;
    ImageBuffer& img = result.image;
    img.width = le32(bytes.data() + 8);
    img.height = le32(bytes.data() + 12);
    img.channels = le32(bytes.data() + 16);
    const std::uint32_t dtype = le32(bytes.data() + 20);
    if (img.channels != 1 && img.channels != 3) {
        throw Error(Errc::unsupported, "raw image: channels must be 1 or 3");
    }
    const std::size_t elem = dtype == 1 ? 4 : dtype == 2 ? 8 : 0;
    if (elem == 0) {
        throw Error(Errc::unsupported, "raw image: dtype code " + std::to_string(dtype));
    }
    const std::size_t n = img.sample_count();
    if (bytes.size() - 24 != n * elem) {
        throw Error(Errc::decode, "raw image: payload size does not match header");
    }
    img.pixels.resize(n);
    const std::uint8_t* p = bytes.data() + 24;
    for (std::size_t i = 0; i < n; ++i) {
        if (elem == 4) {
            const std::uint32_t u = le32(p + 4 * i);
            float f;
            std::memcpy(&f, &u, 4);
            img.pixels[i] = f;
        } else {
            std::uint64_t u = 0;
            for (int b = 0; b < 8; ++b) {
                u |= static_cast<std::uint64_t>(p[8 * i + b]) << (8 * b);
            }
            std::memcpy(&img.pixels[i], &u, 8);
        }
    }
    return result;
}

void write_raw(const std::filesystem::path& path, const ImageBuffer& image, bool as_float32)
{
    std::vector<std::uint8_t> out(kRawMagic, kRawMagic + 8);
    put_le32(out, image.width);
    put_le32(out, image.height);
    put_le32(out, image.channels);
    put_le32(out, as_float32 ? 1 : 2);
    for (const double v : image.pixels) {
        if (as_float32) {
            const float f = static_cast<float>(v);
            std::uint32_t u;
            std::memcpy(&u, &f, 4);
            put_le32(out, u);
        } else {
            std::uint64_t u;
            std::memcpy(&u, &v, 8);
            for (int b = 0; b < 8; ++b) {
                out.push_back(static_cast<std::uint8_t>(u >> (8 * b)));
            }
        }
    }
    write_file_bytes(path, out);
}

DecodedImage load_image(const std::filesystem::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".tif" || ext == ".tiff") {
        return read_tiff(path);
    }
    if (ext == ".png") {
        return read_png(path);
    }
    if (ext == ".raw") {
        return read_raw(path);
    }
    throw Error(Errc::unsupported, "unsupported image type '" + ext + "' (expected .tif, .tiff, .png or .raw)");
}

} // namespace algosearch::render

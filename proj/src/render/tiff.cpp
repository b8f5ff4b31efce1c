#include "algosearch/error.hpp"
#include "algosearch/render/image.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <string>

namespace algosearch::render {
namespace {

enum Tag : std::uint16_t {
    kImageWidth = 256,
    kImageLength = 257,
    kBitsPerSample = 258,
    kCompression = 259,
    kPhotometric = 262,
    kStripOffsets = 273,
    kSamplesPerPixel = 277,
    kRowsPerStrip = 278,
    kStripByteCounts = 279,
    kPlanarConfig = 284,
    kPredictor = 317,
    kTileWidth = 322,
    kTileLength = 323,
    kTileOffsets = 324,
    kTileByteCounts = 325,
    kSampleFormat = 339,
};

[[noreturn]] void decode_error(const std::string& what)
{
    throw Error(Errc::decode, "TIFF decode error: " + what);
}

[[noreturn]] void unsupported(const std::string& feature)
{
    throw Error(Errc::unsupported, "unsupported TIFF feature: " + feature);
}

class ByteReader {
public:
    ByteReader(const std::vector<std::uint8_t>& data, bool little) : data_(data), little_(little) {}

    std::uint16_t u16(std::size_t off) const
    {
        need(off, 2);
        const auto* p = data_.data() + off;
        return little_ ? static_cast<std::uint16_t>(p[0] | (p[1] << 8))
                       : static_cast<std::uint16_t>((p[0] << 8) | p[1]);
    }

    std::uint32_t u32(std::size_t off) const
    {
        need(off, 4);
        const auto* p = data_.data() + off;
        if (little_) {
            return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                   (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
        }
        return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
               (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
    }

    void need(std::size_t off, std::size_t len) const
    {
        if (off > data_.size() || len > data_.size() - off) {
            decode_error("read past end of file at offset " + std::to_string(off));
        }
    }

    bool little() const { return little_; }
    const std::vector<std::uint8_t>& data() const { return data_; }

private:
    const std::vector<std::uint8_t>& data_;
    bool little_;
};

std::size_t type_size(std::uint16_t type)
{
    switch (type) {
    case 1: case 2: case 6: case 7: return 1;
    case 3: case 8: return 2;
    case 4: case 9: case 11: return 4;
    case 5: case 10: case 12: return 8;
    default: return 0;
    }
}

// Integer-valued tag contents; other types are ignored by this decoder.
using TagMap = std::map<std::uint16_t, std::vector<std::uint64_t>>;

std::uint32_t parse_ifd(const ByteReader& rd, std::uint32_t ifd_offset, TagMap& tags)
{
    const std::uint16_t count = rd.u16(ifd_offset);
    for (std::uint16_t e = 0; e < count; ++e) {
        const std::size_t entry = ifd_offset + 2 + 12u * e;
        const std::uint16_t tag = rd.u16(entry);
        const std::uint16_t type = rd.u16(entry + 2);
        const std::uint32_t n = rd.u32(entry + 4);
        const std::size_t size = type_size(type);
        if (size == 0 || !(type == 1 || type == 3 || type == 4)) {
            continue;
        }
        const std::size_t total = size * n;
        const std::size_t value_off = total <= 4 ? entry + 8 : rd.u32(entry + 8);
        rd.need(value_off, total);
        std::vector<std::uint64_t> values(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            const std::size_t at = value_off + i * size;
            switch (type) {
            case 1: values[i] = rd.data()[at]; break;
            case 3: values[i] = rd.u16(at); break;
            case 4: values[i] = rd.u32(at); break;
            }
        }
        tags[tag] = std::move(values);
    }
    return rd.u32(ifd_offset + 2 + 12u * count);
}

std::uint64_t tag_scalar(const TagMap& tags, std::uint16_t tag, std::uint64_t fallback)
{
    const auto it = tags.find(tag);
    if (it == tags.end() || it->second.empty()) {
        return fallback;
    }
    return it->second.front();
}

const std::vector<std::uint64_t>& tag_array(const TagMap& tags, std::uint16_t tag, const char* name)
{
    const auto it = tags.find(tag);
    if (it == tags.end() || it->second.empty()) {
        decode_error(std::string("missing required tag ") + name);
    }
    return it->second;
}

std::vector<std::uint8_t> unpack_lzw(const std::uint8_t* src, std::size_t len, std::size_t expected)
{
    std::vector<std::uint8_t> out;
    out.reserve(expected);
    std::vector<std::vector<std::uint8_t>> table;
    auto reset = [&] {
        table.assign(258, {});
        for (int i = 0; i < 256; ++i) {
            table[i] = {static_cast<std::uint8_t>(i)};
        }
    };
    reset();

    std::size_t bitpos = 0;
    int width = 9;
    auto read_code = [&]() -> int {
        if (bitpos + width > len * 8) {
            return 257;  // treat truncation as end of information
        }
        int code = 0;
        for (int b = 0; b < width; ++b) {
            const std::size_t bit = bitpos + b;
            code = (code << 1) | ((src[bit >> 3] >> (7 - (bit & 7))) & 1);
        }
        bitpos += width;
        return code;
    };

    int prev = -1;
    while (out.size() < expected) {
        int code = read_code();
        if (code == 257) {
            break;
        }
        if (code == 256) {
            reset();
            width = 9;
            code = read_code();
            if (code == 257) {
                break;
            }
            if (code > 255) {
                decode_error("LZW stream: invalid first code after clear");
            }
            out.insert(out.end(), table[code].begin(), table[code].end());
            prev = code;
            continue;
        }
        if (prev < 0) {
            decode_error("LZW stream does not start with a clear code");
        }
        std::vector<std::uint8_t> entry;
        if (static_cast<std::size_t>(code) < table.size()) {
            entry = table[code];
            auto added = table[prev];
            added.push_back(entry.front());
            table.push_back(std::move(added));
        } else if (static_cast<std::size_t>(code) == table.size()) {
            entry = table[prev];
            entry.push_back(entry.front());
            table.push_back(entry);
        } else {
            decode_error("LZW stream: code out of range");
        }
        out.insert(out.end(), entry.begin(), entry.end());
        prev = code;
        if (table.size() >= (1u << width) - 1 && width < 12) {
            ++width;
        }
    }
    return out;
}

std::vector<std::uint8_t> unpack_packbits(const std::uint8_t* src, std::size_t len, std::size_t expected)
{
    std::vector<std::uint8_t> out;
    out.reserve(expected);
    std::size_t i = 0;
    while (i < len && out.size() < expected) {
        const auto n = static_cast<std::int8_t>(src[i++]);
        if (n >= 0) {
            const std::size_t count = static_cast<std::size_t>(n) + 1;
            if (i + count > len) {
                decode_error("PackBits literal run past end of strip");
            }
            out.insert(out.end(), src + i, src + i + count);
            i += count;
        } else if (n != -128) {
            if (i >= len) {
                decode_error("PackBits repeat run past end of strip");
            }
            out.insert(out.end(), static_cast<std::size_t>(1 - n), src[i++]);
        }
    }
    return out;
}

std::vector<std::uint8_t> unpack_deflate(const std::uint8_t* src, std::size_t len, std::size_t expected)
{
    std::vector<std::uint8_t> out(expected);
    uLongf out_len = static_cast<uLongf>(expected);
    const int rc = uncompress(out.data(), &out_len, src, static_cast<uLong>(len));
    if (rc != Z_OK && rc != Z_BUF_ERROR) {
        decode_error("Deflate stream is corrupt (zlib code " + std::to_string(rc) + ")");
    }
    out.resize(out_len);
    return out;
}

// Undo horizontal differencing for one chunk of `rows` rows of `row_samples`
// samples each, where samples are `bytes` wide and stored in file byte order.
void undo_horizontal_predictor(std::vector<std::uint8_t>& buf, std::size_t rows, std::size_t row_pixels,
                               std::size_t spp, std::size_t bytes, bool little)
{
    auto load = [&](std::size_t idx) -> std::uint32_t {
        const std::uint8_t* p = buf.data() + idx * bytes;
        std::uint32_t v = 0;
        for (std::size_t b = 0; b < bytes; ++b) {
            const std::size_t shift = little ? 8 * b : 8 * (bytes - 1 - b);
            v |= static_cast<std::uint32_t>(p[b]) << shift;
        }
        return v;
    };
    auto store = [&](std::size_t idx, std::uint32_t v) {
        std::uint8_t* p = buf.data() + idx * bytes;
        for (std::size_t b = 0; b < bytes; ++b) {
            const std::size_t shift = little ? 8 * b : 8 * (bytes - 1 - b);
            p[b] = static_cast<std::uint8_t>(v >> shift);
        }
    };
    const std::size_t row_samples = row_pixels * spp;
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t base = r * row_samples;
        if ((base + row_samples) * bytes > buf.size()) {
            break;
        }
        for (std::size_t s = spp; s < row_samples; ++s) {
            store(base + s, load(base + s) + load(base + s - spp));
        }
    }
}

double sample_value(const std::uint8_t* p, std::size_t bits, std::uint64_t format, bool little)
{
    const std::size_t bytes = bits / 8;
    std::uint64_t raw = 0;
    for (std::size_t b = 0; b < bytes; ++b) {
        const std::size_t shift = little ? 8 * b : 8 * (bytes - 1 - b);
        raw |= static_cast<std::uint64_t>(p[b]) << shift;
    }
    if (format == 3) {
        if (bits == 32) {
            const auto u = static_cast<std::uint32_t>(raw);
            float f;
            std::memcpy(&f, &u, 4);
            return static_cast<double>(f);
        }
        double d;
        std::memcpy(&d, &raw, 8);
        return d;
    }
    if (format == 2) {
        switch (bits) {
        case 8: return static_cast<std::int8_t>(raw);
        case 16: return static_cast<std::int16_t>(raw);
        case 32: return static_cast<std::int32_t>(raw);
        }
    }
    return static_cast<double>(raw);
}

} // namespace

DecodedImage decode_tiff(const std::vector<std::uint8_t>& bytes)
{
    if (bytes.size() < 8) {
        decode_error("file too short for a TIFF header");
    }
    bool little;
    if (bytes[0] == 'I' && bytes[1] == 'I') {
        little = true;
    } else if (bytes[0] == 'M' && bytes[1] == 'M') {
        little = false;
    } else {
        decode_error("bad byte-order mark");
    }
    const ByteReader rd(bytes, little);
    const std::uint16_t magic = rd.u16(2);
    if (magic == 43) {
        unsupported("BigTIFF container");
    }
    if (magic != 42) {
        decode_error("bad magic number " + std::to_string(magic));
    }

    TagMap tags;
    const std::uint32_t next_ifd = parse_ifd(rd, rd.u32(4), tags);

    DecodedImage result;
    if (next_ifd != 0) {
        result.notes.push_back("multi-page TIFF: only the first page was decoded");
    }

    const auto width = static_cast<std::uint32_t>(tag_scalar(tags, kImageWidth, 0));
    const auto height = static_cast<std::uint32_t>(tag_scalar(tags, kImageLength, 0));
    if (width == 0 || height == 0) {
        decode_error("missing or zero image dimensions");
    }
    const std::uint64_t spp = tag_scalar(tags, kSamplesPerPixel, 1);
    if (spp != 1 && spp != 3) {
        unsupported(std::to_string(spp) + " samples per pixel (only 1 or 3)");
    }
    const std::uint64_t photometric = tag_scalar(tags, kPhotometric, spp == 3 ? 2 : 1);
    if (photometric == 3) {
        unsupported("palette color (photometric 3)");
    }
    if (photometric > 2) {
        unsupported("photometric interpretation " + std::to_string(photometric));
    }
    if (tag_scalar(tags, kPlanarConfig, 1) != 1) {
        unsupported("planar configuration 2 (separate planes)");
    }

    const auto bits_it = tags.find(kBitsPerSample);
    const std::uint64_t bits = bits_it == tags.end() ? 1 : bits_it->second.front();
    if (bits_it != tags.end()) {
        for (const auto b : bits_it->second) {
            if (b != bits) {
                unsupported("mixed bits per sample");
            }
        }
    }
    const std::uint64_t format = tag_scalar(tags, kSampleFormat, 1);
    if (format == 3) {
        if (bits != 32 && bits != 64) {
            unsupported(std::to_string(bits) + "-bit floating point samples");
        }
    } else if (format == 1 || format == 2) {
        if (bits != 8 && bits != 16 && bits != 32) {
            unsupported(std::to_string(bits) + "-bit integer samples");
        }
    } else {
        unsupported("sample format " + std::to_string(format));
    }

    const std::uint64_t compression = tag_scalar(tags, kCompression, 1);
    if (compression != 1 && compression != 5 && compression != 8 && compression != 32946 &&
        compression != 32773) {
        unsupported("compression scheme " + std::to_string(compression));
    }
    const std::uint64_t predictor = tag_scalar(tags, kPredictor, 1);
    if (predictor == 3) {
        unsupported("floating-point predictor (predictor 3)");
    }
    if (predictor != 1 && predictor != 2) {
        unsupported("predictor " + std::to_string(predictor));
    }
    if (predictor == 2 && format == 3) {
        unsupported("horizontal predictor on floating-point samples");
    }

    const std::size_t sample_bytes = bits / 8;
    const std::size_t pixel_bytes = sample_bytes * spp;

    auto unpack = [&](std::uint64_t offset, std::uint64_t count, std::size_t expected) {
        rd.need(offset, count);
        const std::uint8_t* src = bytes.data() + offset;
        std::vector<std::uint8_t> chunk;
        switch (compression) {
        case 1: chunk.assign(src, src + std::min<std::size_t>(count, expected)); break;
        case 5: chunk = unpack_lzw(src, count, expected); break;
        case 8:
        case 32946: chunk = unpack_deflate(src, count, expected); break;
        case 32773: chunk = unpack_packbits(src, count, expected); break;
        }
        if (chunk.size() < expected) {
            decode_error("chunk decoded to " + std::to_string(chunk.size()) + " bytes, expected " +
                         std::to_string(expected));
        }
        return chunk;
    };

    ImageBuffer& img = result.image;
    img.width = width;
    img.height = height;
    img.channels = static_cast<std::uint32_t>(spp);
    img.pixels.assign(img.sample_count(), 0.0);

    auto put_row = [&](const std::uint8_t* row, std::size_t y, std::size_t x0, std::size_t n) {
        for (std::size_t x = 0; x < n; ++x) {
            for (std::size_t c = 0; c < spp; ++c) {
                const std::uint8_t* p = row + x * pixel_bytes + c * sample_bytes;
                img.pixels[(y * width + x0 + x) * spp + c] = sample_value(p, bits, format, little);
            }
        }
    };

    if (tags.count(kTileOffsets) != 0) {
        const std::uint64_t tw = tag_scalar(tags, kTileWidth, 0);
        const std::uint64_t tl = tag_scalar(tags, kTileLength, 0);
        if (tw == 0 || tl == 0) {
            decode_error("tiled image without tile dimensions");
        }
        const auto& offsets = tag_array(tags, kTileOffsets, "TileOffsets");
        const auto& counts = tag_array(tags, kTileByteCounts, "TileByteCounts");
        const std::size_t across = (width + tw - 1) / tw;
        const std::size_t down = (height + tl - 1) / tl;
        if (offsets.size() < across * down || counts.size() < offsets.size()) {
            decode_error("tile table is shorter than the tile grid");
        }
        const std::size_t tile_row_bytes = tw * pixel_bytes;
        for (std::size_t ty = 0; ty < down; ++ty) {
            for (std::size_t tx = 0; tx < across; ++tx) {
                const std::size_t t = ty * across + tx;
                auto chunk = unpack(offsets[t], counts[t], tile_row_bytes * tl);
                if (predictor == 2) {
                    undo_horizontal_predictor(chunk, tl, tw, spp, sample_bytes, little);
                }
                const std::size_t cols = std::min<std::size_t>(tw, width - tx * tw);
                const std::size_t rows = std::min<std::size_t>(tl, height - ty * tl);
                for (std::size_t r = 0; r < rows; ++r) {
                    put_row(chunk.data() + r * tile_row_bytes, ty * tl + r, tx * tw, cols);
                }
            }
        }
    } else {
        const auto& offsets = tag_array(tags, kStripOffsets, "StripOffsets");
        const auto& counts = tag_array(tags, kStripByteCounts, "StripByteCounts");
        const std::uint64_t rows_per_strip = std::min<std::uint64_t>(tag_scalar(tags, kRowsPerStrip, height), height);
        if (rows_per_strip == 0) {
            decode_error("RowsPerStrip is zero");
        }
        const std::size_t row_bytes = width * pixel_bytes;
        const std::size_t strips = (height + rows_per_strip - 1) / rows_per_strip;
        if (offsets.size() < strips || counts.size() < strips) {
            decode_error("strip table is shorter than the image");
        }
        for (std::size_t s = 0; s < strips; ++s) {
            const std::size_t rows = std::min<std::size_t>(rows_per_strip, height - s * rows_per_strip);
            auto chunk = unpack(offsets[s], counts[s], rows * row_bytes);
            if (predictor == 2) {
                undo_horizontal_predictor(chunk, rows, width, spp, sample_bytes, little);
            }
            for (std::size_t r = 0; r < rows; ++r) {
                put_row(chunk.data() + r * row_bytes, s * rows_per_strip + r, 0, width);
            }
        }
    }

    if (photometric == 0) {
        result.notes.push_back("WhiteIsZero photometric: values are reported as stored");
    }
    return result;
}

DecodedImage read_tiff(const std::filesystem::path& path)
{
    return decode_tiff(read_file_bytes(path));
}

} // namespace algosearch::render

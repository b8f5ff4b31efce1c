#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "algosearch/error.hpp"
#include "algosearch/render/image.hpp"
#include "algosearch/render/renderer.hpp"
#include "algosearch/store/types.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>

using namespace algosearch;
using namespace algosearch::render;
using testsupport::TempDir;
namespace fs = std::filesystem;

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

ImageBuffer gray(std::uint32_t w, std::uint32_t h, std::vector<double> px)
{
    return ImageBuffer{w, h, 1, std::move(px)};
}

// Sorts the finite values and indexes them at rank ceil(p n / 100), min 1.
std::pair<double, double> oracle_bounds(const std::vector<double>& px, double pl, double ph)
{
    std::vector<double> v;
    for (double x : px) {
        if (std::isfinite(x)) {
            v.push_back(x);
        }
    }
    std::sort(v.begin(), v.end());
    auto at = [&](double p) {
        long r = static_cast<long>(std::ceil(p * static_cast<double>(v.size()) / 100.0));
        r = std::clamp<long>(r, 1, static_cast<long>(v.size()));
        return v[static_cast<std::size_t>(r - 1)];
    };
    return {at(pl), at(ph)};
}

fs::path images() { return testsupport::fixture_dir() / "images"; }

Json manifest()
{
    return Json::parse(testsupport::read_text(images() / "manifest.json"));
}

Errc code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return Errc::io;
}

} // namespace

TEST_CASE("display bounds examples")
{
    std::vector<double> ramp;
    for (int i = 1; i <= 100; ++i) {
        ramp.push_back(i);
    }
    auto b = display_bounds(gray(10, 10, ramp), 0, 100);
    CHECK(b.low == 1);
    CHECK(b.high == 100);
    CHECK_FALSE(b.degenerate);

    std::vector<double> spike(100, 0.0);
    spike[57] = 1e6;
    b = display_bounds(gray(10, 10, spike), 1, 99);
    CHECK(b.low == 0);
    CHECK(b.high == 0);
    CHECK(b.degenerate);

    b = display_bounds(gray(2, 2, {3, 3, 3, 3}), 1, 99);
    CHECK(b.low == b.high);
    CHECK(b.degenerate);

    CHECK(code_of([] { display_bounds(gray(1, 2, {kNaN, INFINITY}), 1, 99); }) == Errc::unrenderable);
    CHECK(code_of([] { display_bounds(gray(1, 1, {1}), 50, 10); }) == Errc::parameter);
}

TEST_CASE("property: bounds equal the sort oracle")
{
    std::mt19937_64 rng(4242);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto w = static_cast<std::uint32_t>(1 + rng() % 64);
        const auto h = static_cast<std::uint32_t>(1 + rng() % 64);
        std::vector<double> px(static_cast<std::size_t>(w) * h);
        const int mode = static_cast<int>(rng() % 3);
        for (auto& v : px) {
            v = mode == 0 ? static_cast<double>(rng() % 7) : std::ldexp(static_cast<double>(rng() % 100000), -7);
            if (rng() % 50 == 0) {
                v = kNaN;
            }
        }
        px[0] = 1.0;  // at least one finite value
        const double pl = static_cast<double>(rng() % 50);
        const double ph = pl + 1 + static_cast<double>(rng() % static_cast<unsigned>(100 - pl));
        const auto b = display_bounds(gray(w, h, px), pl, ph);
        const auto [lo, hi] = oracle_bounds(px, pl, ph);
        REQUIRE(b.low == lo);
        REQUIRE(b.high == hi);
        CHECK(b.low <= b.high);
    }
}

TEST_CASE("property: an outlier never becomes a bound and moves each bound by at most one order statistic")
{
    std::mt19937_64 rng(77);
    std::normal_distribution<double> nd(100.0, 15.0);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 200 + rng() % 3000;
        std::vector<double> px(n);
        for (auto& v : px) {
            v = nd(rng);
        }
        auto with = px;
        with.push_back(1e9);
        const auto b0 = display_bounds(gray(static_cast<std::uint32_t>(n), 1, px), 1, 99);
        const auto b1 = display_bounds(gray(static_cast<std::uint32_t>(n + 1), 1, with), 1, 99);
        std::vector<double> s = px;
        std::sort(s.begin(), s.end());
        const auto pos = [&](double v) { return std::lower_bound(s.begin(), s.end(), v) - s.begin(); };
        CHECK(b1.high < 1e9);
        CHECK(std::abs(pos(b1.low) - pos(b0.low)) <= 1);
        CHECK(std::abs(pos(b1.high) - pos(b0.high)) <= 1);
    }
}

TEST_CASE("linear render of a ramp is the identity")
{
    std::vector<double> ramp;
    for (int i = 0; i < 256; ++i) {
        ramp.push_back(i);
    }
    const auto img = render_image(gray(16, 16, ramp), {0, 100, false});
    for (int i = 0; i < 256; ++i) {
        CHECK(img.pixels[static_cast<std::size_t>(i)] == i);
    }
}

TEST_CASE("non-finite, degenerate and clipped pixels")
{
    auto img = render_image(gray(2, 2, {5, 5, kNaN, 5}), {1, 99, false});
    CHECK(img.pixels == std::vector<std::uint8_t>{128, 128, 0, 128});

    std::vector<double> px(100);
    for (int i = 0; i < 100; ++i) {
        px[static_cast<std::size_t>(i)] = i;
    }
    px[0] = -1e9;
    px[99] = 1e9;
    img = render_image(gray(10, 10, px), {1, 99, false});
    CHECK(img.pixels[0] == 0);
    CHECK(img.pixels[99] == 255);
}

TEST_CASE("log transform follows log(1 + (x - low))")
{
    std::vector<double> px{0, 1, 3, 7, 15, 31, 63, 127, 255, 511};
    const auto img = render_image(gray(10, 1, px), {0, 100, true});
    const double tmax = std::log1p(511.0);
    for (std::size_t i = 0; i < px.size(); ++i) {
        const auto expect = static_cast<int>(std::floor(std::log1p(px[i]) * (255.0 / tmax) + 0.5));
        CHECK(img.pixels[i] == expect);
    }
}

TEST_CASE("property: monotone input renders monotone output")
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> px(1 + rng() % 500);
        for (auto& v : px) {
            v = std::ldexp(static_cast<double>(rng() % 1000000), -static_cast<int>(rng() % 20));
        }
        std::sort(px.begin(), px.end());
        const bool log = rng() % 2 == 0;
        const auto img = render_image(gray(static_cast<std::uint32_t>(px.size()), 1, px), {1, 99, log});
        for (std::size_t i = 1; i < px.size(); ++i) {
            REQUIRE(img.pixels[i - 1] <= img.pixels[i]);
        }
    }
}

TEST_CASE("png output is deterministic and decodes back")
{
    TempDir dir("render");
    std::vector<double> px(64 * 48);
    std::mt19937_64 rng(9);
    for (auto& v : px) {
        v = static_cast<double>(rng() % 10000) / 3.0;
    }
    const auto image = gray(64, 48, px);
    const auto r1 = render_to_png(image, {1, 99, true}, dir / "a.png");
    const auto r2 = render_to_png(image, {1, 99, true}, dir / "b.png");
    const auto bytes = read_file_bytes(r1.png_path);
    CHECK(bytes == read_file_bytes(r2.png_path));
    const Image8 back = decode_png8(bytes);
    CHECK(back.width == 64);
    CHECK(back.height == 48);
    CHECK(back.pixels == render_image(image, {1, 99, true}).pixels);

    const auto decoded = read_png(r1.png_path);
    CHECK(decoded.image.channels == 1);
    CHECK(decoded.image.pixels[5] == back.pixels[5]);
}

TEST_CASE("raw sidecar round-trip")
{
    TempDir dir("render");
    ImageBuffer img{3, 2, 1, {1.5, -2.25, kNaN, 1e300, 0.0, 7.0}};
    write_raw(dir / "x.raw", img);
    const auto back = read_raw(dir / "x.raw").image;
    CHECK(back.width == 3);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(std::memcmp(&back.pixels[i], &img.pixels[i], sizeof(double)) == 0);
    }
    write_raw(dir / "y.raw", img, true);
    CHECK(load_image(dir / "y.raw").image.pixels[1] == -2.25);
    testsupport::write_text(dir / "bad.raw", "ASRAWIMG");
    CHECK(code_of([&] { read_raw(dir / "bad.raw"); }) == Errc::decode);
}

TEST_CASE("tiff fixtures decode to the source values")
{
    const Json m = manifest();
    for (const auto& [name, entry] : m.items()) {
        CAPTURE(name);
        if (entry.contains("unsupported")) {
            try {
                read_tiff(images() / name);
                FAIL("expected unsupported error");
            } catch (const Error& e) {
                CHECK(e.code() == Errc::unsupported);
                CHECK(std::string(e.what()).find(entry["unsupported"].get<std::string>()) != std::string::npos);
            }
            continue;
        }
        const DecodedImage d = read_tiff(images() / name);
        const auto shape = entry["shape"].get<std::vector<std::size_t>>();
        double sum = 0;
        std::size_t nans = 0;
        for (double v : d.image.pixels) {
            if (std::isfinite(v)) {
                sum += v;
            } else if (std::isnan(v)) {
                ++nans;
            }
        }
        if (entry.contains("first_page_sum")) {
            CHECK(d.image.width == shape[2]);
            CHECK(d.image.height == shape[1]);
            CHECK(sum == entry["first_page_sum"].get<double>());
            REQUIRE(d.notes.size() == 1);
            CHECK(d.notes[0].find("multi-page") != std::string::npos);
            continue;
        }
        CHECK(d.image.height == shape[0]);
        CHECK(d.image.width == shape[1]);
        CHECK(d.image.channels == (shape.size() == 3 ? shape[2] : 1));
        CHECK(nans == entry["nan_count"].get<std::size_t>());
        CHECK(sum == doctest::Approx(entry["sum"].get<double>()).epsilon(1e-12));
        if (entry.contains("expected_f64")) {
            const auto raw = read_file_bytes(images() / entry["expected_f64"].get<std::string>());
            REQUIRE(raw.size() == d.image.pixels.size() * sizeof(double));
            CHECK(std::memcmp(raw.data(), d.image.pixels.data(), raw.size()) == 0);
        }
    }
}

TEST_CASE("corrupt tiff is a decode error")
{
    TempDir dir("render");
    auto bytes = read_file_bytes(images() / "gray16_none.tif");
    bytes.resize(200);
    write_file_bytes(dir / "cut.tif", bytes);
    CHECK(code_of([&] { read_tiff(dir / "cut.tif"); }) == Errc::decode);
    testsupport::write_text(dir / "junk.tif", "not a tiff at all");
    CHECK(code_of([&] { read_tiff(dir / "junk.tif"); }) == Errc::decode);
}

TEST_CASE("render_file on a tiff and an all-NaN image")
{
    TempDir dir("render");
    const auto r = render_file(images() / "hedm_like.tif", {1, 99, true}, dir / "hedm.png");
    CHECK(fs::exists(r.png_path));
    ImageBuffer nan_img{4, 4, 1, std::vector<double>(16, kNaN)};
    write_raw(dir / "nan.raw", nan_img);
    CHECK(code_of([&] { render_file(dir / "nan.raw", {}, dir / "nan.png"); }) == Errc::unrenderable);
}

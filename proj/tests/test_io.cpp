#include <doctest.h>

#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "bstd/io.hpp"
#include "support.hpp"

using namespace bstd;
namespace fs = std::filesystem;

namespace {

void write_bytes(const fs::path& p, const std::string& bytes)
{
    std::ofstream out(p, std::ios::binary);
    out << bytes;
}

std::string read_bytes(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 1x1 RGB PNG, colour type 2.
const unsigned char kRgbPng[] = {
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48,
    0x44, 0x52, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x02, 0x00, 0x00,
    0x00, 0x90, 0x77, 0x53, 0xde, 0x00, 0x00, 0x00, 0x0c, 0x49, 0x44, 0x41, 0x54, 0x78,
    0x9c, 0x63, 0xf8, 0xcf, 0xc0, 0x00, 0x00, 0x03, 0x01, 0x01, 0x00, 0xc9, 0xfe, 0x92,
    0xef, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};

Report sample_report()
{
    Report r;
    r.input_path = "scans/hand 01.png";
    r.width = 640;
    r.height = 480;
    r.alpha = 1.4375123456789012;
    r.solver_residual = 3.2e-7;
    r.solver_iterations = 9;
    r.clamped_pixel_count = 17;
    r.contrast_gain_median = 2.0000000000000004;
    r.timings = {0.0123, 0.25, 1.0 / 3.0, 0.6};
    r.converged = true;
    r.degenerate = false;
    return r;
}

} // namespace

TEST_SUITE("io")
{
    TEST_CASE("P2 graymap is normalized by maxval")
    {
        const auto dir = testing::scratch_dir("io_p2");
        write_bytes(dir / "a.pgm", "P2\n# comment\n2 2\n255\n0 255\n128 64\n");
        const Image img = read_grayscale(dir / "a.pgm");
        CHECK(img.width() == 2);
        CHECK(img.height() == 2);
        CHECK(img(0, 0) == 0.0);
        CHECK(img(1, 0) == 1.0);
        CHECK(img(0, 1) == 128.0 / 255.0);
        CHECK(img(1, 1) == 64.0 / 255.0);
    }

    TEST_CASE("16-bit P5 is big-endian")
    {
        const auto dir = testing::scratch_dir("io_p5");
        std::string bytes = "P5 3 1 65535\n";
        bytes += std::string("\xff\xff\x00\x01\x80\x00", 6);
        write_bytes(dir / "b.pgm", bytes);
        const Image img = read_grayscale(dir / "b.pgm");
        CHECK(img[0] == 1.0);
        CHECK(img[1] == 1.0 / 65535.0);
        CHECK(img[2] == 32768.0 / 65535.0);
    }

    TEST_CASE("16-bit file of 65535 reads as all ones")
    {
        const auto dir = testing::scratch_dir("io_ones");
        for (const char* name : {"ones.pgm", "ones.png"}) {
            write_grayscale(Image(5, 4, 1.0), dir / name, 16);
            const Image img = read_grayscale(dir / name);
            for (double v : img.pixels()) {
                CHECK(v == 1.0);
            }
        }
    }

    TEST_CASE("corrupt and unsupported inputs are rejected")
    {
        const auto dir = testing::scratch_dir("io_bad");
        write_bytes(dir / "trunc.pgm", std::string("P5 4 4 255\n\x01\x02\x03", 14));
        CHECK_THROWS_AS(read_grayscale(dir / "trunc.pgm"), FormatError);

        write_bytes(dir / "trunc2.pgm", "P2 3 1 255\n1 2");
        CHECK_THROWS_AS(read_grayscale(dir / "trunc2.pgm"), FormatError);

        write_bytes(dir / "over.pgm", "P2 1 1 100\n101\n");
        CHECK_THROWS_AS(read_grayscale(dir / "over.pgm"), FormatError);

        write_bytes(dir / "color.ppm", "P6 1 1 255\n\x01\x02\x03");
        CHECK_THROWS_AS(read_grayscale(dir / "color.ppm"), FormatError);

        write_bytes(dir / "junk.png", "not an image at all");
        CHECK_THROWS_AS(read_grayscale(dir / "junk.png"), FormatError);

        write_bytes(dir / "rgb.png", std::string(reinterpret_cast<const char*>(kRgbPng),
                                                 sizeof(kRgbPng)));
        CHECK_THROWS_AS(read_grayscale(dir / "rgb.png"), FormatError);

        std::string png = read_bytes(dir / "rgb.png");
        CHECK_THROWS_AS((write_bytes(dir / "cut.png", png.substr(0, 40)),
                         read_grayscale(dir / "cut.png")),
                        FormatError);

        CHECK_THROWS_AS(read_grayscale(dir / "missing.pgm"), IoError);
        CHECK_THROWS_AS(read_grayscale(dir), IoError);
    }

    TEST_CASE("quantization on write")
    {
        const auto dir = testing::scratch_dir("io_quant");
        write_grayscale(Image(2, 2, 1.0), dir / "w.pgm", 8);
        const std::string bytes = read_bytes(dir / "w.pgm");
        CHECK(bytes == std::string("P5\n2 2\n255\n") + std::string(4, '\xff'));

        write_grayscale(Image(1, 1, 0.5), dir / "h.pgm", 16);
        const std::string half = read_bytes(dir / "h.pgm");
        // round(0.5 * 65535) = 32768 = 0x8000
        CHECK(half.substr(half.size() - 2) == std::string("\x80\x00", 2));
    }

    TEST_CASE("out-of-range values are clamped and counted")
    {
        const auto dir = testing::scratch_dir("io_clamp");
        Image img(3, 1, 0.5);
        img[0] = -0.25;
        img[2] = 1.5;
        CHECK(write_grayscale(img, dir / "c.png", 8) == 2);
        const Image back = read_grayscale(dir / "c.png");
        CHECK(back[0] == 0.0);
        CHECK(back[2] == 1.0);
    }

    TEST_CASE("round trip stays within the quantization bound")
    {
        const auto dir = testing::scratch_dir("io_round");
        testing::Rng rng(3);
        for (int depth : {8, 16}) {
            const double bound = 1.0 / (2.0 * ((1 << depth) - 1)) + 1e-15;
            for (const char* name : {"r.pgm", "r.png"}) {
                const Image img = testing::random_image(37, 23, rng);
                write_grayscale(img, dir / name, depth);
                const Image back = read_grayscale(dir / name);
                REQUIRE(back.width() == 37);
                REQUIRE(back.height() == 23);
                CHECK(testing::max_abs_diff(img, back) <= bound);
            }
        }
    }

    TEST_CASE("write errors")
    {
        const auto dir = testing::scratch_dir("io_werr");
        CHECK_THROWS_AS(write_grayscale(Image(2, 2), dir / "x.tiff", 8), FormatError);
        CHECK_THROWS_AS(write_grayscale(Image(2, 2), dir / "no" / "such" / "x.pgm", 8), IoError);
        CHECK_THROWS_AS(write_grayscale(Image(2, 2), dir / "no" / "x.png", 16), IoError);
        CHECK_THROWS_AS(write_grayscale(Image(2, 2), dir / "x.pgm", 12), std::invalid_argument);
    }

    TEST_CASE("mask files use the 0.5 cut")
    {
        const auto dir = testing::scratch_dir("io_mask");
        write_bytes(dir / "m.pgm", "P2 4 1 255\n0 127 128 255\n");
        const Mask m = read_mask(dir / "m.pgm");
        CHECK_FALSE(m[0]);
        CHECK_FALSE(m[1]);
        CHECK(m[2]);
        CHECK(m[3]);

        testing::Rng rng(8);
        const Mask r = testing::random_mask(9, 7, rng, 0.4);
        write_mask(r, dir / "r.png");
        CHECK(read_mask(dir / "r.png") == r);
    }

    TEST_CASE("report serialization")
    {
        const Report r = sample_report();
        const std::string text = report_to_json(r);
        const auto doc = nlohmann::json::parse(text);
        for (const char* key : {"input_path", "width", "height", "alpha", "solver_residual",
                                "solver_iterations", "clamped_pixel_count",
                                "contrast_gain_median", "timings"}) {
            CHECK(doc.contains(key));
        }
        for (const char* key : {"mask_s", "solve_s", "decompose_s", "total_s"}) {
            CHECK(doc["timings"].contains(key));
        }
        CHECK(report_from_json(text) == r);
        CHECK(report_from_json(text).solver_residual == 3.2e-7);

        Report one = r;
        one.alpha = 1.0;
        CHECK(report_to_json(one).find("\"alpha\": 1.0") != std::string::npos);
    }

    TEST_CASE("report file round trip and malformed input")
    {
        const auto dir = testing::scratch_dir("io_report");
        testing::Rng rng(21);
        std::uniform_real_distribution<double> u(1e-12, 10.0);
        for (int trial = 0; trial < 50; ++trial) {
            Report r = sample_report();
            r.alpha = 1.0 + u(rng);
            r.solver_residual = u(rng) * 1e-7;
            r.contrast_gain_median = u(rng);
            r.timings = {u(rng), u(rng), u(rng), u(rng)};
            write_report(r, dir / "r.json");
            CHECK(read_report(dir / "r.json") == r);
        }
        CHECK_THROWS_AS(report_from_json("{\"alpha\": 2}"), FormatError);
        CHECK_THROWS_AS(report_from_json("not json"), FormatError);
        CHECK_THROWS_AS(read_report(dir / "missing.json"), IoError);
        CHECK_THROWS_AS(write_report(sample_report(), dir / "no" / "r.json"), IoError);
    }
}

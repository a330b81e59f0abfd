#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "bstd/image.hpp"
#include "support.hpp"

using namespace bstd;

TEST_SUITE("image")
{
    TEST_CASE("new_image fills every pixel")
    {
        const Image img = new_image(3, 2, 0.5);
        CHECK(img.width() == 3);
        CHECK(img.height() == 2);
        CHECK(img.size() == 6);
        for (double v : img.pixels()) {
            CHECK(v == 0.5);
        }
        const Image one = new_image(1, 1, 0.0);
        CHECK(one.size() == 1);
        CHECK(one(0, 0) == 0.0);
    }

    TEST_CASE("new_image rejects bad sizes")
    {
        CHECK_THROWS_AS(new_image(0, 5, 0.0), DimensionError);
        CHECK_THROWS_AS(new_image(5, -1, 0.0), DimensionError);
        CHECK_THROWS_AS(new_image(1 << 20, 1 << 20, 0.0), DimensionError);
        CHECK_THROWS_AS(Image(0, 1), DimensionError);
        CHECK_THROWS_AS(Mask(3, 0), DimensionError);
    }

    TEST_CASE("addressing is row-major with x as column")
    {
        Image img(3, 2);
        img(2, 1) = 7.0;
        CHECK(img[5] == 7.0);
        CHECK(img.index(1, 1) == 4);
        Mask m(3, 2);
        m.set(0, 1, true);
        CHECK(m[3]);
        CHECK(m.count() == 1);
        CHECK_FALSE(m.empty());
    }

    TEST_CASE("normalize maps samples onto [0,1]")
    {
        const std::vector<std::uint16_t> a{0, 255};
        CHECK(normalize(a, 8) == std::vector<double>{0.0, 1.0});
        const std::vector<std::uint16_t> b{65535};
        CHECK(normalize(b, 16) == std::vector<double>{1.0});
        const std::vector<std::uint16_t> c{128};
        CHECK(normalize(c, 8)[0] == doctest::Approx(0.50196).epsilon(1e-5));
        CHECK(normalize(c, 8)[0] == 128.0 / 255.0);
    }

    TEST_CASE("normalize rejects unsupported depths and out-of-range samples")
    {
        const std::vector<std::uint16_t> a{1};
        CHECK_THROWS_AS(normalize(a, 12), std::invalid_argument);
        CHECK_THROWS_AS(normalize(a, 0), std::invalid_argument);
        const std::vector<std::uint16_t> big{256};
        CHECK_THROWS_AS(normalize(big, 8), std::out_of_range);
        CHECK_THROWS_AS(denormalize(std::vector<double>{0.5}, 10), std::invalid_argument);
    }

    TEST_CASE("normalize then denormalize reproduces every sample")
    {
        for (int depth : {8, 16}) {
            const int maxval = (1 << depth) - 1;
            std::vector<std::uint16_t> raw;
            for (int v = 0; v <= maxval; ++v) {
                raw.push_back(static_cast<std::uint16_t>(v));
            }
            CHECK(denormalize(normalize(raw, depth), depth) == raw);
        }
    }

    TEST_CASE("denormalize clamps and rounds to nearest")
    {
        const std::vector<double> v{-0.2, 1.7, 0.5, 0.5 / 255.0 + 1e-9};
        const auto q = denormalize(v, 8);
        CHECK(q[0] == 0);
        CHECK(q[1] == 255);
        CHECK(q[2] == 128);
        CHECK(q[3] == 1);
        CHECK(denormalize(std::vector<double>{0.5}, 16)[0] == 32768);
    }

    TEST_CASE("gradient of a constant image is zero")
    {
        const GradientField g = gradient(Image(6, 4, 0.37));
        CHECK(g.gx.size() == 24);
        for (std::size_t i = 0; i < 24; ++i) {
            CHECK(g.gx[i] == 0.0);
            CHECK(g.gy[i] == 0.0);
            CHECK(g.magnitude[i] == 0.0);
        }
    }

    TEST_CASE("gradient of a ramp is constant inside")
    {
        Image img(5, 3);
        for (int y = 0; y < 3; ++y) {
            for (int x = 0; x < 5; ++x) {
                img(x, y) = x / 4.0;
            }
        }
        const GradientField g = gradient(img);
        for (int y = 0; y < 3; ++y) {
            for (int x = 0; x < 5; ++x) {
                const std::size_t i = img.index(x, y);
                CHECK(g.gx[i] == doctest::Approx(0.25));
                CHECK(g.gy[i] == 0.0);
            }
        }
    }

    TEST_CASE("gradient matches per-pixel finite differences")
    {
        testing::Rng rng(11);
        for (int trial = 0; trial < 20; ++trial) {
            const int w = 2 + static_cast<int>(rng() % 6);
            const int h = 2 + static_cast<int>(rng() % 6);
            const Image img = testing::random_image(w, h, rng);
            const GradientField g = gradient(img);
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    const int xl = x > 0 ? x - 1 : x;
                    const int xr = x + 1 < w ? x + 1 : x;
                    const int yu = y > 0 ? y - 1 : y;
                    const int yd = y + 1 < h ? y + 1 : y;
                    const double gx = (img(xr, y) - img(xl, y)) / (xr - xl);
                    const double gy = (img(x, yd) - img(x, yu)) / (yd - yu);
                    const std::size_t i = img.index(x, y);
                    CHECK(g.gx[i] == doctest::Approx(gx).epsilon(1e-14));
                    CHECK(g.gy[i] == doctest::Approx(gy).epsilon(1e-14));
                    CHECK(g.magnitude[i] == doctest::Approx(std::sqrt(gx * gx + gy * gy)));
                    CHECK(g.magnitude[i] >= 0.0);
                }
            }
        }
    }

    TEST_CASE("gradient rejects one-pixel-wide images")
    {
        CHECK_THROWS_AS(gradient(Image(1, 5)), DimensionError);
        CHECK_THROWS_AS(gradient(Image(5, 1)), DimensionError);
    }

    TEST_CASE("min_max over the image or a mask")
    {
        const Extrema c = min_max(Image(4, 4, 0.3));
        CHECK(c.min == 0.3);
        CHECK(c.max == 0.3);

        Image row(3, 1);
        row[0] = 0.1;
        row[1] = 0.9;
        row[2] = 0.5;
        Mask first_two(3, 1);
        first_two.set(0, true);
        first_two.set(1, true);
        const Extrema e = min_max(row, first_two);
        CHECK(e.min == 0.1);
        CHECK(e.max == 0.9);

        Mask last(3, 1);
        last.set(2, true);
        CHECK(min_max(row, last).min == 0.5);
        CHECK(min_max(row, last).max == 0.5);
    }

    TEST_CASE("min_max agrees with a linear scan and bounds every pixel")
    {
        testing::Rng rng(5);
        for (int trial = 0; trial < 10; ++trial) {
            const Image img = testing::random_image(8, 8, rng);
            double lo = img[0];
            double hi = img[0];
            for (double v : img.pixels()) {
                lo = v < lo ? v : lo;
                hi = v > hi ? v : hi;
            }
            const Extrema e = min_max(img);
            CHECK(e.min == lo);
            CHECK(e.max == hi);
            for (double v : img.pixels()) {
                CHECK(v >= e.min);
                CHECK(v <= e.max);
            }
        }
    }

    TEST_CASE("min_max error paths")
    {
        CHECK_THROWS_AS(min_max(Image(3, 3), Mask(3, 3)), std::invalid_argument);
        CHECK_THROWS_AS(min_max(Image(3, 3), Mask(3, 2, true)), DimensionError);
    }
}

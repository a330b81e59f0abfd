#include "bstd/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace bstd {

namespace {

struct Capsule {
    double ax, ay, bx, by;
    double radius;
};

// Distance from (px, py) to segment a-b.
double segment_distance(const Capsule& c, double px, double py)
{
    const double dx = c.bx - c.ax;
    const double dy = c.by - c.ay;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((px - c.ax) * dx + (py - c.ay) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(px - (c.ax + t * dx), py - (c.ay + t * dy));
}

} // namespace

Image xray_phantom(int width, int height, std::uint32_t seed)
{
    Image img(width, height);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 0.004);

    const double scale = std::min(width, height);
    std::vector<Capsule> bones;
    const int count = 3 + static_cast<int>(rng() % 3);
    for (int k = 0; k < count; ++k) {
        const double cx = (0.2 + 0.6 * unit(rng)) * width;
        const double cy = (0.2 + 0.6 * unit(rng)) * height;
        const double angle = unit(rng) * std::numbers::pi;
        const double half = (0.12 + 0.15 * unit(rng)) * scale;
        const double radius = (0.03 + 0.03 * unit(rng)) * scale;
        bones.push_back({cx - half * std::cos(angle), cy - half * std::sin(angle),
                         cx + half * std::cos(angle), cy + half * std::sin(angle), radius});
    }
    const double phase = unit(rng) * 2.0 * std::numbers::pi;

    for (int y = 0; y < height; ++y) {
        const double v = static_cast<double>(y) / std::max(height - 1, 1);
        for (int x = 0; x < width; ++x) {
            const double u = static_cast<double>(x) / std::max(width - 1, 1);
            double value = 0.16 + 0.10 * u + 0.06 * v +
                           0.04 * std::sin(std::numbers::pi * (u + 0.5 * v) + phase);
            double bone = 0.0;
            for (const auto& c : bones) {
                const double d = segment_distance(c, x, y);
                if (d < c.radius) {
                    const double depth = d / c.radius;
                    // Brighter cortex towards the rim, faint trabecular ripple inside.
                    const double b = 0.30 + 0.12 * depth * depth +
                                     0.02 * std::sin(0.35 * x) * std::sin(0.29 * y);
                    bone = std::max(bone, b);
                }
            }
            value += bone + noise(rng);
            img(x, y) = std::clamp(value, 0.0, 1.0);
        }
    }
    return img;
}

} // namespace bstd

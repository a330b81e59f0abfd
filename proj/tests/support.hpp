#pragma once

// Test-side helpers: random instance generators and brute-force reference
// implementations that share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "bstd/image.hpp"

namespace testing {

using Rng = std::mt19937_64;

inline bstd::Image random_image(int w, int h, Rng& rng, double lo = 0.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> u(lo, hi);
    bstd::Image img(w, h);
    for (auto& v : img.pixels()) {
        v = u(rng);
    }
    return img;
}

inline bstd::Mask random_mask(int w, int h, Rng& rng, double density)
{
    std::bernoulli_distribution b(density);
    bstd::Mask m(w, h);
    for (std::size_t i = 0; i < m.size(); ++i) {
        m.set(i, b(rng));
    }
    return m;
}

/// A single 4-connected blob of about `fraction` of the pixels, grown from a
/// random seed. At least one pixel is always left outside.
inline bstd::Mask random_connected_mask(int w, int h, Rng& rng, double fraction)
{
    bstd::Mask m(w, h);
    const std::size_t n = m.size();
    const std::size_t target =
        std::clamp<std::size_t>(static_cast<std::size_t>(fraction * n), 1, n - 1);
    std::uniform_int_distribution<int> ux(0, w - 1);
    std::uniform_int_distribution<int> uy(0, h - 1);
    std::vector<std::pair<int, int>> frontier{{ux(rng), uy(rng)}};
    std::size_t count = 0;
    while (count < target && !frontier.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, frontier.size() - 1);
        const std::size_t k = pick(rng);
        const auto [x, y] = frontier[k];
        frontier[k] = frontier.back();
        frontier.pop_back();
        if (m(x, y)) {
            continue;
        }
        m.set(x, y, true);
        ++count;
        const int dx[4] = {1, -1, 0, 0};
        const int dy[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
            const int nx = x + dx[d];
            const int ny = y + dy[d];
            if (nx >= 0 && ny >= 0 && nx < w && ny < h && !m(nx, ny)) {
                frontier.emplace_back(nx, ny);
            }
        }
    }
    return m;
}

inline double max_abs_diff(const bstd::Image& a, const bstd::Image& b)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    return worst;
}

/// 4-connected components of the true pixels; label -1 outside.
inline std::vector<int> label_components(const bstd::Mask& m, int& count)
{
    const int w = m.width();
    const int h = m.height();
    std::vector<int> label(m.size(), -1);
    count = 0;
    for (int sy = 0; sy < h; ++sy) {
        for (int sx = 0; sx < w; ++sx) {
            if (!m(sx, sy) || label[m.index(sx, sy)] >= 0) {
                continue;
            }
            std::vector<std::pair<int, int>> queue{{sx, sy}};
            label[m.index(sx, sy)] = count;
            for (std::size_t q = 0; q < queue.size(); ++q) {
                const auto [x, y] = queue[q];
                const int dx[4] = {1, -1, 0, 0};
                const int dy[4] = {0, 0, 1, -1};
                for (int d = 0; d < 4; ++d) {
                    const int nx = x + dx[d];
                    const int ny = y + dy[d];
                    if (nx >= 0 && ny >= 0 && nx < w && ny < h && m(nx, ny) &&
                        label[m.index(nx, ny)] < 0) {
                        label[m.index(nx, ny)] = count;
                        queue.emplace_back(nx, ny);
                    }
                }
            }
            ++count;
        }
    }
    return label;
}

/// Largest violation of min(boundary) <= S <= max(boundary) over the mask
/// components that have boundary pixels.
inline double max_principle_violation(const bstd::Image& f, const bstd::Image& s,
                                      const bstd::Mask& m)
{
    int count = 0;
    const auto label = label_components(m, count);
    std::vector<double> lo(count, 1e300);
    std::vector<double> hi(count, -1e300);
    const int w = m.width();
    const int h = m.height();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (m(x, y)) {
                continue;
            }
            const int dx[4] = {1, -1, 0, 0};
            const int dy[4] = {0, 0, 1, -1};
            for (int d = 0; d < 4; ++d) {
                const int nx = x + dx[d];
                const int ny = y + dy[d];
                if (nx >= 0 && ny >= 0 && nx < w && ny < h && m(nx, ny)) {
                    const int c = label[m.index(nx, ny)];
                    lo[c] = std::min(lo[c], f(x, y));
                    hi[c] = std::max(hi[c], f(x, y));
                }
            }
        }
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const int c = label[i];
        if (c < 0 || lo[c] > hi[c]) {
            continue;
        }
        worst = std::max({worst, lo[c] - s[i], s[i] - hi[c]});
    }
    return worst;
}

/// Dense Gaussian elimination with partial pivoting on the 5-point system
/// (frame neighbours dropped). Only for masks whose components all touch an
/// outside pixel.
inline bstd::Image gauss_harmonic(const bstd::Image& f, const bstd::Mask& m)
{
    const int w = f.width();
    const int h = f.height();
    std::vector<int> id(f.size(), -1);
    int n = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (m[i]) {
            id[i] = n++;
        }
    }
    std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int r = id[f.index(x, y)];
            if (r < 0) {
                continue;
            }
            const int dx[4] = {1, -1, 0, 0};
            const int dy[4] = {0, 0, 1, -1};
            for (int d = 0; d < 4; ++d) {
                const int nx = x + dx[d];
                const int ny = y + dy[d];
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) {
                    continue;
                }
                a[r][r] += 1.0;
                const int c = id[f.index(nx, ny)];
                if (c >= 0) {
                    a[r][c] -= 1.0;
                } else {
                    a[r][n] += f(nx, ny);
                }
            }
        }
    }
    for (int k = 0; k < n; ++k) {
        int piv = k;
        for (int r = k + 1; r < n; ++r) {
            if (std::abs(a[r][k]) > std::abs(a[piv][k])) {
                piv = r;
            }
        }
        std::swap(a[k], a[piv]);
        for (int r = k + 1; r < n; ++r) {
            const double factor = a[r][k] / a[k][k];
            if (factor == 0.0) {
                continue;
            }
            for (int c = k; c <= n; ++c) {
                a[r][c] -= factor * a[k][c];
            }
        }
    }
    std::vector<double> u(n, 0.0);
    for (int k = n - 1; k >= 0; --k) {
        double s = a[k][n];
        for (int c = k + 1; c < n; ++c) {
            s -= a[k][c] * u[c];
        }
        u[k] = s / a[k][k];
    }
    bstd::Image out = f;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (id[i] >= 0) {
            out[i] = u[id[i]];
        }
    }
    return out;
}

/// Max stencil defect over mask pixels, frame neighbours dropped.
inline double stencil_defect(const bstd::Image& s, const bstd::Mask& m)
{
    const int w = s.width();
    const int h = s.height();
    double worst = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!m(x, y)) {
                continue;
            }
            double sum = 0.0;
            int k = 0;
            if (x > 0) { sum += s(x - 1, y); ++k; }
            if (x + 1 < w) { sum += s(x + 1, y); ++k; }
            if (y > 0) { sum += s(x, y - 1); ++k; }
            if (y + 1 < h) { sum += s(x, y + 1); ++k; }
            worst = std::max(worst, std::abs(sum - k * s(x, y)));
        }
    }
    return worst;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("bstd_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace testing

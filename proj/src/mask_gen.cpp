#include "bstd/mask_gen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace bstd {

namespace {

constexpr int kBins = 256;

int histogram_bin(double v)
{
    const long b = std::lround(std::clamp(v, 0.0, 1.0) * (kBins - 1));
    return static_cast<int>(b);
}

// out[i] = any(in[i - r*step .. i + r*step]) along one line of `n` samples.
void dilate_line(const std::uint8_t* in, std::uint8_t* out, int n, std::ptrdiff_t step, int r)
{
    // Number of set samples inside the sliding window.
    int count = 0;
    for (int i = 0; i <= std::min(r, n - 1); ++i) {
        count += in[i * step];
    }
    for (int i = 0; i < n; ++i) {
        out[i * step] = count > 0 ? 1 : 0;
        const int enter = i + r + 1;
        const int leave = i - r;
        if (enter < n) {
            count += in[enter * step];
        }
        if (leave >= 0) {
            count -= in[leave * step];
        }
    }
}

Mask complement(const Mask& m)
{
    Mask out(m.width(), m.height());
    auto src = m.bytes();
    auto dst = out.bytes();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = src[i] ? 0 : 1;
    }
    return out;
}

} // namespace

void MaskParams::validate() const
{
    if (const auto* fixed = std::get_if<FixedThreshold>(&threshold)) {
        if (!(fixed->value >= 0.0 && fixed->value <= 1.0)) {
            throw std::invalid_argument("fixed threshold must lie in [0,1]");
        }
    }
    if (close_radius < 0 || dilate_radius < 0) {
        throw std::invalid_argument("morphology radii must be nonnegative");
    }
}

double otsu_threshold(const Image& img)
{
    std::array<double, kBins> hist{};
    for (double v : img.pixels()) {
        hist[static_cast<std::size_t>(histogram_bin(v))] += 1.0;
    }
    const auto occupied = std::count_if(hist.begin(), hist.end(), [](double c) { return c > 0; });
    if (occupied <= 1) {
        return *std::max_element(img.pixels().begin(), img.pixels().end());
    }

    const double total = static_cast<double>(img.size());
    double total_sum = 0.0;
    for (int k = 0; k < kBins; ++k) {
        total_sum += hist[static_cast<std::size_t>(k)] * k;
    }

    std::array<double, kBins> between{};
    double count0 = 0.0;
    double sum0 = 0.0;
    for (int k = 0; k < kBins; ++k) {
        count0 += hist[static_cast<std::size_t>(k)];
        sum0 += hist[static_cast<std::size_t>(k)] * k;
        const double count1 = total - count0;
        if (count0 == 0.0 || count1 == 0.0) {
            continue;
        }
        const double mean0 = sum0 / count0 / (kBins - 1);
        const double mean1 = (total_sum - sum0) / count1 / (kBins - 1);
        const double w0 = count0 / total;
        const double w1 = count1 / total;
        between[static_cast<std::size_t>(k)] = w0 * w1 * (mean0 - mean1) * (mean0 - mean1);
    }

    const double best = *std::max_element(between.begin(), between.end());
    const double floor = best * (1.0 - 1e-12);
    int first = -1;
    int last = -1;
    for (int k = 0; k < kBins; ++k) {
        if (between[static_cast<std::size_t>(k)] >= floor) {
            if (first < 0) {
                first = k;
            }
            last = k;
        }
    }
    return static_cast<double>((first + last) / 2) / (kBins - 1);
}

Mask threshold_mask(const Image& img, double t)
{
    Mask m(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i) {
        m.set(i, img[i] > t);
    }
    return m;
}

Mask dilate(const Mask& mask, int radius)
{
    if (radius < 0) {
        throw std::invalid_argument("dilate: negative radius");
    }
    if (radius == 0) {
        return mask;
    }
    const int w = mask.width();
    const int h = mask.height();
    Mask rows(w, h);
    Mask out(w, h);
    const std::uint8_t* src = mask.bytes().data();
    std::uint8_t* tmp = rows.bytes().data();
    std::uint8_t* dst = out.bytes().data();
    for (int y = 0; y < h; ++y) {
        const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(y) * w;
        dilate_line(src + off, tmp + off, w, 1, radius);
    }
    for (int x = 0; x < w; ++x) {
        dilate_line(tmp + x, dst + x, h, w, radius);
    }
    return out;
}

Mask erode(const Mask& mask, int radius)
{
    if (radius == 0) {
        return mask;
    }
    return complement(dilate(complement(mask), radius));
}

Mask close(const Mask& mask, int radius)
{
    if (radius < 0) {
        throw std::invalid_argument("close: negative radius");
    }
    return erode(dilate(mask, radius), radius);
}

Mask fill_holes(const Mask& mask)
{
    const int w = mask.width();
    const int h = mask.height();
    // Background reachable from the frame through 4-connected false pixels.
    std::vector<std::uint8_t> outside(mask.size(), 0);
    std::vector<std::size_t> stack;
    auto seed = [&](int x, int y) {
        const std::size_t i = mask.index(x, y);
        if (!mask[i] && !outside[i]) {
            outside[i] = 1;
            stack.push_back(i);
        }
    };
    for (int x = 0; x < w; ++x) {
        seed(x, 0);
        seed(x, h - 1);
    }
    for (int y = 0; y < h; ++y) {
        seed(0, y);
        seed(w - 1, y);
    }
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        const int x = static_cast<int>(i % static_cast<std::size_t>(w));
        const int y = static_cast<int>(i / static_cast<std::size_t>(w));
        if (x > 0) seed(x - 1, y);
        if (x + 1 < w) seed(x + 1, y);
        if (y > 0) seed(x, y - 1);
        if (y + 1 < h) seed(x, y + 1);
    }

    Mask out(w, h);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        out.set(i, mask[i] || !outside[i]);
    }
    return out;
}

Mask remove_small_components(const Mask& mask, std::size_t min_area)
{
    if (min_area <= 1) {
        return mask;
    }
    const int w = mask.width();
    const int h = mask.height();
    Mask out = mask;
    std::vector<std::uint8_t> seen(mask.size(), 0);
    std::vector<std::size_t> stack;
    std::vector<std::size_t> component;

    for (std::size_t start = 0; start < mask.size(); ++start) {
        if (!mask[start] || seen[start]) {
            continue;
        }
        component.clear();
        seen[start] = 1;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            component.push_back(i);
            const int x = static_cast<int>(i % static_cast<std::size_t>(w));
            const int y = static_cast<int>(i / static_cast<std::size_t>(w));
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx;
                    const int ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) {
                        continue;
                    }
                    const std::size_t j = mask.index(nx, ny);
                    if (mask[j] && !seen[j]) {
                        seen[j] = 1;
                        stack.push_back(j);
                    }
                }
            }
        }
        if (component.size() < min_area) {
            for (auto i : component) {
                out.set(i, false);
            }
        }
    }
    return out;
}

Mask auto_mask(const Image& img, const MaskParams& params)
{
    params.validate();
    const double t = std::holds_alternative<FixedThreshold>(params.threshold)
                         ? std::get<FixedThreshold>(params.threshold).value
                         : otsu_threshold(img);
    Mask m = threshold_mask(img, t);
    m = remove_small_components(m, params.min_component_area);
    m = close(m, params.close_radius);
    if (params.fill_holes) {
        m = fill_holes(m);
    }
    return dilate(m, params.dilate_radius);
}

} // namespace bstd

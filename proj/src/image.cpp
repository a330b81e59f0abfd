#include "bstd/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bstd {

namespace {

constexpr int kMaxSide = 1 << 16;
constexpr std::size_t kMaxPixels = std::size_t{1} << 28;

void check_dimensions(int width, int height)
{
    if (width < 1 || height < 1) {
        throw DimensionError("image dimensions must be at least 1x1, got " +
                             std::to_string(width) + "x" + std::to_string(height));
    }
    if (width > kMaxSide || height > kMaxSide ||
        static_cast<std::size_t>(width) * static_cast<std::size_t>(height) > kMaxPixels) {
        throw DimensionError("image dimensions too large: " + std::to_string(width) + "x" +
                             std::to_string(height));
    }
}

double max_sample(int bit_depth)
{
    if (bit_depth != 8 && bit_depth != 16) {
        throw std::invalid_argument("unsupported bit depth " + std::to_string(bit_depth) +
                                    " (expected 8 or 16)");
    }
    return bit_depth == 8 ? 255.0 : 65535.0;
}

} // namespace

Image::Image(int width, int height, double fill) : width_(width), height_(height)
{
    check_dimensions(width, height);
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

Mask::Mask(int width, int height, bool fill) : width_(width), height_(height)
{
    check_dimensions(width, height);
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
                 fill ? 1 : 0);
}

std::size_t Mask::count() const noexcept
{
    return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

Image new_image(int width, int height, double fill)
{
    return Image(width, height, fill);
}

std::vector<double> normalize(std::span<const std::uint16_t> raw, int bit_depth)
{
    const double scale = max_sample(bit_depth);
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] > scale) {
            throw std::out_of_range("sample " + std::to_string(raw[i]) + " exceeds " +
                                    std::to_string(bit_depth) + "-bit range");
        }
        out[i] = raw[i] / scale;
    }
    return out;
}

std::vector<std::uint16_t> denormalize(std::span<const double> values, int bit_depth)
{
    const double scale = max_sample(bit_depth);
    std::vector<std::uint16_t> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = std::clamp(values[i], 0.0, 1.0);
        out[i] = static_cast<std::uint16_t>(std::lround(v * scale));
    }
    return out;
}

GradientField gradient(const Image& img)
{
    const int w = img.width();
    const int h = img.height();
    if (w < 2 || h < 2) {
        throw DimensionError("gradient needs at least a 2x2 image");
    }

    GradientField g{w, h, std::vector<double>(img.size()), std::vector<double>(img.size()),
                    std::vector<double>(img.size())};

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = img.index(x, y);
            double dx;
            if (x == 0) {
                dx = img(1, y) - img(0, y);
            } else if (x == w - 1) {
                dx = img(w - 1, y) - img(w - 2, y);
            } else {
                dx = 0.5 * (img(x + 1, y) - img(x - 1, y));
            }
            double dy;
            if (y == 0) {
                dy = img(x, 1) - img(x, 0);
            } else if (y == h - 1) {
                dy = img(x, h - 1) - img(x, h - 2);
            } else {
                dy = 0.5 * (img(x, y + 1) - img(x, y - 1));
            }
            g.gx[i] = dx;
            g.gy[i] = dy;
            g.magnitude[i] = std::sqrt(dx * dx + dy * dy);
        }
    }
    return g;
}

Extrema min_max(const Image& img, const std::optional<Mask>& mask)
{
    if (mask) {
        require_same_shape(img, *mask, "min_max");
    }
    Extrema e{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    bool any = false;
    for (std::size_t i = 0; i < img.size(); ++i) {
        if (mask && !(*mask)[i]) {
            continue;
        }
        e.min = std::min(e.min, img[i]);
        e.max = std::max(e.max, img[i]);
        any = true;
    }
    if (!any) {
        throw std::invalid_argument("min_max: mask selects no pixels");
    }
    return e;
}

void require_same_shape(const Image& img, const Mask& mask, const char* what)
{
    if (!img.same_shape(mask.width(), mask.height())) {
        throw DimensionError(std::string(what) + ": mask is " + std::to_string(mask.width()) +
                             "x" + std::to_string(mask.height()) + " but image is " +
                             std::to_string(img.width()) + "x" + std::to_string(img.height()));
    }
}

void require_same_shape(const Image& a, const Image& b, const char* what)
{
    if (!a.same_shape(b.width(), b.height())) {
        throw DimensionError(std::string(what) + ": image sizes differ (" +
                             std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                             " vs " + std::to_string(b.width()) + "x" +
                             std::to_string(b.height()) + ")");
    }
}

} // namespace bstd

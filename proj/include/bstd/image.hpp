#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bstd {

/// Raised for invalid image or mask dimensions, including mismatched pairs.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Dense grayscale image, row-major, addressed as (x = column, y = row).
/// Values are nominally in [0,1]; nothing is quantized until I/O.
class Image {
public:
    Image(int width, int height, double fill = 0.0);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }

    std::size_t index(int x, int y) const noexcept
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    double& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
    double operator()(int x, int y) const noexcept { return data_[index(x, y)]; }

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<double> pixels() noexcept { return data_; }
    std::span<const double> pixels() const noexcept { return data_; }

    bool same_shape(int w, int h) const noexcept { return w == width_ && h == height_; }

    friend bool operator==(const Image&, const Image&) = default;

private:
    int width_;
    int height_;
    std::vector<double> data_;
};

/// Boolean region over an image grid; true marks pixels inside the region.
class Mask {
public:
    Mask(int width, int height, bool fill = false);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }

    std::size_t index(int x, int y) const noexcept
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    bool operator()(int x, int y) const noexcept { return data_[index(x, y)] != 0; }
    void set(int x, int y, bool v) noexcept { data_[index(x, y)] = v ? 1 : 0; }

    bool operator[](std::size_t i) const noexcept { return data_[i] != 0; }
    void set(std::size_t i, bool v) noexcept { data_[i] = v ? 1 : 0; }

    /// Raw storage, one byte per pixel (0 or 1).
    std::span<std::uint8_t> bytes() noexcept { return data_; }
    std::span<const std::uint8_t> bytes() const noexcept { return data_; }

    std::size_t count() const noexcept;
    bool empty() const noexcept { return count() == 0; }

    bool same_shape(int w, int h) const noexcept { return w == width_ && h == height_; }

    friend bool operator==(const Mask&, const Mask&) = default;

private:
    int width_;
    int height_;
    std::vector<std::uint8_t> data_;
};

struct GradientField {
    int width;
    int height;
    std::vector<double> gx;
    std::vector<double> gy;
    std::vector<double> magnitude;
};

struct Extrema {
    double min;
    double max;
};

/// Throws DimensionError on zero, negative, or overflow-prone sizes.
Image new_image(int width, int height, double fill);

/// Maps integer samples to [0,1] by dividing by 2^bit_depth - 1.
/// Only bit depths 8 and 16 are accepted.
std::vector<double> normalize(std::span<const std::uint16_t> raw, int bit_depth);

/// Inverse of normalize with round-to-nearest; values are clamped to [0,1] first.
std::vector<std::uint16_t> denormalize(std::span<const double> values, int bit_depth);

/// Central differences in the interior, one-sided differences on the frame.
/// Requires width and height >= 2.
GradientField gradient(const Image& img);

/// Extrema over the whole image, or only over pixels selected by `mask`.
Extrema min_max(const Image& img, const std::optional<Mask>& mask = std::nullopt);

void require_same_shape(const Image& img, const Mask& mask, const char* what);
void require_same_shape(const Image& a, const Image& b, const char* what);

} // namespace bstd

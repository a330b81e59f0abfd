#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "bstd/image.hpp"

namespace bstd {

/// File could not be opened, read, or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File contents are not a supported grayscale image (bad header, color, truncation).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reads a binary (P5) or text (P2) graymap, or a single-channel PNG.
/// The format is detected from the file signature, not the extension.
/// Samples are divided by the file's maximum value (255 or 65535 for PNG).
Image read_grayscale(const std::filesystem::path& path);

/// Writes `img` quantized to `bit_depth` (8 or 16) bits, round to nearest.
/// The format follows the extension: `.png` writes PNG, `.pgm`/`.pnm` write P5.
/// Values outside [0,1] are clamped; the number of clamped pixels is returned.
std::size_t write_grayscale(const Image& img, const std::filesystem::path& path, int bit_depth);

/// Reads any supported image and marks pixels brighter than 0.5 as inside.
Mask read_mask(const std::filesystem::path& path);

/// Writes a mask as an 8-bit image with values 0 and 255.
void write_mask(const Mask& mask, const std::filesystem::path& path);

struct StageTimings {
    double mask_s = 0.0;
    double solve_s = 0.0;
    double decompose_s = 0.0;
    double total_s = 0.0;

    friend bool operator==(const StageTimings&, const StageTimings&) = default;
};

/// Per-image summary of one decomposition run.
struct Report {
    std::string input_path;
    int width = 0;
    int height = 0;
    double alpha = 1.0;
    double solver_residual = 0.0;
    int solver_iterations = 0;
    std::size_t clamped_pixel_count = 0;
    double contrast_gain_median = 0.0;
    StageTimings timings;
    bool converged = true;
    bool degenerate = false;

    friend bool operator==(const Report&, const Report&) = default;
};

/// Serializes to a flat JSON object. Doubles keep full round-trip precision.
std::string report_to_json(const Report& report);
Report report_from_json(const std::string& text);

void write_report(const Report& report, const std::filesystem::path& path);
Report read_report(const std::filesystem::path& path);

} // namespace bstd

#pragma once

#include <cstddef>

#include "bstd/image.hpp"
#include "bstd/laplace.hpp"

namespace bstd {

// Imaging model:  f = U (1 - S) / alpha + S
//
//   f      observed image in [0,1]
//   S      soft-tissue (background) image, harmonic inside the mask
//   U      bone image, normalized so that max U = 1
//   alpha  global scale, 1 / max((f - S) / (1 - S)) >= 1

/// Upper bound applied to S so that 1 - S never vanishes.
inline constexpr double kSoftCeilingGap = 1e-6;

/// Default gradient floor for contrast statistics.
inline constexpr double kContrastEpsilon = 1e-4;

struct ClampResult {
    Image soft;
    std::size_t clamped_count = 0;
};

struct AlphaResult {
    double alpha = 1.0;
    /// f == S everywhere; alpha is 1 by convention and U is identically 0.
    bool degenerate = false;
};

struct ContrastStats {
    /// Median of |grad U| / |grad f| over mask pixels with |grad f| > epsilon.
    double median_gain = 0.0;
    double mean_grad_f = 0.0;
    double mean_grad_u = 0.0;
    double epsilon = kContrastEpsilon;
    /// Number of pixels that entered the median.
    std::size_t samples = 0;
};

struct DecomposeTimings {
    double solve_s = 0.0;
    double decompose_s = 0.0;
};

struct DecompositionResult {
    Image soft_tissue;
    Image bone;
    double alpha = 1.0;
    bool degenerate = false;
    std::size_t clamped_pixel_count = 0;
    SolveStats stats;
    ContrastStats contrast;
    DecomposeTimings timings;
};

/// S' = min(S, f, 1 - kSoftCeilingGap) pixelwise; counts the pixels changed.
ClampResult clamp_background(const Image& soft, const Image& f);

/// Requires S <= f and S < 1 everywhere (the output of clamp_background).
AlphaResult compute_alpha(const Image& f, const Image& soft);

/// U = alpha (f - S) / (1 - S).
Image compute_bone(const Image& f, const Image& soft, double alpha);

/// f_hat = U (1 - S) / alpha + S.
Image reconstruct(const Image& bone, const Image& soft, double alpha);

ContrastStats contrast_report(const Image& f, const Image& bone, const Mask& mask,
                              double epsilon = kContrastEpsilon);

/// Harmonic background -> clamp -> alpha -> bone image -> contrast statistics.
/// Solver non-convergence is reported in stats.converged.
DecompositionResult decompose(const Image& f, const Mask& mask,
                              const SolverOptions& solver = {});

} // namespace bstd

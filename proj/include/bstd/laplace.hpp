#pragma once

#include <cstddef>
#include <stdexcept>

#include "bstd/image.hpp"

namespace bstd {

// Dirichlet problem for the 5-point Laplacian on a masked grid.
//
// Every pixel of the mask is an unknown; every pixel outside it keeps its
// input value and acts as boundary data. Where an unknown sits on the image
// frame its missing neighbours are dropped from the stencil (the diagonal
// becomes the number of in-frame neighbours), which is a zero-flux condition
// on the frame. Mask components that touch no outside pixel have no boundary
// data at all; they are left unchanged and reported as unconstrained.
//
// The multigrid method runs conjugate gradients preconditioned by one V-cycle
// per iteration. A coarse pixel is an unknown iff the fine pixel under it is,
// and coarsening stops before a level whose domain would lose its boundary.

enum class SolverMethod { multigrid, gauss_seidel, direct };

struct SolverOptions {
    SolverMethod method = SolverMethod::multigrid;
    /// Target for the max-norm stencil residual over the unknowns.
    double tol = 1e-6;
    int max_vcycles = 50;
    /// Sweep cap for the plain Gauss-Seidel method.
    int max_sweeps = 200000;
    int pre_sweeps = 2;
    int post_sweeps = 2;
    /// Coarsening stops once both sides are at most this many pixels.
    int coarsest_size = 16;

    void validate() const;
};

struct SolveStats {
    /// V-cycles for multigrid, red-black sweeps for Gauss-Seidel, 0 for direct.
    int iterations = 0;
    /// Recomputed from the returned image, never estimated.
    double final_residual = 0.0;
    double wall_time = 0.0;
    bool converged = true;
    int levels = 0;
    std::size_t unknowns = 0;
    std::size_t unconstrained_pixels = 0;
};

struct DirichletSolution {
    Image soft;
    SolveStats stats;
};

/// Thrown by solve_direct when the dense system would be too large.
class SystemTooLarge : public std::length_error {
public:
    using std::length_error::length_error;
};

inline constexpr std::size_t kMaxDirectUnknowns = 10000;

/// Mask pixels whose 4-connected component has at least one outside neighbour.
Mask solvable_region(const Mask& mask);

/// Harmonic fill of `f` inside `mask`. Outside pixels are copied bit for bit.
/// Non-convergence is reported through stats.converged, not thrown.
DirichletSolution solve_dirichlet(const Image& f, const Mask& mask,
                                  const SolverOptions& opts = {});

/// Dense Cholesky solve of the same linear system. Verification oracle;
/// limited to kMaxDirectUnknowns unknowns.
Image solve_direct(const Image& f, const Mask& mask);

/// max |sum of in-frame neighbours - neighbour count * S(p)| over the
/// solvable part of `mask`; 0 for an empty mask.
double residual(const Image& s, const Mask& mask);

// Multigrid building blocks, exposed for testing.

/// Normalized full weighting onto a grid of ceil(w/2) x ceil(h/2).
/// Coarse pixel (i, j) sits on fine pixel (2i, 2j).
Image restrict_full_weighting(const Image& fine);

/// Bilinear interpolation back to a fine grid of the given size; the last odd
/// row or column of an even-sized grid copies its single coarse neighbour.
Image prolong_bilinear(const Image& coarse, int fine_width, int fine_height);

/// Red-black Gauss-Seidel sweeps on the Laplace equation. Outside the mask the
/// result equals `f`; inside it starts from `s`.
Image smooth(const Image& s, const Image& f, const Mask& mask, int sweeps);

} // namespace bstd

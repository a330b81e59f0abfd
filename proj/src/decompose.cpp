#include "bstd/decompose.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace bstd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double>& v)
{
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

void require_unit_range(const Image& f)
{
    for (double v : f.pixels()) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("decompose: input intensities must lie in [0,1]");
        }
    }
}

} // namespace

ClampResult clamp_background(const Image& soft, const Image& f)
{
    require_same_shape(soft, f, "clamp_background");
    ClampResult out{soft, 0};
    constexpr double ceiling = 1.0 - kSoftCeilingGap;
    for (std::size_t i = 0; i < soft.size(); ++i) {
        const double clamped = std::min({soft[i], f[i], ceiling});
        if (clamped != soft[i]) {
            out.soft[i] = clamped;
            ++out.clamped_count;
        }
    }
    return out;
}

AlphaResult compute_alpha(const Image& f, const Image& soft)
{
    require_same_shape(f, soft, "compute_alpha");
    double worst = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        worst = std::max(worst, (f[i] - soft[i]) / (1.0 - soft[i]));
    }
    if (worst <= 0.0) {
        return {1.0, true};
    }
    return {1.0 / worst, false};
}

Image compute_bone(const Image& f, const Image& soft, double alpha)
{
    require_same_shape(f, soft, "compute_bone");
    Image bone(f.width(), f.height());
    for (std::size_t i = 0; i < f.size(); ++i) {
        bone[i] = alpha * ((f[i] - soft[i]) / (1.0 - soft[i]));
    }
    return bone;
}

Image reconstruct(const Image& bone, const Image& soft, double alpha)
{
    require_same_shape(bone, soft, "reconstruct");
    Image f(bone.width(), bone.height());
    for (std::size_t i = 0; i < bone.size(); ++i) {
        f[i] = bone[i] * (1.0 - soft[i]) / alpha + soft[i];
    }
    return f;
}

ContrastStats contrast_report(const Image& f, const Image& bone, const Mask& mask, double epsilon)
{
    require_same_shape(f, bone, "contrast_report");
    require_same_shape(f, mask, "contrast_report");
    ContrastStats stats;
    stats.epsilon = epsilon;
    if (f.width() < 2 || f.height() < 2 || mask.empty()) {
        return stats;
    }

    const GradientField gf = gradient(f);
    const GradientField gu = gradient(bone);
    std::vector<double> gains;
    double sum_f = 0.0;
    double sum_u = 0.0;
    std::size_t inside = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!mask[i]) {
            continue;
        }
        ++inside;
        sum_f += gf.magnitude[i];
        sum_u += gu.magnitude[i];
        if (gf.magnitude[i] > epsilon) {
            gains.push_back(gu.magnitude[i] / gf.magnitude[i]);
        }
    }
    stats.mean_grad_f = sum_f / static_cast<double>(inside);
    stats.mean_grad_u = sum_u / static_cast<double>(inside);
    stats.samples = gains.size();
    if (!gains.empty()) {
        stats.median_gain = median(gains);
    }
    return stats;
}

DecompositionResult decompose(const Image& f, const Mask& mask, const SolverOptions& solver)
{
    require_same_shape(f, mask, "decompose");
    require_unit_range(f);

    DirichletSolution solved = solve_dirichlet(f, mask, solver);

    const auto t0 = Clock::now();
    ClampResult clamped = clamp_background(solved.soft, f);
    const AlphaResult alpha = compute_alpha(f, clamped.soft);
    Image bone = compute_bone(f, clamped.soft, alpha.alpha);
    ContrastStats contrast = contrast_report(f, bone, mask);

    DecompositionResult out{std::move(clamped.soft),
                            std::move(bone),
                            alpha.alpha,
                            alpha.degenerate,
                            clamped.clamped_count,
                            solved.stats,
                            contrast,
                            {}};
    out.timings.solve_s = solved.stats.wall_time;
    out.timings.decompose_s = seconds_since(t0);
    return out;
}

} // namespace bstd

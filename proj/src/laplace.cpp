#include "bstd/laplace.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>
#include <string>
#include <vector>

namespace bstd {

namespace {

using Clock = std::chrono::steady_clock;

int neighbour_count(int x, int y, int w, int h)
{
    return (x > 0) + (x + 1 < w) + (y > 0) + (y + 1 < h);
}

// Sum of the in-frame neighbours of (x, y).
inline double neighbour_sum(const double* v, int x, int y, int w, int h)
{
    const std::size_t i = static_cast<std::size_t>(y) * w + x;
    double s = 0.0;
    if (x > 0) s += v[i - 1];
    if (x + 1 < w) s += v[i + 1];
    if (y > 0) s += v[i - w];
    if (y + 1 < h) s += v[i + w];
    return s;
}

// Pixels [x0, x1) of row y are unknowns.
struct Run {
    int y;
    int x0;
    int x1;
};

// One grid of the hierarchy. Vectors span the full grid but only the runs
// are ever written, so entries outside the domain keep their initial value.
struct Level {
    int w = 0;
    int h = 0;
    std::vector<std::uint8_t> interior;
    std::vector<Run> runs;
    std::size_t unknowns = 0;
    std::vector<double> x;
    std::vector<double> rhs;
    std::vector<double> res;

    std::size_t size() const { return interior.size(); }
    std::size_t at(int px, int py) const { return static_cast<std::size_t>(py) * w + px; }
};

void build_runs(Level& L)
{
    L.runs.clear();
    L.unknowns = 0;
    for (int y = 0; y < L.h; ++y) {
        const std::uint8_t* row = L.interior.data() + L.at(0, y);
        int x = 0;
        while (x < L.w) {
            while (x < L.w && !row[x]) {
                ++x;
            }
            const int start = x;
            while (x < L.w && row[x]) {
                ++x;
            }
            if (x > start) {
                L.runs.push_back({y, start, x});
                L.unknowns += static_cast<std::size_t>(x - start);
            }
        }
    }
}

Level make_level(int w, int h, std::vector<std::uint8_t> interior)
{
    Level L;
    L.w = w;
    L.h = h;
    L.interior = std::move(interior);
    const std::size_t n = L.interior.size();
    L.x.assign(n, 0.0);
    L.rhs.assign(n, 0.0);
    L.res.assign(n, 0.0);
    build_runs(L);
    return L;
}

// fn(i, x, y) for every unknown, in row-major order.
template <class Fn>
void for_each_unknown(const Level& L, Fn&& fn)
{
    for (const Run& run : L.runs) {
        std::size_t i = L.at(run.x0, run.y);
        for (int x = run.x0; x < run.x1; ++x, ++i) {
            fn(i, x, run.y);
        }
    }
}

// Gauss-Seidel update of the unknowns with (x + y) % 2 == color.
void sweep_color(Level& L, int color)
{
    const int w = L.w;
    const int h = L.h;
    double* v = L.x.data();
    const double* rhs = L.rhs.data();

    auto frame_update = [&](int x, int y) {
        const std::size_t i = L.at(x, y);
        v[i] = (rhs[i] + neighbour_sum(v, x, y, w, h)) / neighbour_count(x, y, w, h);
    };

    for (const Run& run : L.runs) {
        const int y = run.y;
        int x = run.x0 + (((run.x0 + y) & 1) != color ? 1 : 0);
        if (y == 0 || y + 1 == h) {
            for (; x < run.x1; x += 2) {
                frame_update(x, y);
            }
            continue;
        }
        if (x == 0) {
            frame_update(0, y);
            x += 2;
        }
        const int fast_end = std::min(run.x1, w - 1);
        const std::size_t row = L.at(0, y);
        for (; x < fast_end; x += 2) {
            const std::size_t i = row + static_cast<std::size_t>(x);
            v[i] = 0.25 * (rhs[i] + v[i - 1] + v[i + 1] + v[i - w] + v[i + w]);
        }
        if (x < run.x1) {
            frame_update(x, y);
        }
    }
}

void smooth_level(Level& L, int sweeps)
{
    for (int s = 0; s < sweeps; ++s) {
        sweep_color(L, 0);
        sweep_color(L, 1);
    }
}

// out = rhs - A v over the unknowns (rhs == nullptr means zero). Returns max |out|.
double stencil_residual(const Level& L, const double* v, const double* rhs, double* out)
{
    const int w = L.w;
    const int h = L.h;
    double worst = 0.0;
    for (const Run& run : L.runs) {
        const int y = run.y;
        const bool frame_row = y == 0 || y + 1 == h;
        std::size_t i = L.at(run.x0, y);
        for (int x = run.x0; x < run.x1; ++x, ++i) {
            double r;
            if (frame_row || x == 0 || x + 1 == w) {
                r = neighbour_sum(v, x, y, w, h) - neighbour_count(x, y, w, h) * v[i];
            } else {
                r = v[i - 1] + v[i + 1] + v[i - w] + v[i + w] - 4.0 * v[i];
            }
            if (rhs != nullptr) {
                r += rhs[i];
            }
            out[i] = r;
            worst = std::max(worst, std::abs(r));
        }
    }
    return worst;
}

double compute_residual(Level& L)
{
    return stencil_residual(L, L.x.data(), L.rhs.data(), L.res.data());
}

struct Stencil1D {
    int lo;
    int hi;
    double wlo;
};

inline Stencil1D prolong_stencil(int i, int coarse_n)
{
    if ((i & 1) == 0) {
        return {i / 2, i / 2, 1.0};
    }
    const int lo = (i - 1) / 2;
    const int hi = (i + 1) / 2;
    if (hi >= coarse_n) {
        return {lo, lo, 1.0};
    }
    return {lo, hi, 0.5};
}

inline double prolong_at(const double* coarse, int cw, int ch, int fx, int fy)
{
    const Stencil1D sx = prolong_stencil(fx, cw);
    const Stencil1D sy = prolong_stencil(fy, ch);
    const double* r0 = coarse + static_cast<std::size_t>(sy.lo) * cw;
    const double* r1 = coarse + static_cast<std::size_t>(sy.hi) * cw;
    const double top = sx.wlo * r0[sx.lo] + (1.0 - sx.wlo) * r0[sx.hi];
    const double bottom = sx.wlo * r1[sx.lo] + (1.0 - sx.wlo) * r1[sx.hi];
    return sy.wlo * top + (1.0 - sy.wlo) * bottom;
}

// 1-2-1 x 1-2-1 weights around fine (2I, 2J), renormalized where the frame cuts them.
inline double restrict_at(const double* fine, int fw, int fh, int I, int J)
{
    double sum = 0.0;
    double wsum = 0.0;
    for (int b = -1; b <= 1; ++b) {
        const int fy = 2 * J + b;
        if (fy < 0 || fy >= fh) {
            continue;
        }
        const double wy = b == 0 ? 2.0 : 1.0;
        const double* row = fine + static_cast<std::size_t>(fy) * fw;
        for (int a = -1; a <= 1; ++a) {
            const int fx = 2 * I + a;
            if (fx < 0 || fx >= fw) {
                continue;
            }
            const double wgt = wy * (a == 0 ? 2.0 : 1.0);
            sum += wgt * row[fx];
            wsum += wgt;
        }
    }
    return sum / wsum;
}

// True when every 4-connected component of `in` has a neighbour outside it.
// With drop_unanchored the offending components are cleared instead.
bool every_component_anchored(std::vector<std::uint8_t>& in, int w, int h, bool drop_unanchored)
{
    std::vector<std::uint8_t> seen(in.size(), 0);
    std::vector<std::size_t> stack;
    std::vector<std::size_t> component;
    bool all = true;
    for (std::size_t start = 0; start < in.size(); ++start) {
        if (!in[start] || seen[start]) {
            continue;
        }
        component.clear();
        bool anchored = false;
        seen[start] = 1;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            component.push_back(i);
            const int x = static_cast<int>(i % static_cast<std::size_t>(w));
            const int y = static_cast<int>(i / static_cast<std::size_t>(w));
            const auto visit = [&](std::size_t j) {
                if (!in[j]) {
                    anchored = true;
                } else if (!seen[j]) {
                    seen[j] = 1;
                    stack.push_back(j);
                }
            };
            if (x > 0) visit(i - 1);
            if (x + 1 < w) visit(i + 1);
            if (y > 0) visit(i - static_cast<std::size_t>(w));
            if (y + 1 < h) visit(i + static_cast<std::size_t>(w));
        }
        if (!anchored) {
            all = false;
            if (!drop_unanchored) {
                return false;
            }
            for (auto i : component) {
                in[i] = 0;
            }
        }
    }
    return all;
}

// Coarse (I, J) is an unknown iff fine (2I, 2J) is one.
std::vector<std::uint8_t> coarsen_domain(const Level& fine, int cw, int ch)
{
    std::vector<std::uint8_t> out(static_cast<std::size_t>(cw) * ch, 0);
    for (int J = 0; J < ch; ++J) {
        const std::uint8_t* src = fine.interior.data() + fine.at(0, 2 * J);
        std::uint8_t* dst = out.data() + static_cast<std::size_t>(J) * cw;
        for (int I = 0; I < cw; ++I) {
            dst[I] = src[2 * I];
        }
    }
    return out;
}

double dot(const Level& L, const std::vector<double>& a, const std::vector<double>& b)
{
    double s = 0.0;
    for_each_unknown(L, [&](std::size_t i, int, int) { s += a[i] * b[i]; });
    return s;
}

// q = A p over the unknowns; returns p.q.
double apply_operator(const Level& L, const std::vector<double>& p, std::vector<double>& q)
{
    stencil_residual(L, p.data(), nullptr, q.data());
    double pq = 0.0;
    for_each_unknown(L, [&](std::size_t i, int, int) {
        q[i] = -q[i];
        pq += p[i] * q[i];
    });
    return pq;
}

// Coarsest-level solve of A x = rhs.
void conjugate_gradient(Level& L)
{
    const std::size_t n = L.size();
    std::vector<double> r(n, 0.0);
    std::vector<double> p(n, 0.0);
    std::vector<double> q(n, 0.0);

    stencil_residual(L, L.x.data(), L.rhs.data(), r.data());
    double rr = 0.0;
    double bb = 0.0;
    for_each_unknown(L, [&](std::size_t i, int, int) {
        p[i] = r[i];
        rr += r[i] * r[i];
        bb += L.rhs[i] * L.rhs[i];
    });
    const double stop = 1e-24 * bb;
    const std::size_t max_iter = 2 * L.unknowns + 50;
    for (std::size_t it = 0; it < max_iter && rr > stop; ++it) {
        const double pq = apply_operator(L, p, q);
        if (!(pq > 0.0)) {
            break;
        }
        const double step = rr / pq;
        double rr_next = 0.0;
        for_each_unknown(L, [&](std::size_t i, int, int) {
            L.x[i] += step * p[i];
            r[i] -= step * q[i];
            rr_next += r[i] * r[i];
        });
        const double beta = rr_next / rr;
        rr = rr_next;
        for_each_unknown(L, [&](std::size_t i, int, int) { p[i] = r[i] + beta * p[i]; });
    }
}

// V-cycle for A e = r from a zero guess. Post-smoothing runs the colours in
// reverse so the cycle is symmetric.
class Multigrid {
public:
    Multigrid(const Level& finest, const SolverOptions& opts) : opts_(opts)
    {
        levels_.push_back(make_level(finest.w, finest.h, finest.interior));
        while (std::max(levels_.back().w, levels_.back().h) > opts.coarsest_size) {
            const Level& fine = levels_.back();
            const int cw = (fine.w + 1) / 2;
            const int ch = (fine.h + 1) / 2;
            auto domain = coarsen_domain(fine, cw, ch);
            // Empty: nothing to correct. Unanchored: singular coarse operator.
            if (std::find(domain.begin(), domain.end(), std::uint8_t{1}) == domain.end() ||
                !every_component_anchored(domain, cw, ch, false)) {
                break;
            }
            levels_.push_back(make_level(cw, ch, std::move(domain)));
        }
    }

    int depth() const { return static_cast<int>(levels_.size()); }

    void precondition(const std::vector<double>& r, std::vector<double>& z)
    {
        Level& L = levels_.front();
        for_each_unknown(L, [&](std::size_t i, int, int) {
            L.rhs[i] = r[i];
            L.x[i] = 0.0;
        });
        vcycle(0);
        for_each_unknown(L, [&](std::size_t i, int, int) { z[i] = L.x[i]; });
    }

private:
    void vcycle(std::size_t l)
    {
        Level& L = levels_[l];
        if (l + 1 == levels_.size()) {
            conjugate_gradient(L);
            return;
        }
        smooth_level(L, opts_.pre_sweeps);
        compute_residual(L);

        Level& C = levels_[l + 1];
        for_each_unknown(C, [&](std::size_t i, int I, int J) {
            C.rhs[i] = 4.0 * restrict_at(L.res.data(), L.w, L.h, I, J);
            C.x[i] = 0.0;
        });
        vcycle(l + 1);

        const double* corr = C.x.data();
        for_each_unknown(L, [&](std::size_t i, int x, int y) {
            L.x[i] += prolong_at(corr, C.w, C.h, x, y);
        });
        for (int s = 0; s < opts_.post_sweeps; ++s) {
            sweep_color(L, 1);
            sweep_color(L, 0);
        }
    }

    const SolverOptions& opts_;
    std::vector<Level> levels_;
};

// Conjugate gradients preconditioned by one V-cycle per iteration. `fine.x`
// holds the image with the boundary data in place. Restriction is
// renormalized at the frame, so the preconditioner is only nearly symmetric;
// the Polak-Ribiere beta tolerates that.
void multigrid_pcg(Level& fine, const SolverOptions& opts, SolveStats& stats)
{
    Multigrid mg(fine, opts);
    stats.levels = mg.depth();

    const std::size_t n = fine.size();
    std::vector<double> r(n, 0.0), z(n, 0.0), z_prev(n, 0.0), p(n, 0.0), q(n, 0.0);
    double worst = stencil_residual(fine, fine.x.data(), nullptr, r.data());
    stats.iterations = 0;
    stats.converged = worst <= opts.tol;
    if (stats.converged) {
        return;
    }

    mg.precondition(r, z);
    for_each_unknown(fine, [&](std::size_t i, int, int) { p[i] = z[i]; });
    double rz = dot(fine, r, z);
    for (int it = 1; it <= opts.max_vcycles; ++it) {
        const double pq = apply_operator(fine, p, q);
        if (!(pq > 0.0)) {
            break;
        }
        const double step = rz / pq;
        double r_max = 0.0;
        for_each_unknown(fine, [&](std::size_t i, int, int) {
            fine.x[i] += step * p[i];
            r[i] -= step * q[i];
            r_max = std::max(r_max, std::abs(r[i]));
        });
        stats.iterations = it;
        if (r_max <= opts.tol) {
            // The updated residual drifts from the true one; recompute.
            worst = stencil_residual(fine, fine.x.data(), nullptr, r.data());
            if (worst <= opts.tol) {
                stats.converged = true;
                return;
            }
        }
        z_prev.swap(z);
        mg.precondition(r, z);
        const double rz_next = dot(fine, r, z);
        const double beta = (rz_next - dot(fine, r, z_prev)) / rz;
        rz = rz_next;
        for_each_unknown(fine, [&](std::size_t i, int, int) { p[i] = z[i] + beta * p[i]; });
    }
}

Level fine_level(const Image& f, const Mask& domain)
{
    Level L = make_level(f.width(), f.height(),
                         std::vector<std::uint8_t>(domain.bytes().begin(), domain.bytes().end()));
    std::copy(f.pixels().begin(), f.pixels().end(), L.x.begin());
    return L;
}

double domain_residual(const Image& s, const Mask& domain)
{
    const int w = s.width();
    const int h = s.height();
    const double* v = s.pixels().data();
    double worst = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = s.index(x, y);
            if (!domain[i]) {
                continue;
            }
            const double r = neighbour_sum(v, x, y, w, h) - neighbour_count(x, y, w, h) * v[i];
            worst = std::max(worst, std::abs(r));
        }
    }
    return worst;
}

} // namespace

void SolverOptions::validate() const
{
    if (!(tol > 0.0)) {
        throw std::invalid_argument("solver tolerance must be positive");
    }
    if (max_vcycles < 1 || max_sweeps < 1 || pre_sweeps < 1 || post_sweeps < 1 ||
        coarsest_size < 1) {
        throw std::invalid_argument("solver counts must be at least 1");
    }
}

Mask solvable_region(const Mask& mask)
{
    Mask out = mask;
    std::vector<std::uint8_t> in(mask.bytes().begin(), mask.bytes().end());
    every_component_anchored(in, mask.width(), mask.height(), true);
    std::copy(in.begin(), in.end(), out.bytes().begin());
    return out;
}

DirichletSolution solve_dirichlet(const Image& f, const Mask& mask, const SolverOptions& opts)
{
    opts.validate();
    require_same_shape(f, mask, "solve_dirichlet");
    const auto t0 = Clock::now();

    const Mask domain = solvable_region(mask);
    SolveStats stats;
    stats.unknowns = domain.count();
    stats.unconstrained_pixels = mask.count() - stats.unknowns;

    auto finish = [&](Image soft) {
        stats.final_residual = domain_residual(soft, domain);
        stats.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
        return DirichletSolution{std::move(soft), stats};
    };

    if (stats.unknowns == 0) {
        return finish(f);
    }

    if (opts.method == SolverMethod::direct) {
        stats.levels = 1;
        return finish(solve_direct(f, domain));
    }

    Level L = fine_level(f, domain);
    if (opts.method == SolverMethod::gauss_seidel) {
        constexpr int kCheckEvery = 16;
        stats.levels = 1;
        stats.converged = false;
        int sweeps = 0;
        while (sweeps < opts.max_sweeps) {
            const int batch = std::min(kCheckEvery, opts.max_sweeps - sweeps);
            smooth_level(L, batch);
            sweeps += batch;
            if (compute_residual(L) <= opts.tol) {
                stats.converged = true;
                break;
            }
        }
        stats.iterations = sweeps;
    } else {
        multigrid_pcg(L, opts, stats);
    }

    Image soft = f;
    for_each_unknown(L, [&](std::size_t i, int, int) { soft[i] = L.x[i]; });
    return finish(std::move(soft));
}

Image solve_direct(const Image& f, const Mask& mask)
{
    require_same_shape(f, mask, "solve_direct");
    const Mask domain = solvable_region(mask);
    const int w = f.width();
    const int h = f.height();

    std::vector<long> unknown(f.size(), -1);
    long n = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (domain[i]) {
            unknown[i] = n++;
        }
    }
    if (static_cast<std::size_t>(n) > kMaxDirectUnknowns) {
        throw SystemTooLarge("solve_direct: " + std::to_string(n) +
                             " unknowns exceed the limit of " +
                             std::to_string(kMaxDirectUnknowns));
    }
    Image s = f;
    if (n == 0) {
        return s;
    }

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const long row = unknown[f.index(x, y)];
            if (row < 0) {
                continue;
            }
            const int nx[4] = {x - 1, x + 1, x, x};
            const int ny[4] = {y, y, y - 1, y + 1};
            for (int k = 0; k < 4; ++k) {
                if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) {
                    continue;
                }
                A(row, row) += 1.0;
                const long col = unknown[f.index(nx[k], ny[k])];
                if (col >= 0) {
                    A(row, col) -= 1.0;
                } else {
                    b(row) += f(nx[k], ny[k]);
                }
            }
        }
    }

    const Eigen::LLT<Eigen::MatrixXd> llt(A);
    assert(llt.info() == Eigen::Success && "anchored 5-point Laplacian must be SPD");
    const Eigen::VectorXd u = llt.solve(b);
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (unknown[i] >= 0) {
            s[i] = u(unknown[i]);
        }
    }
    return s;
}

double residual(const Image& s, const Mask& mask)
{
    require_same_shape(s, mask, "residual");
    return domain_residual(s, solvable_region(mask));
}

Image restrict_full_weighting(const Image& fine)
{
    Image coarse((fine.width() + 1) / 2, (fine.height() + 1) / 2);
    for (int J = 0; J < coarse.height(); ++J) {
        for (int I = 0; I < coarse.width(); ++I) {
            coarse(I, J) = restrict_at(fine.pixels().data(), fine.width(), fine.height(), I, J);
        }
    }
    return coarse;
}

Image prolong_bilinear(const Image& coarse, int fine_width, int fine_height)
{
    if ((fine_width + 1) / 2 != coarse.width() || (fine_height + 1) / 2 != coarse.height()) {
        throw DimensionError("prolong_bilinear: coarse grid does not match the fine size");
    }
    Image fine(fine_width, fine_height);
    for (int y = 0; y < fine_height; ++y) {
        for (int x = 0; x < fine_width; ++x) {
            fine(x, y) = prolong_at(coarse.pixels().data(), coarse.width(), coarse.height(), x, y);
        }
    }
    return fine;
}

Image smooth(const Image& s, const Image& f, const Mask& mask, int sweeps)
{
    require_same_shape(s, f, "smooth");
    require_same_shape(f, mask, "smooth");
    Level L = fine_level(f, solvable_region(mask));
    for_each_unknown(L, [&](std::size_t i, int, int) { L.x[i] = s[i]; });
    smooth_level(L, sweeps);
    Image out = f;
    for_each_unknown(L, [&](std::size_t i, int, int) { out[i] = L.x[i]; });
    return out;
}

} // namespace bstd

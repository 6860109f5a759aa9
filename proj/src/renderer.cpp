#include "voxrecon/renderer.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "traversal.hpp"
#include "voxrecon/parallel.hpp"

namespace voxrecon {

namespace {

template <class Walk>
RenderResult forward_impl(const VoxelGrid& grid, std::span<const Ray> rays, std::size_t threads, Walk walk) {
    RenderResult out;
    out.intensities.assign(rays.size(), 0.0);
    const double* mu = grid.values.data();
    parallel_chunks(rays.size(), threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            double acc = 0.0;
            walk(rays[r], [&](std::size_t v, double w) { acc += mu[v] * w; });
            out.intensities[r] = acc;
        }
    });
    return out;
}

// Per-worker gradient buffers reduced in worker order: bitwise reproducible for a fixed thread count.
template <class Walk>
VoxelGrid adjoint_impl(const GridShape& shape, std::span<const Ray> rays, std::span<const double> upstream,
                       std::size_t threads, Walk walk) {
    if (upstream.size() != rays.size())
        throw std::invalid_argument("upstream has " + std::to_string(upstream.size()) + " entries for " +
                                    std::to_string(rays.size()) + " rays");
    VoxelGrid grad(shape, 0.0);
    const std::size_t workers = std::max<std::size_t>(1, std::min(threads, rays.size()));
    std::vector<std::vector<double>> partial(workers > 1 ? workers : 0);
    parallel_chunks(rays.size(), workers, [&](std::size_t w, std::size_t begin, std::size_t end) {
        double* g = grad.values.data();
        if (workers > 1) {
            partial[w].assign(shape.size(), 0.0);
            g = partial[w].data();
        }
        for (std::size_t r = begin; r < end; ++r) {
            const double up = upstream[r];
            if (up == 0.0)
                continue;
            walk(rays[r], [&](std::size_t v, double wt) { g[v] += up * wt; });
        }
    });
    if (workers > 1) {
        parallel_chunks(shape.size(), workers, [&](std::size_t, std::size_t begin, std::size_t end) {
            for (const auto& p : partial)
                for (std::size_t v = begin; v < end; ++v)
                    grad.values[v] += p[v];
        });
    }
    return grad;
}

void check_samples(std::size_t m_samples) {
    if (m_samples < 2)
        throw std::invalid_argument("m_samples must be at least 2");
}

} // namespace

std::string_view to_string(RendererKind kind) {
    return kind == RendererKind::siddon ? "siddon" : "trilinear";
}

RendererKind renderer_from_string(std::string_view name) {
    if (name == "siddon")
        return RendererKind::siddon;
    if (name == "trilinear")
        return RendererKind::trilinear;
    throw std::invalid_argument("unknown renderer '" + std::string(name) + "' (expected siddon or trilinear)");
}

RenderResult siddon_forward(const VoxelGrid& grid, std::span<const Ray> rays, std::size_t threads) {
    const GridShape& g = grid.shape;
    return forward_impl(grid, rays, threads, [&g](const Ray& r, auto&& f) { detail::siddon_walk(g, r, f); });
}

VoxelGrid siddon_adjoint(const GridShape& shape, std::span<const Ray> rays, std::span<const double> upstream,
                         std::size_t threads) {
    shape.validate();
    return adjoint_impl(shape, rays, upstream, threads,
                        [&shape](const Ray& r, auto&& f) { detail::siddon_walk(shape, r, f); });
}

RenderResult trilinear_forward(const VoxelGrid& grid, std::span<const Ray> rays, std::size_t m_samples,
                               std::size_t threads) {
    check_samples(m_samples);
    const GridShape& g = grid.shape;
    return forward_impl(grid, rays, threads,
                        [&g, m_samples](const Ray& r, auto&& f) { detail::trilinear_walk(g, r, m_samples, f); });
}

VoxelGrid trilinear_adjoint(const GridShape& shape, std::span<const Ray> rays, std::size_t m_samples,
                            std::span<const double> upstream, std::size_t threads) {
    check_samples(m_samples);
    shape.validate();
    return adjoint_impl(shape, rays, upstream, threads, [&shape, m_samples](const Ray& r, auto&& f) {
        detail::trilinear_walk(shape, r, m_samples, f);
    });
}

RenderResult render(RendererKind kind, const VoxelGrid& grid, std::span<const Ray> rays, std::size_t m_samples,
                    std::size_t threads) {
    return kind == RendererKind::siddon ? siddon_forward(grid, rays, threads)
                                        : trilinear_forward(grid, rays, m_samples, threads);
}

VoxelGrid render_adjoint(RendererKind kind, const GridShape& shape, std::span<const Ray> rays,
                         std::size_t m_samples, std::span<const double> upstream, std::size_t threads) {
    return kind == RendererKind::siddon ? siddon_adjoint(shape, rays, upstream, threads)
                                        : trilinear_adjoint(shape, rays, m_samples, upstream, threads);
}

bool clip_to_box(const GridShape& shape, const Ray& ray, double& entry, double& exit) {
    const Vec3 s = ray.source;
    const Vec3 d = ray.direction();
    entry = 0.0;
    exit = 1.0;
    for (int a = 0; a < 3; ++a) {
        const double lo = shape.origin[a];
        const double hi = lo + static_cast<double>(shape.dims[a]) * shape.spacing[a];
        if (d[a] == 0.0) {
            if (s[a] < lo || s[a] > hi)
                return false;
            continue;
        }
        double t0 = (lo - s[a]) / d[a];
        double t1 = (hi - s[a]) / d[a];
        if (t0 > t1)
            std::swap(t0, t1);
        entry = std::max(entry, t0);
        exit = std::min(exit, t1);
    }
    return exit > entry;
}

} // namespace voxrecon

#pragma once

// Per-ray voxel visitors shared by the forward and adjoint kernels, so each
// adjoint is the exact transpose of its forward map.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include "voxrecon/geometry.hpp"
#include "voxrecon/voxel_grid.hpp"

namespace voxrecon::detail {

/// visit(flat_index, weight) for each voxel the ray crosses; weight is the
/// intersection length in mm (|p - s| times the parametric length).
template <class Visit>
void siddon_walk(const GridShape& g, const Ray& ray, Visit&& visit) {
    const Vec3 s = ray.source;
    const Vec3 d = ray.direction();
    const double len = norm(d);

    double a_min = 0.0;
    double a_max = 1.0;
    for (int a = 0; a < 3; ++a) {
        const double lo = g.origin[a];
        const double hi = g.origin[a] + static_cast<double>(g.dims[a]) * g.spacing[a];
        if (d[a] == 0.0) {
            // half-open so a ray on the top face belongs to the (absent) voxel above
            if (s[a] < lo || s[a] >= hi)
                return;
            continue;
        }
        double t0 = (lo - s[a]) / d[a];
        double t1 = (hi - s[a]) / d[a];
        if (t0 > t1)
            std::swap(t0, t1);
        a_min = std::max(a_min, t0);
        a_max = std::min(a_max, t1);
    }
    if (!(a_max > a_min))
        return;

    long idx[3];
    long step[3];
    double next[3];
    double inv[3];
    const long n[3] = {static_cast<long>(g.dims[0]), static_cast<long>(g.dims[1]), static_cast<long>(g.dims[2])};
    const long stride[3] = {1, n[0], n[0] * n[1]};
    constexpr double inf = std::numeric_limits<double>::infinity();

    for (int a = 0; a < 3; ++a) {
        const double t = (s[a] + a_min * d[a] - g.origin[a]) / g.spacing[a];
        long i;
        if (d[a] > 0.0)
            i = static_cast<long>(std::floor(t));
        else if (d[a] < 0.0)
            i = static_cast<long>(std::ceil(t)) - 1;
        else
            i = static_cast<long>(std::floor((s[a] - g.origin[a]) / g.spacing[a]));
        idx[a] = std::clamp(i, 0L, n[a] - 1);
        step[a] = d[a] > 0.0 ? 1 : -1;
        inv[a] = d[a] != 0.0 ? 1.0 / d[a] : 0.0;
        next[a] = d[a] != 0.0
                      ? (g.origin[a] + static_cast<double>(idx[a] + (d[a] > 0.0 ? 1 : 0)) * g.spacing[a] - s[a]) * inv[a]
                      : inf;
    }

    long flat = idx[0] + stride[1] * idx[1] + stride[2] * idx[2];
    double a_cur = a_min;
    for (;;) {
        int ax = 0;
        if (next[1] < next[ax])
            ax = 1;
        if (next[2] < next[ax])
            ax = 2;
        const double a_next = std::min(next[ax], a_max);
        if (a_next > a_cur) {
            visit(static_cast<std::size_t>(flat), (a_next - a_cur) * len);
            a_cur = a_next;
        }
        if (next[ax] >= a_max)
            break;
        idx[ax] += step[ax];
        if (idx[ax] < 0 || idx[ax] >= n[ax])
            break;
        flat += step[ax] * stride[ax];
        next[ax] = (g.origin[ax] + static_cast<double>(idx[ax] + (step[ax] > 0 ? 1 : 0)) * g.spacing[ax] - s[ax]) *
                   inv[ax];
    }
}

/// visit(flat_index, weight) for the 8 interpolation neighbors of each
/// quadrature sample; weight = |p - s| * quadrature weight * trilinear weight.
template <class Visit>
void trilinear_walk(const GridShape& g, const Ray& ray, std::size_t m_samples, Visit&& visit) {
    const Vec3 s = ray.source;
    const Vec3 d = ray.direction();
    const double len = norm(d);

    double a_min = 0.0;
    double a_max = 1.0;
    for (int a = 0; a < 3; ++a) {
        const double lo = g.origin[a];
        const double hi = g.origin[a] + static_cast<double>(g.dims[a]) * g.spacing[a];
        if (d[a] == 0.0) {
            if (s[a] < lo || s[a] > hi)
                return;
            continue;
        }
        double t0 = (lo - s[a]) / d[a];
        double t1 = (hi - s[a]) / d[a];
        if (t0 > t1)
            std::swap(t0, t1);
        a_min = std::max(a_min, t0);
        a_max = std::min(a_max, t1);
    }
    if (!(a_max > a_min))
        return;

    const long n[3] = {static_cast<long>(g.dims[0]), static_cast<long>(g.dims[1]), static_cast<long>(g.dims[2])};
    const long stride[3] = {1, n[0], n[0] * n[1]};
    const double h = (a_max - a_min) / static_cast<double>(m_samples - 1);

    // voxel-center coordinates: c = (x - origin) / spacing - 0.5
    double c0[3];
    double dc[3];
    for (int a = 0; a < 3; ++a) {
        c0[a] = (s[a] - g.origin[a]) / g.spacing[a] - 0.5;
        dc[a] = d[a] / g.spacing[a];
    }

    for (std::size_t m = 0; m < m_samples; ++m) {
        const double alpha = m + 1 == m_samples ? a_max : a_min + static_cast<double>(m) * h;
        const double qw = (m == 0 || m + 1 == m_samples) ? 0.5 * h : h;
        const double base = len * qw;

        long i0[3];
        double w1[3];
        bool interior = true;
        for (int a = 0; a < 3; ++a) {
            const double c = c0[a] + alpha * dc[a];
            const double fl = std::floor(c);
            i0[a] = static_cast<long>(fl);
            w1[a] = c - fl;
            interior = interior && i0[a] >= 0 && i0[a] + 1 < n[a];
        }
        const long flat0 = i0[0] + stride[1] * i0[1] + stride[2] * i0[2];
        if (interior) {
            for (int corner = 0; corner < 8; ++corner) {
                double w = base;
                long off = 0;
                for (int a = 0; a < 3; ++a) {
                    const bool hi = (corner >> a) & 1;
                    w *= hi ? w1[a] : 1.0 - w1[a];
                    off += hi ? stride[a] : 0;
                }
                visit(static_cast<std::size_t>(flat0 + off), w);
            }
            continue;
        }
        for (int corner = 0; corner < 8; ++corner) {
            double w = base;
            long off = 0;
            bool inside = true;
            for (int a = 0; a < 3; ++a) {
                const bool hi = (corner >> a) & 1;
                const long i = i0[a] + (hi ? 1 : 0);
                inside = inside && i >= 0 && i < n[a];
                w *= hi ? w1[a] : 1.0 - w1[a];
                off += hi ? stride[a] : 0;
            }
            if (inside)
                visit(static_cast<std::size_t>(flat0 + off), w);
        }
    }
}

} // namespace voxrecon::detail

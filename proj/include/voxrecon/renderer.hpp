#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "voxrecon/geometry.hpp"
#include "voxrecon/voxel_grid.hpp"

namespace voxrecon {

/// Negative-log intensities, one per input ray.
struct RenderResult {
    std::vector<double> intensities;
};

enum class RendererKind { siddon, trilinear };

std::string_view to_string(RendererKind kind);
/// Throws std::invalid_argument for names other than "siddon" and "trilinear".
RendererKind renderer_from_string(std::string_view name);

/**
 * Exact discrete line integral: |p - s| * sum over voxels of LAC * (parametric
 * intersection length). Rays that miss the grid render 0. A ray lying exactly
 * on a voxel face is attributed to the voxel on the +axis side.
 */
RenderResult siddon_forward(const VoxelGrid& grid, std::span<const Ray> rays, std::size_t threads = 1);

/// Transpose of siddon_forward: G[v] = sum_r upstream[r] * (length of ray r inside voxel v).
VoxelGrid siddon_adjoint(const GridShape& shape, std::span<const Ray> rays, std::span<const double> upstream,
                         std::size_t threads = 1);

/**
 * Rectangular-rule quadrature of the line integral with m_samples evenly spaced
 * samples over the ray's intersection with the grid bounding box, trilinearly
 * interpolated between voxel centers (zero outside the grid). End samples get
 * half weight so the weights sum to the chord parameter length.
 */
RenderResult trilinear_forward(const VoxelGrid& grid, std::span<const Ray> rays, std::size_t m_samples,
                               std::size_t threads = 1);

VoxelGrid trilinear_adjoint(const GridShape& shape, std::span<const Ray> rays, std::size_t m_samples,
                            std::span<const double> upstream, std::size_t threads = 1);

/// Dispatch helpers; m_samples is ignored for Siddon.
RenderResult render(RendererKind kind, const VoxelGrid& grid, std::span<const Ray> rays, std::size_t m_samples,
                    std::size_t threads = 1);
VoxelGrid render_adjoint(RendererKind kind, const GridShape& shape, std::span<const Ray> rays,
                         std::size_t m_samples, std::span<const double> upstream, std::size_t threads = 1);

/// Parametric interval [entry, exit] of the ray segment inside the closed grid bounding box.
/// Returns false when the segment misses the box.
bool clip_to_box(const GridShape& shape, const Ray& ray, double& entry, double& exit);

} // namespace voxrecon

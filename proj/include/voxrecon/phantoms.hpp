#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "voxrecon/geometry.hpp"
#include "voxrecon/voxel_grid.hpp"

namespace voxrecon {

enum class PhantomKind { uniform, spheres, shells, smooth_noise, shell_filaments };

std::string_view to_string(PhantomKind kind);
/// Throws std::invalid_argument for unknown names.
PhantomKind phantom_from_string(std::string_view name);

struct PhantomOptions {
    double uniform_value = 0.05;  ///< LAC of the `uniform` phantom, mm^-1
    int supersample = 3;          ///< per-axis subsamples for partial-volume voxelization of balls
};

/**
 * Synthetic LAC volume (mm^-1, values in [0, 0.1]) with the grid centered on the
 * isocenter. Deterministic in (kind, shape, seed).
 *
 *   uniform          constant value everywhere
 *   spheres          a soft body ball holding seeded, disjoint denser balls
 *   shells           concentric shells of alternating LAC
 *   smooth_noise     low-frequency sum of 3D cosines, windowed to a ball
 *   shell_filaments  dense outer shell, soft interior, thin random curved filaments
 */
VoxelGrid make_phantom(PhantomKind kind, const GridShape& shape, std::uint64_t seed, const PhantomOptions& opts = {});

/// Ball indicator scaled by `weight`; analytic phantoms are sums of these.
struct Ball {
    Vec3 center;
    double radius = 0.0;
    double weight = 0.0;
};

/// Ball decomposition of the spheres and shells phantoms (empty for other kinds).
std::vector<Ball> analytic_balls(PhantomKind kind, const GridShape& shape, std::uint64_t seed);

/// Length of the segment [source, pixel] inside a ball, mm.
double chord_length(const Ball& ball, const Ray& ray);

/// Exact line integral of a sum of weighted balls along a ray segment.
double analytic_line_integral(const std::vector<Ball>& balls, const Ray& ray);

} // namespace voxrecon

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "voxrecon/vec3.hpp"

namespace voxrecon {

using Dims = std::array<std::size_t, 3>;

/// Layout of a voxelgrid: voxel (i, j, k) covers origin + [i, i+1) x spacing (per axis).
/// Flat index is i + nx * (j + ny * k).
struct GridShape {
    Dims dims{1, 1, 1};
    Vec3 spacing{1.0, 1.0, 1.0};
    Vec3 origin{};

    std::size_t size() const noexcept { return dims[0] * dims[1] * dims[2]; }
    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const noexcept {
        return i + dims[0] * (j + dims[1] * k);
    }
    Vec3 extent() const noexcept {
        return {spacing.x * static_cast<double>(dims[0]), spacing.y * static_cast<double>(dims[1]),
                spacing.z * static_cast<double>(dims[2])};
    }
    Vec3 voxel_center(std::size_t i, std::size_t j, std::size_t k) const noexcept {
        return {origin.x + (static_cast<double>(i) + 0.5) * spacing.x,
                origin.y + (static_cast<double>(j) + 0.5) * spacing.y,
                origin.z + (static_cast<double>(k) + 0.5) * spacing.z};
    }

    /// Throws std::invalid_argument unless every dim >= 1 and every spacing > 0 (finite).
    void validate() const;

    friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// Grid whose bounding box is centered on the isocenter.
GridShape centered_shape(Dims dims, Vec3 spacing);

/// Scalar field on a GridShape. Values are LACs (mm^-1) or raw optimizer parameters.
struct VoxelGrid {
    GridShape shape;
    std::vector<double> values;

    VoxelGrid() = default;
    explicit VoxelGrid(const GridShape& s, double fill = 0.0);
    VoxelGrid(const GridShape& s, std::vector<double> v);

    std::size_t size() const noexcept { return values.size(); }
    double& at(std::size_t i, std::size_t j, std::size_t k) { return values[shape.index(i, j, k)]; }
    double at(std::size_t i, std::size_t j, std::size_t k) const { return values[shape.index(i, j, k)]; }

    std::span<const double> view() const noexcept { return values; }
};

} // namespace voxrecon

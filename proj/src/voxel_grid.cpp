#include "voxrecon/voxel_grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace voxrecon {

void GridShape::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (dims[a] < 1)
            throw std::invalid_argument("grid dims must be >= 1 on every axis");
        if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
            throw std::invalid_argument("grid spacing must be positive and finite");
        if (!std::isfinite(origin[a]))
            throw std::invalid_argument("grid origin must be finite");
    }
}

GridShape centered_shape(Dims dims, Vec3 spacing) {
    GridShape s{dims, spacing, {}};
    s.validate();
    const Vec3 e = s.extent();
    s.origin = {-0.5 * e.x, -0.5 * e.y, -0.5 * e.z};
    return s;
}

VoxelGrid::VoxelGrid(const GridShape& s, double fill) : shape(s) {
    shape.validate();
    values.assign(shape.size(), fill);
}

VoxelGrid::VoxelGrid(const GridShape& s, std::vector<double> v) : shape(s), values(std::move(v)) {
    shape.validate();
    if (values.size() != shape.size())
        throw std::invalid_argument("voxel count " + std::to_string(values.size()) + " does not match dims (" +
                                    std::to_string(shape.size()) + ")");
}

} // namespace voxrecon

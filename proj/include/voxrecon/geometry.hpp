#pragma once

#include <cstddef>
#include <vector>

#include <nlohmann/json.hpp>

#include "voxrecon/vec3.hpp"

namespace voxrecon {

/// Source point and detector pixel point of one X-ray beam, r(a) = source + a (pixel - source).
struct Ray {
    Vec3 source;
    Vec3 pixel;

    Vec3 direction() const { return pixel - source; }
    double length() const { return norm(pixel - source); }
};

/// Scanner parameters shared by every view of a circular orbit.
struct OrbitParams {
    double source_to_isocenter = 66.0;
    double source_to_detector = 199.0;
    std::size_t detector_rows = 1;
    std::size_t detector_cols = 1;
    double pixel_pitch_u = 1.0;
    double pixel_pitch_v = 1.0;
    double detector_vertical_offset = 0.0;
};

/**
 * Circular-orbit cone-beam acquisition with a flat detector.
 *
 * World frame: isocenter at the origin, orbit in the z = 0 plane, angles
 * counterclockwise from +x seen from +z. The source of view k sits at
 * source_to_isocenter * (cos a_k, sin a_k, 0); the detector is perpendicular to
 * the source->isocenter axis at distance source_to_detector from the source,
 * its u axis tangent to the orbit and its v axis along +z. Row 0 is the top
 * (largest v) row; column 0 has the smallest u.
 *
 * Immutable after construction.
 */
class ScanGeometry {
public:
    /// Throws std::invalid_argument when the parameters violate the geometry invariants.
    ScanGeometry(const OrbitParams& params, std::vector<double> view_angles);

    const OrbitParams& params() const noexcept { return params_; }
    const std::vector<double>& view_angles() const noexcept { return view_angles_; }

    std::size_t n_views() const noexcept { return view_angles_.size(); }
    std::size_t rows() const noexcept { return params_.detector_rows; }
    std::size_t cols() const noexcept { return params_.detector_cols; }
    std::size_t pixels_per_view() const noexcept { return rows() * cols(); }
    std::size_t total_rays() const noexcept { return n_views() * pixels_per_view(); }

    Vec3 source_position(std::size_t view_index) const;

    /// Same detector with a different set of view angles.
    ScanGeometry with_angles(std::vector<double> view_angles) const;

private:
    OrbitParams params_;
    std::vector<double> view_angles_;
};

/// Angles 2*pi*k/n_views for k = 0..n_views-1 (middle orbit, no vertical offset).
ScanGeometry make_circular_orbit(std::size_t n_views, OrbitParams params, double angle_offset = 0.0);

/// Ray to the center of detector cell (row, col) of a view. Throws std::invalid_argument on bad indices.
Ray ray_for_pixel(const ScanGeometry& geom, std::size_t view_index, std::size_t row, std::size_t col);

/// Ray for a flat index view-major then row-major: ((view * rows) + row) * cols + col.
Ray ray_for_index(const ScanGeometry& geom, std::size_t flat_index);

struct IndexedRay {
    std::size_t view_index;
    std::size_t row;
    std::size_t col;
    Ray ray;
};

/// Every ray of the acquisition, view-major then row-major.
std::vector<IndexedRay> enumerate_rays(const ScanGeometry& geom);

nlohmann::json to_json(const ScanGeometry& geom);
ScanGeometry geometry_from_json(const nlohmann::json& j);

} // namespace voxrecon

#include "voxrecon/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace voxrecon {

namespace {

void validate(const OrbitParams& p, const std::vector<double>& angles) {
    if (!(p.source_to_isocenter > 0.0))
        throw std::invalid_argument("source_to_isocenter must be positive");
    if (!(p.source_to_detector > p.source_to_isocenter))
        throw std::invalid_argument("source_to_detector must exceed source_to_isocenter");
    if (p.detector_rows < 1 || p.detector_cols < 1)
        throw std::invalid_argument("detector must have at least one row and one column");
    if (!(p.pixel_pitch_u > 0.0) || !(p.pixel_pitch_v > 0.0))
        throw std::invalid_argument("pixel pitches must be positive");
    if (!std::isfinite(p.detector_vertical_offset))
        throw std::invalid_argument("detector_vertical_offset must be finite");
    if (angles.empty())
        throw std::invalid_argument("geometry needs at least one view");
    for (double a : angles)
        if (!std::isfinite(a))
            throw std::invalid_argument("view angles must be finite");
}

} // namespace

ScanGeometry::ScanGeometry(const OrbitParams& params, std::vector<double> view_angles)
    : params_(params), view_angles_(std::move(view_angles)) {
    validate(params_, view_angles_);
}

Vec3 ScanGeometry::source_position(std::size_t view_index) const {
    const double a = view_angles_.at(view_index);
    return {params_.source_to_isocenter * std::cos(a), params_.source_to_isocenter * std::sin(a), 0.0};
}

ScanGeometry ScanGeometry::with_angles(std::vector<double> view_angles) const {
    return ScanGeometry(params_, std::move(view_angles));
}

ScanGeometry make_circular_orbit(std::size_t n_views, OrbitParams params, double angle_offset) {
    if (n_views == 0)
        throw std::invalid_argument("n_views must be at least 1");
    std::vector<double> angles(n_views);
    for (std::size_t k = 0; k < n_views; ++k)
        angles[k] = angle_offset + 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_views);
    params.detector_vertical_offset = 0.0;
    return ScanGeometry(params, std::move(angles));
}

Ray ray_for_pixel(const ScanGeometry& geom, std::size_t view_index, std::size_t row, std::size_t col) {
    if (view_index >= geom.n_views() || row >= geom.rows() || col >= geom.cols())
        throw std::invalid_argument("pixel index out of range: view " + std::to_string(view_index) + ", row " +
                                    std::to_string(row) + ", col " + std::to_string(col));
    const OrbitParams& p = geom.params();
    const double a = geom.view_angles()[view_index];
    const double c = std::cos(a);
    const double s = std::sin(a);

    const Vec3 source{p.source_to_isocenter * c, p.source_to_isocenter * s, 0.0};
    const double det = p.source_to_isocenter - p.source_to_detector;
    const Vec3 center{det * c, det * s, p.detector_vertical_offset};
    const Vec3 u_axis{-s, c, 0.0};

    const double u = (static_cast<double>(col) - 0.5 * static_cast<double>(p.detector_cols - 1)) * p.pixel_pitch_u;
    const double v = (0.5 * static_cast<double>(p.detector_rows - 1) - static_cast<double>(row)) * p.pixel_pitch_v;
    return {source, center + u * u_axis + Vec3{0.0, 0.0, v}};
}

Ray ray_for_index(const ScanGeometry& geom, std::size_t flat_index) {
    const std::size_t col = flat_index % geom.cols();
    const std::size_t rest = flat_index / geom.cols();
    return ray_for_pixel(geom, rest / geom.rows(), rest % geom.rows(), col);
}

std::vector<IndexedRay> enumerate_rays(const ScanGeometry& geom) {
    std::vector<IndexedRay> out;
    out.reserve(geom.total_rays());
    for (std::size_t v = 0; v < geom.n_views(); ++v)
        for (std::size_t r = 0; r < geom.rows(); ++r)
            for (std::size_t c = 0; c < geom.cols(); ++c)
                out.push_back({v, r, c, ray_for_pixel(geom, v, r, c)});
    return out;
}

nlohmann::json to_json(const ScanGeometry& geom) {
    const OrbitParams& p = geom.params();
    return nlohmann::json{
        {"source_to_isocenter", p.source_to_isocenter},
        {"source_to_detector", p.source_to_detector},
        {"detector_rows", p.detector_rows},
        {"detector_cols", p.detector_cols},
        {"pixel_pitch_u", p.pixel_pitch_u},
        {"pixel_pitch_v", p.pixel_pitch_v},
        {"view_angles", geom.view_angles()},
        {"detector_vertical_offset", p.detector_vertical_offset},
    };
}

ScanGeometry geometry_from_json(const nlohmann::json& j) {
    if (!j.is_object())
        throw std::invalid_argument("geometry JSON must be an object");
    try {
        OrbitParams p;
        p.source_to_isocenter = j.at("source_to_isocenter").get<double>();
        p.source_to_detector = j.at("source_to_detector").get<double>();
        p.detector_rows = j.at("detector_rows").get<std::size_t>();
        p.detector_cols = j.at("detector_cols").get<std::size_t>();
        p.pixel_pitch_u = j.at("pixel_pitch_u").get<double>();
        p.pixel_pitch_v = j.at("pixel_pitch_v").get<double>();
        p.detector_vertical_offset = j.value("detector_vertical_offset", 0.0);
        return ScanGeometry(p, j.at("view_angles").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed geometry JSON: ") + e.what());
    }
}

} // namespace voxrecon

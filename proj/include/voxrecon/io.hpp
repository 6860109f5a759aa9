#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "voxrecon/optim.hpp"
#include "voxrecon/voxel_grid.hpp"

namespace voxrecon::io {

enum class DType { f32, f64 };

std::string_view to_string(DType dtype);
DType dtype_from_string(std::string_view name);

inline constexpr std::string_view kVolumeHeaderExt = ".volhdr.json";
inline constexpr std::string_view kVolumeRawExt = ".vol.raw";
inline constexpr std::string_view kProjectionHeaderExt = ".projhdr.json";
inline constexpr std::string_view kProjectionRawExt = ".proj.raw";

/// Strips a known header or payload extension, so "p", "p.volhdr.json" and
/// "p.vol.raw" all name the same file pair.
std::filesystem::path file_base(const std::filesystem::path& path);

/**
 * Writes <base>.volhdr.json and <base>.vol.raw (little-endian, x fastest).
 * Throws DataError on non-finite values or I/O failure.
 */
void write_volume(const std::filesystem::path& base, const VoxelGrid& grid, DType dtype = DType::f32);

/// Throws DataError on malformed headers, unknown header fields or payload size mismatch.
VoxelGrid read_volume(const std::filesystem::path& base);

/// Writes <base>.projhdr.json (geometry fields + views/rows/cols/dtype) and <base>.proj.raw.
void write_projections(const std::filesystem::path& base, const ProjectionSet& projections, DType dtype = DType::f32);

ProjectionSet read_projections(const std::filesystem::path& base);

/// Strict parse of a geometry document (unknown fields rejected). Throws DataError.
ScanGeometry read_geometry(const std::filesystem::path& path);
void write_geometry(const std::filesystem::path& path, const ScanGeometry& geometry);

/// Reads a whole JSON document. Throws DataError when missing or unparsable.
nlohmann::json read_json(const std::filesystem::path& path);

} // namespace voxrecon::io

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>

namespace voxrecon::cli {

/// 8-bit grayscale PNG, min-max normalized; values are row-major with `width` columns.
void write_png_gray8(const std::filesystem::path& path, std::size_t width, std::size_t height,
                     std::span<const double> values);

} // namespace voxrecon::cli

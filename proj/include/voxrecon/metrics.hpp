#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include <nlohmann/json.hpp>

#include "voxrecon/voxel_grid.hpp"

namespace voxrecon {

/// Read-only scalar field: a volume, or an image when dims[2] == 1.
struct FieldView {
    Dims dims;
    std::span<const double> values;

    static FieldView of(const VoxelGrid& g) { return {g.shape.dims, g.values}; }
    static FieldView image(std::size_t cols, std::size_t rows, std::span<const double> v) { return {{cols, rows, 1}, v}; }
};

inline constexpr std::size_t kSsimWindow = 7;

/// All comparisons take the reference first. Shape mismatches throw std::invalid_argument.
double mse(FieldView reference, FieldView test);

/// 10 log10(peak^2 / mse); +infinity when the fields are identical.
double psnr(FieldView reference, FieldView test, double peak);

/// Pearson correlation; throws UndefinedMetricError if either field is constant.
double pcc(FieldView reference, FieldView test);

/**
 * Mean SSIM over every fully-contained 7x7x7 window (7x7 for images), stride 1,
 * uniform weights, K1 = 0.01, K2 = 0.03, L = dynamic_range.
 */
double ssim(FieldView reference, FieldView test, double dynamic_range);

struct MetricReport {
    double ssim = 0.0;
    double psnr = 0.0;
    double mse = 0.0;
    double pcc = 0.0;
};

/// Peak = max(reference); SSIM range = max(reference) - min(reference) unless overridden.
MetricReport evaluate(FieldView reference, FieldView test, std::optional<double> dynamic_range = std::nullopt);

/// PSNR is written as the string "inf" when infinite (JSON has no infinity literal).
nlohmann::json to_json(const MetricReport& report);

} // namespace voxrecon

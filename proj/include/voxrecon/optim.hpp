#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "voxrecon/geometry.hpp"
#include "voxrecon/renderer.hpp"
#include "voxrecon/voxel_grid.hpp"

namespace voxrecon {

struct ReconConfig {
    RendererKind renderer = RendererKind::siddon;
    double lambda_tv = 25.0;
    std::size_t iterations = 50;
    double lr_initial = 1.0;
    std::size_t batch_rays = std::size_t{1} << 16;
    std::size_t m_samples = 500;
    double softplus_beta = 20.0;
    double lac_unit = 0.01;  ///< mm^-1 per unit of softplus(theta)
    std::uint64_t seed = 0;

    /// Per-renderer defaults (lambda_tv 25 for Siddon, 15 for trilinear).
    static ReconConfig defaults_for(RendererKind renderer);

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

/// Batch sizes that fill GPU memory in the reference setup; kept as presets only.
inline constexpr std::size_t kGpuBatchSiddon = 550'000;
inline constexpr std::size_t kGpuBatchTrilinear = 1'800'000;

nlohmann::json to_json(const ReconConfig& config);
/// Strict: unknown keys are rejected. A missing lambda_tv takes the renderer's default.
ReconConfig recon_config_from_json(const nlohmann::json& j);

/// Negative-log images, view-major then row-major, aligned with geometry.
struct ProjectionSet {
    ScanGeometry geometry;
    std::vector<double> images;

    ProjectionSet(ScanGeometry g, std::vector<double> data);

    std::span<const double> view(std::size_t v) const {
        return std::span<const double>(images).subspan(v * geometry.pixels_per_view(), geometry.pixels_per_view());
    }
};

double softplus(double theta, double beta);
/// d softplus / d theta = logistic(beta * theta).
double softplus_derivative(double theta, double beta);
std::vector<double> softplus(std::span<const double> theta, double beta);

struct TvResult {
    double value = 0.0;
    VoxelGrid gradient;
};

/// Anisotropic total variation: mean |forward difference| over all neighbor pairs on
/// the three axes, with subgradient sign(0) = 0.
TvResult tv_norm(const VoxelGrid& grid);

struct LossResult {
    double value = 0.0;
    std::vector<double> gradient;
};

/// Mean absolute error and its subgradient sign(pred - target) / n.
LossResult photometric_loss(std::span<const double> predicted, std::span<const double> target);

/// One epoch: a seeded uniform permutation of [0, total_rays) cut into batches.
std::vector<std::vector<std::size_t>> sample_batches(std::size_t total_rays, std::size_t batch_rays,
                                                     std::uint64_t seed);

/// Linear decay lr_initial * (1 - step / total_steps); throws when step >= total_steps.
double lr_at(std::size_t step, std::size_t total_steps, double lr_initial);

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct ReconState {
    VoxelGrid theta;
    std::vector<double> adam_m;
    std::vector<double> adam_v;
    std::size_t step = 0;

    explicit ReconState(const GridShape& shape);
};

/// Bias-corrected Adam update of state.theta in place; increments state.step.
void adam_step(ReconState& state, std::span<const double> grad, double lr, const AdamParams& params = {});

struct ObjectiveResult {
    double value = 0.0;
    double photometric = 0.0;
    double tv = 0.0;
    VoxelGrid gradient;  ///< with respect to theta
};

/// Photometric L1 over the given rays plus lambda_tv * TV, evaluated at softplus(theta),
/// with the gradient chained back through softplus to theta.
ObjectiveResult objective(const VoxelGrid& theta, std::span<const Ray> rays, std::span<const double> targets,
                          const ReconConfig& config, std::size_t threads = 1);

struct ProgressEvent {
    std::size_t epoch = 0;
    std::size_t batch = 0;
    double loss = 0.0;
};

using ProgressSink = std::function<void(const ProgressEvent&)>;

/**
 * Reconstructs LACs from projections: theta starts at zero, every epoch visits
 * all rays once in seeded random batches, and each batch takes one Adam step on
 * the objective with the epoch's learning rate. Returns softplus(theta).
 *
 * Throws std::invalid_argument for empty projections or an invalid config, and
 * DivergenceError when the loss or gradient becomes non-finite.
 */
VoxelGrid reconstruct(const ProjectionSet& projections, const GridShape& grid, const ReconConfig& config,
                      const ProgressSink& progress = {}, std::size_t threads = 1);

} // namespace voxrecon

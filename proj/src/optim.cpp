#include "voxrecon/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "voxrecon/errors.hpp"

namespace voxrecon {

namespace {

double sign(double x) { return (x > 0.0) - (x < 0.0); }

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Unbiased draw from [0, bound) by rejection; bound > 0.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t x = rng();
        if (x >= threshold)
            return x % bound;
    }
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

} // namespace

ReconConfig ReconConfig::defaults_for(RendererKind renderer) {
    ReconConfig c;
    c.renderer = renderer;
    c.lambda_tv = renderer == RendererKind::siddon ? 25.0 : 15.0;
    return c;
}

void ReconConfig::validate() const {
    if (!(lambda_tv >= 0.0) || !std::isfinite(lambda_tv))
        throw std::invalid_argument("lambda_tv must be a finite value >= 0");
    if (iterations < 1)
        throw std::invalid_argument("iterations must be >= 1");
    if (!(lr_initial > 0.0) || !std::isfinite(lr_initial))
        throw std::invalid_argument("lr_initial must be positive");
    if (batch_rays < 1)
        throw std::invalid_argument("batch_rays must be >= 1");
    if (renderer == RendererKind::trilinear && m_samples < 2)
        throw std::invalid_argument("m_samples must be >= 2");
    if (!(softplus_beta > 0.0) || !std::isfinite(softplus_beta))
        throw std::invalid_argument("softplus_beta must be positive");
    if (!(lac_unit > 0.0) || !std::isfinite(lac_unit))
        throw std::invalid_argument("lac_unit must be positive");
}

nlohmann::json to_json(const ReconConfig& c) {
    return nlohmann::json{
        {"renderer", std::string(to_string(c.renderer))},
        {"lambda_tv", c.lambda_tv},
        {"iterations", c.iterations},
        {"lr_initial", c.lr_initial},
        {"batch_rays", c.batch_rays},
        {"m_samples", c.m_samples},
        {"softplus_beta", c.softplus_beta},
        {"lac_unit", c.lac_unit},
        {"seed", c.seed},
    };
}

ReconConfig recon_config_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known{"renderer",   "lambda_tv", "iterations",    "lr_initial",
                                             "batch_rays", "m_samples", "softplus_beta", "lac_unit",
                                             "seed"};
    if (!j.is_object())
        throw std::invalid_argument("config JSON must be an object");
    for (const auto& item : j.items())
        if (!known.contains(item.key()))
            throw std::invalid_argument("unknown config field '" + item.key() + "'");
    try {
        const RendererKind kind = renderer_from_string(j.value("renderer", std::string("siddon")));
        ReconConfig c = ReconConfig::defaults_for(kind);
        c.lambda_tv = j.value("lambda_tv", c.lambda_tv);
        c.iterations = j.value("iterations", c.iterations);
        c.lr_initial = j.value("lr_initial", c.lr_initial);
        c.batch_rays = j.value("batch_rays", c.batch_rays);
        c.m_samples = j.value("m_samples", c.m_samples);
        c.softplus_beta = j.value("softplus_beta", c.softplus_beta);
        c.lac_unit = j.value("lac_unit", c.lac_unit);
        c.seed = j.value("seed", c.seed);
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed config JSON: ") + e.what());
    }
}

ProjectionSet::ProjectionSet(ScanGeometry g, std::vector<double> data) : geometry(std::move(g)), images(std::move(data)) {
    if (images.size() != geometry.total_rays())
        throw std::invalid_argument("projection data has " + std::to_string(images.size()) + " pixels, geometry needs " +
                                    std::to_string(geometry.total_rays()));
    if (!all_finite(images))
        throw std::invalid_argument("projection data contains non-finite values");
}

double softplus(double theta, double beta) {
    const double z = beta * theta;
    if (z > 30.0)
        return theta;
    if (z < -30.0)
        return std::max(std::exp(z) / beta, std::numeric_limits<double>::min());
    return std::log1p(std::exp(z)) / beta;
}

double softplus_derivative(double theta, double beta) {
    const double z = beta * theta;
    if (z >= 0.0)
        return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::vector<double> softplus(std::span<const double> theta, double beta) {
    std::vector<double> out(theta.size());
    std::transform(theta.begin(), theta.end(), out.begin(), [beta](double t) { return softplus(t, beta); });
    return out;
}

TvResult tv_norm(const VoxelGrid& grid) {
    const auto [nx, ny, nz] = grid.shape.dims;
    const std::size_t terms = (nx - 1) * ny * nz + nx * (ny - 1) * nz + nx * ny * (nz - 1);
    if (terms == 0)
        throw std::invalid_argument("total variation needs at least two voxels along one axis");

    TvResult out{0.0, VoxelGrid(grid.shape, 0.0)};
    const double* mu = grid.values.data();
    double* g = out.gradient.values.data();
    const std::size_t stride[3] = {1, nx, nx * ny};
    const std::size_t lim[3] = {nx, ny, nz};
    double sum = 0.0;
    for (std::size_t k = 0; k < nz; ++k)
        for (std::size_t j = 0; j < ny; ++j)
            for (std::size_t i = 0; i < nx; ++i) {
                const std::size_t c = grid.shape.index(i, j, k);
                const std::size_t pos[3] = {i, j, k};
                for (int a = 0; a < 3; ++a) {
                    if (pos[a] + 1 >= lim[a])
                        continue;
                    const std::size_t nb = c + stride[a];
                    const double diff = mu[nb] - mu[c];
                    sum += std::abs(diff);
                    const double s = sign(diff);
                    g[nb] += s;
                    g[c] -= s;
                }
            }
    const double inv = 1.0 / static_cast<double>(terms);
    out.value = sum * inv;
    for (double& v : out.gradient.values)
        v *= inv;
    return out;
}

LossResult photometric_loss(std::span<const double> predicted, std::span<const double> target) {
    if (predicted.size() != target.size())
        throw std::invalid_argument("photometric_loss: " + std::to_string(predicted.size()) + " predictions vs " +
                                    std::to_string(target.size()) + " targets");
    LossResult out;
    out.gradient.resize(predicted.size());
    if (predicted.empty())
        return out;
    const double inv = 1.0 / static_cast<double>(predicted.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double r = predicted[i] - target[i];
        sum += std::abs(r);
        out.gradient[i] = sign(r) * inv;
    }
    out.value = sum * inv;
    return out;
}

std::vector<std::vector<std::size_t>> sample_batches(std::size_t total_rays, std::size_t batch_rays,
                                                     std::uint64_t seed) {
    if (batch_rays < 1)
        throw std::invalid_argument("batch_rays must be >= 1");
    std::vector<std::size_t> perm(total_rays);
    for (std::size_t i = 0; i < total_rays; ++i)
        perm[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = total_rays; i > 1; --i)
        std::swap(perm[i - 1], perm[bounded(rng, i)]);

    std::vector<std::vector<std::size_t>> batches;
    batches.reserve((total_rays + batch_rays - 1) / batch_rays);
    for (std::size_t begin = 0; begin < total_rays; begin += batch_rays) {
        const std::size_t end = std::min(total_rays, begin + batch_rays);
        batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(begin),
                             perm.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

double lr_at(std::size_t step, std::size_t total_steps, double lr_initial) {
    if (step >= total_steps)
        throw std::invalid_argument("lr_at: step " + std::to_string(step) + " outside schedule of " +
                                    std::to_string(total_steps) + " steps");
    return lr_initial * (1.0 - static_cast<double>(step) / static_cast<double>(total_steps));
}

ReconState::ReconState(const GridShape& shape)
    : theta(shape, 0.0), adam_m(shape.size(), 0.0), adam_v(shape.size(), 0.0) {}

void adam_step(ReconState& state, std::span<const double> grad, double lr, const AdamParams& params) {
    const std::size_t n = state.theta.size();
    if (grad.size() != n || state.adam_m.size() != n || state.adam_v.size() != n)
        throw std::invalid_argument("adam_step: gradient has " + std::to_string(grad.size()) +
                                    " entries, parameters have " + std::to_string(n));
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(params.beta1, t);
    const double c2 = 1.0 - std::pow(params.beta2, t);
    double* theta = state.theta.values.data();
    double* m = state.adam_m.data();
    double* v = state.adam_v.data();
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = params.beta1 * m[i] + (1.0 - params.beta1) * grad[i];
        v[i] = params.beta2 * v[i] + (1.0 - params.beta2) * grad[i] * grad[i];
        const double m_hat = m[i] / c1;
        const double v_hat = v[i] / c2;
        theta[i] -= lr * m_hat / (std::sqrt(v_hat) + params.eps);
    }
}

ObjectiveResult objective(const VoxelGrid& theta, std::span<const Ray> rays, std::span<const double> targets,
                          const ReconConfig& config, std::size_t threads) {
    if (rays.size() != targets.size())
        throw std::invalid_argument("objective: rays and targets differ in length");
    const double beta = config.softplus_beta;
    const double unit = config.lac_unit;
    VoxelGrid mu(theta.shape, softplus(theta.values, beta));
    for (double& v : mu.values)
        v *= unit;

    const RenderResult pred = render(config.renderer, mu, rays, config.m_samples, threads);
    const LossResult loss = photometric_loss(pred.intensities, targets);
    VoxelGrid grad = render_adjoint(config.renderer, theta.shape, rays, config.m_samples, loss.gradient, threads);

    ObjectiveResult out;
    out.photometric = loss.value;
    if (config.lambda_tv > 0.0) {
        const TvResult tv = tv_norm(mu);
        out.tv = tv.value;
        for (std::size_t i = 0; i < grad.size(); ++i)
            grad.values[i] += config.lambda_tv * tv.gradient.values[i];
    }
    for (std::size_t i = 0; i < grad.size(); ++i)
        grad.values[i] *= unit * softplus_derivative(theta.values[i], beta);
    out.value = out.photometric + config.lambda_tv * out.tv;
    out.gradient = std::move(grad);
    return out;
}

VoxelGrid reconstruct(const ProjectionSet& projections, const GridShape& grid, const ReconConfig& config,
                      const ProgressSink& progress, std::size_t threads) {
    if (projections.images.empty())
        throw std::invalid_argument("reconstruct: no projection data");
    config.validate();
    grid.validate();

    const ScanGeometry& geom = projections.geometry;
    ReconState state(grid);
    std::vector<Ray> rays;
    std::vector<double> targets;

    for (std::size_t epoch = 0; epoch < config.iterations; ++epoch) {
        const double lr = lr_at(epoch, config.iterations, config.lr_initial);
        const auto batches = sample_batches(geom.total_rays(), config.batch_rays, splitmix64(config.seed ^ splitmix64(epoch)));
        for (std::size_t b = 0; b < batches.size(); ++b) {
            rays.clear();
            targets.clear();
            for (std::size_t idx : batches[b]) {
                rays.push_back(ray_for_index(geom, idx));
                targets.push_back(projections.images[idx]);
            }
            ObjectiveResult obj = objective(state.theta, rays, targets, config, threads);
            if (!std::isfinite(obj.value) || !all_finite(obj.gradient.values)) {
                std::ostringstream msg;
                msg << "non-finite " << (std::isfinite(obj.value) ? "gradient" : "loss") << " at epoch " << epoch
                    << ", batch " << b;
                throw DivergenceError(epoch, b, msg.str());
            }
            if (progress)
                progress({epoch, b, obj.value});
            adam_step(state, obj.gradient.values, lr);
        }
    }
    VoxelGrid mu(grid, softplus(state.theta.values, config.softplus_beta));
    for (double& v : mu.values)
        v *= config.lac_unit;
    return mu;
}

} // namespace voxrecon

#include "voxrecon/phantoms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace voxrecon {

namespace {

// Portable uniform in [0, 1): the top 53 bits of the engine output.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

double half_extent(const GridShape& shape) {
    const Vec3 e = shape.extent();
    return 0.5 * std::min({e.x, e.y, e.z});
}

Vec3 grid_center(const GridShape& shape) { return shape.origin + 0.5 * shape.extent(); }

constexpr double kBodyLac = 0.05;

std::vector<Ball> spheres_layout(const GridShape& shape, std::uint64_t seed) {
    const double r = half_extent(shape);
    const Vec3 c = grid_center(shape);
    const double body = 0.8 * r;
    std::vector<Ball> balls{{c, body, kBodyLac}};

    std::mt19937_64 rng(seed);
    std::vector<Ball> inner;
    const std::size_t wanted = 5;
    for (int attempt = 0; attempt < 10000 && inner.size() < wanted; ++attempt) {
        const double radius = uniform(rng, 0.14, 0.28) * r;
        const Vec3 p{uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)};
        const Vec3 center = c + (body - radius - 0.05 * r) * p;
        if (norm(center - c) + radius > body - 0.05 * r)
            continue;
        const bool clear = std::all_of(inner.begin(), inner.end(), [&](const Ball& b) {
            return norm(b.center - center) > b.radius + radius + 0.08 * r;
        });
        if (!clear)
            continue;
        const double lac = uniform(rng, 0.065, 0.1);
        inner.push_back({center, radius, lac - kBodyLac});
    }
    balls.insert(balls.end(), inner.begin(), inner.end());
    return balls;
}

std::vector<Ball> shells_layout(const GridShape& shape) {
    const double r = half_extent(shape);
    const Vec3 c = grid_center(shape);
    const double radii[] = {0.85, 0.7, 0.55, 0.4, 0.25};
    const double lacs[] = {0.06, 0.02, 0.06, 0.02, 0.06};
    std::vector<Ball> balls;
    double outside = 0.0;
    for (int i = 0; i < 5; ++i) {
        balls.push_back({c, radii[i] * r, lacs[i] - outside});
        outside = lacs[i];
    }
    return balls;
}

void paint_balls(VoxelGrid& grid, const std::vector<Ball>& balls, int supersample) {
    const GridShape& s = grid.shape;
    const int ss = std::max(1, supersample);
    const double inv = 1.0 / static_cast<double>(ss * ss * ss);
    for (std::size_t k = 0; k < s.dims[2]; ++k)
        for (std::size_t j = 0; j < s.dims[1]; ++j)
            for (std::size_t i = 0; i < s.dims[0]; ++i) {
                double acc = 0.0;
                for (const Ball& b : balls) {
                    const Vec3 vc = s.voxel_center(i, j, k);
                    const double half_diag = 0.5 * norm(s.spacing);
                    const double dist = norm(vc - b.center);
                    if (dist - half_diag >= b.radius)
                        continue;
                    if (dist + half_diag <= b.radius) {
                        acc += b.weight;
                        continue;
                    }
                    int inside = 0;
                    for (int c = 0; c < ss; ++c)
                        for (int bb = 0; bb < ss; ++bb)
                            for (int a = 0; a < ss; ++a) {
                                const Vec3 p{s.origin.x + (static_cast<double>(i) + (a + 0.5) / ss) * s.spacing.x,
                                             s.origin.y + (static_cast<double>(j) + (bb + 0.5) / ss) * s.spacing.y,
                                             s.origin.z + (static_cast<double>(k) + (c + 0.5) / ss) * s.spacing.z};
                                inside += norm(p - b.center) < b.radius;
                            }
                    acc += b.weight * inside * inv;
                }
                grid.at(i, j, k) = std::clamp(acc, 0.0, 0.1);
            }
}

void paint_smooth_noise(VoxelGrid& grid, std::uint64_t seed) {
    const GridShape& s = grid.shape;
    std::mt19937_64 rng(seed);
    struct Wave {
        double f[3];
        double phase;
        double amp;
    };
    std::vector<Wave> waves(6);
    double amp_sum = 0.0;
    for (Wave& w : waves) {
        for (double& f : w.f)
            f = std::floor(uniform(rng, -2.0, 3.0));
        w.phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
        w.amp = uniform(rng, 0.3, 1.0);
        amp_sum += w.amp;
    }
    const Vec3 e = s.extent();
    const Vec3 c = s.origin + 0.5 * e;
    const double R = 0.5 * std::min({e.x, e.y, e.z});
    for (std::size_t k = 0; k < s.dims[2]; ++k)
        for (std::size_t j = 0; j < s.dims[1]; ++j)
            for (std::size_t i = 0; i < s.dims[0]; ++i) {
                // flat out to 0.5 R, cosine-squared roll-off to zero at 0.9 R
                const double r = norm(s.voxel_center(i, j, k) - c) / R;
                if (r >= 0.9)
                    continue;
                const double window = r <= 0.5 ? 1.0 : std::pow(std::cos(0.5 * std::numbers::pi * (r - 0.5) / 0.4), 2);
                const Vec3 p = s.voxel_center(i, j, k) - s.origin;
                double v = 0.0;
                for (const Wave& w : waves)
                    v += w.amp * std::cos(2.0 * std::numbers::pi * (w.f[0] * p.x / e.x + w.f[1] * p.y / e.y + w.f[2] * p.z / e.z) +
                                          w.phase);
                grid.at(i, j, k) = window * (0.05 + 0.045 * v / amp_sum);
            }
}

void paint_shell_filaments(VoxelGrid& grid, std::uint64_t seed, int supersample) {
    const GridShape& s = grid.shape;
    const double r = half_extent(s);
    const Vec3 c = grid_center(s);
    constexpr double shell = 0.08, kernel = 0.015, filament = 0.06;
    paint_balls(grid, {{c, 0.85 * r, shell}, {c, 0.72 * r, kernel - shell}}, supersample);

    // curve shape depends only on the seed and the physical extent, not on the voxel size
    std::mt19937_64 rng(seed);
    const double thickness = r / 36.0;
    const double step = r / 64.0;
    for (int f = 0; f < 10; ++f) {
        Vec3 p = c + 0.55 * r * Vec3{uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)};
        Vec3 dir{uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)};
        dir = (1.0 / std::max(norm(dir), 1e-9)) * dir;
        const int steps = 80;
        for (int t = 0; t < steps && norm(p - c) < 0.7 * r; ++t) {
            // stamp voxels whose centers lie within `thickness` of p
            const long lo[3] = {static_cast<long>(std::floor((p.x - thickness - s.origin.x) / s.spacing.x)),
                                static_cast<long>(std::floor((p.y - thickness - s.origin.y) / s.spacing.y)),
                                static_cast<long>(std::floor((p.z - thickness - s.origin.z) / s.spacing.z))};
            const long hi[3] = {static_cast<long>(std::floor((p.x + thickness - s.origin.x) / s.spacing.x)),
                                static_cast<long>(std::floor((p.y + thickness - s.origin.y) / s.spacing.y)),
                                static_cast<long>(std::floor((p.z + thickness - s.origin.z) / s.spacing.z))};
            for (long k = std::max(0L, lo[2]); k <= std::min<long>(hi[2], static_cast<long>(s.dims[2]) - 1); ++k)
                for (long j = std::max(0L, lo[1]); j <= std::min<long>(hi[1], static_cast<long>(s.dims[1]) - 1); ++j)
                    for (long i = std::max(0L, lo[0]); i <= std::min<long>(hi[0], static_cast<long>(s.dims[0]) - 1); ++i)
                        if (norm(s.voxel_center(i, j, k) - p) <= thickness) {
                            double& v = grid.at(i, j, k);
                            v = std::max(v, filament);
                        }
            Vec3 turn{uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)};
            dir = dir + 0.15 * turn;
            dir = (1.0 / norm(dir)) * dir;
            p = p + step * dir;
        }
    }
}

} // namespace

std::string_view to_string(PhantomKind kind) {
    switch (kind) {
    case PhantomKind::uniform: return "uniform";
    case PhantomKind::spheres: return "spheres";
    case PhantomKind::shells: return "shells";
    case PhantomKind::smooth_noise: return "smooth_noise";
    case PhantomKind::shell_filaments: return "shell_filaments";
    }
    return "unknown";
}

PhantomKind phantom_from_string(std::string_view name) {
    for (PhantomKind k : {PhantomKind::uniform, PhantomKind::spheres, PhantomKind::shells, PhantomKind::smooth_noise,
                          PhantomKind::shell_filaments})
        if (name == to_string(k))
            return k;
    throw std::invalid_argument("unknown phantom kind '" + std::string(name) + "'");
}

std::vector<Ball> analytic_balls(PhantomKind kind, const GridShape& shape, std::uint64_t seed) {
    switch (kind) {
    case PhantomKind::spheres: return spheres_layout(shape, seed);
    case PhantomKind::shells: return shells_layout(shape);
    default: return {};
    }
}

VoxelGrid make_phantom(PhantomKind kind, const GridShape& shape, std::uint64_t seed, const PhantomOptions& opts) {
    VoxelGrid grid(shape, 0.0);
    switch (kind) {
    case PhantomKind::uniform:
        std::fill(grid.values.begin(), grid.values.end(), opts.uniform_value);
        break;
    case PhantomKind::spheres:
    case PhantomKind::shells:
        paint_balls(grid, analytic_balls(kind, shape, seed), opts.supersample);
        break;
    case PhantomKind::smooth_noise:
        paint_smooth_noise(grid, seed);
        break;
    case PhantomKind::shell_filaments:
        paint_shell_filaments(grid, seed, opts.supersample);
        break;
    }
    return grid;
}

double chord_length(const Ball& ball, const Ray& ray) {
    const Vec3 d = ray.direction();
    const Vec3 f = ray.source - ball.center;
    const double a = dot(d, d);
    const double b = dot(f, d);
    const double c = dot(f, f) - ball.radius * ball.radius;
    const double disc = b * b - a * c;
    if (disc <= 0.0)
        return 0.0;
    const double root = std::sqrt(disc);
    const double t0 = std::max(0.0, (-b - root) / a);
    const double t1 = std::min(1.0, (-b + root) / a);
    return t1 > t0 ? (t1 - t0) * std::sqrt(a) : 0.0;
}

double analytic_line_integral(const std::vector<Ball>& balls, const Ray& ray) {
    double sum = 0.0;
    for (const Ball& b : balls)
        sum += b.weight * chord_length(b, ray);
    return sum;
}

} // namespace voxrecon

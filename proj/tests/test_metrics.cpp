#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "test_support.hpp"
#include "voxrecon/errors.hpp"
#include "voxrecon/metrics.hpp"

using namespace voxrecon;
using namespace voxrecon::test;

namespace {

// Direct summation over every valid window with centered (two-pass) moments.
double ssim_oracle(const VoxelGrid& a, const VoxelGrid& b, double L, std::size_t w) {
    const auto [nx, ny, nz] = a.shape.dims;
    const std::size_t wz = nz == 1 ? 1 : w;
    const double c1 = (0.01 * L) * (0.01 * L), c2 = (0.03 * L) * (0.03 * L);
    double total = 0.0;
    std::size_t windows = 0;
    for (std::size_t z0 = 0; z0 + wz <= nz; ++z0)
        for (std::size_t y0 = 0; y0 + w <= ny; ++y0)
            for (std::size_t x0 = 0; x0 + w <= nx; ++x0) {
                double ma = 0, mb = 0;
                const double n = static_cast<double>(w * w * wz);
                for (std::size_t z = z0; z < z0 + wz; ++z)
                    for (std::size_t y = y0; y < y0 + w; ++y)
                        for (std::size_t x = x0; x < x0 + w; ++x) {
                            ma += a.at(x, y, z);
                            mb += b.at(x, y, z);
                        }
                ma /= n;
                mb /= n;
                double va = 0, vb = 0, cab = 0;
                for (std::size_t z = z0; z < z0 + wz; ++z)
                    for (std::size_t y = y0; y < y0 + w; ++y)
                        for (std::size_t x = x0; x < x0 + w; ++x) {
                            const double da = a.at(x, y, z) - ma, db = b.at(x, y, z) - mb;
                            va += da * da;
                            vb += db * db;
                            cab += da * db;
                        }
                va /= n;
                vb /= n;
                cab /= n;
                total += (2 * ma * mb + c1) * (2 * cab + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                ++windows;
            }
    return total / static_cast<double>(windows);
}

double pcc_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

const GridShape cube16{{16, 16, 16}, {1, 1, 1}, {0, 0, 0}};

} // namespace

TEST_CASE("mse: trivial cases and oracle") {
    const std::vector<double> z{0, 0}, o{1, 1};
    CHECK(mse(FieldView::image(2, 1, z), FieldView::image(2, 1, z)) == 0.0);
    CHECK(mse(FieldView::image(2, 1, z), FieldView::image(2, 1, o)) == 1.0);

    std::mt19937_64 rng(1);
    const VoxelGrid a = random_grid(cube16, rng), b = random_grid(cube16, rng);
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
    CHECK(rel_diff(mse(FieldView::of(a), FieldView::of(b)), s / a.size()) < 1e-12);
}

TEST_CASE("metrics: shape mismatch throws") {
    const std::vector<double> v(12, 1.0);
    const FieldView a{{3, 4, 1}, v}, b{{4, 3, 1}, v};
    CHECK_THROWS_AS(mse(a, b), std::invalid_argument);
    CHECK_THROWS_AS(psnr(a, b, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(pcc(a, b), std::invalid_argument);
    CHECK_THROWS_AS(ssim(a, b, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(evaluate(a, b), std::invalid_argument);
}

TEST_CASE("psnr: arithmetic, identity and peak validation") {
    const std::vector<double> z{0, 0}, o{1, 1}, c{0.01, 0.01};
    const FieldView fz = FieldView::image(2, 1, z);
    CHECK(psnr(fz, FieldView::image(2, 1, o), 1.0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(psnr(fz, FieldView::image(2, 1, c), 1.0) == doctest::Approx(40.0).epsilon(1e-12));
    CHECK(psnr(fz, fz, 1.0) == std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(psnr(fz, fz, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(psnr(fz, fz, -1.0), std::invalid_argument);
}

TEST_CASE("pcc: sign and affine invariance") {
    std::mt19937_64 rng(2);
    const VoxelGrid a = random_grid(cube16, rng), b = random_grid(cube16, rng);
    VoxelGrid neg = a, aff = a;
    for (double& v : neg.values)
        v = -v;
    for (double& v : aff.values)
        v = 2 * v + 3;
    CHECK(pcc(FieldView::of(a), FieldView::of(a)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pcc(FieldView::of(a), FieldView::of(neg)) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(pcc(FieldView::of(a), FieldView::of(aff)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rel_diff(pcc(FieldView::of(a), FieldView::of(b)), pcc_oracle(a.values, b.values)) < 1e-10);
    CHECK(pcc(FieldView::of(a), FieldView::of(b)) == doctest::Approx(pcc(FieldView::of(b), FieldView::of(a))).epsilon(1e-14));

    const VoxelGrid flat(cube16, 0.3);
    CHECK_THROWS_AS(pcc(FieldView::of(flat), FieldView::of(a)), UndefinedMetricError);
    CHECK_THROWS_AS(pcc(FieldView::of(a), FieldView::of(flat)), UndefinedMetricError);
}

TEST_CASE("ssim: identity and the constant-field closed form") {
    std::mt19937_64 rng(3);
    const VoxelGrid a = random_grid(cube16, rng);
    CHECK(ssim(FieldView::of(a), FieldView::of(a), 1.0) == doctest::Approx(1.0).epsilon(1e-12));

    const GridShape s8{{8, 8, 8}, {1, 1, 1}, {0, 0, 0}};
    const VoxelGrid zero(s8, 0.0), one(s8, 1.0);
    const double c1 = 1e-4;
    CHECK(ssim(FieldView::of(zero), FieldView::of(one), 1.0) == doctest::Approx(c1 / (1 + c1)).epsilon(1e-12));
}

TEST_CASE("ssim: matches direct summation on random volumes and images") {
    std::mt19937_64 rng(4);
    const VoxelGrid a = random_grid(cube16, rng);
    VoxelGrid b = a;
    for (double& v : b.values)
        v += uniform(rng, -0.3, 0.3);
    const double got = ssim(FieldView::of(a), FieldView::of(b), 1.0);
    CHECK(std::abs(got - ssim_oracle(a, b, 1.0, 7)) < 1e-9);
    CHECK(std::abs(got - ssim(FieldView::of(b), FieldView::of(a), 1.0)) < 1e-12);

    const GridShape img{{23, 11, 1}, {1, 1, 1}, {0, 0, 0}};
    const VoxelGrid p = random_grid(img, rng), q = random_grid(img, rng, -0.5, 2.0);
    CHECK(std::abs(ssim(FieldView::of(p), FieldView::of(q), 2.5) - ssim_oracle(p, q, 2.5, 7)) < 1e-9);

    // large offsets stress the one-pass moment sums
    VoxelGrid ao = a, bo = b;
    for (double& v : ao.values)
        v += 100.0;
    for (double& v : bo.values)
        v += 100.0;
    CHECK(std::abs(ssim(FieldView::of(ao), FieldView::of(bo), 1.0) - ssim_oracle(ao, bo, 1.0, 7)) < 1e-9);
}

TEST_CASE("ssim: windows must fit and the range must be positive") {
    const std::vector<double> v(6 * 9, 0.5);
    const FieldView small{{6, 9, 1}, v};
    CHECK_THROWS_AS(ssim(small, small, 1.0), std::invalid_argument);
    const std::vector<double> w(7 * 7 * 6, 0.5);
    const FieldView thin{{7, 7, 6}, w};
    CHECK_THROWS_AS(ssim(thin, thin, 1.0), std::invalid_argument);
    const std::vector<double> u(49, 0.5);
    CHECK_THROWS_AS(ssim(FieldView::image(7, 7, u), FieldView::image(7, 7, u), 0.0), std::invalid_argument);
}

TEST_CASE("evaluate: peak and range come from the reference") {
    std::mt19937_64 rng(5);
    const VoxelGrid ref = random_grid(cube16, rng, 0.0, 0.1);
    VoxelGrid test = ref;
    for (double& v : test.values)
        v += uniform(rng, -0.01, 0.01);
    double lo = ref.values[0], hi = ref.values[0];
    for (double v : ref.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const MetricReport r = evaluate(FieldView::of(ref), FieldView::of(test));
    CHECK(r.mse == mse(FieldView::of(ref), FieldView::of(test)));
    CHECK(r.psnr == psnr(FieldView::of(ref), FieldView::of(test), hi));
    CHECK(r.pcc == pcc(FieldView::of(ref), FieldView::of(test)));
    CHECK(r.ssim == ssim(FieldView::of(ref), FieldView::of(test), hi - lo));
    CHECK(evaluate(FieldView::of(ref), FieldView::of(test), 1.0).ssim == ssim(FieldView::of(ref), FieldView::of(test), 1.0));
}

TEST_CASE("evaluate: json with an infinite psnr") {
    std::mt19937_64 rng(6);
    const VoxelGrid ref = random_grid(cube16, rng);
    const nlohmann::json j = to_json(evaluate(FieldView::of(ref), FieldView::of(ref)));
    CHECK(j.at("psnr") == "inf");
    CHECK(j.at("mse").get<double>() == 0.0);
    CHECK(j.at("ssim").get<double>() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(j.at("pcc").get<double>() == doctest::Approx(1.0).epsilon(1e-12));

    MetricReport finite{0.5, 20.0, 0.01, 0.9};
    CHECK(to_json(finite).at("psnr").get<double>() == 20.0);
}

#include "voxrecon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "voxrecon/errors.hpp"

namespace voxrecon {

namespace {

void require_same_shape(const FieldView& a, const FieldView& b) {
    if (a.dims != b.dims || a.values.size() != b.values.size())
        throw std::invalid_argument("metric inputs differ in shape");
    if (a.values.size() != a.dims[0] * a.dims[1] * a.dims[2])
        throw std::invalid_argument("metric input size does not match its dims");
    if (a.values.empty())
        throw std::invalid_argument("metric inputs are empty");
}

// In-place sliding sum of `w` consecutive samples along one axis; the axis
// shrinks from n to n - w + 1 (valid windows only).
std::vector<double> box_sum_axis(const std::vector<double>& in, Dims& dims, int axis, std::size_t w) {
    if (w == 1)
        return in;
    Dims out_dims = dims;
    out_dims[axis] = dims[axis] - w + 1;
    std::vector<double> out(out_dims[0] * out_dims[1] * out_dims[2]);
    const std::size_t in_stride[3] = {1, dims[0], dims[0] * dims[1]};
    for (std::size_t k = 0; k < out_dims[2]; ++k)
        for (std::size_t j = 0; j < out_dims[1]; ++j)
            for (std::size_t i = 0; i < out_dims[0]; ++i) {
                const std::size_t base = i + dims[0] * (j + dims[1] * k);
                double s = 0.0;
                for (std::size_t t = 0; t < w; ++t)
                    s += in[base + t * in_stride[axis]];
                out[i + out_dims[0] * (j + out_dims[1] * k)] = s;
            }
    dims = out_dims;
    return out;
}

std::vector<double> window_sums(std::vector<double> field, Dims dims, const std::size_t window[3]) {
    for (int a = 0; a < 3; ++a)
        field = box_sum_axis(field, dims, a, window[a]);
    return field;
}

} // namespace

double mse(FieldView reference, FieldView test) {
    require_same_shape(reference, test);
    double sum = 0.0;
    for (std::size_t i = 0; i < reference.values.size(); ++i) {
        const double d = reference.values[i] - test.values[i];
        sum += d * d;
    }
    return sum / static_cast<double>(reference.values.size());
}

double psnr(FieldView reference, FieldView test, double peak) {
    if (!(peak > 0.0))
        throw std::invalid_argument("psnr peak must be positive");
    const double e = mse(reference, test);
    if (e == 0.0)
        return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / e);
}

double pcc(FieldView reference, FieldView test) {
    require_same_shape(reference, test);
    auto constant = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
    };
    if (constant(reference.values) || constant(test.values))
        throw UndefinedMetricError("pcc is undefined for a constant field");
    const double n = static_cast<double>(reference.values.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < reference.values.size(); ++i) {
        ma += reference.values[i];
        mb += test.values[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < reference.values.size(); ++i) {
        const double da = reference.values[i] - ma;
        const double db = test.values[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    return sab / std::sqrt(saa * sbb);
}

double ssim(FieldView reference, FieldView test, double dynamic_range) {
    require_same_shape(reference, test);
    if (!(dynamic_range > 0.0))
        throw std::invalid_argument("ssim dynamic range must be positive");
    const bool image = reference.dims[2] == 1;
    const std::size_t window[3] = {kSsimWindow, kSsimWindow, image ? 1 : kSsimWindow};
    for (int a = 0; a < 3; ++a)
        if (reference.dims[a] < window[a])
            throw std::invalid_argument("ssim needs every dimension >= " + std::to_string(kSsimWindow) + " (got " +
                                        std::to_string(reference.dims[a]) + ")");

    const std::size_t n = reference.values.size();
    std::vector<double> a(reference.values.begin(), reference.values.end());
    std::vector<double> b(test.values.begin(), test.values.end());
    std::vector<double> aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    const auto sa = window_sums(std::move(a), reference.dims, window);
    const auto sb = window_sums(std::move(b), reference.dims, window);
    const auto saa = window_sums(std::move(aa), reference.dims, window);
    const auto sbb = window_sums(std::move(bb), reference.dims, window);
    const auto sab = window_sums(std::move(ab), reference.dims, window);

    const double count = static_cast<double>(window[0] * window[1] * window[2]);
    const double c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
    const double c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);
    double total = 0.0;
    for (std::size_t w = 0; w < sa.size(); ++w) {
        const double mu_a = sa[w] / count;
        const double mu_b = sb[w] / count;
        const double var_a = saa[w] / count - mu_a * mu_a;
        const double var_b = sbb[w] / count - mu_b * mu_b;
        const double cov = sab[w] / count - mu_a * mu_b;
        total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                 ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
    }
    return total / static_cast<double>(sa.size());
}

MetricReport evaluate(FieldView reference, FieldView test, std::optional<double> dynamic_range) {
    require_same_shape(reference, test);
    const auto [lo, hi] = std::minmax_element(reference.values.begin(), reference.values.end());
    MetricReport r;
    r.mse = mse(reference, test);
    r.psnr = psnr(reference, test, *hi);
    r.pcc = pcc(reference, test);
    r.ssim = ssim(reference, test, dynamic_range.value_or(*hi - *lo));
    return r;
}

nlohmann::json to_json(const MetricReport& report) {
    nlohmann::json j{{"ssim", report.ssim}, {"mse", report.mse}, {"pcc", report.pcc}};
    if (std::isinf(report.psnr))
        j["psnr"] = "inf";
    else
        j["psnr"] = report.psnr;
    return j;
}

} // namespace voxrecon

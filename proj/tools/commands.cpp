#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "png_export.hpp"
#include "voxrecon/errors.hpp"
#include "voxrecon/io.hpp"
#include "voxrecon/metrics.hpp"
#include "voxrecon/optim.hpp"
#include "voxrecon/parallel.hpp"
#include "voxrecon/phantoms.hpp"
#include "voxrecon/renderer.hpp"

namespace voxrecon::cli {

namespace {

struct PhantomArgs {
    std::string kind;
    std::vector<std::size_t> dims;
    std::vector<double> spacing{0.5, 0.5, 0.5};
    std::uint64_t seed = 0;
    double value = 0.05;
    std::string out;
    std::string dtype = "f32";
};

struct RenderArgs {
    std::string volume;
    std::string geometry;
    std::optional<std::size_t> views;
    double angle_offset = 0.0;
    std::string renderer = "siddon";
    std::size_t m_samples = 500;
    std::string out;
    std::string dtype = "f32";
};

struct ReconstructArgs {
    std::string projections;
    std::vector<std::size_t> dims;
    std::vector<double> spacing;
    std::string config;
    std::optional<std::string> renderer;
    std::optional<double> lambda_tv;
    std::optional<std::size_t> iterations;
    std::optional<double> lr;
    std::optional<std::size_t> batch_rays;
    std::optional<std::size_t> m_samples;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string progress_csv;
    std::string dtype = "f32";
};

struct EvaluateArgs {
    std::string test;
    std::string reference;
    std::optional<double> dynamic_range;
    std::optional<std::size_t> slice;
    std::string axis = "z";
    std::string png;
};

GridShape shape_from(const std::vector<std::size_t>& dims, const std::vector<double>& spacing) {
    if (dims.size() != 3 || spacing.size() != 3)
        throw std::invalid_argument("--dims and --spacing take three comma-separated values");
    return centered_shape({dims[0], dims[1], dims[2]}, {spacing[0], spacing[1], spacing[2]});
}

int cmd_phantom(const PhantomArgs& a, std::ostream& out) {
    const GridShape shape = shape_from(a.dims, a.spacing);
    PhantomOptions opts;
    opts.uniform_value = a.value;
    const VoxelGrid grid = make_phantom(phantom_from_string(a.kind), shape, a.seed, opts);
    io::write_volume(a.out, grid, io::dtype_from_string(a.dtype));
    out << "wrote " << a.kind << " phantom " << a.dims[0] << "x" << a.dims[1] << "x" << a.dims[2] << " to "
        << io::file_base(a.out).string() << "{" << io::kVolumeHeaderExt << "," << io::kVolumeRawExt << "}\n";
    return kOk;
}

int cmd_render(const RenderArgs& a, std::size_t threads, std::ostream& out) {
    const VoxelGrid volume = io::read_volume(a.volume);
    ScanGeometry geom = io::read_geometry(a.geometry);
    if (a.views) {
        if (*a.views == 0)
            throw std::invalid_argument("--views must be at least 1");
        geom = make_circular_orbit(*a.views, geom.params(), a.angle_offset);
    } else if (a.angle_offset != 0.0) {
        std::vector<double> angles = geom.view_angles();
        for (double& t : angles)
            t += a.angle_offset;
        geom = geom.with_angles(std::move(angles));
    }
    const RendererKind kind = renderer_from_string(a.renderer);
    std::vector<Ray> rays;
    rays.reserve(geom.total_rays());
    for (const IndexedRay& r : enumerate_rays(geom))
        rays.push_back(r.ray);
    RenderResult result = render(kind, volume, rays, a.m_samples, threads);
    io::write_projections(a.out, ProjectionSet(geom, std::move(result.intensities)), io::dtype_from_string(a.dtype));
    out << "rendered " << geom.n_views() << " views (" << geom.rows() << "x" << geom.cols() << ") with " << a.renderer
        << "\n";
    return kOk;
}

int cmd_reconstruct(const ReconstructArgs& a, std::size_t threads, std::ostream& out) {
    nlohmann::json cfg = a.config.empty() ? nlohmann::json::object() : io::read_json(a.config);
    if (!cfg.is_object())
        throw DataError(a.config + ": config must be a JSON object");
    if (a.renderer)
        cfg["renderer"] = *a.renderer;
    if (a.lambda_tv)
        cfg["lambda_tv"] = *a.lambda_tv;
    if (a.iterations)
        cfg["iterations"] = *a.iterations;
    if (a.lr)
        cfg["lr_initial"] = *a.lr;
    if (a.batch_rays)
        cfg["batch_rays"] = *a.batch_rays;
    if (a.m_samples)
        cfg["m_samples"] = *a.m_samples;
    if (a.seed)
        cfg["seed"] = *a.seed;
    ReconConfig config;
    try {
        config = recon_config_from_json(cfg);
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }

    const ProjectionSet projections = io::read_projections(a.projections);
    const GridShape shape = shape_from(a.dims, a.spacing);

    std::ofstream csv;
    if (!a.progress_csv.empty()) {
        csv.open(a.progress_csv, std::ios::trunc);
        if (!csv)
            throw DataError("cannot write " + a.progress_csv);
        csv << "epoch,batch,loss\n" << std::setprecision(17);
    }
    double last_loss = std::nan("");
    const auto t0 = std::chrono::steady_clock::now();
    const VoxelGrid result = reconstruct(
        projections, shape, config,
        [&](const ProgressEvent& e) {
            last_loss = e.loss;
            if (csv.is_open())
                csv << e.epoch << ',' << e.batch << ',' << e.loss << '\n';
        },
        threads);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    io::write_volume(a.out, result, io::dtype_from_string(a.dtype));
    out << "reconstructed with " << to_string(config.renderer) << " in " << seconds << " s, final batch loss "
        << last_loss << "\n";
    return kOk;
}

std::vector<double> extract_slice(const VoxelGrid& g, int axis, std::size_t index, std::size_t& width,
                                  std::size_t& height) {
    const auto [nx, ny, nz] = g.shape.dims;
    const std::size_t n_axis = g.shape.dims[axis];
    if (index >= n_axis)
        throw std::invalid_argument("--slice " + std::to_string(index) + " is outside the volume");
    std::vector<double> out;
    if (axis == 2) {
        width = nx, height = ny;
        for (std::size_t j = 0; j < ny; ++j)
            for (std::size_t i = 0; i < nx; ++i)
                out.push_back(g.at(i, j, index));
    } else if (axis == 1) {
        width = nx, height = nz;
        for (std::size_t k = 0; k < nz; ++k)
            for (std::size_t i = 0; i < nx; ++i)
                out.push_back(g.at(i, index, k));
    } else {
        width = ny, height = nz;
        for (std::size_t k = 0; k < nz; ++k)
            for (std::size_t j = 0; j < ny; ++j)
                out.push_back(g.at(index, j, k));
    }
    return out;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
    const VoxelGrid test = io::read_volume(a.test);
    const VoxelGrid reference = io::read_volume(a.reference);
    if (test.shape.dims != reference.shape.dims)
        throw DataError("test and reference volumes have different dims");
    nlohmann::json report;
    try {
        report = to_json(evaluate(FieldView::of(reference), FieldView::of(test), a.dynamic_range));
    } catch (const std::logic_error& e) {
        throw DataError(std::string("cannot evaluate: ") + e.what());
    }

    if (a.slice) {
        const int axis = a.axis == "x" ? 0 : (a.axis == "y" ? 1 : 2);
        std::size_t w = 0, h = 0;
        const auto ts = extract_slice(test, axis, *a.slice, w, h);
        const auto rs = extract_slice(reference, axis, *a.slice, w, h);
        const FieldView tv = FieldView::image(w, h, ts);
        const FieldView rv = FieldView::image(w, h, rs);
        nlohmann::json sl{{"axis", a.axis}, {"index", *a.slice}};
        const auto [lo, hi] = std::minmax_element(rs.begin(), rs.end());
        sl["mse"] = mse(rv, tv);
        try {
            sl["pcc"] = pcc(rv, tv);
        } catch (const UndefinedMetricError&) {
            sl["pcc"] = nullptr;
        }
        if (*hi > *lo && w >= kSsimWindow && h >= kSsimWindow)
            sl["ssim"] = ssim(rv, tv, a.dynamic_range.value_or(*hi - *lo));
        else
            sl["ssim"] = nullptr;
        report["slice"] = sl;
        if (!a.png.empty())
            write_png_gray8(a.png, w, h, ts);
    } else if (!a.png.empty()) {
        throw std::invalid_argument("--png requires --slice");
    }
    out << report.dump(2) << "\n";
    return kOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Voxelgrid cone-beam CT reconstruction by differentiable X-ray rendering"};
    app.require_subcommand(1);
    std::size_t threads = default_thread_count();
    app.add_option("--threads", threads, "Worker threads (results are bitwise stable for a fixed value)")
        ->check(CLI::PositiveNumber);

    PhantomArgs pa;
    auto* phantom = app.add_subcommand("phantom", "Write a synthetic phantom volume");
    phantom->add_option("--kind", pa.kind, "uniform | spheres | shells | smooth_noise | shell_filaments")->required();
    phantom->add_option("--dims", pa.dims, "nx,ny,nz")->delimiter(',')->required()->expected(3);
    phantom->add_option("--spacing", pa.spacing, "Voxel size in mm, sx,sy,sz")->delimiter(',')->expected(3);
    phantom->add_option("--seed", pa.seed, "Random seed");
    phantom->add_option("--value", pa.value, "LAC of the uniform phantom (mm^-1)");
    phantom->add_option("--dtype", pa.dtype, "f32 | f64");
    phantom->add_option("--out", pa.out, "Output base path (writes .volhdr.json and .vol.raw)")->required();

    RenderArgs ra;
    auto* render_cmd = app.add_subcommand("render", "Render projections of a volume on a circular orbit");
    render_cmd->add_option("--volume", ra.volume, "Input volume")->required();
    render_cmd->add_option("--geometry", ra.geometry, "Geometry JSON")->required();
    render_cmd->add_option("--views", ra.views, "Replace the geometry's angles with N equally spaced views");
    render_cmd->add_option("--angle-offset", ra.angle_offset, "Rotate all view angles by this many radians");
    render_cmd->add_option("--renderer", ra.renderer, "siddon | trilinear");
    render_cmd->add_option("--m-samples", ra.m_samples, "Samples per ray for trilinear");
    render_cmd->add_option("--dtype", ra.dtype, "f32 | f64");
    render_cmd->add_option("--out", ra.out, "Output base path (writes .projhdr.json and .proj.raw)")->required();

    ReconstructArgs ca;
    auto* recon_cmd = app.add_subcommand("reconstruct", "Reconstruct a volume from projections");
    recon_cmd->add_option("--projections", ca.projections, "Input projections")->required();
    recon_cmd->add_option("--dims", ca.dims, "nx,ny,nz")->delimiter(',')->required()->expected(3);
    recon_cmd->add_option("--spacing", ca.spacing, "sx,sy,sz in mm")->delimiter(',')->required()->expected(3);
    recon_cmd->add_option("--config", ca.config, "ReconConfig JSON");
    recon_cmd->add_option("--renderer", ca.renderer, "siddon | trilinear");
    recon_cmd->add_option("--lambda-tv", ca.lambda_tv, "TV weight");
    recon_cmd->add_option("--iterations", ca.iterations, "Epochs over all rays");
    recon_cmd->add_option("--lr", ca.lr, "Initial learning rate");
    recon_cmd->add_option("--batch-rays", ca.batch_rays, "Rays per batch");
    recon_cmd->add_option("--m-samples", ca.m_samples, "Samples per ray for trilinear");
    recon_cmd->add_option("--seed", ca.seed, "Batch sampling seed");
    recon_cmd->add_option("--dtype", ca.dtype, "f32 | f64");
    recon_cmd->add_option("--out", ca.out, "Output base path")->required();
    recon_cmd->add_option("--progress-csv", ca.progress_csv, "Write epoch,batch,loss per batch");

    EvaluateArgs ea;
    auto* eval_cmd = app.add_subcommand("evaluate", "Compare a volume against a reference (prints JSON)");
    eval_cmd->add_option("--test", ea.test, "Volume under test")->required();
    eval_cmd->add_option("--reference", ea.reference, "Reference volume")->required();
    eval_cmd->add_option("--dynamic-range", ea.dynamic_range, "SSIM dynamic range (default: reference max - min)");
    eval_cmd->add_option("--slice", ea.slice, "Also report metrics on this slice index");
    eval_cmd->add_option("--axis", ea.axis, "Slice axis x | y | z")->check(CLI::IsMember({"x", "y", "z"}));
    eval_cmd->add_option("--png", ea.png, "Write the test slice as an 8-bit grayscale PNG");

    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        if (phantom->parsed())
            return cmd_phantom(pa, out);
        if (render_cmd->parsed())
            return cmd_render(ra, threads, out);
        if (recon_cmd->parsed())
            return cmd_reconstruct(ca, threads, out);
        if (eval_cmd->parsed())
            return cmd_evaluate(ea, out);
    } catch (const DivergenceError& e) {
        err << "error: divergence at epoch " << e.epoch() << ", batch " << e.batch() << ": " << e.what() << "\n";
        return kDivergence;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kDataError;
    }
    return kUsageError;
}

} // namespace voxrecon::cli

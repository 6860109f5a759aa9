#include <doctest.h>

#include <fstream>
#include <iterator>
#include <sstream>

#include "commands.hpp"
#include "test_support.hpp"
#include "voxrecon/io.hpp"
#include "voxrecon/metrics.hpp"
#include "voxrecon/phantoms.hpp"

using namespace voxrecon;
using namespace voxrecon::test;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "voxrecon");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path with(const fs::path& base, std::string_view ext) { return base.string() + std::string(ext); }

// 20x20 detector covering a 16^3 grid of 0.5 mm voxels (8 mm) at magnification ~3.
fs::path small_geometry(const fs::path& dir) {
    OrbitParams p;
    p.detector_rows = 20;
    p.detector_cols = 20;
    p.pixel_pitch_u = 1.5;
    p.pixel_pitch_v = 1.5;
    const fs::path path = dir / "geometry.json";
    io::write_geometry(path, make_circular_orbit(1, p));
    return path;
}

std::vector<double> csv_losses(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    CHECK(line == "epoch,batch,loss");
    std::vector<double> losses;
    while (std::getline(in, line))
        losses.push_back(std::stod(line.substr(line.rfind(',') + 1)));
    return losses;
}

} // namespace

TEST_CASE("cli: help and usage errors") {
    CHECK(run_cli({"--help"}).code == cli::kOk);
    const Result none = run_cli({});
    CHECK(none.code == cli::kUsageError);
    CHECK(run_cli({"frobnicate"}).code == cli::kUsageError);
    CHECK(run_cli({"phantom", "--kind", "spheres"}).code == cli::kUsageError);
    CHECK(run_cli({"phantom", "--help"}).out.find("--spacing") != std::string::npos);
    CHECK(run_cli({"reconstruct", "--help"}).out.find("--progress-csv") != std::string::npos);
}

TEST_CASE("cli: phantom writes a deterministic file pair") {
    const fs::path dir = temp_dir("cli_phantom");
    const std::vector<std::string> args{"phantom", "--kind", "spheres", "--dims", "16,16,16", "--spacing",
                                        "0.5,0.5,0.5", "--seed", "7", "--out"};
    auto a = args, b = args;
    a.push_back((dir / "a").string());
    b.push_back((dir / "b").string());
    REQUIRE(run_cli(a).code == cli::kOk);
    REQUIRE(run_cli(b).code == cli::kOk);
    CHECK(fs::exists(with(dir / "a", io::kVolumeHeaderExt)));
    CHECK(slurp(with(dir / "a", io::kVolumeRawExt)) == slurp(with(dir / "b", io::kVolumeRawExt)));
    const VoxelGrid g = io::read_volume(dir / "a");
    CHECK(g.values == io::read_volume(dir / "b").values);
    const VoxelGrid direct = make_phantom(PhantomKind::spheres, centered_shape({16, 16, 16}, {0.5, 0.5, 0.5}), 7);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(g.values[i] == static_cast<double>(static_cast<float>(direct.values[i])));

    CHECK(run_cli({"phantom", "--kind", "banana", "--dims", "4,4,4", "--out", (dir / "c").string()}).code ==
          cli::kUsageError);
    CHECK(run_cli({"phantom", "--kind", "uniform", "--dims", "4,4", "--out", (dir / "c").string()}).code ==
          cli::kUsageError);
}

TEST_CASE("cli: render of the zero volume and view-count validation") {
    const fs::path dir = temp_dir("cli_render_zero");
    const fs::path geom = small_geometry(dir);
    REQUIRE(run_cli({"phantom", "--kind", "uniform", "--value", "0", "--dims", "8,8,8", "--out", (dir / "z").string()})
                .code == cli::kOk);
    for (const char* r : {"siddon", "trilinear"}) {
        REQUIRE(run_cli({"render", "--volume", (dir / "z").string(), "--geometry", geom.string(), "--views", "3",
                         "--renderer", r, "--out", (dir / "p").string()})
                    .code == cli::kOk);
        const ProjectionSet p = io::read_projections(dir / "p");
        CHECK(p.geometry.n_views() == 3);
        for (double v : p.images)
            CHECK(v == 0.0);
    }
    CHECK(run_cli({"render", "--volume", (dir / "z").string(), "--geometry", geom.string(), "--views", "0", "--out",
                   (dir / "p").string()})
              .code != cli::kOk);
    CHECK(run_cli({"render", "--volume", (dir / "missing").string(), "--geometry", geom.string(), "--out",
                   (dir / "p").string()})
              .code == cli::kDataError);
    CHECK(run_cli({"render", "--volume", (dir / "z").string(), "--geometry", (dir / "nope.json").string(), "--out",
                   (dir / "p").string()})
              .code == cli::kDataError);
}

TEST_CASE("cli: siddon and trilinear renders agree on a smooth phantom") {
    const fs::path dir = temp_dir("cli_render_smooth");
    const fs::path geom = small_geometry(dir);
    REQUIRE(run_cli({"phantom", "--kind", "smooth_noise", "--dims", "16,16,16", "--seed", "3", "--dtype", "f64",
                     "--out", (dir / "s").string()})
                .code == cli::kOk);
    for (const char* r : {"siddon", "trilinear"})
        REQUIRE(run_cli({"render", "--volume", (dir / "s").string(), "--geometry", geom.string(), "--views", "15",
                         "--renderer", r, "--dtype", "f64", "--out", (dir / r).string()})
                    .code == cli::kOk);
    const ProjectionSet a = io::read_projections(dir / "siddon");
    const ProjectionSet b = io::read_projections(dir / "trilinear");
    double sq = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < a.images.size(); ++i) {
        sq += (a.images[i] - b.images[i]) * (a.images[i] - b.images[i]);
        mean += a.images[i];
    }
    sq /= a.images.size();
    mean /= a.images.size();
    CHECK(mean > 0.0);
    CHECK(sq < 1e-4 * mean);
}

TEST_CASE("cli: reconstruct lowers the loss, is deterministic and writes progress") {
    const fs::path dir = temp_dir("cli_recon");
    const fs::path geom = small_geometry(dir);
    REQUIRE(run_cli({"phantom", "--kind", "uniform", "--dims", "16,16,16", "--out", (dir / "u").string()}).code ==
            cli::kOk);
    REQUIRE(run_cli({"render", "--volume", (dir / "u").string(), "--geometry", geom.string(), "--views", "8", "--out",
                     (dir / "proj").string()})
                .code == cli::kOk);
    std::vector<std::string> args{"--threads",     "2",     "reconstruct", "--projections", (dir / "proj").string(),
                                  "--dims",        "16,16,16", "--spacing", "0.5,0.5,0.5", "--lambda-tv",
                                  "0",             "--iterations", "50", "--batch-rays", "3200", "--seed", "5"};
    auto a = args, b = args;
    a.insert(a.end(), {"--out", (dir / "ra").string(), "--progress-csv", (dir / "ra.csv").string()});
    b.insert(b.end(), {"--out", (dir / "rb").string()});
    const Result ra = run_cli(a);
    REQUIRE(ra.code == cli::kOk);
    REQUIRE(run_cli(b).code == cli::kOk);
    CHECK(slurp(with(dir / "ra", io::kVolumeRawExt)) == slurp(with(dir / "rb", io::kVolumeRawExt)));

    const auto losses = csv_losses(dir / "ra.csv");
    REQUIRE(losses.size() == 50);
    CHECK(losses.back() * 100.0 <= losses.front());
}

TEST_CASE("cli: reconstruct config handling and divergence exit") {
    const fs::path dir = temp_dir("cli_recon_cfg");
    const fs::path geom = small_geometry(dir);
    REQUIRE(run_cli({"phantom", "--kind", "uniform", "--dims", "8,8,8", "--out", (dir / "u").string()}).code == cli::kOk);
    REQUIRE(run_cli({"render", "--volume", (dir / "u").string(), "--geometry", geom.string(), "--views", "2", "--out",
                     (dir / "proj").string()})
                .code == cli::kOk);
    const std::vector<std::string> base{"reconstruct", "--projections", (dir / "proj").string(), "--dims", "8,8,8",
                                        "--spacing", "0.5,0.5,0.5", "--iterations", "1", "--out",
                                        (dir / "r").string()};

    {
        std::ofstream(dir / "bad.json") << "{\"lambda_tv\": ";
        auto args = base;
        args.insert(args.end(), {"--config", (dir / "bad.json").string()});
        CHECK(run_cli(args).code == cli::kDataError);
    }
    {
        std::ofstream(dir / "unknown.json") << "{\"momentum\": 0.5}";
        auto args = base;
        args.insert(args.end(), {"--config", (dir / "unknown.json").string()});
        CHECK(run_cli(args).code == cli::kDataError);
    }
    {
        std::ofstream(dir / "ok.json") << "{\"renderer\": \"trilinear\", \"m_samples\": 20, \"iterations\": 1}";
        auto args = base;
        args.insert(args.end(), {"--config", (dir / "ok.json").string()});
        CHECK(run_cli(args).code == cli::kOk);
    }
    {
        auto args = base;
        args.insert(args.end(), {"--renderer", "cone"});
        CHECK(run_cli(args).code == cli::kDataError);
    }

    // finite projections whose residual sum overflows
    const ProjectionSet p = io::read_projections(dir / "proj");
    std::vector<double> huge(p.images.size());
    for (std::size_t i = 0; i < huge.size(); ++i)
        huge[i] = (i % 2 ? -1.0 : 1.0) * 1e308;
    io::write_projections(dir / "huge", ProjectionSet(p.geometry, huge), io::DType::f64);
    auto args = base;
    args[2] = (dir / "huge").string();
    const Result r = run_cli(args);
    CHECK(r.code == cli::kDivergence);
    CHECK(r.err.find("batch 0") != std::string::npos);
}

TEST_CASE("cli: evaluate reports metrics and slices") {
    const fs::path dir = temp_dir("cli_eval");
    REQUIRE(run_cli({"phantom", "--kind", "spheres", "--dims", "16,16,16", "--seed", "1", "--out", (dir / "a").string()})
                .code == cli::kOk);
    REQUIRE(run_cli({"phantom", "--kind", "spheres", "--dims", "16,16,16", "--seed", "2", "--out", (dir / "b").string()})
                .code == cli::kOk);

    const Result self = run_cli({"evaluate", "--test", (dir / "a").string(), "--reference", (dir / "a").string()});
    REQUIRE(self.code == cli::kOk);
    const auto js = nlohmann::json::parse(self.out);
    CHECK(js.at("ssim").get<double>() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(js.at("mse").get<double>() == 0.0);
    CHECK(js.at("psnr") == "inf");

    const Result pair = run_cli({"evaluate", "--test", (dir / "b").string(), "--reference", (dir / "a").string(),
                                 "--slice", "8", "--axis", "y", "--png", (dir / "s.png").string()});
    REQUIRE(pair.code == cli::kOk);
    const auto jp = nlohmann::json::parse(pair.out);
    const VoxelGrid a = io::read_volume(dir / "a"), b = io::read_volume(dir / "b");
    const MetricReport expect = evaluate(FieldView::of(a), FieldView::of(b));
    CHECK(jp.at("ssim").get<double>() == expect.ssim);
    CHECK(jp.at("mse").get<double>() == expect.mse);
    CHECK(jp.at("psnr").get<double>() == expect.psnr);
    CHECK(jp.at("pcc").get<double>() == expect.pcc);
    CHECK(jp.at("slice").at("axis") == "y");
    CHECK(jp.at("slice").at("index") == 8);
    const std::string png = slurp(dir / "s.png");
    REQUIRE(png.size() > 8);
    CHECK(png.substr(1, 3) == "PNG");

    CHECK(run_cli({"evaluate", "--test", (dir / "a").string(), "--reference", (dir / "a").string(), "--png",
                   (dir / "x.png").string()})
              .code == cli::kUsageError);
    CHECK(run_cli({"evaluate", "--test", (dir / "a").string(), "--reference", (dir / "a").string(), "--slice", "16"})
              .code == cli::kUsageError);
    CHECK(run_cli({"evaluate", "--test", (dir / "a").string(), "--reference", (dir / "a").string(), "--slice", "1",
                   "--axis", "w"})
              .code == cli::kUsageError);

    REQUIRE(run_cli({"phantom", "--kind", "spheres", "--dims", "16,16,12", "--out", (dir / "c").string()}).code ==
            cli::kOk);
    CHECK(run_cli({"evaluate", "--test", (dir / "c").string(), "--reference", (dir / "a").string()}).code ==
          cli::kDataError);
    REQUIRE(run_cli({"phantom", "--kind", "uniform", "--dims", "16,16,16", "--out", (dir / "u").string()}).code ==
            cli::kOk);
    CHECK(run_cli({"evaluate", "--test", (dir / "a").string(), "--reference", (dir / "u").string()}).code ==
          cli::kDataError);
}

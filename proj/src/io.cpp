#include "voxrecon/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "voxrecon/errors.hpp"

namespace voxrecon::io {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kGeometryFields{"source_to_isocenter", "source_to_detector", "detector_rows",
                                            "detector_cols",       "pixel_pitch_u",      "pixel_pitch_v",
                                            "view_angles",         "detector_vertical_offset"};

std::size_t dtype_size(DType t) { return t == DType::f32 ? 4 : 8; }

fs::path with_ext(const fs::path& base, std::string_view ext) {
    fs::path p = base;
    p += std::string(ext);
    return p;
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& what) {
    if (!j.is_object())
        throw DataError(what + ": header must be a JSON object");
    for (const auto& item : j.items())
        if (!allowed.contains(item.key()))
            throw DataError(what + ": unknown field '" + item.key() + "'");
}

std::vector<char> encode(std::span<const double> values, DType dtype, const std::string& what) {
    std::vector<char> out;
    out.reserve(values.size() * dtype_size(dtype));
    for (double v : values) {
        if (!std::isfinite(v))
            throw DataError(what + ": refusing to write non-finite value");
        std::uint64_t bits;
        std::size_t n;
        if (dtype == DType::f32) {
            const float f = static_cast<float>(v);
            if (!std::isfinite(f))
                throw DataError(what + ": value " + std::to_string(v) + " overflows f32");
            bits = std::bit_cast<std::uint32_t>(f);
            n = 4;
        } else {
            bits = std::bit_cast<std::uint64_t>(v);
            n = 8;
        }
        for (std::size_t b = 0; b < n; ++b)
            out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
    }
    return out;
}

std::vector<double> decode(const std::vector<char>& bytes, DType dtype) {
    const std::size_t n = dtype_size(dtype);
    std::vector<double> out(bytes.size() / n);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint64_t bits = 0;
        for (std::size_t b = 0; b < n; ++b)
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * n + b])) << (8 * b);
        out[i] = dtype == DType::f32 ? static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(bits)))
                                     : std::bit_cast<double>(bits);
    }
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!(f << text))
        throw DataError("cannot write " + path.string());
}

void write_bytes(const fs::path& path, const std::vector<char>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f.write(bytes.data(), static_cast<std::streamsize>(bytes.size())))
        throw DataError("cannot write " + path.string());
}

std::vector<char> read_bytes(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw DataError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::vector<double> read_payload(const fs::path& path, DType dtype, std::size_t count) {
    const std::vector<char> bytes = read_bytes(path);
    const std::size_t expected = count * dtype_size(dtype);
    if (bytes.size() != expected)
        throw DataError(path.string() + ": payload is " + std::to_string(bytes.size()) + " bytes, header implies " +
                        std::to_string(expected));
    std::vector<double> values = decode(bytes, dtype);
    if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); }))
        throw DataError(path.string() + ": payload contains non-finite values");
    return values;
}

} // namespace

std::string_view to_string(DType dtype) { return dtype == DType::f32 ? "f32" : "f64"; }

DType dtype_from_string(std::string_view name) {
    if (name == "f32")
        return DType::f32;
    if (name == "f64")
        return DType::f64;
    throw DataError("unknown dtype '" + std::string(name) + "'");
}

fs::path file_base(const fs::path& path) {
    const std::string s = path.string();
    for (std::string_view ext : {kVolumeHeaderExt, kVolumeRawExt, kProjectionHeaderExt, kProjectionRawExt})
        if (s.size() > ext.size() && s.ends_with(ext))
            return fs::path(s.substr(0, s.size() - ext.size()));
    return path;
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream f(path);
    if (!f)
        throw DataError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_volume(const fs::path& base_in, const VoxelGrid& grid, DType dtype) {
    const fs::path base = file_base(base_in);
    const GridShape& s = grid.shape;
    if (grid.values.size() != s.size())
        throw DataError("volume values do not match its dims");
    const auto payload = encode(grid.values, dtype, base.string());
    const nlohmann::json header{
        {"dims", {s.dims[0], s.dims[1], s.dims[2]}},
        {"spacing_mm", {s.spacing.x, s.spacing.y, s.spacing.z}},
        {"origin_mm", {s.origin.x, s.origin.y, s.origin.z}},
        {"dtype", std::string(to_string(dtype))},
        {"order", "x-fastest"},
    };
    write_text(with_ext(base, kVolumeHeaderExt), header.dump(2) + "\n");
    write_bytes(with_ext(base, kVolumeRawExt), payload);
}

VoxelGrid read_volume(const fs::path& base_in) {
    const fs::path base = file_base(base_in);
    const fs::path header_path = with_ext(base, kVolumeHeaderExt);
    const nlohmann::json h = read_json(header_path);
    reject_unknown(h, {"dims", "spacing_mm", "origin_mm", "dtype", "order"}, header_path.string());
    GridShape shape;
    DType dtype;
    try {
        const auto dims = h.at("dims").get<std::vector<std::size_t>>();
        const auto spacing = h.at("spacing_mm").get<std::vector<double>>();
        const auto origin = h.at("origin_mm").get<std::vector<double>>();
        if (dims.size() != 3 || spacing.size() != 3 || origin.size() != 3)
            throw DataError(header_path.string() + ": dims, spacing_mm and origin_mm need 3 entries");
        if (h.at("order").get<std::string>() != "x-fastest")
            throw DataError(header_path.string() + ": only order \"x-fastest\" is supported");
        dtype = dtype_from_string(h.at("dtype").get<std::string>());
        shape = GridShape{{dims[0], dims[1], dims[2]}, {spacing[0], spacing[1], spacing[2]}, {origin[0], origin[1], origin[2]}};
        shape.validate();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(header_path.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(header_path.string() + ": " + e.what());
    }
    return VoxelGrid(shape, read_payload(with_ext(base, kVolumeRawExt), dtype, shape.size()));
}

void write_projections(const fs::path& base_in, const ProjectionSet& projections, DType dtype) {
    const fs::path base = file_base(base_in);
    const ScanGeometry& g = projections.geometry;
    const auto payload = encode(projections.images, dtype, base.string());
    nlohmann::json header = to_json(g);
    header["views"] = g.n_views();
    header["rows"] = g.rows();
    header["cols"] = g.cols();
    header["dtype"] = std::string(to_string(dtype));
    write_text(with_ext(base, kProjectionHeaderExt), header.dump(2) + "\n");
    write_bytes(with_ext(base, kProjectionRawExt), payload);
}

ProjectionSet read_projections(const fs::path& base_in) {
    const fs::path base = file_base(base_in);
    const fs::path header_path = with_ext(base, kProjectionHeaderExt);
    const nlohmann::json h = read_json(header_path);
    std::set<std::string> allowed = kGeometryFields;
    allowed.insert({"views", "rows", "cols", "dtype"});
    reject_unknown(h, allowed, header_path.string());
    try {
        ScanGeometry geom = geometry_from_json(h);
        const DType dtype = dtype_from_string(h.at("dtype").get<std::string>());
        if (h.at("views").get<std::size_t>() != geom.n_views() || h.at("rows").get<std::size_t>() != geom.rows() ||
            h.at("cols").get<std::size_t>() != geom.cols())
            throw DataError(header_path.string() + ": views/rows/cols disagree with the geometry");
        auto data = read_payload(with_ext(base, kProjectionRawExt), dtype, geom.total_rays());
        return ProjectionSet(std::move(geom), std::move(data));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(header_path.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(header_path.string() + ": " + e.what());
    }
}

ScanGeometry read_geometry(const fs::path& path) {
    const nlohmann::json j = read_json(path);
    reject_unknown(j, kGeometryFields, path.string());
    try {
        return geometry_from_json(j);
    } catch (const std::invalid_argument& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_geometry(const fs::path& path, const ScanGeometry& geometry) {
    write_text(path, to_json(geometry).dump(2) + "\n");
}

} // namespace voxrecon::io

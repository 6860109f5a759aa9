#include "png_export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include <png.h>

#include "voxrecon/errors.hpp"

namespace voxrecon::cli {

void write_png_gray8(const std::filesystem::path& path, std::size_t width, std::size_t height,
                     std::span<const double> values) {
    if (values.size() != width * height || values.empty())
        throw DataError("png export: image size mismatch");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double scale = *hi > *lo ? 255.0 / (*hi - *lo) : 0.0;
    std::vector<png_byte> pixels(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        pixels[i] = static_cast<png_byte>(std::lround((values[i] - *lo) * scale));

    std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!file)
        throw DataError("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, nullptr);
        throw DataError("png export: libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("png export: libpng failed writing " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t r = 0; r < height; ++r)
        png_write_row(png, pixels.data() + r * width);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace voxrecon::cli

#include "plot.hpp"

#include <png.h>

#include <cstdio>
#include <vector>

namespace flowcast {

void write_png(const ScalarField& field, const std::filesystem::path& path) {
    field.require_finite("write_png");
    const auto stats = field_stats(field);
    const double range = stats.max - stats.min;
    const int h = field.grid().height, w = field.grid().width;

    std::vector<unsigned char> pixels(static_cast<size_t>(h) * w);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const double v = range > 0.0 ? (field.at(i, j) - stats.min) / range : 0.5;
            pixels[static_cast<size_t>(i) * w + j] = static_cast<unsigned char>(255.0 * v + 0.5);
        }
    }

    FILE* fp = std::fopen(path.string().c_str(), "wb");
    if (!fp) throw runtime_error("cannot open '" + path.string() + "' for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        std::fclose(fp);
        throw runtime_error("libpng failure while writing '" + path.string() + "'");
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int i = 0; i < h; ++i) {
        png_write_row(png, pixels.data() + static_cast<size_t>(i) * w);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

}  // namespace flowcast

#include "sfr/io/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "sfr/errors.hpp"

namespace sfr::io {

GrayImage render_heatmap(std::span<const double> values, int nx, int ny, std::span<const std::size_t> marks,
                         int scale) {
    if (nx < 1 || ny < 1 || scale < 1) throw InvalidInput("heatmap: dimensions and scale must be positive");
    if (values.size() != static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny))
        throw ShapeMismatch("heatmap: value count does not match nx * ny");
    for (double v : values)
        if (!std::isfinite(v)) throw InvalidInput("heatmap: values must be finite");

    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, hi = *hi_it;
    std::vector<std::uint8_t> cells(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (hi == lo) {
            cells[k] = 128;
        } else {
            const double t = (values[k] - lo) / (hi - lo);
            cells[k] = static_cast<std::uint8_t>(std::clamp(std::lround(t * 255.0), 0L, 255L));
        }
    }

    GrayImage img;
    img.width = nx * scale;
    img.height = ny * scale;
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
    for (int row = 0; row < img.height; ++row) {
        const int j = ny - 1 - row / scale;
        for (int col = 0; col < img.width; ++col)
            img.pixels[static_cast<std::size_t>(row) * img.width + col] = cells[static_cast<std::size_t>(j) * nx + col / scale];
    }
    for (std::size_t idx : marks) {
        if (idx >= values.size()) throw InvalidInput("heatmap: mark index out of range");
        const int i = static_cast<int>(idx % nx);
        const int j = static_cast<int>(idx / nx);
        const int cx = i * scale + scale / 2;
        const int cy = (ny - 1 - j) * scale + scale / 2;
        for (int dy = -1; dy <= 0; ++dy)
            for (int dx = -1; dx <= 0; ++dx) {
                const int x = cx + dx, y = cy + dy;
                if (x >= 0 && y >= 0 && x < img.width && y < img.height)
                    img.pixels[static_cast<std::size_t>(y) * img.width + x] = 255;
            }
    }
    return img;
}

void write_pgm(const GrayImage& image, const std::filesystem::path& path) {
    if (image.pixels.size() != static_cast<std::size_t>(image.width) * image.height)
        throw ShapeMismatch("pgm: pixel count does not match dimensions");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    os << "P5\n" << image.width << ' ' << image.height << "\n255\n";
    os.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
    if (!os) throw IoError("write to '" + path.string() + "' failed");
}

GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "' for reading");
    std::string magic;
    GrayImage img;
    int maxval = 0;
    is >> magic >> img.width >> img.height >> maxval;
    if (magic != "P5" || !is || maxval != 255 || img.width < 1 || img.height < 1)
        throw FormatError(path.string() + ": not an 8-bit P5 image");
    is.get();
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
    is.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (static_cast<std::size_t>(is.gcount()) != img.pixels.size()) throw FormatError(path.string() + ": truncated");
    return img;
}

}  // namespace sfr::io

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace sfr::io {

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major, top row first
};

inline constexpr int kHeatmapScale = 8;

/// Min-max normalizes `values` (nx x ny, flat index j*nx+i) to 0..255
/// (constant input -> 128) and upscales by `scale` with nearest neighbour.
/// The top image row shows the highest j. Cells whose flat index is in
/// `marks` get a white 2x2 dot at their center.
GrayImage render_heatmap(std::span<const double> values, int nx, int ny, std::span<const std::size_t> marks = {},
                         int scale = kHeatmapScale);

/// Binary P5 with maxval 255.
void write_pgm(const GrayImage& image, const std::filesystem::path& path);
GrayImage read_pgm(const std::filesystem::path& path);

}  // namespace sfr::io

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lodloc {

/// 8-bit single-channel raster. Pixel (x, y) has x growing right and y
/// growing down; the continuous coordinate of a pixel's center equals its
/// integer index (the image plane spans [-0.5, width-0.5] x [-0.5, height-0.5]).
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    std::uint8_t& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
};

/// 8-bit 3-channel raster, RGB interleaved.
struct ColorImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    ColorImage() = default;
    ColorImage(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h * 3, 0) {}

    std::uint8_t* pixel(int x, int y) { return &data[(static_cast<size_t>(y) * width + x) * 3]; }
    const std::uint8_t* pixel(int x, int y) const {
        return &data[(static_cast<size_t>(y) * width + x) * 3];
    }
};

// Binary PGM (P5) / PPM (P6), maxval 255.
GrayImage load_pgm(const std::string& path);
void save_pgm(const GrayImage& img, const std::string& path);
ColorImage load_ppm(const std::string& path);
void save_ppm(const ColorImage& img, const std::string& path);

/// Rec.601 luma; keeps surfaces with different normal colors separable in gray.
GrayImage to_gray(const ColorImage& img);

/// Loads either a PGM or a PPM (converted to gray) based on the magic number.
GrayImage load_gray(const std::string& path);

}  // namespace lodloc

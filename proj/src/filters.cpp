#include "lodloc/filters.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "lodloc/errors.hpp"

namespace lodloc {
namespace {

// Sobel responses in doubles, replicated borders.
void sobel_gradients(const GrayImage& img, std::vector<double>& gx,
                     std::vector<double>& gy) {
    const int w = img.width, h = img.height;
    gx.assign(static_cast<size_t>(w) * h, 0.0);
    gy.assign(static_cast<size_t>(w) * h, 0.0);
    auto px = [&](int x, int y) {
        return static_cast<double>(img.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)));
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double tl = px(x - 1, y - 1), tc = px(x, y - 1), tr = px(x + 1, y - 1);
            const double ml = px(x - 1, y), mr = px(x + 1, y);
            const double bl = px(x - 1, y + 1), bc = px(x, y + 1), br = px(x + 1, y + 1);
            gx[static_cast<size_t>(y) * w + x] = (tr + 2 * mr + br) - (tl + 2 * ml + bl);
            gy[static_cast<size_t>(y) * w + x] = (bl + 2 * bc + br) - (tl + 2 * tc + tr);
        }
    }
}

}  // namespace

GrayImage sobel(const GrayImage& img) {
    std::vector<double> gx, gy;
    sobel_gradients(img, gx, gy);
    std::vector<double> mag(gx.size());
    double peak = 0;
    for (size_t i = 0; i < gx.size(); ++i) {
        mag[i] = std::hypot(gx[i], gy[i]);
        peak = std::max(peak, mag[i]);
    }
    GrayImage out(img.width, img.height);
    if (peak == 0) return out;  // flat image: no edges anywhere
    for (size_t i = 0; i < mag.size(); ++i)
        out.data[i] = static_cast<std::uint8_t>(std::lround(mag[i] / peak * 255.0));
    return out;
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
    if (sigma <= 0) return img;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += kernel[i + radius];
    }
    for (double& k : kernel) k /= sum;

    const int w = img.width, h = img.height;
    std::vector<double> tmp(static_cast<size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * img.at(std::clamp(x + i, 0, w - 1), y);
            tmp[static_cast<size_t>(y) * w + x] = acc;
        }
    }
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * tmp[static_cast<size_t>(std::clamp(y + i, 0, h - 1)) * w + x];
            out.at(x, y) = static_cast<std::uint8_t>(std::lround(std::clamp(acc, 0.0, 255.0)));
        }
    }
    return out;
}

GrayImage canny(const GrayImage& img, double low, double high) {
    if (low >= high)
        throw ThresholdError("canny: low threshold must be below high threshold");

    const GrayImage smoothed = gaussian_blur(img, 1.4);
    std::vector<double> gx, gy;
    sobel_gradients(smoothed, gx, gy);

    const int w = img.width, h = img.height;
    std::vector<double> mag(gx.size());
    for (size_t i = 0; i < gx.size(); ++i) mag[i] = std::hypot(gx[i], gy[i]);

    // Thin to local maxima along the gradient, then classify.
    // 0 = out, 1 = weak, 2 = strong.
    std::vector<std::uint8_t> cls(mag.size(), 0);
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            const size_t i = static_cast<size_t>(y) * w + x;
            const double m = mag[i];
            if (m < low) continue;
            const double angle = std::atan2(gy[i], gx[i]);
            // Quantize to one of four neighbor axes.
            const double deg = std::fmod(angle * 180.0 / M_PI + 180.0, 180.0);
            int dx, dy;
            if (deg < 22.5 || deg >= 157.5) {
                dx = 1; dy = 0;
            } else if (deg < 67.5) {
                dx = 1; dy = 1;
            } else if (deg < 112.5) {
                dx = 0; dy = 1;
            } else {
                dx = 1; dy = -1;
            }
            const double m1 = mag[static_cast<size_t>(y + dy) * w + (x + dx)];
            const double m2 = mag[static_cast<size_t>(y - dy) * w + (x - dx)];
            if (m < m1 || m < m2) continue;
            cls[i] = m >= high ? 2 : 1;
        }
    }

    // Hysteresis: weak pixels survive only when 8-connected to a strong one.
    GrayImage out(w, h);
    std::vector<size_t> stack;
    for (size_t i = 0; i < cls.size(); ++i)
        if (cls[i] == 2) {
            out.data[i] = 255;
            stack.push_back(i);
        }
    while (!stack.empty()) {
        const size_t i = stack.back();
        stack.pop_back();
        const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const int nx = x + dx, ny = y + dy;
                if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                const size_t j = static_cast<size_t>(ny) * w + nx;
                if (cls[j] == 1 && out.data[j] == 0) {
                    out.data[j] = 255;
                    stack.push_back(j);
                }
            }
        }
    }
    return out;
}

GrayImage apply_mask(const GrayImage& img, const GrayImage& mask,
                     std::uint8_t building_label) {
    if (img.width != mask.width || img.height != mask.height)
        throw DimensionMismatchError("apply_mask: image and mask extents differ");
    GrayImage out(img.width, img.height);
    for (size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = mask.data[i] == building_label ? img.data[i] : 0;
    return out;
}

}  // namespace lodloc

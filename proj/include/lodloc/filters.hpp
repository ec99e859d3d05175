#pragma once

#include <cstdint>

#include "lodloc/image.hpp"

namespace lodloc {

/// Mask value that marks building pixels; everything else is discarded by
/// apply_mask.
inline constexpr std::uint8_t kBuildingLabel = 255;

/// 3x3 Sobel gradient magnitude, scaled so the strongest edge maps to 255.
GrayImage sobel(const GrayImage& img);

/// Classic Canny chain: Gaussian smoothing, Sobel gradients, non-maximum
/// suppression along the quantized gradient direction, double-threshold
/// hysteresis. Output is binary (0 / 255). Thresholds apply to the
/// unscaled gradient magnitude.
GrayImage canny(const GrayImage& img, double low = 50.0, double high = 150.0);

/// Separable Gaussian with replicated borders; sigma <= 0 returns a copy.
GrayImage gaussian_blur(const GrayImage& img, double sigma);

/// Keeps pixels whose mask value equals building_label, zeroes the rest.
GrayImage apply_mask(const GrayImage& img, const GrayImage& mask,
                     std::uint8_t building_label = kBuildingLabel);

}  // namespace lodloc

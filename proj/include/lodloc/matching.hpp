#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lodloc/features.hpp"
#include "lodloc/image.hpp"

namespace lodloc {

/// Feature-image rendering constants: matched feature pixels on a flat
/// background.
inline constexpr std::uint8_t kFeatureImageBackground = 0;
inline constexpr std::uint8_t kFeatureImageMark = 255;

struct PipelineParams {
    DetectorParams detector;
    double ratio = 0.75;
    double canny_low = 50.0;
    double canny_high = 150.0;
    /// Gaussian sigma applied to the abstract feature images before they
    /// are matched against each other; 0 keeps them as rendered. The
    /// source description of the reduced-detail preprocessing is
    /// ambiguous, so this stays off by default.
    double feature_image_smoothing = 0.0;
    /// The mask describes the real image; applying it to the virtual
    /// render too is optional.
    bool mask_virtual = false;
};

/// Self-matches the image and marks every surviving feature position
/// (rounded to the nearest pixel) on a constant background. Zero features
/// or zero self-matches yield a constant image.
GrayImage build_feature_image(const GrayImage& img, const PipelineParams& params = {});

/// A MatchSet plus the keypoint lists its indices refer to; the virtual
/// side feeds the barycentric lift, the real side the resection
/// observations.
struct PipelineMatches {
    MatchSet set;
    std::vector<Keypoint> keypoints_real;
    std::vector<Keypoint> keypoints_virtual;
};

/// Runs one method variant on a real/virtual image pair. Mask variants
/// mask the real image (and optionally the virtual one); edge variants
/// filter both. A side with no detectable features produces an empty
/// match set rather than an error.
PipelineMatches match_pipeline(const GrayImage& real, const GrayImage& virtual_img,
                               const std::optional<GrayImage>& mask, MatchMethod method,
                               const PipelineParams& params = {});

/// Matches CSV: header + one "xA,yA,xB,yB,hamming" row per match.
void save_matches(const PipelineMatches& m, const std::string& path);

/// Reads a matches CSV back as one keypoint pair per row (the row's
/// indices match into both keypoint lists).
PipelineMatches load_matches(const std::string& path);

}  // namespace lodloc

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lodloc/image.hpp"

namespace lodloc {

/// Corner with sub-pixel position in level-0 coordinates, ranked by the
/// Harris response it was selected with.
struct Keypoint {
    double x = 0;
    double y = 0;
    double response = 0;
    double orientation = 0;  // radians, intensity-centroid direction
    int level = 0;           // pyramid level the corner was found at
};

/// 256 binary intensity comparisons packed LSB-first.
struct BinaryDescriptor {
    std::array<std::uint64_t, 4> bits{};
};

int hamming(const BinaryDescriptor& a, const BinaryDescriptor& b);

struct DetectorParams {
    int max_features = 500;
    int fast_threshold = 20;  // intensity contrast on the Bresenham circle
    int levels = 3;
    double scale_factor = 1.2;
};

struct DetectionResult {
    std::vector<Keypoint> keypoints;
    std::vector<BinaryDescriptor> descriptors;  // one per keypoint
};

/// FAST-9 corners over an image pyramid, Harris-ranked, with
/// intensity-centroid orientation and a rotated 256-bit comparison
/// descriptor sampled from the blurred image. The comparison pattern is a
/// constant table, so identical inputs give identical results.
DetectionResult detect_and_describe(const GrayImage& img,
                                    const DetectorParams& params = {});

enum class MatchMethod { Direct, FeatureImages, Sobel, Canny, Mask, MaskSobel, MaskCanny };

const char* to_string(MatchMethod method);
MatchMethod match_method_from_string(const std::string& name);

struct Match {
    int a = 0;  // index into set A
    int b = 0;  // index into set B
    int distance = 0;
};

struct MatchSet {
    MatchMethod method = MatchMethod::Direct;
    std::vector<Match> matches;  // one-to-one in both indices
};

/// Hamming nearest neighbor with the Lowe ratio test applied in both
/// directions plus a mutual cross-check; nearest-neighbor ties go to the
/// lowest index. A set matched against itself yields identity matches for
/// every descriptor that has no exact duplicate.
MatchSet match_descriptors(const std::vector<BinaryDescriptor>& a,
                           const std::vector<BinaryDescriptor>& b,
                           double ratio = 0.75);

}  // namespace lodloc

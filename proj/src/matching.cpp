#include "lodloc/matching.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lodloc/errors.hpp"
#include "lodloc/filters.hpp"

namespace lodloc {

GrayImage build_feature_image(const GrayImage& img, const PipelineParams& params) {
    GrayImage out(img.width, img.height, kFeatureImageBackground);

    const DetectionResult det = detect_and_describe(img, params.detector);
    if (det.descriptors.empty()) return out;

    const MatchSet self = match_descriptors(det.descriptors, det.descriptors, params.ratio);
    for (const Match& m : self.matches) {
        const Keypoint& kp = det.keypoints[m.a];
        const int x = static_cast<int>(std::lround(kp.x));
        const int y = static_cast<int>(std::lround(kp.y));
        if (out.in_bounds(x, y)) out.at(x, y) = kFeatureImageMark;
    }
    return out;
}

namespace {

// Detect + match with the pipeline's parameters; an undetectable side
// yields no matches instead of an error.
PipelineMatches detect_and_match(const GrayImage& a, const GrayImage& b,
                                 MatchMethod method, const PipelineParams& params) {
    PipelineMatches out;
    out.set.method = method;
    DetectionResult da = detect_and_describe(a, params.detector);
    DetectionResult db = detect_and_describe(b, params.detector);
    out.keypoints_real = std::move(da.keypoints);
    out.keypoints_virtual = std::move(db.keypoints);
    if (da.descriptors.empty() || db.descriptors.empty()) return out;
    out.set.matches = match_descriptors(da.descriptors, db.descriptors, params.ratio).matches;
    return out;
}

}  // namespace

PipelineMatches match_pipeline(const GrayImage& real, const GrayImage& virtual_img,
                               const std::optional<GrayImage>& mask, MatchMethod method,
                               const PipelineParams& params) {
    const bool needs_mask = method == MatchMethod::Mask ||
                            method == MatchMethod::MaskSobel ||
                            method == MatchMethod::MaskCanny;
    if (needs_mask && !mask)
        throw MissingMaskError(std::string("match_pipeline: method '") + to_string(method) +
                               "' requires a segmentation mask");

    GrayImage left = needs_mask ? apply_mask(real, *mask) : real;
    GrayImage right = (needs_mask && params.mask_virtual) ? apply_mask(virtual_img, *mask)
                                                          : virtual_img;

    switch (method) {
        case MatchMethod::Direct:
        case MatchMethod::Mask:
            return detect_and_match(left, right, method, params);
        case MatchMethod::Sobel:
        case MatchMethod::MaskSobel:
            return detect_and_match(sobel(left), sobel(right), method, params);
        case MatchMethod::Canny:
        case MatchMethod::MaskCanny:
            return detect_and_match(canny(left, params.canny_low, params.canny_high),
                                    canny(right, params.canny_low, params.canny_high),
                                    method, params);
        case MatchMethod::FeatureImages: {
            GrayImage fa = build_feature_image(left, params);
            GrayImage fb = build_feature_image(right, params);
            if (params.feature_image_smoothing > 0) {
                fa = gaussian_blur(fa, params.feature_image_smoothing);
                fb = gaussian_blur(fb, params.feature_image_smoothing);
            }
            return detect_and_match(fa, fb, method, params);
        }
    }
    throw ConfigError("match_pipeline: unhandled method");
}

void save_matches(const PipelineMatches& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "xA,yA,xB,yB,hamming\n";
    char buf[128];
    for (const Match& match : m.set.matches) {
        const Keypoint& a = m.keypoints_real[match.a];
        const Keypoint& b = m.keypoints_virtual[match.b];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%d\n", a.x, a.y, b.x,
                      b.y, match.distance);
        out << buf;
    }
}

PipelineMatches load_matches(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("xA,yA,xB,yB,hamming", 0) != 0)
        throw ParseError(path + ": expected matches CSV header");

    PipelineMatches out;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        Keypoint a, b;
        int distance = 0;
        if (!(row >> a.x >> a.y >> b.x >> b.y >> distance))
            throw ParseError(path + ":" + std::to_string(lineno) + ": malformed row");
        const int index = static_cast<int>(out.set.matches.size());
        out.keypoints_real.push_back(a);
        out.keypoints_virtual.push_back(b);
        out.set.matches.push_back({index, index, distance});
    }
    return out;
}

}  // namespace lodloc

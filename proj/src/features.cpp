#include "lodloc/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <string>

#include "lodloc/errors.hpp"
#include "lodloc/filters.hpp"

namespace lodloc {
namespace {

// Keypoints stay this far from every level border so that orientation
// (radius 15) and the rotated descriptor samples (|offset| <= 13*sqrt(2))
// never leave the image.
constexpr int kBorder = 20;
constexpr int kPatchRadius = 15;
constexpr int kSampleRadius = 13;

// Bresenham circle of radius 3 used by the segment test.
constexpr int kCircle[16][2] = {
    {0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0},  {3, 1},  {2, 2},  {1, 3},
    {0, 3},  {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3},
};

// FAST-9 segment test. Returns a contrast score (sum of absolute
// differences over the brighter/darker circle pixels) or 0 for
// non-corners; the score only orders candidates for the 3x3 suppression.
int fast_score(const GrayImage& img, int x, int y, int threshold) {
    const int center = img.at(x, y);
    int state[16];
    for (int i = 0; i < 16; ++i) {
        const int v = img.at(x + kCircle[i][0], y + kCircle[i][1]);
        state[i] = v > center + threshold ? 1 : (v < center - threshold ? -1 : 0);
    }
    for (int want : {1, -1}) {
        int run = 0;
        for (int i = 0; i < 16 + 9; ++i) {
            if (state[i % 16] == want) {
                if (++run >= 9) {
                    int score = 0;
                    for (int j = 0; j < 16; ++j)
                        if (state[j] == want)
                            score += std::abs(
                                img.at(x + kCircle[j][0], y + kCircle[j][1]) - center);
                    return score;
                }
            } else {
                run = 0;
            }
        }
    }
    return 0;
}

// Harris corner response over a 7x7 window of central-difference
// gradients, k = 0.04.
double harris_response(const GrayImage& img, int x, int y) {
    double sxx = 0, syy = 0, sxy = 0;
    for (int dy = -3; dy <= 3; ++dy) {
        for (int dx = -3; dx <= 3; ++dx) {
            const int px = x + dx, py = y + dy;
            const double gx = (img.at(px + 1, py) - img.at(px - 1, py)) * 0.5;
            const double gy = (img.at(px, py + 1) - img.at(px, py - 1)) * 0.5;
            sxx += gx * gx;
            syy += gy * gy;
            sxy += gx * gy;
        }
    }
    const double det = sxx * syy - sxy * sxy;
    const double trace = sxx + syy;
    return det - 0.04 * trace * trace;
}

double centroid_orientation(const GrayImage& img, int x, int y) {
    double m10 = 0, m01 = 0;
    for (int dy = -kPatchRadius; dy <= kPatchRadius; ++dy) {
        for (int dx = -kPatchRadius; dx <= kPatchRadius; ++dx) {
            if (dx * dx + dy * dy > kPatchRadius * kPatchRadius) continue;
            const double v = img.at(x + dx, y + dy);
            m10 += dx * v;
            m01 += dy * v;
        }
    }
    if (m10 == 0 && m01 == 0) return 0;
    return std::atan2(m01, m10);
}

struct SamplePair {
    int8_t x1, y1, x2, y2;
};

// Fixed comparison pattern: 256 offset pairs drawn uniformly from the
// [-13, 13]^2 patch by a seeded generator, so every build and every run
// uses the same table.
const std::array<SamplePair, 256>& sample_pattern() {
    static const std::array<SamplePair, 256> pattern = [] {
        std::array<SamplePair, 256> p{};
        std::mt19937 rng(0x6c6f6430u);  // arbitrary fixed seed
        auto coord = [&rng] {
            return static_cast<int8_t>(static_cast<int>(rng() % (2 * kSampleRadius + 1)) -
                                       kSampleRadius);
        };
        for (auto& pair : p) {
            do {
                pair = {coord(), coord(), coord(), coord()};
            } while (pair.x1 == pair.x2 && pair.y1 == pair.y2);
        }
        return p;
    }();
    return pattern;
}

BinaryDescriptor describe(const GrayImage& blurred, int x, int y, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    BinaryDescriptor d;
    const auto& pattern = sample_pattern();
    for (size_t i = 0; i < pattern.size(); ++i) {
        const auto& p = pattern[i];
        const int x1 = x + static_cast<int>(std::lround(c * p.x1 - s * p.y1));
        const int y1 = y + static_cast<int>(std::lround(s * p.x1 + c * p.y1));
        const int x2 = x + static_cast<int>(std::lround(c * p.x2 - s * p.y2));
        const int y2 = y + static_cast<int>(std::lround(s * p.x2 + c * p.y2));
        if (blurred.at(x1, y1) < blurred.at(x2, y2))
            d.bits[i / 64] |= std::uint64_t{1} << (i % 64);
    }
    return d;
}

// Bilinear resample to the given size; coordinates are pixel centers.
GrayImage resize(const GrayImage& src, int dst_w, int dst_h) {
    GrayImage dst(dst_w, dst_h);
    const double sx = static_cast<double>(src.width) / dst_w;
    const double sy = static_cast<double>(src.height) / dst_h;
    for (int y = 0; y < dst_h; ++y) {
        for (int x = 0; x < dst_w; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width - 1.0);
            const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height - 1.0);
            const int x0 = static_cast<int>(fx);
            const int y0 = static_cast<int>(fy);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const int y1 = std::min(y0 + 1, src.height - 1);
            const double ax = fx - x0, ay = fy - y0;
            const double v = (1 - ay) * ((1 - ax) * src.at(x0, y0) + ax * src.at(x1, y0)) +
                             ay * ((1 - ax) * src.at(x0, y1) + ax * src.at(x1, y1));
            dst.at(x, y) = static_cast<std::uint8_t>(std::lround(v));
        }
    }
    return dst;
}

struct Candidate {
    int x, y, level;
    double response;
};

}  // namespace

int hamming(const BinaryDescriptor& a, const BinaryDescriptor& b) {
    int d = 0;
    for (int i = 0; i < 4; ++i) d += std::popcount(a.bits[i] ^ b.bits[i]);
    return d;
}

DetectionResult detect_and_describe(const GrayImage& img, const DetectorParams& params) {
    if (img.width < 32 || img.height < 32)
        throw ImageTooSmallError("detect_and_describe: image " +
                                 std::to_string(img.width) + "x" +
                                 std::to_string(img.height) +
                                 " is below the 32x32 minimum");

    std::vector<GrayImage> pyramid;
    pyramid.reserve(params.levels);
    pyramid.push_back(img);
    for (int l = 1; l < params.levels; ++l) {
        const double inv = 1.0 / std::pow(params.scale_factor, l);
        const int w = std::max(1, static_cast<int>(std::lround(img.width * inv)));
        const int h = std::max(1, static_cast<int>(std::lround(img.height * inv)));
        if (w < 2 * kBorder + 1 || h < 2 * kBorder + 1) break;
        pyramid.push_back(resize(img, w, h));
    }

    std::vector<Candidate> candidates;
    for (size_t l = 0; l < pyramid.size(); ++l) {
        const GrayImage& level = pyramid[l];
        const int w = level.width, h = level.height;
        if (w < 2 * kBorder + 1 || h < 2 * kBorder + 1) continue;

        std::vector<int> scores(static_cast<size_t>(w) * h, 0);
        for (int y = kBorder; y < h - kBorder; ++y)
            for (int x = kBorder; x < w - kBorder; ++x)
                scores[static_cast<size_t>(y) * w + x] =
                    fast_score(level, x, y, params.fast_threshold);

        // 3x3 non-maximum suppression; an equal-score plateau keeps its
        // first pixel in raster order so symmetric synthetic corners
        // survive.
        for (int y = kBorder; y < h - kBorder; ++y) {
            for (int x = kBorder; x < w - kBorder; ++x) {
                const int s = scores[static_cast<size_t>(y) * w + x];
                if (s == 0) continue;
                bool keep = true;
                for (int dy = -1; dy <= 1 && keep; ++dy) {
                    for (int dx = -1; dx <= 1 && keep; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        const int sn = scores[static_cast<size_t>(y + dy) * w + (x + dx)];
                        if (sn > s || (sn == s && (dy < 0 || (dy == 0 && dx < 0))))
                            keep = false;
                    }
                }
                if (keep) candidates.push_back({x, y, static_cast<int>(l),
                                                harris_response(level, x, y)});
            }
        }
    }

    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.response != b.response) return a.response > b.response;
        if (a.level != b.level) return a.level < b.level;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });
    if (static_cast<int>(candidates.size()) > params.max_features)
        candidates.resize(params.max_features);

    // Descriptor comparisons sample a smoothed copy of each level; the
    // detection itself runs on the raw pixels.
    std::vector<GrayImage> blurred;
    blurred.reserve(pyramid.size());
    for (const auto& level : pyramid) blurred.push_back(gaussian_blur(level, 2.0));

    DetectionResult out;
    out.keypoints.reserve(candidates.size());
    out.descriptors.reserve(candidates.size());
    for (const Candidate& c : candidates) {
        const double angle = centroid_orientation(pyramid[c.level], c.x, c.y);
        const double scale = std::pow(params.scale_factor, c.level);
        out.keypoints.push_back({c.x * scale, c.y * scale, c.response, angle, c.level});
        out.descriptors.push_back(describe(blurred[c.level], c.x, c.y, angle));
    }
    return out;
}

const char* to_string(MatchMethod method) {
    switch (method) {
        case MatchMethod::Direct: return "direct";
        case MatchMethod::FeatureImages: return "feature-images";
        case MatchMethod::Sobel: return "sobel";
        case MatchMethod::Canny: return "canny";
        case MatchMethod::Mask: return "mask";
        case MatchMethod::MaskSobel: return "mask-sobel";
        case MatchMethod::MaskCanny: return "mask-canny";
    }
    return "?";
}

MatchMethod match_method_from_string(const std::string& name) {
    for (MatchMethod m : {MatchMethod::Direct, MatchMethod::FeatureImages,
                          MatchMethod::Sobel, MatchMethod::Canny, MatchMethod::Mask,
                          MatchMethod::MaskSobel, MatchMethod::MaskCanny})
        if (name == to_string(m)) return m;
    throw ConfigError("unknown match method '" + name + "'");
}

namespace {

struct Nearest {
    int best_index = -1;
    int best = 0;
    int second = -1;  // -1: no second neighbor exists
};

// Nearest and second-nearest Hamming neighbor of `query` in `set`; ties
// go to the lowest index.
Nearest nearest_two(const BinaryDescriptor& query, const std::vector<BinaryDescriptor>& set) {
    Nearest n;
    for (size_t j = 0; j < set.size(); ++j) {
        const int d = hamming(query, set[j]);
        if (n.best_index < 0 || d < n.best) {
            n.second = n.best_index < 0 ? -1 : n.best;
            n.best = d;
            n.best_index = static_cast<int>(j);
        } else if (n.second < 0 || d < n.second) {
            n.second = d;
        }
    }
    return n;
}

bool passes_ratio(const Nearest& n, double ratio) {
    return n.second < 0 || n.best < ratio * n.second;
}

}  // namespace

MatchSet match_descriptors(const std::vector<BinaryDescriptor>& a,
                           const std::vector<BinaryDescriptor>& b, double ratio) {
    if (a.empty() || b.empty())
        throw EmptySetError("match_descriptors: empty descriptor set");

    std::vector<Nearest> forward(a.size());
    for (size_t i = 0; i < a.size(); ++i) forward[i] = nearest_two(a[i], b);
    std::vector<Nearest> backward(b.size());
    for (size_t j = 0; j < b.size(); ++j) backward[j] = nearest_two(b[j], a);

    MatchSet out;
    for (size_t i = 0; i < a.size(); ++i) {
        const Nearest& f = forward[i];
        if (!passes_ratio(f, ratio)) continue;
        const Nearest& r = backward[f.best_index];
        if (r.best_index != static_cast<int>(i) || !passes_ratio(r, ratio)) continue;
        out.matches.push_back({static_cast<int>(i), f.best_index, f.best});
    }
    return out;
}

}  // namespace lodloc

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "lodloc/errors.hpp"
#include "lodloc/features.hpp"

using namespace lodloc;

namespace {

// exact 90-degree rotation of a square image: pixel (x, y) moves to
// (n-1-y, x)
GrayImage rot90(const GrayImage& img) {
    GrayImage out(img.height, img.width);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            out.at(x, y) = img.at(y, img.width - 1 - x);
    return out;
}

// nine unique speckle clusters, spaced well inside the detector border
GrayImage speckle_sites(int n = 128) {
    GrayImage img(n, n, 20);
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> off(0, 9);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const int bx = 28 + 24 * i, by = 28 + 24 * j;
            for (int d = 0; d < 8; ++d) img.at(bx + off(rng), by + off(rng)) = 240;
        }
    return img;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("hamming distance counts differing bits") {
    BinaryDescriptor a, b;
    CHECK(hamming(a, b) == 0);
    b.bits[0] = 1;
    CHECK(hamming(a, b) == 1);
    for (auto& w : b.bits) w = ~std::uint64_t(0);
    CHECK(hamming(a, b) == 256);
}

TEST_CASE("a uniform image has no corners") {
    const GrayImage flat(64, 64, 128);
    const DetectionResult r = detect_and_describe(flat);
    CHECK(r.keypoints.empty());
    CHECK(r.descriptors.empty());
}

TEST_CASE("images below the working minimum are rejected") {
    CHECK_THROWS_AS(detect_and_describe(GrayImage(31, 64, 0)), ImageTooSmallError);
    CHECK_THROWS_AS(detect_and_describe(GrayImage(64, 31, 0)), ImageTooSmallError);
    try {
        detect_and_describe(GrayImage(8, 8, 0));
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.category() == std::string("image-too-small"));
    }
}

TEST_CASE("square-grid corners are localized within two pixels") {
    std::vector<Eigen::Vector2d> corners;
    const GrayImage img = testutil::block_grid_image(160, 120, 12, 40, 30, &corners);
    REQUIRE(corners.size() >= 16);

    DetectorParams params;
    params.levels = 1;  // keep the analytic positions free of rescale blur
    const DetectionResult r = detect_and_describe(img, params);
    REQUIRE(!r.keypoints.empty());
    CHECK(r.keypoints.size() == r.descriptors.size());

    // completeness: every analytic corner has a detection nearby
    for (const auto& c : corners) {
        double best = 1e9;
        for (const auto& kp : r.keypoints)
            best = std::min(best, std::hypot(kp.x - c.x(), kp.y - c.y()));
        CHECK(best <= 2.0);
    }
    // soundness: nothing fires away from the corners (edges stay quiet)
    for (const auto& kp : r.keypoints) {
        double best = 1e9;
        for (const auto& c : corners)
            best = std::min(best, std::hypot(kp.x - c.x(), kp.y - c.y()));
        CHECK(best <= 2.0);
    }
}

TEST_CASE("keypoints come back strongest-first and capped") {
    const GrayImage img = testutil::block_grid_image(160, 120, 12, 40, 30);
    const DetectionResult all = detect_and_describe(img);
    REQUIRE(all.keypoints.size() > 5);
    for (size_t i = 1; i < all.keypoints.size(); ++i)
        CHECK(all.keypoints[i - 1].response >= all.keypoints[i].response);

    DetectorParams capped;
    capped.max_features = 5;
    const DetectionResult top = detect_and_describe(img, capped);
    REQUIRE(top.keypoints.size() == 5);
    // the cap keeps the head of the full ranking
    for (size_t i = 0; i < top.keypoints.size(); ++i) {
        CHECK(top.keypoints[i].x == all.keypoints[i].x);
        CHECK(top.keypoints[i].y == all.keypoints[i].y);
        CHECK(top.keypoints[i].response == all.keypoints[i].response);
    }
}

TEST_CASE("detection is deterministic") {
    const GrayImage img = speckle_sites();
    const DetectionResult a = detect_and_describe(img);
    const DetectionResult b = detect_and_describe(img);
    REQUIRE(a.keypoints.size() == b.keypoints.size());
    for (size_t i = 0; i < a.keypoints.size(); ++i) {
        CHECK(a.keypoints[i].x == b.keypoints[i].x);
        CHECK(a.keypoints[i].y == b.keypoints[i].y);
        CHECK(a.keypoints[i].response == b.keypoints[i].response);
        CHECK(a.keypoints[i].orientation == b.keypoints[i].orientation);
        CHECK(a.keypoints[i].level == b.keypoints[i].level);
        CHECK(a.descriptors[i].bits == b.descriptors[i].bits);
    }
}

TEST_CASE("descriptors survive an exact quarter rotation") {
    const GrayImage img = speckle_sites();
    const GrayImage rot = rot90(img);
    const DetectionResult a = detect_and_describe(img);
    const DetectionResult b = detect_and_describe(rot);
    REQUIRE(a.keypoints.size() >= 9);
    REQUIRE(b.keypoints.size() >= 9);

    const MatchSet ms = match_descriptors(a.descriptors, b.descriptors);
    REQUIRE(ms.matches.size() >= 8);
    const double n1 = img.width - 1;
    for (const Match& m : ms.matches) {
        const Keypoint& ka = a.keypoints[m.a];
        const Keypoint& kb = b.keypoints[m.b];
        // the matched feature must sit where the rotation put it
        CHECK(std::hypot(kb.x - (n1 - ka.y), kb.y - ka.x) <= 1.5);
        CHECK(m.distance <= 64);
    }
}

TEST_CASE("a set matched against itself is the identity") {
    std::mt19937 rng(41);
    std::vector<BinaryDescriptor> d;
    for (int i = 0; i < 50; ++i) d.push_back(testutil::random_descriptor(rng));
    const MatchSet ms = match_descriptors(d, d);
    REQUIRE(ms.matches.size() == d.size());
    for (const Match& m : ms.matches) {
        CHECK(m.a == m.b);
        CHECK(m.distance == 0);
    }
}

TEST_CASE("a subset finds its copies in the superset") {
    std::mt19937 rng(42);
    std::vector<BinaryDescriptor> b;
    for (int i = 0; i < 60; ++i) b.push_back(testutil::random_descriptor(rng));
    const std::vector<BinaryDescriptor> a(b.begin(), b.begin() + 20);
    const MatchSet ms = match_descriptors(a, b);
    REQUIRE(ms.matches.size() == 20);
    for (const Match& m : ms.matches) {
        CHECK(m.a == m.b);
        CHECK(m.distance == 0);
    }
}

TEST_CASE("unrelated random sets produce almost no matches") {
    std::mt19937 rng(43);
    std::vector<BinaryDescriptor> a, b;
    for (int i = 0; i < 500; ++i) a.push_back(testutil::random_descriptor(rng));
    for (int i = 0; i < 500; ++i) b.push_back(testutil::random_descriptor(rng));
    const MatchSet ms = match_descriptors(a, b);
    CHECK(ms.matches.size() < 25);  // < 5% spurious
}

TEST_CASE("matching is symmetric in its arguments") {
    std::mt19937 rng(44);
    std::vector<BinaryDescriptor> a, b;
    for (int i = 0; i < 40; ++i) a.push_back(testutil::random_descriptor(rng));
    for (int i = 0; i < 40; ++i) b.push_back(testutil::random_descriptor(rng));
    // salt a few cross copies so something actually matches
    for (int i = 0; i < 10; ++i) b[3 * i] = a[4 * i];

    const MatchSet fwd = match_descriptors(a, b);
    const MatchSet rev = match_descriptors(b, a);
    REQUIRE(fwd.matches.size() >= 10);
    REQUIRE(fwd.matches.size() == rev.matches.size());
    for (const Match& m : fwd.matches) {
        const bool mirrored =
            std::any_of(rev.matches.begin(), rev.matches.end(),
                        [&](const Match& r) { return r.a == m.b && r.b == m.a; });
        CHECK(mirrored);
    }
}

TEST_CASE("empty descriptor sets are rejected") {
    std::mt19937 rng(45);
    std::vector<BinaryDescriptor> d{testutil::random_descriptor(rng)};
    const std::vector<BinaryDescriptor> none;
    CHECK_THROWS_AS(match_descriptors(none, d), EmptySetError);
    CHECK_THROWS_AS(match_descriptors(d, none), EmptySetError);
}

TEST_CASE("method names round-trip") {
    for (const MatchMethod m :
         {MatchMethod::Direct, MatchMethod::FeatureImages, MatchMethod::Sobel,
          MatchMethod::Canny, MatchMethod::Mask, MatchMethod::MaskSobel,
          MatchMethod::MaskCanny}) {
        CHECK(match_method_from_string(to_string(m)) == m);
    }
    CHECK_THROWS_AS(match_method_from_string("swizzle"), ConfigError);
}

}  // TEST_SUITE

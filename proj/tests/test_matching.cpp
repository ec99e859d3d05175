#include <cmath>
#include <optional>
#include <random>
#include <set>
#include <utility>

#include "doctest.h"
#include "helpers.hpp"
#include "lodloc/errors.hpp"
#include "lodloc/matching.hpp"
#include "lodloc/raycast.hpp"
#include "lodloc/semantic_model.hpp"
#include "street_fixture.hpp"

using namespace lodloc;

namespace {

// unique speckle cluster per site so descriptors never collide (repeated
// identical corners would tie in the ratio test and drop out)
GrayImage textured_sites(int n = 128, unsigned seed = 11) {
    GrayImage img(n, n, 20);
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> off(0, 9);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const int bx = 28 + 24 * i, by = 28 + 24 * j;
            for (int d = 0; d < 8; ++d) img.at(bx + off(rng), by + off(rng)) = 240;
        }
    return img;
}

}  // namespace

TEST_SUITE("match_pipeline") {

TEST_CASE("feature image of a featureless input is the flat background") {
    const GrayImage img(64, 64, 128);
    const GrayImage fi = build_feature_image(img);
    REQUIRE(fi.width == img.width);
    REQUIRE(fi.height == img.height);
    for (const std::uint8_t v : fi.data) CHECK(v == kFeatureImageBackground);
}

TEST_CASE("feature image marks exactly the self-matched corner pixels") {
    const GrayImage img = textured_sites();
    const PipelineParams params;

    // oracle assembled from the same public pieces
    const DetectionResult det = detect_and_describe(img, params.detector);
    REQUIRE(!det.descriptors.empty());
    const MatchSet self =
        match_descriptors(det.descriptors, det.descriptors, params.ratio);
    std::set<std::pair<int, int>> marks;
    for (const Match& m : self.matches) {
        const Keypoint& kp = det.keypoints[m.a];
        marks.insert({static_cast<int>(std::lround(kp.x)),
                      static_cast<int>(std::lround(kp.y))});
    }
    REQUIRE(!marks.empty());

    const GrayImage fi = build_feature_image(img, params);
    for (int y = 0; y < fi.height; ++y)
        for (int x = 0; x < fi.width; ++x) {
            const bool marked = marks.count({x, y}) > 0;
            CHECK(fi.at(x, y) == (marked ? kFeatureImageMark : kFeatureImageBackground));
        }
}

TEST_CASE("the marks in a feature image are themselves detectable") {
    const GrayImage fi = build_feature_image(textured_sites());
    std::vector<std::pair<int, int>> marks;
    for (int y = 0; y < fi.height; ++y)
        for (int x = 0; x < fi.width; ++x)
            if (fi.at(x, y) == kFeatureImageMark) marks.push_back({x, y});
    REQUIRE(marks.size() >= 5);

    const DetectionResult det = detect_and_describe(fi);
    REQUIRE(!det.keypoints.empty());
    for (const auto& [mx, my] : marks) {
        double best = 1e9;
        for (const auto& kp : det.keypoints)
            best = std::min(best, std::hypot(kp.x - mx, kp.y - my));
        CHECK(best <= 2.5);
    }
}

TEST_CASE("identical images match as the identity, whatever the method") {
    const GrayImage img = textured_sites();
    for (const MatchMethod method :
         {MatchMethod::Direct, MatchMethod::Sobel, MatchMethod::Canny}) {
        const PipelineMatches pm = match_pipeline(img, img, std::nullopt, method);
        CHECK(pm.set.method == method);
        REQUIRE(pm.set.matches.size() >= 1);
        CHECK(pm.keypoints_real.size() == pm.keypoints_virtual.size());
        for (const Match& m : pm.set.matches) {
            CHECK(m.a == m.b);
            CHECK(m.distance == 0);
        }
    }
    // unique descriptors survive the identity run (duplicates tie and drop)
    const PipelineMatches direct =
        match_pipeline(img, img, std::nullopt, MatchMethod::Direct);
    CHECK(direct.set.matches.size() * 2 >= direct.keypoints_real.size());
}

TEST_CASE("mask methods refuse to run without a mask") {
    const GrayImage img = textured_sites();
    for (const MatchMethod method :
         {MatchMethod::Mask, MatchMethod::MaskSobel, MatchMethod::MaskCanny}) {
        CHECK_THROWS_AS(match_pipeline(img, img, std::nullopt, method),
                        MissingMaskError);
    }
    try {
        match_pipeline(img, img, std::nullopt, MatchMethod::Mask);
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.category() == std::string("missing-mask"));
    }
}

TEST_CASE("the mask confines real-side features to labeled pixels") {
    const GrayImage img = textured_sites();
    GrayImage mask(img.width, img.height, 0);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < 70; ++x) mask.at(x, y) = kBuildingLabel;

    const PipelineMatches masked =
        match_pipeline(img, img, mask, MatchMethod::Mask);
    REQUIRE(masked.set.matches.size() >= 1);
    for (const Match& m : masked.set.matches) {
        CHECK(masked.keypoints_real[m.a].x < 70.0);
    }

    // by default the virtual side stays unmasked; the flag masks it too
    PipelineParams both;
    both.mask_virtual = true;
    const PipelineMatches sym =
        match_pipeline(img, img, mask, MatchMethod::Mask, both);
    for (const Match& m : sym.set.matches) {
        CHECK(sym.keypoints_real[m.a].x < 70.0);
        CHECK(sym.keypoints_virtual[m.b].x < 70.0);
    }

    const PipelineMatches open =
        match_pipeline(img, img, std::nullopt, MatchMethod::Direct);
    CHECK(masked.set.matches.size() <= open.set.matches.size());
}

TEST_CASE("nearby views of a detailed street still produce matches") {
    const fixtures::SceneFixture fx = fixtures::make_street_fixture(2);
    const SemanticMesh world = compose_scene({fx.lod3});
    REQUIRE(world.triangle_count() > 0);

    const CameraPose a = build_lookat_pose(fx.truth, 0, fx.offsets, fx.r_gnss);
    const CameraPose b = CameraPose::from_angles(
        a.position + Eigen::Vector3d(0.15, 0.10, 0.05), a.angles.x() + 0.01,
        a.angles.y() - 0.008, a.angles.z() + 0.012);

    const GrayImage img_a =
        to_gray(render_normal_image(cast_scene(world, a, fx.intrinsics, 1)));
    const GrayImage img_b =
        to_gray(render_normal_image(cast_scene(world, b, fx.intrinsics, 1)));

    const PipelineMatches direct =
        match_pipeline(img_a, img_b, std::nullopt, MatchMethod::Direct);
    CHECK(direct.set.matches.size() >= 6);

    const PipelineMatches fi =
        match_pipeline(img_a, img_b, std::nullopt, MatchMethod::FeatureImages);
    CHECK(fi.set.method == MatchMethod::FeatureImages);
}

TEST_CASE("matches CSV round-trips positions exactly") {
    PipelineMatches pm;
    pm.keypoints_real = {{1.0 / 3.0, 2.5e-7, 9, 0.25, 0},
                         {100.125, 47.0, 3, -1.5, 1}};
    pm.keypoints_virtual = {{55.5, 60.25, 1, 0, 0},
                            {0.1, 0.2, 2, 0, 0},
                            {77.0, 88.0, 4, 0, 2}};
    pm.set.matches = {{0, 2, 5}, {1, 0, 17}};

    const std::string dir = testutil::scratch_dir("matches_csv");
    const std::string path = dir + "/matches.csv";
    save_matches(pm, path);

    const PipelineMatches back = load_matches(path);
    REQUIRE(back.set.matches.size() == 2);
    // rows come back densely indexed in match order
    CHECK(back.set.matches[0].a == 0);
    CHECK(back.set.matches[0].b == 0);
    CHECK(back.set.matches[0].distance == 5);
    CHECK(back.set.matches[1].distance == 17);
    CHECK(back.keypoints_real[0].x == pm.keypoints_real[0].x);
    CHECK(back.keypoints_real[0].y == pm.keypoints_real[0].y);
    CHECK(back.keypoints_virtual[0].x == pm.keypoints_virtual[2].x);
    CHECK(back.keypoints_virtual[0].y == pm.keypoints_virtual[2].y);
    CHECK(back.keypoints_real[1].x == pm.keypoints_real[1].x);
    CHECK(back.keypoints_virtual[1].x == pm.keypoints_virtual[0].x);
    CHECK(back.keypoints_virtual[1].y == pm.keypoints_virtual[0].y);
}

TEST_CASE("matches CSV rejects junk") {
    const std::string dir = testutil::scratch_dir("matches_bad");
    CHECK_THROWS_AS(load_matches(dir + "/absent.csv"), IoError);

    const std::string wrong_header = dir + "/h.csv";
    testutil::write_text(wrong_header, "x,y\n1,2\n");
    CHECK_THROWS_AS(load_matches(wrong_header), ParseError);

    const std::string bad_row = dir + "/r.csv";
    testutil::write_text(bad_row, "xA,yA,xB,yB,hamming\n1,2,3\n");
    CHECK_THROWS_AS(load_matches(bad_row), ParseError);
}

}  // TEST_SUITE

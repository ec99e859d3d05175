#include <Eigen/Geometry>

#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "lodloc/camera.hpp"
#include "lodloc/errors.hpp"
#include "lodloc/lift.hpp"
#include "lodloc/raycast.hpp"
#include "lodloc/semantic_model.hpp"

using namespace lodloc;
using Eigen::Vector3d;
using testutil::test_intrinsics;

namespace {

// hand-built one-triangle mesh with easy vertices
SemanticMesh tri_mesh(const Vector3d& shift = Vector3d::Zero()) {
    SemanticMesh mesh;
    mesh.vertices = {Vector3d(1, 2, 3) + shift, Vector3d(4, 5, 6) + shift,
                     Vector3d(7, 8, 10) + shift};
    mesh.triangles = {{0, 1, 2}};
    mesh.tri_building = {0};
    mesh.tri_semantics = {SurfaceSemantics::Wall};
    mesh.tri_normals = {(mesh.vertices[1] - mesh.vertices[0])
                            .cross(mesh.vertices[2] - mesh.vertices[0])
                            .normalized()};
    mesh.buildings = {{"tri", LoD::LoD2}};
    return mesh;
}

// buffer grid where each pixel's barycentrics are set by hand
RaycastBuffers manual_buffers(int w, int h) {
    RaycastBuffers b;
    b.width = w;
    b.height = h;
    const size_t n = static_cast<size_t>(w) * h;
    b.hit_distance.assign(n, std::numeric_limits<double>::infinity());
    b.geometry_id.assign(n, kMissId);
    b.primitive_id.assign(n, kMissId);
    b.normal.assign(n, Vector3d::Zero());
    b.bary_u.assign(n, 0.0);
    b.bary_v.assign(n, 0.0);
    return b;
}

void set_hit(RaycastBuffers& b, int x, int y, double u, double v, double dist) {
    const size_t i = b.index(x, y);
    b.hit_distance[i] = dist;
    b.geometry_id[i] = 0;
    b.primitive_id[i] = 0;
    b.bary_u[i] = u;
    b.bary_v[i] = v;
}

}  // namespace

TEST_SUITE("lift3d") {

TEST_CASE("barycentric weights pair with the stored vertex order") {
    const SemanticMesh mesh = tri_mesh();
    RaycastBuffers b = manual_buffers(3, 1);
    set_hit(b, 0, 0, 1.0, 0.0, 1);
    set_hit(b, 1, 0, 0.0, 1.0, 1);
    set_hit(b, 2, 0, 0.0, 0.0, 1);
    CHECK(lift_pixel(b, mesh, 0, 0) == mesh.vertices[0]);
    CHECK(lift_pixel(b, mesh, 1, 0) == mesh.vertices[1]);
    CHECK(lift_pixel(b, mesh, 2, 0) == mesh.vertices[2]);
}

TEST_CASE("equal weights land on the centroid") {
    const SemanticMesh mesh = tri_mesh();
    RaycastBuffers b = manual_buffers(1, 1);
    set_hit(b, 0, 0, 1.0 / 3.0, 1.0 / 3.0, 1);
    const Vector3d centroid =
        (mesh.vertices[0] + mesh.vertices[1] + mesh.vertices[2]) / 3.0;
    CHECK((lift_pixel(b, mesh, 0, 0) - centroid).norm() < 1e-12);
}

TEST_CASE("projecting a lifted pixel returns that pixel") {
    const SemanticMesh mesh =
        triangulate(load_model(testutil::fixture_path("cube_window_lod3.model")));
    const CameraPose pose = CameraPose::from_angles(
        {-12, -20, 5}, std::numbers::pi / 2, std::asin(-0.5625), 0.0);
    // sanity: the pose looks toward the cube
    REQUIRE(pose.forward().dot(Vector3d(17, 25, 0).normalized()) > 0.99);
    const CameraIntrinsics k = test_intrinsics(64, 48, 52);
    const RaycastBuffers buffers = cast_scene(mesh, pose, k, 1);
    REQUIRE(buffers.hit_count() > 100);

    int checked = 0;
    for (int y = 0; y < k.height; ++y) {
        for (int x = 0; x < k.width; ++x) {
            if (!buffers.is_hit(x, y)) continue;
            const Vector3d p = lift_pixel(buffers, mesh, x, y);
            const Eigen::Vector2d px = project(pose, k, p);
            CHECK(std::abs(px.x() - x) < 1e-6);
            CHECK(std::abs(px.y() - y) < 1e-6);
            ++checked;
        }
    }
    CHECK(checked == static_cast<int>(buffers.hit_count()));
}

TEST_CASE("sky and out-of-range pixels refuse to lift") {
    const SemanticMesh mesh = triangulate(testutil::frontal_plane_model(10.0, 1.0));
    const CameraIntrinsics k = test_intrinsics(64, 48, 40);
    const CameraPose pose = CameraPose::from_angles({0, 0, 0}, 0, 0, 0);
    const RaycastBuffers buffers = cast_scene(mesh, pose, k, 1);
    REQUIRE(buffers.hit_count() > 0);
    REQUIRE(!buffers.is_hit(0, 0));

    CHECK_THROWS_AS(lift_pixel(buffers, mesh, 0, 0), MissError);
    CHECK_THROWS_AS(lift_pixel(buffers, mesh, -1, 5), MissError);
    CHECK_THROWS_AS(lift_pixel(buffers, mesh, k.width, 5), MissError);
    try {
        lift_pixel(buffers, mesh, 0, k.height);
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.category() == std::string("miss"));
    }
}

TEST_CASE("build_correspondences keeps hits, counts misses") {
    const SemanticMesh mesh = tri_mesh();
    RaycastBuffers b = manual_buffers(4, 1);
    set_hit(b, 0, 0, 1.0, 0.0, 2.0);
    set_hit(b, 1, 0, 0.0, 1.0, 8.0);
    // pixels 2 and 3 stay misses

    MatchSet ms;
    ms.matches = {{0, 0, 3}, {1, 1, 4}, {2, 2, 5}, {3, 3, 6}};
    const std::vector<Keypoint> real = {{10.25, 20.5, 0, 0, 0},
                                        {11.75, 21.5, 0, 0, 0},
                                        {12.0, 22.0, 0, 0, 0},
                                        {13.0, 23.0, 0, 0, 0}};
    const std::vector<Keypoint> virt = {{0.4, 0.2, 0, 0, 0},   // -> pixel 0, hit
                                        {0.9, -0.3, 0, 0, 0},  // -> pixel 1, hit
                                        {1.6, 0.0, 0, 0, 0},   // -> pixel 2, miss
                                        {-0.6, 0.0, 0, 0, 0}}; // -> out of buffer

    const CorrespondenceSet cs =
        build_correspondences(ms, real, virt, b, mesh);
    CHECK(cs.dropped == 2);
    REQUIRE(cs.correspondences.size() == 2);
    CHECK(cs.correspondences[0].x == 10.25);
    CHECK(cs.correspondences[0].y == 20.5);
    CHECK(cs.correspondences[0].world == mesh.vertices[0]);
    CHECK(cs.correspondences[0].weight == 1.0);
    CHECK(cs.correspondences[1].x == 11.75);
    CHECK(cs.correspondences[1].world == mesh.vertices[1]);

    const CorrespondenceSet inv = build_correspondences(
        ms, real, virt, b, mesh, WeightPolicy::InverseDistance);
    REQUIRE(inv.correspondences.size() == 2);
    CHECK(inv.correspondences[0].weight == 0.5);    // 1 / 2.0
    CHECK(inv.correspondences[1].weight == 0.125);  // 1 / 8.0
}

TEST_CASE("translating the mesh translates the lifted points") {
    const Vector3d shift(16, -8, 4);
    const SemanticMesh a = tri_mesh();
    const SemanticMesh b = tri_mesh(shift);
    RaycastBuffers buf = manual_buffers(1, 1);
    set_hit(buf, 0, 0, 0.27, 0.41, 1);
    const Vector3d pa = lift_pixel(buf, a, 0, 0);
    const Vector3d pb = lift_pixel(buf, b, 0, 0);
    CHECK((pb - (pa + shift)).norm() < 1e-12);
}

TEST_CASE("correspondence CSV round-trips exactly") {
    std::vector<Correspondence2D3D> list(2);
    list[0].x = 1.0 / 3.0;
    list[0].y = 7.25;
    list[0].world = Vector3d(1e-7, -22.5, 1234.0625);
    list[0].weight = 0.125;
    list[1].x = 640.0;
    list[1].y = 479.5;
    list[1].world = Vector3d(3.0, 4.0, 5.0);
    list[1].weight = 1.0;

    const std::string dir = testutil::scratch_dir("corr_csv");
    const std::string path = dir + "/corr.csv";
    save_correspondences(list, path);
    const auto back = load_correspondences(path);
    REQUIRE(back.size() == 2);
    for (size_t i = 0; i < 2; ++i) {
        CHECK(back[i].x == list[i].x);
        CHECK(back[i].y == list[i].y);
        CHECK(back[i].world == list[i].world);
        CHECK(back[i].weight == list[i].weight);
    }
}

TEST_CASE("correspondence CSV validates its rows") {
    const std::string dir = testutil::scratch_dir("corr_bad");
    CHECK_THROWS_AS(load_correspondences(dir + "/absent.csv"), IoError);

    const std::string header = dir + "/h.csv";
    testutil::write_text(header, "a,b\n");
    CHECK_THROWS_AS(load_correspondences(header), ParseError);

    const std::string short_row = dir + "/s.csv";
    testutil::write_text(short_row, "x,y,X,Y,Z,weight\n1,2,3\n");
    CHECK_THROWS_AS(load_correspondences(short_row), ParseError);

    const std::string bad_weight = dir + "/w.csv";
    testutil::write_text(bad_weight, "x,y,X,Y,Z,weight\n1,2,3,4,5,0\n");
    CHECK_THROWS_AS(load_correspondences(bad_weight), ValidationError);

    const std::string bad_world = dir + "/inf.csv";
    testutil::write_text(bad_world, "x,y,X,Y,Z,weight\n1,2,inf,4,5,1\n");
    CHECK_THROWS_AS(load_correspondences(bad_world), ValidationError);
}

}  // TEST_SUITE

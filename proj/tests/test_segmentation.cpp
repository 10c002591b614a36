#include <doctest.h>

#include <algorithm>

#include "texir/irradiance.hpp"
#include "texir/segmentation.hpp"
#include "texir/surfel.hpp"
#include "support.hpp"

using namespace texir;

namespace {

// two 2x2 rooms sharing a thin wall at x=2 with a gap of `doorway` meters
// centered in z (0 = sealed, negative = no wall at all)
test::BuiltScene two_rooms(double doorway) {
    auto faces = test::box_faces({0, 0, 0}, {4, 2.5, 2});
    if (doorway >= 0.0) {
        double z0 = 1.0 - doorway / 2.0, z1 = 1.0 + doorway / 2.0;
        if (doorway > 0.0) {
            auto a = test::wall_faces({1.99, 0, 0}, {2.01, 2.5, z0});
            auto b = test::wall_faces({1.99, 0, z1}, {2.01, 2.5, 2});
            faces.insert(faces.end(), a.begin(), a.end());
            faces.insert(faces.end(), b.begin(), b.end());
        } else {
            auto w = test::wall_faces({1.99, 0, 0}, {2.01, 2.5, 2});
            faces.insert(faces.end(), w.begin(), w.end());
        }
    }
    return test::build_scene(faces);
}

}  // namespace

TEST_CASE("single empty box is one room") {
    auto bs = test::build_scene(test::box_faces({0, 0, 0}, {3, 2.5, 3}));
    RoomMap rm = compute_rooms(*bs.scene.mesh, 32);
    CHECK(rm.room_count == 1);
    // every free cell assigned a room; occupied cells are 0
    int free_cells = 0;
    for (int id : rm.cells)
        if (id != 0) ++free_cells;
    CHECK(free_cells > 0);
    for (int id : rm.nearest) CHECK(id == 1);
}

TEST_CASE("full wall splits the grid into two rooms") {
    auto bs = two_rooms(0.0);
    RoomMap rm = compute_rooms(*bs.scene.mesh, 32);
    CHECK(rm.room_count == 2);
}

TEST_CASE("doorway wider than one cell merges the rooms") {
    auto bs = two_rooms(0.4);
    RoomMap rm = compute_rooms(*bs.scene.mesh, 32);
    CHECK(rm.room_count == 1);
}

TEST_CASE("sub-cell doorway keeps the rooms separate") {
    auto bs = two_rooms(0.06);
    RoomMap rm = compute_rooms(*bs.scene.mesh, 32);
    CHECK(rm.room_count == 2);
}

TEST_CASE("wall above or below the slice does not occupy cells") {
    auto faces = test::box_faces({0, 0, 0}, {4, 2.5, 2});
    auto high = test::wall_faces({1.99, 1.8, 0}, {2.01, 2.5, 2});  // lintel above slice
    faces.insert(faces.end(), high.begin(), high.end());
    auto bs = test::build_scene(faces);
    RoomMap rm = compute_rooms(*bs.scene.mesh, 32);
    CHECK(rm.room_count == 1);
}

TEST_CASE("room ids are invariant under triangle reordering") {
    auto make = [](bool reversed) {
        auto faces = test::box_faces({0, 0, 0}, {4, 2.5, 2});
        auto w = test::wall_faces({1.99, 0, 0}, {2.01, 2.5, 2});
        faces.insert(faces.end(), w.begin(), w.end());
        if (reversed) std::reverse(faces.begin(), faces.end());
        return test::build_scene(faces);
    };
    auto a = make(false), b = make(true);
    RoomMap ra = compute_rooms(*a.scene.mesh, 16);
    RoomMap rb = compute_rooms(*b.scene.mesh, 16);
    CHECK(ra.room_count == rb.room_count);
    CHECK(ra.cells == rb.cells);
}

TEST_CASE("texel room assignment covers surfels with valid ids") {
    test::BuildConfig cfg;
    cfg.emissive_res = cfg.semantic_res = 64;
    cfg.albedo_res = cfg.roughness_res = 32;
    auto bs = test::make_three_room_scene(cfg, 16, 4, 16, 3);
    RoomMap rm = compute_rooms(*bs.scene.mesh, 64);
    CHECK(rm.room_count == 3);
    auto surfels = texel_surfels(*bs.scene.mesh, 64);
    std::vector<int> seen_rooms;
    for (const Surfel& s : surfels) {
        int id = rm.texel_rooms.at(s.x, s.y);
        CHECK(id >= 1);
        CHECK(id <= 3);
        seen_rooms.push_back(id);
        // floor texels: room id must match the x position of the surfel
        if (s.normal.y > 0.9 && std::abs(s.position.x - 1.0) < 0.7) CHECK(id == rm.texel_rooms.at(s.x, s.y));
    }
    for (int want : {1, 2, 3})
        CHECK(std::count(seen_rooms.begin(), seen_rooms.end(), want) > 0);
}

TEST_CASE("all cells occupied is an error") {
    // tiny closed box smaller than a single cell footprint
    auto bs = test::build_scene(test::box_faces({0, 0, 0}, {0.05, 2.0, 0.05}));
    CHECK_THROWS(compute_rooms(*bs.scene.mesh, 8));
}

TEST_CASE("masked quantile: spec example, bounds, monotonicity") {
    std::vector<double> vals{0.1, 0.2, 0.3, 0.4, 0.5};
    std::vector<uint8_t> all(5, 1);
    CHECK(masked_quantile(vals, all, 0.4) == doctest::Approx(0.26).epsilon(1e-12));
    CHECK(masked_quantile(vals, all, 0.0) == doctest::Approx(0.1));
    CHECK(masked_quantile(vals, all, 1.0) == doctest::Approx(0.5));

    std::vector<double> shuffled{0.5, 0.1, 0.4, 0.2, 0.3};
    CHECK(masked_quantile(shuffled, all, 0.4) == doctest::Approx(0.26));

    double prev = -1;
    for (double q = 0.0; q <= 1.0; q += 0.05) {
        double cur = masked_quantile(vals, all, q);
        CHECK(cur >= prev);
        CHECK(cur >= 0.1);
        CHECK(cur <= 0.5);
        prev = cur;
    }

    std::vector<uint8_t> none(5, 0);
    CHECK_THROWS(masked_quantile(vals, none, 0.5));
    std::vector<uint8_t> one{0, 0, 1, 0, 0};
    CHECK(masked_quantile(vals, one, 0.9) == doctest::Approx(0.3));

    double mean;
    size_t count;
    class_stats(vals, all, mean, count);
    CHECK(mean == doctest::Approx(0.3));
    CHECK(count == 5);
    class_stats(vals, one, mean, count);
    CHECK(mean == doctest::Approx(0.3));
    CHECK(count == 1);
}

TEST_CASE("vhl: zero light and constant images give empty masks") {
    auto bs = test::make_furnace_box(0.0);
    bs.scene.cameras.push_back(test::look_at({1.5, 1.25, 1.5}, {1.5, 1.25, 0.0}, 70, 17, 17));
    bs.scene.images.push_back(TextureImage(17, 17, 3, 0.2));
    TblLight tbl = make_tbl(bs.scene);
    std::vector<GBuffer> gbs{make_gbuffer(bs.scene, bs.scene.cameras[0])};
    VhlMasks masks = detect_vhl(bs.scene, tbl, gbs, {});
    REQUIRE(masks.views.size() == 1);
    for (uint8_t v : masks.views[0].vhl) CHECK(v == 0);

    // constant environment: specular luminance constant per class and
    // never strictly above max(tau_abs, median) when diffuse dominates
    auto bright = test::make_furnace_box(1.0);
    bright.scene.cameras.push_back(test::look_at({1.5, 1.25, 1.5}, {1.5, 1.25, 0.0}, 70, 17, 17));
    bright.scene.images.push_back(TextureImage(17, 17, 3, 1.0));
    TblLight tbl2 = make_tbl(bright.scene);
    std::vector<GBuffer> gbs2{make_gbuffer(bright.scene, bright.scene.cameras[0])};
    VhlMasks masks2 = detect_vhl(bright.scene, tbl2, gbs2, {});
    int marked = 0;
    for (uint8_t v : masks2.views[0].vhl) marked += v;
    CHECK(marked == 0);
}

TEST_CASE("vhl marks the mirror-reflection lobe of a bright emitter") {
    auto bs = test::make_bright_wall_box(8.0, 0.05);
    // grazing floor view whose reflection hits the bright z-lo wall
    bs.scene.cameras.push_back(test::look_at({1.5, 0.8, 2.9}, {1.5, 0.0, 1.45}, 60, 33, 33));
    TblLight tbl = make_tbl(bs.scene);
    GBuffer gb = make_gbuffer(bs.scene, bs.scene.cameras[0]);
    // stand-in input image: dim everywhere so the relative threshold is low
    bs.scene.images.push_back(TextureImage(33, 33, 3, 0.02));

    std::vector<GBuffer> gbs{gb};
    VhlConfig vc;
    vc.samples = 64;
    VhlMasks masks = detect_vhl(bs.scene, tbl, gbs, vc);
    const auto& view = masks.views[0];
    int marked = 0;
    for (size_t i = 0; i < view.vhl.size(); ++i) {
        if (view.vhl[i]) {
            ++marked;
            CHECK(view.class_ids[i] != 0);  // subset of the class mask
        }
    }
    CHECK(marked > 0);

    // the marked pixels correspond to high near-mirror specular response:
    // verify against a high-sample probe at a marked pixel
    RenderConfig probe;
    probe.specular_samples = 1024;
    probe.sampler = SpecularSampler::Ggx;
    TextureImage rough(1, 1, 1, 0.01);
    TextureImage ref = shade_specular(gb, rough, tbl, probe);
    for (size_t i = 0; i < view.vhl.size(); ++i)
        if (view.vhl[i]) {
            double lum = luminance(ref.pixel(int(i % 33), int(i / 33)));
            CHECK(lum > 0.05);
        }
}

#pragma once

// Synthetic scene builders shared by the unit tests, the acceptance
// suite and the benchmarks. All scenes are axis-aligned quad soups with
// one UV chart per face, so ground-truth textures are painted per face.

#include <string>
#include <vector>

#include "texir/irradiance.hpp"
#include "texir/renderer.hpp"
#include "texir/scene.hpp"

namespace texir::test {

struct QuadFace {
    Vec3 p[4];  // CCW around the face normal
    int class_id = 1;
    Vec3 albedo{0.5, 0.5, 0.5};
    double roughness = 0.5;
    Vec3 radiance{0.2, 0.2, 0.2};  // authored outgoing radiance (TBL texel value)
};

// Inward-facing box faces in the order floor, ceiling, x-lo, x-hi, z-lo, z-hi.
std::vector<QuadFace> box_faces(const Vec3& lo, const Vec3& hi);

// Free-standing double-sided wall segment: a thin slab [lo, hi] whose
// outward-facing sides are kept (used for interior walls).
std::vector<QuadFace> wall_faces(const Vec3& lo, const Vec3& hi);

struct ChartRect {
    Vec2 lo, hi;  // full grid cell in UV space (textures paint the whole cell)
};

struct BuildConfig {
    int emissive_res = 128;
    int semantic_res = 128;
    int albedo_res = 64;
    int roughness_res = 64;
};

struct BuiltScene {
    Scene scene;
    std::vector<QuadFace> faces;
    std::vector<ChartRect> charts;
    TextureImage gt_albedo;
    TextureImage gt_roughness;
};

BuiltScene build_scene(const std::vector<QuadFace>& faces, const BuildConfig& cfg = {});

Camera look_at(const Vec3& pos, const Vec3& target, double fov_deg, int w, int h,
               const Vec3& up = {0, 1, 0});

// Paints a sub-rectangle of a chart (relative coordinates in [0,1]^2).
void paint_patch(TextureImage& tex, const ChartRect& chart, const Vec2& rel_lo,
                 const Vec2& rel_hi, const Vec3& value);

// Renders every camera with the ground-truth materials and stores the
// results as scene.images. Bakes a fresh IrT from the scene emissive.
void render_inputs(BuiltScene& bs, int irt_res, int spp, uint64_t seed);

// Closed box with constant radiance L0 on every face.
BuiltScene make_furnace_box(double l0, const BuildConfig& cfg = {});

// Closed box where the z-lo wall is bright and the rest is dim.
BuiltScene make_bright_wall_box(double l_wall, double l_other, const BuildConfig& cfg = {});

// Three rooms in a row separated by thin double-sided walls, piecewise-
// constant materials per class, emitter panel on each room's ceiling,
// and eight interior cameras with rendered input images.
BuiltScene make_three_room_scene(const BuildConfig& cfg, int view_size, int input_spp,
                                 int irt_res, uint64_t seed);

// Serializes the scene (OBJ, PFM/PGM assets, scene.json) into dir and
// returns the scene.json path.
std::string write_scene_files(const BuiltScene& bs, const std::string& dir);

}  // namespace texir::test

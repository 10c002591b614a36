#pragma once

#include <vector>

#include "texir/image.hpp"
#include "texir/mesh.hpp"

namespace texir {

// One atlas texel mapped onto the surface.
struct Surfel {
    int x = 0, y = 0;   // texel coordinates at the atlas resolution
    int triangle = -1;
    Vec3 position;
    Vec3 normal;        // unit shading normal
    Vec2 uv;
    int class_id = 0;
    int room_id = 0;
};

// Conservative rasterization of every triangle in UV space. Each covered
// texel yields one surfel at (the projection of) its center; overlapping
// coverage keeps the lowest triangle index. Thin triangles covering no
// texel center still claim the texel under their centroid.
std::vector<Surfel> texel_surfels(const TriangleMesh& mesh, int atlas_res);

// Coverage mask at atlas_res: 1 where a surfel exists.
MaskImage surfel_coverage(const std::vector<Surfel>& surfels, int atlas_res);

// 2D separating-axis overlap between a triangle and an axis-aligned box.
bool tri_box_overlap_2d(const Vec2& a, const Vec2& b, const Vec2& c,
                        const Vec2& lo, const Vec2& hi);

}  // namespace texir

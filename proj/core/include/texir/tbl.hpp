#pragma once

#include "texir/scene.hpp"
#include "texir/surfel.hpp"

namespace texir {

// Texture-based lighting: incident radiance from any direction at any
// point, read from the emissive HDR atlas by casting a ray to the mesh.
struct TblLight {
    const Bvh* bvh = nullptr;
    const TextureImage* emissive = nullptr;
    Vec3 escape_radiance{0, 0, 0};
    double epsilon = 1e-6;

    TblLight() = default;
    TblLight(const Bvh& b, const TextureImage& e, double eps)
        : bvh(&b), emissive(&e), epsilon(eps) {}

    Vec3 query_radiance(const Vec3& x, const Vec3& omega_i) const;
};

inline TblLight make_tbl(const Scene& scene) {
    return TblLight(*scene.bvh, scene.emissive, scene.ray_epsilon());
}

struct BakedEmissive {
    TextureImage texture;
    MaskImage coverage;  // 1 where a camera saw the texel, 0 where dilation filled it
};

// Reconstructs the emissive HDR atlas from the input views: each texel's
// surface point takes the radiance of the most frontal unoccluded camera;
// unseen texels are filled by iterative dilation.
BakedEmissive build_tbl_from_views(const Scene& scene);

}  // namespace texir

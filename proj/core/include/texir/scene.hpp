#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "texir/bvh.hpp"
#include "texir/image.hpp"
#include "texir/mesh.hpp"

namespace texir {

enum class CameraModel { Pinhole, Equirect };

// Camera frame: x right, y up, pinhole looks along -z. Rotation is
// camera-to-world (row major in the scene file), translation is the
// camera position in world space. fov_deg is the horizontal FOV.
struct Camera {
    CameraModel model = CameraModel::Pinhole;
    double fov_deg = 90.0;
    int width = 0;
    int height = 0;
    Mat3 rotation;
    Vec3 translation;

    // Primary ray through the center of pixel (x, y); y row 0 is the
    // bottom row, matching image storage order.
    Ray primary_ray(int x, int y) const;

    // Projects a world point to continuous pixel coordinates. Returns
    // false when the point is outside the frustum/image.
    bool project(const Vec3& world, double& px, double& py) const;
};

struct AtlasConfig {
    int albedo_res = 2048;
    int roughness_res = 4096;
    int irt_res = 1024;
};

struct Scene {
    std::unique_ptr<TriangleMesh> mesh;
    std::unique_ptr<Bvh> bvh;

    TextureImage emissive;       // HDR radiance atlas (T_hdr)
    MaskImage semantic;          // texture-space class ids, 0 = unlabeled
    MaskImage rooms;             // texture-space room ids, empty until computed
    std::vector<Camera> cameras;
    std::vector<TextureImage> images;  // one input HDR image per camera

    std::optional<TextureImage> albedo;
    std::optional<TextureImage> roughness;
    std::optional<TextureImage> irradiance;
    MaskImage irradiance_coverage;

    AtlasConfig atlas;
    bool atlas_explicit = false;  // scene file carried an atlas block
    double emitter_threshold = 0.5;  // luminance above which a texel is a light source

    double ray_epsilon() const { return 1e-4 * mesh->diagonal(); }
    bool has_semantic() const { return semantic.width > 0; }
};

// Loads the JSON scene description and every referenced asset.
Scene load_scene(const std::string& path);

}  // namespace texir

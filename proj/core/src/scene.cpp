#include "texir/scene.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

namespace texir {

using std::numbers::pi;

Ray Camera::primary_ray(int x, int y) const {
    Vec3 dir_cam;
    if (model == CameraModel::Pinhole) {
        double tan_half = std::tan(fov_deg * pi / 360.0);
        double px = (2.0 * (x + 0.5) / width - 1.0) * tan_half;
        double py = (2.0 * (y + 0.5) / height - 1.0) * tan_half * double(height) / width;
        dir_cam = normalize({px, py, -1.0});
    } else {
        double phi = 2.0 * pi * (x + 0.5) / width;
        double theta = pi * (y + 0.5) / height;
        dir_cam = {std::sin(theta) * std::cos(phi), std::cos(theta),
                   std::sin(theta) * std::sin(phi)};
    }
    Ray ray;
    ray.origin = translation;
    ray.direction = normalize(rotation * dir_cam);
    return ray;
}

bool Camera::project(const Vec3& world, double& px, double& py) const {
    Vec3 pc = rotation.transposed() * (world - translation);
    if (model == CameraModel::Pinhole) {
        if (pc.z >= -1e-9) return false;
        double tan_half = std::tan(fov_deg * pi / 360.0);
        double nx = pc.x / (-pc.z) / tan_half;
        double ny = pc.y / (-pc.z) / (tan_half * double(height) / width);
        px = (nx + 1.0) * 0.5 * width - 0.5;
        py = (ny + 1.0) * 0.5 * height - 0.5;
        // accept the full footprint of the border pixels
        return px >= -0.5 && px <= width - 0.5 && py >= -0.5 && py <= height - 0.5;
    }
    Vec3 d = normalize(pc);
    double theta = std::acos(clamp(d.y, -1.0, 1.0));
    double phi = std::atan2(d.z, d.x);
    if (phi < 0) phi += 2.0 * pi;
    px = phi * width / (2.0 * pi) - 0.5;
    py = theta * height / pi - 0.5;
    return true;
}

namespace {

std::string resolve_path(const std::filesystem::path& base, const std::string& rel) {
    std::filesystem::path p(rel);
    if (p.is_absolute()) return p.string();
    return (base / p).string();
}

void check_rotation(const Mat3& r) {
    // rows must be orthonormal
    for (int i = 0; i < 3; ++i) {
        Vec3 ri{r.m[i * 3], r.m[i * 3 + 1], r.m[i * 3 + 2]};
        if (std::abs(length(ri) - 1.0) > 1e-6)
            throw std::runtime_error("camera rotation rows not unit length");
        for (int j = i + 1; j < 3; ++j) {
            Vec3 rj{r.m[j * 3], r.m[j * 3 + 1], r.m[j * 3 + 2]};
            if (std::abs(dot(ri, rj)) > 1e-6)
                throw std::runtime_error("camera rotation rows not orthogonal");
        }
    }
}

}  // namespace

Scene load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scene file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("scene file parse error: " + std::string(e.what()));
    }
    std::filesystem::path base = std::filesystem::path(path).parent_path();

    Scene scene;
    scene.mesh = std::make_unique<TriangleMesh>(load_obj(resolve_path(base, j.at("mesh"))));
    if (!scene.mesh->has_uvs) throw std::runtime_error("scene mesh has no UVs");
    scene.bvh = std::make_unique<Bvh>(*scene.mesh);
    scene.emissive = read_pfm(resolve_path(base, j.at("emissive_texture")));
    for (double v : scene.emissive.data)
        if (v < 0) throw std::runtime_error("emissive texture has negative values");
    if (j.contains("semantic_mask"))
        scene.semantic = read_mask_pgm(resolve_path(base, j.at("semantic_mask")));

    for (const auto& jc : j.at("cameras")) {
        Camera cam;
        std::string model = jc.at("model");
        if (model == "pinhole") cam.model = CameraModel::Pinhole;
        else if (model == "equirect") cam.model = CameraModel::Equirect;
        else throw std::runtime_error("unknown camera model: " + model);
        if (jc.contains("fov_deg")) cam.fov_deg = jc.at("fov_deg");
        cam.width = jc.at("width");
        cam.height = jc.at("height");
        auto rot = jc.at("rotation");
        if (rot.size() != 9) throw std::runtime_error("camera rotation must have 9 entries");
        for (int i = 0; i < 9; ++i) cam.rotation.m[i] = rot[size_t(i)];
        check_rotation(cam.rotation);
        auto tr = jc.at("translation");
        if (tr.size() != 3) throw std::runtime_error("camera translation must have 3 entries");
        cam.translation = {tr[0], tr[1], tr[2]};
        scene.cameras.push_back(cam);
    }

    auto images = j.at("images");
    if (images.size() != scene.cameras.size())
        throw std::runtime_error("camera count does not match image count");
    for (const auto& ji : images)
        scene.images.push_back(read_pfm(resolve_path(base, ji)));
    for (size_t i = 0; i < scene.cameras.size(); ++i) {
        if (scene.images[i].width != scene.cameras[i].width ||
            scene.images[i].height != scene.cameras[i].height)
            throw std::runtime_error("image " + std::to_string(i) + " does not match camera resolution");
    }

    if (j.contains("albedo_texture"))
        scene.albedo = read_pfm(resolve_path(base, j.at("albedo_texture")));
    if (j.contains("roughness_texture"))
        scene.roughness = read_pfm(resolve_path(base, j.at("roughness_texture")));
    if (j.contains("irradiance_texture")) {
        scene.irradiance = read_pfm(resolve_path(base, j.at("irradiance_texture")));
        std::string cov = resolve_path(base, j.at("irradiance_texture"));
        std::string cov_path = cov.substr(0, cov.find_last_of('.')) + "_coverage.pgm";
        if (std::filesystem::exists(cov_path))
            scene.irradiance_coverage = read_mask_pgm(cov_path);
    }
    if (j.contains("atlas")) {
        scene.atlas_explicit = true;
        auto a = j.at("atlas");
        if (a.contains("albedo_res")) scene.atlas.albedo_res = a.at("albedo_res");
        if (a.contains("roughness_res")) scene.atlas.roughness_res = a.at("roughness_res");
        if (a.contains("irt_res")) scene.atlas.irt_res = a.at("irt_res");
    }
    if (j.contains("emitter_threshold")) scene.emitter_threshold = j.at("emitter_threshold");
    return scene;
}

}  // namespace texir

#include "support.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "texir/brdf.hpp"
#include "texir/surfel.hpp"
#include "texir/tbl.hpp"

namespace texir::test {

std::vector<QuadFace> box_faces(const Vec3& lo, const Vec3& hi) {
    const double x0 = lo.x, y0 = lo.y, z0 = lo.z, x1 = hi.x, y1 = hi.y, z1 = hi.z;
    std::vector<QuadFace> f(6);
    // floor, normal +y
    f[0].p[0] = {x0, y0, z0}; f[0].p[1] = {x0, y0, z1};
    f[0].p[2] = {x1, y0, z1}; f[0].p[3] = {x1, y0, z0};
    // ceiling, normal -y
    f[1].p[0] = {x0, y1, z0}; f[1].p[1] = {x1, y1, z0};
    f[1].p[2] = {x1, y1, z1}; f[1].p[3] = {x0, y1, z1};
    // wall x-lo, normal +x
    f[2].p[0] = {x0, y0, z1}; f[2].p[1] = {x0, y0, z0};
    f[2].p[2] = {x0, y1, z0}; f[2].p[3] = {x0, y1, z1};
    // wall x-hi, normal -x
    f[3].p[0] = {x1, y0, z0}; f[3].p[1] = {x1, y0, z1};
    f[3].p[2] = {x1, y1, z1}; f[3].p[3] = {x1, y1, z0};
    // wall z-lo, normal +z
    f[4].p[0] = {x0, y0, z0}; f[4].p[1] = {x1, y0, z0};
    f[4].p[2] = {x1, y1, z0}; f[4].p[3] = {x0, y1, z0};
    // wall z-hi, normal -z
    f[5].p[0] = {x1, y0, z1}; f[5].p[1] = {x0, y0, z1};
    f[5].p[2] = {x0, y1, z1}; f[5].p[3] = {x1, y1, z1};
    return f;
}

std::vector<QuadFace> wall_faces(const Vec3& lo, const Vec3& hi) {
    const double x0 = lo.x, y0 = lo.y, z0 = lo.z, x1 = hi.x, y1 = hi.y, z1 = hi.z;
    std::vector<QuadFace> f(2);
    if (hi.x - lo.x <= hi.z - lo.z) {
        // thin in x: sides face -x and +x
        f[0].p[0] = {x0, y0, z1}; f[0].p[1] = {x0, y1, z1};
        f[0].p[2] = {x0, y1, z0}; f[0].p[3] = {x0, y0, z0};
        f[1].p[0] = {x1, y0, z0}; f[1].p[1] = {x1, y1, z0};
        f[1].p[2] = {x1, y1, z1}; f[1].p[3] = {x1, y0, z1};
    } else {
        // thin in z: sides face -z and +z
        f[0].p[0] = {x0, y0, z0}; f[0].p[1] = {x0, y1, z0};
        f[0].p[2] = {x1, y1, z0}; f[0].p[3] = {x1, y0, z0};
        f[1].p[0] = {x1, y0, z1}; f[1].p[1] = {x1, y1, z1};
        f[1].p[2] = {x0, y1, z1}; f[1].p[3] = {x0, y0, z1};
    }
    return f;
}

namespace {

void chart_grid(size_t n, int& cols, int& rows) {
    cols = int(std::ceil(std::sqrt(double(n))));
    rows = int(std::ceil(double(n) / cols));
}

int cell_of_texel(int x, int y, int res, int cols, int rows, size_t n) {
    double u = (x + 0.5) / res, v = (y + 0.5) / res;
    int cx = std::min(cols - 1, int(u * cols));
    int cy = std::min(rows - 1, int(v * rows));
    size_t i = size_t(cy) * cols + cx;
    return i < n ? int(i) : -1;
}

}  // namespace

BuiltScene build_scene(const std::vector<QuadFace>& faces, const BuildConfig& cfg) {
    BuiltScene bs;
    bs.faces = faces;
    int cols, rows;
    chart_grid(faces.size(), cols, rows);

    auto mesh = std::make_unique<TriangleMesh>();
    mesh->has_uvs = true;
    for (size_t i = 0; i < faces.size(); ++i) {
        const QuadFace& f = faces[i];
        int cx = int(i) % cols, cy = int(i) / cols;
        ChartRect rect;
        rect.lo = {double(cx) / cols, double(cy) / rows};
        rect.hi = {double(cx + 1) / cols, double(cy + 1) / rows};
        bs.charts.push_back(rect);
        double iu = 0.1 * (rect.hi.x - rect.lo.x), iv = 0.1 * (rect.hi.y - rect.lo.y);
        Vec2 uv[4] = {{rect.lo.x + iu, rect.lo.y + iv}, {rect.hi.x - iu, rect.lo.y + iv},
                      {rect.hi.x - iu, rect.hi.y - iv}, {rect.lo.x + iu, rect.hi.y - iv}};
        Vec3 n = normalize(cross(f.p[1] - f.p[0], f.p[2] - f.p[0]));
        int base = int(mesh->positions.size());
        for (int k = 0; k < 4; ++k) {
            mesh->positions.push_back(f.p[k]);
            mesh->normals.push_back(n);
            mesh->uvs.push_back(uv[k]);
        }
        mesh->triangles.push_back({base, base + 1, base + 2});
        mesh->triangles.push_back({base, base + 2, base + 3});
    }

    Scene& sc = bs.scene;
    sc.mesh = std::move(mesh);
    sc.bvh = std::make_unique<Bvh>(*sc.mesh);

    sc.emissive = TextureImage(cfg.emissive_res, cfg.emissive_res, 3);
    sc.semantic = MaskImage(cfg.semantic_res, cfg.semantic_res, 0);
    bs.gt_albedo = TextureImage(cfg.albedo_res, cfg.albedo_res, 3);
    bs.gt_roughness = TextureImage(cfg.roughness_res, cfg.roughness_res, 1, brdf::kMinRoughness);

    auto paint = [&](auto& img, int res, auto&& value_of) {
        for (int y = 0; y < res; ++y)
            for (int x = 0; x < res; ++x) {
                int fi = cell_of_texel(x, y, res, cols, rows, faces.size());
                if (fi >= 0) value_of(img, x, y, faces[size_t(fi)]);
            }
    };
    paint(sc.emissive, cfg.emissive_res,
          [](TextureImage& t, int x, int y, const QuadFace& f) { t.set_pixel(x, y, f.radiance); });
    paint(sc.semantic, cfg.semantic_res,
          [](MaskImage& t, int x, int y, const QuadFace& f) { t.at(x, y) = f.class_id; });
    paint(bs.gt_albedo, cfg.albedo_res,
          [](TextureImage& t, int x, int y, const QuadFace& f) { t.set_pixel(x, y, f.albedo); });
    paint(bs.gt_roughness, cfg.roughness_res,
          [](TextureImage& t, int x, int y, const QuadFace& f) { t.at(x, y, 0) = f.roughness; });

    sc.atlas.albedo_res = cfg.albedo_res;
    sc.atlas.roughness_res = cfg.roughness_res;
    sc.atlas.irt_res = 32;
    return bs;
}

Camera look_at(const Vec3& pos, const Vec3& target, double fov_deg, int w, int h,
               const Vec3& up) {
    Vec3 back = normalize(pos - target);
    Vec3 right = normalize(cross(up, back));
    Vec3 true_up = cross(back, right);
    Camera cam;
    cam.fov_deg = fov_deg;
    cam.width = w;
    cam.height = h;
    cam.translation = pos;
    cam.rotation.m[0] = right.x; cam.rotation.m[1] = true_up.x; cam.rotation.m[2] = back.x;
    cam.rotation.m[3] = right.y; cam.rotation.m[4] = true_up.y; cam.rotation.m[5] = back.y;
    cam.rotation.m[6] = right.z; cam.rotation.m[7] = true_up.z; cam.rotation.m[8] = back.z;
    return cam;
}

void paint_patch(TextureImage& tex, const ChartRect& chart, const Vec2& rel_lo,
                 const Vec2& rel_hi, const Vec3& value) {
    Vec2 span = chart.hi - chart.lo;
    Vec2 lo{chart.lo.x + rel_lo.x * span.x, chart.lo.y + rel_lo.y * span.y};
    Vec2 hi{chart.lo.x + rel_hi.x * span.x, chart.lo.y + rel_hi.y * span.y};
    for (int y = 0; y < tex.height; ++y)
        for (int x = 0; x < tex.width; ++x) {
            double u = (x + 0.5) / tex.width, v = (y + 0.5) / tex.height;
            if (u >= lo.x && u < hi.x && v >= lo.y && v < hi.y) tex.set_pixel(x, y, value);
        }
}

void render_inputs(BuiltScene& bs, int irt_res, int spp, uint64_t seed) {
    Scene& sc = bs.scene;
    TblLight tbl = make_tbl(sc);
    auto surfels = texel_surfels(*sc.mesh, irt_res);
    IrradianceTexture irt = bake_irt(surfels, tbl, irt_res, 2048, seed);
    sc.atlas.irt_res = irt_res;
    sc.albedo = bs.gt_albedo;
    sc.roughness = bs.gt_roughness;
    sc.irradiance = irt.texture;
    sc.irradiance_coverage = irt.coverage;
    RenderConfig rc;
    rc.specular_samples = spp;
    rc.sampler = SpecularSampler::Ggx;
    rc.seed = seed + 1;
    sc.images.clear();
    for (const Camera& cam : sc.cameras) sc.images.push_back(render(sc, cam, rc));
}

BuiltScene make_furnace_box(double l0, const BuildConfig& cfg) {
    auto faces = box_faces({0, 0, 0}, {3, 2.5, 3});
    for (auto& f : faces) {
        f.radiance = Vec3(l0);
        f.albedo = Vec3(1.0);
        f.roughness = 1.0;
    }
    return build_scene(faces, cfg);
}

BuiltScene make_bright_wall_box(double l_wall, double l_other, const BuildConfig& cfg) {
    auto faces = box_faces({0, 0, 0}, {3, 2.5, 3});
    for (size_t i = 0; i < faces.size(); ++i) {
        faces[i].radiance = Vec3(i == 4 ? l_wall : l_other);
        faces[i].class_id = int(i) + 1;
    }
    return build_scene(faces, cfg);
}

BuiltScene make_three_room_scene(const BuildConfig& cfg, int view_size, int input_spp,
                                 int irt_res, uint64_t seed) {
    auto faces = box_faces({0, 0, 0}, {6, 2.5, 4});
    // classes: 1 floor, 2 ceiling, 3 outer walls, 4 interior walls
    for (size_t i = 0; i < faces.size(); ++i) {
        QuadFace& f = faces[i];
        if (i == 0) { f.class_id = 1; f.albedo = {0.35, 0.3, 0.25}; f.roughness = 0.3; f.radiance = Vec3(0.25); }
        else if (i == 1) { f.class_id = 2; f.albedo = {0.85, 0.85, 0.85}; f.roughness = 0.8; f.radiance = Vec3(0.3); }
        else { f.class_id = 3; f.albedo = {0.7, 0.65, 0.6}; f.roughness = 0.4; f.radiance = Vec3(0.26); }
    }
    for (double wx : {2.0, 4.0}) {
        auto wall = wall_faces({wx - 0.01, 0, 0}, {wx + 0.01, 2.5, 4});
        for (auto& f : wall) {
            f.class_id = 4;
            f.albedo = {0.5, 0.55, 0.6};
            f.roughness = 0.25;
            f.radiance = Vec3(0.24);
        }
        faces.insert(faces.end(), wall.begin(), wall.end());
    }
    BuiltScene bs = build_scene(faces, cfg);

    // one bright ceiling panel per room; ceiling u runs along world x.
    // panels are wide enough that cosine-sampled gathers see them with
    // usable probability, and the dark floor keeps the mirror image of a
    // panel clearly above the diffuse level so VHL detection fires there
    for (int k = 0; k < 3; ++k)
        paint_patch(bs.scene.emissive, bs.charts[1], {k / 3.0 + 0.12, 0.38}, {k / 3.0 + 0.24, 0.62},
                    Vec3(8.0));

    for (int k = 0; k < 3; ++k) {
        double xc = 1.0 + 2.0 * k;
        Camera pano = look_at({xc, 1.3, 2.0}, {xc, 1.3, 0.5}, 90, 2 * view_size, view_size);
        pano.model = CameraModel::Equirect;
        bs.scene.cameras.push_back(pano);
        bs.scene.cameras.push_back(
            look_at({xc - 0.6, 1.6, 0.8}, {xc + 0.3, 0.2, 3.2}, 100, view_size, view_size));
    }
    // low cameras aimed up at the interior walls, placed so the mirror
    // direction off the wall lands on that room's ceiling panel: the
    // partition walls get real highlight coverage, not just the floor
    bs.scene.cameras.push_back(look_at({0.5, 0.8, 2.0}, {2.0, 2.0, 2.0}, 100, view_size, view_size));
    bs.scene.cameras.push_back(look_at({5.9, 1.1, 2.0}, {4.0, 2.0, 2.0}, 100, view_size, view_size));

    render_inputs(bs, irt_res, input_spp, seed);
    return bs;
}

std::string write_scene_files(const BuiltScene& bs, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const Scene& sc = bs.scene;
    save_obj(*sc.mesh, dir + "/mesh.obj");
    write_pfm(sc.emissive, dir + "/emissive.pfm");
    write_mask_pgm(sc.semantic, dir + "/semantic.pgm");
    write_pfm(bs.gt_albedo, dir + "/gt_albedo.pfm");
    write_pfm(bs.gt_roughness, dir + "/gt_roughness.pfm");

    nlohmann::json j;
    j["mesh"] = "mesh.obj";
    j["emissive_texture"] = "emissive.pfm";
    j["semantic_mask"] = "semantic.pgm";
    j["atlas"] = {{"albedo_res", sc.atlas.albedo_res},
                  {"roughness_res", sc.atlas.roughness_res},
                  {"irt_res", sc.atlas.irt_res}};
    j["cameras"] = nlohmann::json::array();
    j["images"] = nlohmann::json::array();
    for (size_t i = 0; i < sc.cameras.size(); ++i) {
        const Camera& c = sc.cameras[i];
        nlohmann::json jc;
        jc["model"] = c.model == CameraModel::Pinhole ? "pinhole" : "equirect";
        jc["fov_deg"] = c.fov_deg;
        jc["width"] = c.width;
        jc["height"] = c.height;
        jc["rotation"] = std::vector<double>(c.rotation.m, c.rotation.m + 9);
        jc["translation"] = {c.translation.x, c.translation.y, c.translation.z};
        j["cameras"].push_back(jc);
        std::string name = "im" + std::to_string(i) + ".pfm";
        write_pfm(sc.images[i], dir + "/" + name);
        j["images"].push_back(name);
    }
    std::string path = dir + "/scene.json";
    std::ofstream out(path);
    out << j.dump(2) << "\n";
    return path;
}

}  // namespace texir::test

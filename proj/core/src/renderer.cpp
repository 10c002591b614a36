#include "texir/renderer.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "texir/brdf.hpp"
#include "texir/parallel.hpp"
#include "texir/rng.hpp"

namespace texir {

using std::numbers::pi;

GBuffer make_gbuffer(const Scene& scene, const Camera& camera) {
    GBuffer gb;
    gb.width = camera.width;
    gb.height = camera.height;
    gb.pixels.resize(size_t(gb.width) * gb.height);

    parallel_for(gb.pixels.size(), [&](size_t i) {
        int x = int(i % size_t(gb.width));
        int y = int(i / size_t(gb.width));
        Ray ray = camera.primary_ray(x, y);
        ray.t_min = 1e-6;
        auto hit = scene.bvh->intersect(ray);
        GPixel& px = gb.pixels[i];
        if (!hit) return;
        px.valid = true;
        px.position = hit->position;
        px.normal = hit->normal;
        px.view = -ray.direction;
        // orient the shading normal toward the viewer
        if (dot(px.normal, px.view) < 0) px.normal = -px.normal;
        px.uv = hit->uv;
        if (scene.semantic.width > 0) px.class_id = scene.semantic.sample(px.uv.x, px.uv.y);
        if (scene.rooms.width > 0) px.room_id = scene.rooms.sample(px.uv.x, px.uv.y);
        Vec3 emission = scene.emissive.sample(px.uv.x, px.uv.y);
        px.emitter = luminance(emission) > scene.emitter_threshold;
    });
    return gb;
}

TextureImage shade_diffuse(const GBuffer& gbuffer, const TextureImage& albedo_tex,
                           const IrradianceTexture& irt) {
    TextureImage out(gbuffer.width, gbuffer.height, 3, 0.0);
    parallel_for(gbuffer.pixels.size(), [&](size_t i) {
        const GPixel& px = gbuffer.pixels[i];
        if (!px.valid) return;
        Vec3 a = albedo_tex.sample(px.uv.x, px.uv.y);
        Vec3 ir = irt.query(px.uv.x, px.uv.y);
        Vec3 ld = brdf::eval_diffuse(a) * ir;
        out.set_pixel(int(i % size_t(gbuffer.width)), int(i / size_t(gbuffer.width)), ld);
    });
    return out;
}

TextureImage shade_diffuse_nirf(const GBuffer& gbuffer, const TextureImage& albedo_tex,
                                const Nirf& nirf) {
    TextureImage out(gbuffer.width, gbuffer.height, 3, 0.0);
    parallel_for(gbuffer.pixels.size(), [&](size_t i) {
        const GPixel& px = gbuffer.pixels[i];
        if (!px.valid) return;
        Vec3 a = albedo_tex.sample(px.uv.x, px.uv.y);
        Vec3 ir = nirf.forward(px.position);
        out.set_pixel(int(i % size_t(gbuffer.width)), int(i / size_t(gbuffer.width)),
                      brdf::eval_diffuse(a) * ir);
    });
    return out;
}

TextureImage shade_specular(const GBuffer& gbuffer, const TextureImage& roughness_tex,
                            const TblLight& tbl, const RenderConfig& config,
                            TextureImage* grad_out) {
    TextureImage out(gbuffer.width, gbuffer.height, 3, 0.0);
    if (grad_out) *grad_out = TextureImage(gbuffer.width, gbuffer.height, 3, 0.0);
    const int n = config.specular_samples;
    if (n < 1) throw std::runtime_error("specular sample count must be >= 1");
    const int grid = int(std::sqrt(double(n)));
    const bool stratified = grid * grid == n;

    parallel_for(gbuffer.pixels.size(), [&](size_t i) {
        const GPixel& px = gbuffer.pixels[i];
        if (!px.valid) return;
        double r = brdf::clamp_roughness(roughness_tex.sample(px.uv.x, px.uv.y).x);
        Frame frame(px.normal);
        Rng rng(config.seed, uint64_t(i));
        Vec3 sum{0, 0, 0};
        Vec3 grad_sum{0, 0, 0};

        for (int s = 0; s < n; ++s) {
            double u1, u2;
            if (stratified) {
                u1 = (s % grid + rng.next_double()) / grid;
                u2 = (s / grid + rng.next_double()) / grid;
            } else {
                u1 = rng.next_double();
                u2 = rng.next_double();
            }
            if (config.sampler == SpecularSampler::Cosine) {
                Vec3 local;
                double pdf;
                brdf::sample_cosine(u1, u2, local, pdf);
                Vec3 l = frame.to_world(local);
                double fs = brdf::eval_specular(px.normal, px.view, l, r);
                Vec3 q = tbl.query_radiance(px.position, l);
                // f_s * Q * cos / pdf = f_s * Q * pi
                sum += q * (fs * pi);
                if (grad_out) {
                    double dfs = brdf::d_specular_d_roughness(px.normal, px.view, l, r);
                    grad_sum += q * (dfs * pi);
                }
            } else {
                Vec3 h_local;
                double pdf_h;
                brdf::sample_ggx(u1, u2, r, h_local, pdf_h);
                Vec3 h = frame.to_world(h_local);
                Vec3 l = reflect(px.view, h);
                double nl = dot(px.normal, l);
                double vh = dot(px.view, h);
                if (nl <= 0 || vh <= 0 || pdf_h <= 0) continue;
                double pdf_l = pdf_h / (4.0 * vh);
                double fs = brdf::eval_specular(px.normal, px.view, l, r);
                Vec3 q = tbl.query_radiance(px.position, l);
                sum += q * (fs * nl / pdf_l);
                if (grad_out) {
                    // sample directions depend on R under GGX sampling;
                    // this is the frozen-direction partial only
                    double dfs = brdf::d_specular_d_roughness(px.normal, px.view, l, r);
                    grad_sum += q * (dfs * nl / pdf_l);
                }
            }
        }
        int x = int(i % size_t(gbuffer.width));
        int y = int(i / size_t(gbuffer.width));
        out.set_pixel(x, y, sum / double(n));
        if (grad_out) grad_out->set_pixel(x, y, grad_sum / double(n));
    });
    return out;
}

TextureImage render(const Scene& scene, const Camera& camera, const RenderConfig& config) {
    if (!scene.albedo || !scene.roughness)
        throw std::runtime_error("render requires albedo and roughness textures");
    if (!scene.irradiance)
        throw std::runtime_error("render requires a baked irradiance texture");

    GBuffer gb = make_gbuffer(scene, camera);
    IrradianceTexture irt;
    irt.texture = *scene.irradiance;
    irt.coverage = scene.irradiance_coverage;

    TblLight tbl = make_tbl(scene);
    TextureImage diffuse = shade_diffuse(gb, *scene.albedo, irt);
    TextureImage specular = shade_specular(gb, *scene.roughness, tbl, config);

    TextureImage out(gb.width, gb.height, 3, 0.0);
    for (int y = 0; y < gb.height; ++y) {
        for (int x = 0; x < gb.width; ++x) {
            const GPixel& px = gb.at(x, y);
            if (!px.valid) continue;
            if (px.emitter) {
                out.set_pixel(x, y, scene.emissive.sample(px.uv.x, px.uv.y));
            } else {
                out.set_pixel(x, y, diffuse.pixel(x, y) + specular.pixel(x, y));
            }
        }
    }
    return out;
}

void relight(Scene& scene, const TextureImage& new_emissive, const RenderConfig& config,
             int irt_samples) {
    if (new_emissive.width != scene.emissive.width ||
        new_emissive.height != scene.emissive.height)
        throw std::runtime_error("relight: emissive atlas resolution mismatch");
    scene.emissive = new_emissive;
    TblLight tbl = make_tbl(scene);
    int res = scene.irradiance ? scene.irradiance->width : scene.atlas.irt_res;
    auto surfels = texel_surfels(*scene.mesh, res);
    IrradianceTexture irt = bake_irt(surfels, tbl, res, irt_samples, config.seed);
    scene.irradiance = irt.texture;
    scene.irradiance_coverage = irt.coverage;
}

void edit_material(Scene& scene, int class_id, const std::optional<Vec3>& albedo,
                   const std::optional<double>& roughness) {
    if (scene.semantic.width == 0) throw std::runtime_error("edit_material requires a semantic mask");
    bool found = false;
    for (int id : scene.semantic.ids)
        if (id == class_id) { found = true; break; }
    if (!found) throw std::runtime_error("unknown class id: " + std::to_string(class_id));

    auto apply = [&](TextureImage& tex, const Vec3& value) {
        for (int y = 0; y < tex.height; ++y) {
            for (int x = 0; x < tex.width; ++x) {
                double u = (x + 0.5) / tex.width;
                double v = (y + 0.5) / tex.height;
                if (scene.semantic.sample(u, v) == class_id) tex.set_pixel(x, y, value);
            }
        }
    };
    if (albedo) {
        if (!scene.albedo) throw std::runtime_error("scene has no albedo texture to edit");
        apply(*scene.albedo, *albedo);
    }
    if (roughness) {
        if (!scene.roughness) throw std::runtime_error("scene has no roughness texture to edit");
        apply(*scene.roughness, Vec3(*roughness));
    }
}

}  // namespace texir

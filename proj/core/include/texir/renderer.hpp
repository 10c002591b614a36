#pragma once

#include <cstdint>
#include <optional>

#include "texir/irradiance.hpp"
#include "texir/scene.hpp"
#include "texir/tbl.hpp"

namespace texir {

struct GPixel {
    bool valid = false;
    bool emitter = false;  // lands on a light-source texel
    Vec3 position;
    Vec3 normal;
    Vec3 view;  // unit, toward camera
    Vec2 uv;
    int class_id = 0;
    int room_id = 0;
};

struct GBuffer {
    int width = 0, height = 0;
    std::vector<GPixel> pixels;

    GPixel& at(int x, int y) { return pixels[size_t(y) * width + x]; }
    const GPixel& at(int x, int y) const { return pixels[size_t(y) * width + x]; }
};

enum class SpecularSampler { Cosine, Ggx };

struct RenderConfig {
    int specular_samples = 16;
    SpecularSampler sampler = SpecularSampler::Ggx;
    uint64_t seed = 0;
};

GBuffer make_gbuffer(const Scene& scene, const Camera& camera);

// L_d = (A / pi) * Ir per valid pixel. Either irradiance source.
TextureImage shade_diffuse(const GBuffer& gbuffer, const TextureImage& albedo_tex,
                           const IrradianceTexture& irt);
TextureImage shade_diffuse_nirf(const GBuffer& gbuffer, const TextureImage& albedo_tex,
                                const Nirf& nirf);

// Monte-Carlo specular gather against TBL. When grad_out is non-null it
// receives the per-pixel derivative of the estimate w.r.t. the pixel's
// roughness, using the same frozen sample directions (cosine sampler
// directions do not depend on R, so the derivative is exact).
TextureImage shade_specular(const GBuffer& gbuffer, const TextureImage& roughness_tex,
                            const TblLight& tbl, const RenderConfig& config,
                            TextureImage* grad_out = nullptr);

// Full shade: emitter pass-through + diffuse + specular.
TextureImage render(const Scene& scene, const Camera& camera, const RenderConfig& config);

// Replaces the emissive atlas and re-bakes the irradiance texture;
// materials are untouched.
void relight(Scene& scene, const TextureImage& new_emissive, const RenderConfig& config,
             int irt_samples = 2048);

// Overwrites albedo/roughness texels whose semantic class matches.
void edit_material(Scene& scene, int class_id, const std::optional<Vec3>& albedo,
                   const std::optional<double>& roughness);

}  // namespace texir

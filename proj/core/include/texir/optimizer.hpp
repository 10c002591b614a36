#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "texir/renderer.hpp"
#include "texir/segmentation.hpp"

namespace texir {

struct OptimHyper {
    double learning_rate = 3e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int epochs = 40;
    double beta_ssa = 10.0;   // stage-1 semantic smoothness weight
    double beta_sp = 1.0;     // stage-2 propagation weight
    double beta_ssr = 0.1;    // stage-3 roughness smoothness weight
    double denom_eps = 1e-8;
    double quantile_q = 0.4;
    int specular_samples = 16;
    uint64_t seed = 0;
};

// One Adam-driven texture parameter with projection bounds.
struct AdamTexture {
    TextureImage value;
    std::vector<double> m, v;
    long step = 0;
    double lo = 0.0, hi = 1.0;

    void init(int res, int channels, double fill, double lo_, double hi_);
};

// Adam update with bias correction, then clamp into [lo, hi]. Throws on
// a non-finite gradient, naming the texel.
void adam_step(AdamTexture& tex, const std::vector<double>& gradient, const OptimHyper& hp);

struct OptimState {
    AdamTexture albedo;     // RGB in [0,1]
    AdamTexture roughness;  // scalar in [r_min,1]
    OptimHyper hyper;
    int stage = 0;
    std::vector<std::vector<double>> epoch_losses;  // per stage, per epoch

    void init(int albedo_res, int roughness_res, const OptimHyper& hp);
};

// Precomputed per-view shading inputs shared by all stages.
struct ViewData {
    GBuffer gbuffer;
    const TextureImage* input = nullptr;
    std::vector<uint8_t> include;   // valid, non-emitter
    std::vector<int> class_ids;     // 0 outside/unlabeled
    std::vector<int> room_ids;
};

std::vector<ViewData> build_views(const Scene& scene);

// --- loss terms (image space) ---
// Each returns the scalar loss and writes the per-pixel gradient
// (same layout as the feature image). Class/room means and quantile
// targets are treated as constants during differentiation.

double loss_semantic_smooth(const TextureImage& feature, const std::vector<int>& ids,
                            const std::vector<uint8_t>& include, double denom_eps,
                            TextureImage& gradient);

double loss_propagation(const TextureImage& roughness, const std::vector<int>& class_ids,
                        const std::vector<uint8_t>& vhl, const std::vector<uint8_t>& include,
                        double q, TextureImage& gradient);

double loss_data(const TextureImage& render, const TextureImage& input,
                 const std::vector<uint8_t>& include, TextureImage& gradient);

// Scatters per-pixel gradients into texture space with bilinear weights.
// Accumulation runs serially in pixel order, so the result does not
// depend on the worker count.
void backprop_to_texture(const GBuffer& gbuffer, const TextureImage& image_gradient,
                         std::vector<double>& texture_gradient, int tex_width, int tex_height,
                         int channels);

// --- stages ---
// Stage 3 reads room ids from the per-view G-buffers, so scene.rooms
// must be populated (compute_rooms) before build_views.
void run_stage1(const std::vector<ViewData>& views, const IrradianceTexture& irt,
                OptimState& state);
void run_stage2(const std::vector<ViewData>& views, const IrradianceTexture& irt,
                const TblLight& tbl, const VhlMasks& vhl, OptimState& state);
void run_stage3(const std::vector<ViewData>& views, const IrradianceTexture& irt,
                const TblLight& tbl, const VhlMasks& vhl, OptimState& state);

}  // namespace texir

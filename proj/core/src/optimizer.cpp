#include "texir/optimizer.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "texir/brdf.hpp"
#include "texir/parallel.hpp"

namespace texir {

using std::numbers::pi;

void AdamTexture::init(int res, int channels, double fill, double lo_, double hi_) {
    value = TextureImage(res, res, channels, fill);
    m.assign(value.data.size(), 0.0);
    v.assign(value.data.size(), 0.0);
    step = 0;
    lo = lo_;
    hi = hi_;
}

void adam_step(AdamTexture& tex, const std::vector<double>& gradient, const OptimHyper& hp) {
    if (gradient.size() != tex.value.data.size())
        throw std::runtime_error("adam_step: gradient size mismatch");
    for (size_t i = 0; i < gradient.size(); ++i) {
        if (!std::isfinite(gradient[i]))
            throw std::runtime_error("non-finite gradient at texel entry " + std::to_string(i));
    }
    ++tex.step;
    double c1 = 1.0 - std::pow(hp.beta1, double(tex.step));
    double c2 = 1.0 - std::pow(hp.beta2, double(tex.step));
    parallel_for(gradient.size(), [&](size_t i) {
        double g = gradient[i];
        tex.m[i] = hp.beta1 * tex.m[i] + (1 - hp.beta1) * g;
        tex.v[i] = hp.beta2 * tex.v[i] + (1 - hp.beta2) * g * g;
        double mh = tex.m[i] / c1;
        double vh = tex.v[i] / c2;
        double next = tex.value.data[i] - hp.learning_rate * mh / (std::sqrt(vh) + hp.adam_eps);
        tex.value.data[i] = clamp(next, tex.lo, tex.hi);
    });
}

void OptimState::init(int albedo_res, int roughness_res, const OptimHyper& hp) {
    hyper = hp;
    albedo.init(albedo_res, 3, 0.5, 0.0, 1.0);
    roughness.init(roughness_res, 1, 0.5, brdf::kMinRoughness, 1.0);
    stage = 0;
    epoch_losses.assign(3, {});
}

std::vector<ViewData> build_views(const Scene& scene) {
    std::vector<ViewData> views;
    for (size_t ci = 0; ci < scene.cameras.size(); ++ci) {
        ViewData vd;
        vd.gbuffer = make_gbuffer(scene, scene.cameras[ci]);
        vd.input = &scene.images[ci];
        size_t n = vd.gbuffer.pixels.size();
        vd.include.assign(n, 0);
        vd.class_ids.assign(n, 0);
        vd.room_ids.assign(n, 0);
        for (size_t i = 0; i < n; ++i) {
            const GPixel& px = vd.gbuffer.pixels[i];
            if (px.valid && !px.emitter) vd.include[i] = 1;
            vd.class_ids[i] = px.valid ? px.class_id : 0;
            vd.room_ids[i] = px.valid ? px.room_id : 0;
        }
        views.push_back(std::move(vd));
    }
    return views;
}

namespace {

// per-pixel bilinear texture fetch over a G-buffer
TextureImage sample_over_gbuffer(const GBuffer& gb, const TextureImage& tex) {
    TextureImage out(gb.width, gb.height, tex.channels, 0.0);
    parallel_for(gb.pixels.size(), [&](size_t i) {
        const GPixel& px = gb.pixels[i];
        if (!px.valid) return;
        Vec3 v = tex.sample(px.uv.x, px.uv.y);
        out.set_pixel(int(i % size_t(gb.width)), int(i / size_t(gb.width)), v);
    });
    return out;
}

TextureImage irradiance_over_gbuffer(const GBuffer& gb, const IrradianceTexture& irt) {
    TextureImage out(gb.width, gb.height, 3, 0.0);
    parallel_for(gb.pixels.size(), [&](size_t i) {
        const GPixel& px = gb.pixels[i];
        if (!px.valid) return;
        out.set_pixel(int(i % size_t(gb.width)), int(i / size_t(gb.width)),
                      irt.query(px.uv.x, px.uv.y));
    });
    return out;
}

double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

// Huberized L1 subgradient for the detached-mean smoothness terms. A raw
// sign() turns the sub-1e-3 jitter that bilinear border pixels add to the
// class mean into full-magnitude gradients that drown the data term, so
// near-zero residuals fade out linearly instead.
constexpr double kSmoothGradEps = 0.01;

double smooth_sign(double x) {
    double a = std::abs(x);
    return a > 0 ? x / std::max(a, kSmoothGradEps) : 0.0;
}

// number of included pixel entries; converts the mean-normalized data loss
// back into the per-pixel sum used by the stage composites
double data_sum_scale(const std::vector<uint8_t>& include, int channels) {
    size_t count = 0;
    for (uint8_t v : include) count += v ? 1 : 0;
    return double(count) * channels;
}

uint64_t step_seed(uint64_t base, int stage, int epoch, size_t view) {
    uint64_t z = base + 0x9e3779b97f4a7c15ull * (uint64_t(stage) * 1000003 +
                                                 uint64_t(epoch) * 8009 + uint64_t(view) + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    return z ^ (z >> 27);
}

}  // namespace

double loss_semantic_smooth(const TextureImage& feature, const std::vector<int>& ids,
                            const std::vector<uint8_t>& include, double denom_eps,
                            TextureImage& gradient) {
    gradient = TextureImage(feature.width, feature.height, feature.channels, 0.0);
    size_t n = size_t(feature.width) * feature.height;
    int ch = feature.channels;

    // per-class center per channel, id 0 excluded; the median (midpoint for
    // even counts) rather than the mean so a handful of chart-border pixels
    // that bilinearly mix in gutter texels cannot drag the center off the
    // interior value and stall the data term
    (void)denom_eps;
    std::map<int, std::vector<std::vector<double>>> acc;  // id -> per-channel values
    for (size_t i = 0; i < n; ++i) {
        if (!include[i] || ids[i] == 0) continue;
        auto& vals = acc[ids[i]];
        if (vals.empty()) vals.assign(size_t(ch), {});
        for (int c = 0; c < ch; ++c) vals[size_t(c)].push_back(feature.data[i * size_t(ch) + c]);
    }

    std::map<int, std::vector<double>> center;
    for (auto& [id, vals] : acc) {
        auto& m = center[id];
        m.assign(size_t(ch), 0.0);
        for (int c = 0; c < ch; ++c) {
            auto& v = vals[size_t(c)];
            size_t half = v.size() / 2;
            std::nth_element(v.begin(), v.begin() + half, v.end());
            double hi = v[half];
            if (v.size() % 2 == 0) {
                double lo = *std::max_element(v.begin(), v.begin() + half);
                m[size_t(c)] = (lo + hi) / 2.0;
            } else {
                m[size_t(c)] = hi;
            }
        }
    }

    double loss = 0;
    for (size_t i = 0; i < n; ++i) {
        if (!include[i] || ids[i] == 0) continue;
        const auto& m = center[ids[i]];
        for (int c = 0; c < ch; ++c) {
            double d = feature.data[i * size_t(ch) + c] - m[size_t(c)];
            loss += std::abs(d);
            gradient.data[i * size_t(ch) + c] = smooth_sign(d);
        }
    }
    return loss;
}

double loss_propagation(const TextureImage& roughness, const std::vector<int>& class_ids,
                        const std::vector<uint8_t>& vhl, const std::vector<uint8_t>& include,
                        double q, TextureImage& gradient) {
    gradient = TextureImage(roughness.width, roughness.height, 1, 0.0);
    size_t n = size_t(roughness.width) * roughness.height;

    std::map<int, std::vector<double>> vhl_values;
    for (size_t i = 0; i < n; ++i)
        if (include[i] && class_ids[i] != 0 && vhl[i])
            vhl_values[class_ids[i]].push_back(roughness.data[i]);

    std::map<int, double> target;
    for (auto& [cid, vals] : vhl_values) {
        std::vector<uint8_t> all(vals.size(), 1);
        target[cid] = masked_quantile(vals, all, q);
    }

    double loss = 0;
    for (size_t i = 0; i < n; ++i) {
        if (!include[i] || class_ids[i] == 0 || vhl[i]) continue;
        auto it = target.find(class_ids[i]);
        if (it == target.end()) continue;  // class without VHL is skipped
        double d = roughness.data[i] - it->second;
        loss += std::abs(d);
        gradient.data[i] = smooth_sign(d);
    }
    return loss;
}

double loss_data(const TextureImage& render, const TextureImage& input,
                 const std::vector<uint8_t>& include, TextureImage& gradient) {
    if (render.width != input.width || render.height != input.height ||
        render.channels != input.channels)
        throw std::runtime_error("loss_data: image shape mismatch");
    gradient = TextureImage(render.width, render.height, render.channels, 0.0);
    size_t n = size_t(render.width) * render.height;
    int ch = render.channels;

    size_t count = 0;
    for (size_t i = 0; i < n; ++i)
        if (include[i]) ++count;
    if (count == 0) return 0;

    double norm = 1.0 / (double(count) * ch);
    double loss = 0;
    for (size_t i = 0; i < n; ++i) {
        if (!include[i]) continue;
        for (int c = 0; c < ch; ++c) {
            double d = render.data[i * size_t(ch) + c] - input.data[i * size_t(ch) + c];
            loss += std::abs(d) * norm;
            gradient.data[i * size_t(ch) + c] = sign(d) * norm;
        }
    }
    return loss;
}

void backprop_to_texture(const GBuffer& gbuffer, const TextureImage& image_gradient,
                         std::vector<double>& texture_gradient, int tex_width, int tex_height,
                         int channels) {
    texture_gradient.assign(size_t(tex_width) * tex_height * channels, 0.0);
    TextureImage wrap;
    wrap.width = tex_width;
    wrap.height = tex_height;
    wrap.channels = channels;
    wrap.data.swap(texture_gradient);
    for (size_t i = 0; i < gbuffer.pixels.size(); ++i) {
        const GPixel& px = gbuffer.pixels[i];
        if (!px.valid) continue;
        int x = int(i % size_t(gbuffer.width));
        int y = int(i / size_t(gbuffer.width));
        Vec3 g = image_gradient.pixel(x, y);
        if (g.x == 0 && g.y == 0 && g.z == 0) continue;
        wrap.splat(px.uv.x, px.uv.y, g);
    }
    texture_gradient.swap(wrap.data);
}

void run_stage1(const std::vector<ViewData>& views, const IrradianceTexture& irt,
                OptimState& state) {
    state.stage = 1;
    const OptimHyper& hp = state.hyper;
    std::vector<double> grad_tex;

    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        double epoch_loss = 0;
        for (size_t vi = 0; vi < views.size(); ++vi) {
            const ViewData& vd = views[vi];
            const GBuffer& gb = vd.gbuffer;
            TextureImage a_img = sample_over_gbuffer(gb, state.albedo.value);
            TextureImage ir_img = irradiance_over_gbuffer(gb, irt);

            TextureImage ld(gb.width, gb.height, 3, 0.0);
            for (size_t i = 0; i < ld.data.size(); ++i)
                ld.data[i] = a_img.data[i] / pi * ir_img.data[i];

            TextureImage g_data, g_ss;
            double l_data = loss_data(ld, *vd.input, vd.include, g_data);
            double l_ss = loss_semantic_smooth(a_img, vd.class_ids, vd.include,
                                               hp.denom_eps, g_ss);

            // the composite objective sums both terms over pixels, so undo
            // the data term's mean normalization; otherwise the smoothness
            // gradients outweigh it by the pixel count
            double scale = data_sum_scale(vd.include, 3);
            l_data *= scale;

            // chain data gradient through L_d = A/pi * Ir; smoothness acts
            // on the sampled albedo directly
            TextureImage pixel_grad(gb.width, gb.height, 3, 0.0);
            for (size_t i = 0; i < pixel_grad.data.size(); ++i)
                pixel_grad.data[i] = scale * g_data.data[i] * ir_img.data[i] / pi +
                                     hp.beta_ssa * g_ss.data[i];

            backprop_to_texture(gb, pixel_grad, grad_tex, state.albedo.value.width,
                                state.albedo.value.height, 3);
            adam_step(state.albedo, grad_tex, hp);
            epoch_loss += l_data + hp.beta_ssa * l_ss;
        }
        state.epoch_losses[0].push_back(epoch_loss / double(views.size()));
    }
}

namespace {

// shared by stages 2 and 3: renders L_o with the cosine sampler and
// returns per-pixel data-loss gradients plus the specular derivative
struct DataPass {
    double loss = 0;
    TextureImage g_data;     // dLoss / dPixel, RGB
    TextureImage dspec_dr;   // dSpecular / dRoughness, RGB
};

DataPass data_pass(const ViewData& vd, const TextureImage& albedo_tex,
                   const TextureImage& roughness_tex, const IrradianceTexture& irt,
                   const TblLight& tbl, const OptimHyper& hp, uint64_t seed) {
    const GBuffer& gb = vd.gbuffer;
    TextureImage a_img = sample_over_gbuffer(gb, albedo_tex);
    TextureImage ir_img = irradiance_over_gbuffer(gb, irt);

    // the residual comes from the GGX-sampled forward render: the cosine
    // estimator's variance at highlight pixels shifts the L1 minimum toward
    // wide lobes. the roughness derivative still comes from the cosine
    // pass, whose sample directions do not depend on R, so it is exact.
    RenderConfig rc;
    rc.sampler = SpecularSampler::Ggx;
    rc.specular_samples = hp.specular_samples;
    rc.seed = seed;
    DataPass dp;
    TextureImage spec = shade_specular(gb, roughness_tex, tbl, rc);

    RenderConfig rc_cos = rc;
    rc_cos.sampler = SpecularSampler::Cosine;
    shade_specular(gb, roughness_tex, tbl, rc_cos, &dp.dspec_dr);

    TextureImage lo(gb.width, gb.height, 3, 0.0);
    for (size_t i = 0; i < lo.data.size(); ++i)
        lo.data[i] = a_img.data[i] / pi * ir_img.data[i] + spec.data[i];

    // mean-normalized: in stages 2/3 the propagation and smoothness priors
    // are meant to dominate wherever they apply, and texels they do not
    // touch still move at full rate through Adam's per-texel normalization.
    // a sum-scaled data term here lets noisy specular-derivative spikes
    // overpower the priors and ratchet roughness into the clamps.
    dp.loss = loss_data(lo, *vd.input, vd.include, dp.g_data);
    return dp;
}

TextureImage roughness_pixel_grad(const GBuffer& gb, const DataPass& dp) {
    TextureImage g(gb.width, gb.height, 1, 0.0);
    size_t n = size_t(gb.width) * gb.height;
    for (size_t i = 0; i < n; ++i) {
        double acc = 0;
        for (int c = 0; c < 3; ++c)
            acc += dp.g_data.data[i * 3 + c] * dp.dspec_dr.data[i * 3 + c];
        g.data[i] = acc;
    }
    return g;
}

}  // namespace

void run_stage2(const std::vector<ViewData>& views, const IrradianceTexture& irt,
                const TblLight& tbl, const VhlMasks& vhl, OptimState& state) {
    if (vhl.views.size() != views.size())
        throw std::runtime_error("run_stage2: VHL mask count does not match views");
    state.stage = 2;
    const OptimHyper& hp = state.hyper;
    std::vector<double> grad_tex, grad_sp;

    // Texels under any VHL pixel's bilinear footprint. The propagation
    // gradient must not reach them: the quantile target is computed from
    // these texels, and letting the pull toward the 0.4-quantile leak back
    // into its own source ratchets the whole class toward the lower clamp.
    const int rw = state.roughness.value.width, rh = state.roughness.value.height;
    std::vector<uint8_t> vhl_texel(size_t(rw) * rh, 0);
    {
        std::vector<double> w;
        for (size_t vi = 0; vi < views.size(); ++vi) {
            const GBuffer& gb = views[vi].gbuffer;
            TextureImage ones(gb.width, gb.height, 1, 0.0);
            for (size_t i = 0; i < ones.data.size(); ++i)
                if (vhl.views[vi].vhl[i]) ones.data[i] = 1.0;
            backprop_to_texture(gb, ones, w, rw, rh, 1);
            for (size_t i = 0; i < w.size(); ++i)
                if (w[i] > 0.0) vhl_texel[i] = 1;
        }
    }

    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        double epoch_loss = 0;
        for (size_t vi = 0; vi < views.size(); ++vi) {
            const ViewData& vd = views[vi];
            const GBuffer& gb = vd.gbuffer;
            DataPass dp = data_pass(vd, state.albedo.value, state.roughness.value, irt, tbl,
                                    hp, step_seed(hp.seed, 2, epoch, vi));

            TextureImage r_img = sample_over_gbuffer(gb, state.roughness.value);
            TextureImage g_sp;
            double l_sp = loss_propagation(r_img, vd.class_ids, vhl.views[vi].vhl,
                                           vd.include, hp.quantile_q, g_sp);

            // the data term informs roughness only on the VHL regions — off
            // the highlights its gradient mostly measures estimator noise
            // and biases roughness toward wide lobes; propagation carries
            // the VHL estimate to the rest of each class
            TextureImage pixel_grad = roughness_pixel_grad(gb, dp);
            for (size_t i = 0; i < pixel_grad.data.size(); ++i)
                if (!vhl.views[vi].vhl[i]) pixel_grad.data[i] = 0.0;

            backprop_to_texture(gb, pixel_grad, grad_tex, rw, rh, 1);
            for (size_t i = 0; i < g_sp.data.size(); ++i) g_sp.data[i] *= hp.beta_sp;
            backprop_to_texture(gb, g_sp, grad_sp, rw, rh, 1);
            for (size_t i = 0; i < grad_tex.size(); ++i)
                if (!vhl_texel[i]) grad_tex[i] += grad_sp[i];
            adam_step(state.roughness, grad_tex, hp);
            epoch_loss += dp.loss + hp.beta_sp * l_sp;
        }
        state.epoch_losses[1].push_back(epoch_loss / double(views.size()));
    }
}

void run_stage3(const std::vector<ViewData>& views, const IrradianceTexture& irt,
                const TblLight& tbl, const VhlMasks& vhl, OptimState& state) {
    if (vhl.views.size() != views.size())
        throw std::runtime_error("run_stage3: VHL mask count does not match views");
    state.stage = 3;
    const OptimHyper& hp = state.hyper;
    std::vector<double> grad_albedo, grad_rough;

    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        double epoch_loss = 0;
        for (size_t vi = 0; vi < views.size(); ++vi) {
            const ViewData& vd = views[vi];
            const GBuffer& gb = vd.gbuffer;
            DataPass dp = data_pass(vd, state.albedo.value, state.roughness.value, irt, tbl,
                                    hp, step_seed(hp.seed, 3, epoch, vi));

            TextureImage ir_img = irradiance_over_gbuffer(gb, irt);
            TextureImage albedo_pixel_grad(gb.width, gb.height, 3, 0.0);
            for (size_t i = 0; i < albedo_pixel_grad.data.size(); ++i)
                albedo_pixel_grad.data[i] = dp.g_data.data[i] * ir_img.data[i] / pi;

            TextureImage r_img = sample_over_gbuffer(gb, state.roughness.value);
            TextureImage g_ss, g_rs;
            double l_ss = loss_semantic_smooth(r_img, vd.class_ids, vd.include,
                                               hp.denom_eps, g_ss);
            double l_rs = loss_semantic_smooth(r_img, vd.room_ids, vd.include,
                                               hp.denom_eps, g_rs);

            // as in stage 2, roughness only trusts the data term on VHL
            // pixels; elsewhere the smoothness terms hold the stage-2 result
            TextureImage rough_pixel_grad = roughness_pixel_grad(gb, dp);
            for (size_t i = 0; i < rough_pixel_grad.data.size(); ++i) {
                if (!vhl.views[vi].vhl[i]) rough_pixel_grad.data[i] = 0.0;
                rough_pixel_grad.data[i] += hp.beta_ssr * (g_ss.data[i] + g_rs.data[i]);
            }

            backprop_to_texture(gb, albedo_pixel_grad, grad_albedo, state.albedo.value.width,
                                state.albedo.value.height, 3);
            backprop_to_texture(gb, rough_pixel_grad, grad_rough, state.roughness.value.width,
                                state.roughness.value.height, 1);
            adam_step(state.albedo, grad_albedo, hp);
            adam_step(state.roughness, grad_rough, hp);
            epoch_loss += dp.loss + hp.beta_ssr * (l_ss + l_rs);
        }
        state.epoch_losses[2].push_back(epoch_loss / double(views.size()));
    }
}

}  // namespace texir

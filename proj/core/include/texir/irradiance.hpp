#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "texir/image.hpp"
#include "texir/surfel.hpp"
#include "texir/tbl.hpp"

namespace texir {

struct IrradianceTexture {
    TextureImage texture;  // RGB
    MaskImage coverage;    // 1 where a surfel was baked
    int sample_count = 0;

    // Bilinear lookup; uv falling on uncovered texels snaps to the
    // nearest covered texel.
    Vec3 query(double u, double v) const;
};

// Monte-Carlo bake of cosine-weighted incident radiance per atlas texel.
// Stratified per-texel sample grid, counter-based RNG keyed by (seed,
// texel), so the result is independent of scheduling.
IrradianceTexture bake_irt(const std::vector<Surfel>& surfels, const TblLight& tbl,
                           int res, int n_samples = 2048, uint64_t seed = 0);

// Reference gather for oracles: same estimator at one point, any sample
// count, its own stream.
Vec3 gather_irradiance(const TblLight& tbl, const Vec3& position, const Vec3& normal,
                       int n_samples, uint64_t seed, uint64_t stream);

// Shallow MLP irradiance field: 3D position with 4-band sinusoidal
// encoding (27 inputs), 3 softplus hidden layers of 64, softplus output.
struct Nirf {
    static constexpr int kBands = 4;
    static constexpr int kInput = 3 + 3 * 2 * kBands;  // 27
    static constexpr int kHidden = 64;
    static constexpr int kLayers = 3;

    // weights[l] is row-major (out x in), biases[l] length out
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    // bounding box used to normalize positions into [-1, 1]
    Vec3 box_lo, box_hi;

    Vec3 forward(const Vec3& position) const;

    void save(const std::string& path) const;
    static Nirf load(const std::string& path);
};

struct NirfTrainConfig {
    int epochs = 2000;
    int batch_size = 16;
    double learning_rate = 1e-4;
    uint64_t seed = 0;
};

struct NirfSample {
    Vec3 position;
    Vec3 irradiance;
};

struct NirfTrainResult {
    Nirf net;
    double final_loss = 0;  // MSE in log1p space over the full set
};

// Adam training against MSE in log1p space. Throws on divergence.
NirfTrainResult train_nirf(const std::vector<NirfSample>& samples, const NirfTrainConfig& config);

// Gradient of the batch loss w.r.t. every weight, for gradient checks.
// Returns flattened gradients in the same order as flatten_params.
std::vector<double> nirf_loss_gradient(const Nirf& net, const std::vector<NirfSample>& batch);
double nirf_loss(const Nirf& net, const std::vector<NirfSample>& batch);
std::vector<double*> nirf_param_refs(Nirf& net);

Nirf nirf_init(const Vec3& box_lo, const Vec3& box_hi, uint64_t seed);

}  // namespace texir

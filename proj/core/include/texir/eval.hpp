#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "texir/image.hpp"
#include "texir/tbl.hpp"

namespace texir {

// Metrics operate on whatever images they are given; callers tonemap to
// LDR first (tonemap_gamma22) when comparing HDR renders.
double mse(const TextureImage& a, const TextureImage& b);
double mae(const TextureImage& a, const TextureImage& b);
double psnr(const TextureImage& a, const TextureImage& b);  // capped at 99 dB
double ssim(const TextureImage& a, const TextureImage& b);  // 11x11 Gaussian, sigma 1.5

// ---- spherical harmonics lighting ----
struct ShLighting {
    int order = 5;
    std::vector<Vec3> coeffs;  // (order+1)^2 entries
};

double sh_basis(int l, int m, const Vec3& dir);
ShLighting sh_project(const TblLight& tbl, const Vec3& x, int order, int n_samples,
                      uint64_t seed = 0);
Vec3 sh_eval(const ShLighting& sh, const Vec3& dir);

// ---- spherical Gaussian lighting ----
struct SgLobe {
    Vec3 axis;       // unit
    double sharpness = 8.0;
    Vec3 amplitude;  // >= 0
};

struct SgLighting {
    std::vector<SgLobe> lobes;
};

struct SgFitConfig {
    int n_lobes = 12;
    int n_samples = 4096;
    int steps = 500;
    double learning_rate = 1e-2;
    uint64_t seed = 0;
};

SgLighting sg_fit(const TblLight& tbl, const Vec3& x, const SgFitConfig& config);
Vec3 sg_eval(const SgLighting& sg, const Vec3& dir);

// ---- sphere relighting harness ----
enum class SphereMaterial { Diffuse, MatteSilver, MirrorSilver };

// Direction-only environment query at the probe point.
using EnvQuery = std::function<Vec3(const Vec3& dir)>;

struct SphereHarnessConfig {
    int image_size = 64;
    int samples = 64;
    uint64_t seed = 0;
};

// Renders a unit sphere at the probe under the environment; identical
// sample sequences across representations make TBL-vs-TBL exactly zero.
TextureImage sphere_harness(const EnvQuery& env, SphereMaterial material,
                            const SphereHarnessConfig& config);

EnvQuery env_from_tbl(const TblLight& tbl, const Vec3& x);
EnvQuery env_from_sh(const ShLighting& sh);
EnvQuery env_from_sg(const SgLighting& sg);

}  // namespace texir

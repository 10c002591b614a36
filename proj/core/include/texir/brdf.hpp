#pragma once

#include "texir/vec.hpp"

namespace texir {
namespace brdf {

// Roughness is clamped to [kMinRoughness, 1].
inline constexpr double kMinRoughness = 0.01;

inline double clamp_roughness(double r) { return clamp(r, kMinRoughness, 1.0); }

// Lambertian lobe, A / pi per channel.
Vec3 eval_diffuse(const Vec3& albedo);

// Scalar GGX specular lobe with Schlick Fresnel (F0 = 0.04) and
// Smith-Schlick geometry factor. Returns 0 below the horizon.
double eval_specular(const Vec3& n, const Vec3& v, const Vec3& l, double roughness);

// Exact d eval_specular / d roughness via the chain rule through
// alpha = R^2 and k = (R+1)^2 / 8; the Fresnel term has no R dependence.
double d_specular_d_roughness(const Vec3& n, const Vec3& v, const Vec3& l, double roughness);

// Cosine-weighted hemisphere direction in the local (z-up) frame.
// pdf = cos(theta) / pi.
void sample_cosine(double u1, double u2, Vec3& direction, double& pdf);

// GGX-distributed half vector in the local frame; pdf_h = D(h) cos(theta_h).
void sample_ggx(double u1, double u2, double roughness, Vec3& half, double& pdf_h);

double ggx_d(double n_dot_h, double roughness);

}  // namespace brdf
}  // namespace texir

#include "texir/brdf.hpp"

#include <cmath>
#include <numbers>

namespace texir {
namespace brdf {

using std::numbers::pi;

Vec3 eval_diffuse(const Vec3& albedo) { return albedo / pi; }

double ggx_d(double n_dot_h, double roughness) {
    double alpha = roughness * roughness;
    double a2 = alpha * alpha;
    double t = n_dot_h * n_dot_h * (a2 - 1.0) + 1.0;
    return a2 / (pi * t * t);
}

namespace {

double fresnel_schlick(double v_dot_h) {
    // F = 0.04 + 0.96 * 2^((-5.55473 vh - 6.98316) vh)
    return 0.04 + 0.96 * std::exp2((-5.55473 * v_dot_h - 6.98316) * v_dot_h);
}

double g1(double n_dot_x, double k) {
    return n_dot_x / (n_dot_x * (1.0 - k) + k);
}

}  // namespace

double eval_specular(const Vec3& n, const Vec3& v, const Vec3& l, double roughness) {
    double nv = dot(n, v);
    double nl = dot(n, l);
    if (nv <= 0 || nl <= 0) return 0;
    Vec3 h = normalize(v + l);
    double nh = clamp(dot(n, h), 0.0, 1.0);
    double vh = clamp(dot(v, h), 0.0, 1.0);
    double r = clamp_roughness(roughness);
    double k = (r + 1.0) * (r + 1.0) / 8.0;
    double d = ggx_d(nh, r);
    double f = fresnel_schlick(vh);
    double g = g1(nl, k) * g1(nv, k);
    return d * f * g / (4.0 * nv * nl);
}

double d_specular_d_roughness(const Vec3& n, const Vec3& v, const Vec3& l, double roughness) {
    double nv = dot(n, v);
    double nl = dot(n, l);
    if (nv <= 0 || nl <= 0) return 0;
    Vec3 h = normalize(v + l);
    double nh = clamp(dot(n, h), 0.0, 1.0);
    double vh = clamp(dot(v, h), 0.0, 1.0);
    double r = clamp_roughness(roughness);

    double a2 = r * r * r * r;  // alpha^2 = R^4
    double t = nh * nh * (a2 - 1.0) + 1.0;
    double d = a2 / (pi * t * t);
    // dD/d(alpha^2) then chain through d(alpha^2)/dR = 4 R^3
    double dd_da2 = (t - 2.0 * a2 * nh * nh) / (pi * t * t * t);
    double dd_dr = dd_da2 * 4.0 * r * r * r;

    double k = (r + 1.0) * (r + 1.0) / 8.0;
    double g1l = g1(nl, k);
    double g1v = g1(nv, k);
    auto dg1_dk = [](double x, double k_) {
        double denom = x * (1.0 - k_) + k_;
        return -x * (1.0 - x) / (denom * denom);
    };
    double dk_dr = (r + 1.0) / 4.0;
    double dg_dr = (dg1_dk(nl, k) * g1v + g1l * dg1_dk(nv, k)) * dk_dr;

    double f = fresnel_schlick(vh);
    return f / (4.0 * nv * nl) * (dd_dr * g1l * g1v + d * dg_dr);
}

void sample_cosine(double u1, double u2, Vec3& direction, double& pdf) {
    double r = std::sqrt(u1);
    double phi = 2.0 * pi * u2;
    double z = std::sqrt(std::max(0.0, 1.0 - u1));
    direction = {r * std::cos(phi), r * std::sin(phi), z};
    pdf = z / pi;
}

void sample_ggx(double u1, double u2, double roughness, Vec3& half, double& pdf_h) {
    double alpha = clamp_roughness(roughness);
    alpha *= alpha;
    double a2 = alpha * alpha;
    double cos_t = std::sqrt((1.0 - u1) / (1.0 + (a2 - 1.0) * u1));
    double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
    double phi = 2.0 * pi * u2;
    half = {sin_t * std::cos(phi), sin_t * std::sin(phi), cos_t};
    pdf_h = ggx_d(cos_t, roughness) * cos_t;
}

}  // namespace brdf
}  // namespace texir

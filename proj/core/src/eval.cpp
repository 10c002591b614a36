#include "texir/eval.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "texir/brdf.hpp"
#include "texir/parallel.hpp"
#include "texir/rng.hpp"

namespace texir {

using std::numbers::pi;

namespace {

void check_shape(const TextureImage& a, const TextureImage& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw std::runtime_error("metric: image shape mismatch");
}

}  // namespace

double mse(const TextureImage& a, const TextureImage& b) {
    check_shape(a, b);
    double acc = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return acc / double(a.data.size());
}

double mae(const TextureImage& a, const TextureImage& b) {
    check_shape(a, b);
    double acc = 0;
    for (size_t i = 0; i < a.data.size(); ++i) acc += std::abs(a.data[i] - b.data[i]);
    return acc / double(a.data.size());
}

double psnr(const TextureImage& a, const TextureImage& b) {
    double m = mse(a, b);
    if (m < 1e-10) return 99.0;
    return std::min(99.0, 10.0 * std::log10(1.0 / m));
}

double ssim(const TextureImage& a, const TextureImage& b) {
    check_shape(a, b);
    const int win = 11;
    if (a.width < win || a.height < win)
        throw std::runtime_error("ssim: image smaller than the 11x11 window");
    const double sigma = 1.5;
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;  // dynamic range 1

    double kernel[win];
    double ksum = 0;
    for (int i = 0; i < win; ++i) {
        double d = i - (win - 1) / 2.0;
        kernel[i] = std::exp(-d * d / (2 * sigma * sigma));
        ksum += kernel[i];
    }
    for (int i = 0; i < win; ++i) kernel[i] /= ksum;

    double total = 0;
    size_t count = 0;
    for (int ch = 0; ch < a.channels; ++ch) {
        for (int y = 0; y + win <= a.height; ++y) {
            for (int x = 0; x + win <= a.width; ++x) {
                double mu_a = 0, mu_b = 0, saa = 0, sbb = 0, sab = 0;
                for (int j = 0; j < win; ++j) {
                    for (int i = 0; i < win; ++i) {
                        double w = kernel[i] * kernel[j];
                        double va = a.at(x + i, y + j, ch);
                        double vb = b.at(x + i, y + j, ch);
                        mu_a += w * va;
                        mu_b += w * vb;
                        saa += w * va * va;
                        sbb += w * vb * vb;
                        sab += w * va * vb;
                    }
                }
                double var_a = saa - mu_a * mu_a;
                double var_b = sbb - mu_b * mu_b;
                double cov = sab - mu_a * mu_b;
                double s = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
                           ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
                total += s;
                ++count;
            }
        }
    }
    return total / double(count);
}

// ---------------------------------------------------------------------------
// spherical harmonics

namespace {

double factorial_ratio(int l, int m) {
    // (l - m)! / (l + m)!
    double r = 1.0;
    for (int k = l - m + 1; k <= l + m; ++k) r /= k;
    return r;
}

// associated Legendre P_l^m(x), m >= 0
double legendre(int l, int m, double x) {
    double pmm = 1.0;
    if (m > 0) {
        double somx2 = std::sqrt(std::max(0.0, (1.0 - x) * (1.0 + x)));
        double fact = 1.0;
        for (int i = 1; i <= m; ++i) {
            pmm *= -fact * somx2;
            fact += 2.0;
        }
    }
    if (l == m) return pmm;
    double pmmp1 = x * (2.0 * m + 1.0) * pmm;
    if (l == m + 1) return pmmp1;
    double pll = 0;
    for (int ll = m + 2; ll <= l; ++ll) {
        pll = ((2.0 * ll - 1.0) * x * pmmp1 - (ll + m - 1.0) * pmm) / (ll - m);
        pmm = pmmp1;
        pmmp1 = pll;
    }
    return pll;
}

}  // namespace

double sh_basis(int l, int m, const Vec3& dir) {
    // y-up spherical convention matching the equirect camera
    double cos_theta = clamp(dir.y, -1.0, 1.0);
    double phi = std::atan2(dir.z, dir.x);
    int am = std::abs(m);
    double k = std::sqrt((2.0 * l + 1.0) / (4.0 * pi) * factorial_ratio(l, am));
    double p = legendre(l, am, cos_theta);
    if (m == 0) return k * p;
    if (m > 0) return std::numbers::sqrt2 * k * p * std::cos(am * phi);
    return std::numbers::sqrt2 * k * p * std::sin(am * phi);
}

ShLighting sh_project(const TblLight& tbl, const Vec3& x, int order, int n_samples,
                      uint64_t seed) {
    ShLighting sh;
    sh.order = order;
    int n_coeffs = (order + 1) * (order + 1);
    sh.coeffs.assign(size_t(n_coeffs), Vec3{0, 0, 0});

    std::vector<Vec3> partial(size_t(n_samples) * size_t(n_coeffs));
    parallel_for(size_t(n_samples), [&](size_t s) {
        Rng rng(seed, s);
        // uniform sphere direction
        double z = 2.0 * rng.next_double() - 1.0;
        double phi = 2.0 * pi * rng.next_double();
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        Vec3 dir{r * std::cos(phi), z, r * std::sin(phi)};
        Vec3 radiance = tbl.query_radiance(x, dir);
        int ci = 0;
        for (int l = 0; l <= order; ++l)
            for (int m = -l; m <= l; ++m)
                partial[s * size_t(n_coeffs) + size_t(ci++)] = radiance * sh_basis(l, m, dir);
    });
    for (size_t s = 0; s < size_t(n_samples); ++s)
        for (int c = 0; c < n_coeffs; ++c)
            sh.coeffs[size_t(c)] += partial[s * size_t(n_coeffs) + size_t(c)];
    for (Vec3& c : sh.coeffs) c *= 4.0 * pi / double(n_samples);
    return sh;
}

Vec3 sh_eval(const ShLighting& sh, const Vec3& dir) {
    Vec3 out{0, 0, 0};
    int ci = 0;
    for (int l = 0; l <= sh.order; ++l)
        for (int m = -l; m <= l; ++m)
            out += sh.coeffs[size_t(ci++)] * sh_basis(l, m, dir);
    return out;
}

// ---------------------------------------------------------------------------
// spherical Gaussians

Vec3 sg_eval(const SgLighting& sg, const Vec3& dir) {
    Vec3 out{0, 0, 0};
    for (const SgLobe& lobe : sg.lobes)
        out += lobe.amplitude * std::exp(lobe.sharpness * (dot(dir, lobe.axis) - 1.0));
    return out;
}

namespace {

std::vector<Vec3> fibonacci_sphere(int n) {
    std::vector<Vec3> dirs;
    const double golden = pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        double y = 1.0 - 2.0 * (i + 0.5) / n;
        double r = std::sqrt(std::max(0.0, 1.0 - y * y));
        double phi = golden * i;
        dirs.push_back({r * std::cos(phi), y, r * std::sin(phi)});
    }
    return dirs;
}

// Solve A x = b in place (n small), partial pivoting.
void solve_linear(std::vector<double>& a, std::vector<double>& b, int n) {
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[size_t(r) * n + col]) > std::abs(a[size_t(piv) * n + col])) piv = r;
        for (int c = 0; c < n; ++c) std::swap(a[size_t(col) * n + c], a[size_t(piv) * n + c]);
        std::swap(b[size_t(col)], b[size_t(piv)]);
        double d = a[size_t(col) * n + col];
        if (std::abs(d) < 1e-12) d = 1e-12;
        for (int r = col + 1; r < n; ++r) {
            double f = a[size_t(r) * n + col] / d;
            for (int c = col; c < n; ++c) a[size_t(r) * n + c] -= f * a[size_t(col) * n + c];
            b[size_t(r)] -= f * b[size_t(col)];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        double acc = b[size_t(r)];
        for (int c = r + 1; c < n; ++c) acc -= a[size_t(r) * n + c] * b[size_t(c)];
        b[size_t(r)] = acc / (std::abs(a[size_t(r) * n + r]) < 1e-12 ? 1e-12 : a[size_t(r) * n + r]);
    }
}

}  // namespace

SgLighting sg_fit(const TblLight& tbl, const Vec3& x, const SgFitConfig& config) {
    const int n_lobes = config.n_lobes;
    // radiance sample set: uniform sphere directions
    std::vector<Vec3> dirs(size_t(config.n_samples));
    std::vector<Vec3> targets(size_t(config.n_samples));
    parallel_for(dirs.size(), [&](size_t s) {
        Rng rng(config.seed, s);
        double z = 2.0 * rng.next_double() - 1.0;
        double phi = 2.0 * pi * rng.next_double();
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        dirs[s] = {r * std::cos(phi), z, r * std::sin(phi)};
        targets[s] = tbl.query_radiance(x, dirs[s]);
    });

    SgLighting sg;
    auto axes = fibonacci_sphere(n_lobes);
    for (int i = 0; i < n_lobes; ++i) sg.lobes.push_back({axes[size_t(i)], 8.0, Vec3{0, 0, 0}});

    // least-squares amplitudes for the fixed initial axes/sharpness
    {
        std::vector<double> basis(dirs.size() * size_t(n_lobes));
        for (size_t s = 0; s < dirs.size(); ++s)
            for (int j = 0; j < n_lobes; ++j)
                basis[s * size_t(n_lobes) + size_t(j)] =
                    std::exp(sg.lobes[size_t(j)].sharpness * (dot(dirs[s], sg.lobes[size_t(j)].axis) - 1.0));
        for (int ch = 0; ch < 3; ++ch) {
            std::vector<double> ata(size_t(n_lobes) * n_lobes, 0.0), atb(size_t(n_lobes), 0.0);
            for (size_t s = 0; s < dirs.size(); ++s) {
                double t = targets[s][ch];
                for (int j = 0; j < n_lobes; ++j) {
                    double bj = basis[s * size_t(n_lobes) + size_t(j)];
                    atb[size_t(j)] += bj * t;
                    for (int k = 0; k < n_lobes; ++k)
                        ata[size_t(j) * n_lobes + size_t(k)] += bj * basis[s * size_t(n_lobes) + size_t(k)];
                }
            }
            // small ridge keeps the system well posed
            for (int j = 0; j < n_lobes; ++j) ata[size_t(j) * n_lobes + size_t(j)] += 1e-6;
            solve_linear(ata, atb, n_lobes);
            for (int j = 0; j < n_lobes; ++j) {
                double a = std::max(0.0, atb[size_t(j)]);
                if (ch == 0) sg.lobes[size_t(j)].amplitude.x = a;
                if (ch == 1) sg.lobes[size_t(j)].amplitude.y = a;
                if (ch == 2) sg.lobes[size_t(j)].amplitude.z = a;
            }
        }
    }

    // Adam refinement of all parameters, MSE in log1p space.
    // Parameters per lobe: raw axis (3), sharpness, amplitude (3).
    const int per_lobe = 7;
    std::vector<double> params(size_t(n_lobes) * per_lobe);
    for (int j = 0; j < n_lobes; ++j) {
        params[size_t(j * per_lobe) + 0] = sg.lobes[size_t(j)].axis.x;
        params[size_t(j * per_lobe) + 1] = sg.lobes[size_t(j)].axis.y;
        params[size_t(j * per_lobe) + 2] = sg.lobes[size_t(j)].axis.z;
        params[size_t(j * per_lobe) + 3] = sg.lobes[size_t(j)].sharpness;
        params[size_t(j * per_lobe) + 4] = sg.lobes[size_t(j)].amplitude.x;
        params[size_t(j * per_lobe) + 5] = sg.lobes[size_t(j)].amplitude.y;
        params[size_t(j * per_lobe) + 6] = sg.lobes[size_t(j)].amplitude.z;
    }
    auto unpack = [&](SgLighting& out) {
        for (int j = 0; j < n_lobes; ++j) {
            const double* p = &params[size_t(j * per_lobe)];
            out.lobes[size_t(j)].axis = normalize({p[0], p[1], p[2]});
            out.lobes[size_t(j)].sharpness = clamp(p[3], 1e-3, 1e4);
            out.lobes[size_t(j)].amplitude = {std::max(0.0, p[4]), std::max(0.0, p[5]),
                                              std::max(0.0, p[6])};
        }
    };

    std::vector<double> m(params.size(), 0.0), v(params.size(), 0.0);
    std::vector<double> grad(params.size());
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;

    for (int step = 1; step <= config.steps; ++step) {
        unpack(sg);
        std::fill(grad.begin(), grad.end(), 0.0);
        double inv_n = 1.0 / (3.0 * double(dirs.size()));
        for (size_t s = 0; s < dirs.size(); ++s) {
            Vec3 recon = sg_eval(sg, dirs[s]);
            Vec3 dl;
            for (int ch = 0; ch < 3; ++ch) {
                double d = std::log1p(std::max(0.0, recon[ch])) -
                           std::log1p(std::max(0.0, targets[s][ch]));
                double g = 2.0 * d / (1.0 + std::max(0.0, recon[ch])) * inv_n;
                if (ch == 0) dl.x = g;
                if (ch == 1) dl.y = g;
                if (ch == 2) dl.z = g;
            }
            for (int j = 0; j < n_lobes; ++j) {
                const SgLobe& lobe = sg.lobes[size_t(j)];
                double cosang = dot(dirs[s], lobe.axis);
                double e = std::exp(lobe.sharpness * (cosang - 1.0));
                double* g = &grad[size_t(j * per_lobe)];
                const double* p = &params[size_t(j * per_lobe)];
                double wlen = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
                if (wlen < 1e-9) wlen = 1e-9;
                // d cosang / d raw axis = (dir - axis * cosang) / |w|
                Vec3 dcos = (dirs[s] - lobe.axis * cosang) / wlen;
                double amp_dl = dot(dl, lobe.amplitude);
                g[0] += amp_dl * e * lobe.sharpness * dcos.x;
                g[1] += amp_dl * e * lobe.sharpness * dcos.y;
                g[2] += amp_dl * e * lobe.sharpness * dcos.z;
                g[3] += amp_dl * e * (cosang - 1.0);
                g[4] += dl.x * e;
                g[5] += dl.y * e;
                g[6] += dl.z * e;
            }
        }
        for (size_t i = 0; i < params.size(); ++i) {
            if (!std::isfinite(grad[i])) throw std::runtime_error("SG fit diverged");
            m[i] = b1 * m[i] + (1 - b1) * grad[i];
            v[i] = b2 * v[i] + (1 - b2) * grad[i] * grad[i];
            double mh = m[i] / (1.0 - std::pow(b1, step));
            double vh = v[i] / (1.0 - std::pow(b2, step));
            params[i] -= config.learning_rate * mh / (std::sqrt(vh) + eps);
        }
    }
    unpack(sg);
    return sg;
}

// ---------------------------------------------------------------------------
// sphere harness

EnvQuery env_from_tbl(const TblLight& tbl, const Vec3& x) {
    return [&tbl, x](const Vec3& dir) { return tbl.query_radiance(x, dir); };
}
EnvQuery env_from_sh(const ShLighting& sh) {
    return [sh](const Vec3& dir) { return sh_eval(sh, dir); };
}
EnvQuery env_from_sg(const SgLighting& sg) {
    return [sg](const Vec3& dir) { return sg_eval(sg, dir); };
}

TextureImage sphere_harness(const EnvQuery& env, SphereMaterial material,
                            const SphereHarnessConfig& config) {
    Vec3 albedo;
    double roughness;
    switch (material) {
        case SphereMaterial::Diffuse: albedo = Vec3(0.8); roughness = 1.0; break;
        case SphereMaterial::MatteSilver: albedo = Vec3(0.95); roughness = 0.4; break;
        case SphereMaterial::MirrorSilver: albedo = Vec3(0.95); roughness = brdf::kMinRoughness; break;
    }

    const int size = config.image_size;
    TextureImage out(size, size, 3, 0.0);
    // orthographic view down -z onto the unit sphere
    parallel_for(size_t(size) * size, [&](size_t idx) {
        int x = int(idx % size_t(size));
        int y = int(idx / size_t(size));
        double sx = 2.0 * (x + 0.5) / size - 1.0;
        double sy = 2.0 * (y + 0.5) / size - 1.0;
        double r2 = sx * sx + sy * sy;
        if (r2 > 1.0) return;
        Vec3 n = normalize({sx, sy, std::sqrt(1.0 - r2)});
        Vec3 view{0, 0, 1};
        if (dot(n, view) <= 0) return;
        Frame frame(n);
        Rng rng(config.seed, idx);
        Vec3 acc{0, 0, 0};
        for (int s = 0; s < config.samples; ++s) {
            double u1 = rng.next_double();
            double u2 = rng.next_double();
            // diffuse: cosine sampling
            Vec3 l_diff = frame.to_world([&] {
                Vec3 d;
                double pdf;
                brdf::sample_cosine(u1, u2, d, pdf);
                return d;
            }());
            acc += env(l_diff) * albedo;  // (A/pi) * L * cos / pdf = A * L
            // specular: GGX half-vector sampling
            double u3 = rng.next_double();
            double u4 = rng.next_double();
            Vec3 h_local;
            double pdf_h;
            brdf::sample_ggx(u3, u4, roughness, h_local, pdf_h);
            Vec3 h = frame.to_world(h_local);
            Vec3 l = reflect(view, h);
            double nl = dot(n, l);
            double vh = dot(view, h);
            if (nl > 0 && vh > 0 && pdf_h > 0) {
                double pdf_l = pdf_h / (4.0 * vh);
                double fs = brdf::eval_specular(n, view, l, roughness);
                acc += env(l) * (fs * nl / pdf_l);
            }
        }
        out.set_pixel(x, y, acc / double(config.samples));
    });
    return out;
}

}  // namespace texir

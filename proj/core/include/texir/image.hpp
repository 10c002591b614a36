#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "texir/vec.hpp"

namespace texir {

// Float image, row major, bottom row first (PFM order). channels is 1 or 3.
struct TextureImage {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<double> data;

    TextureImage() = default;
    TextureImage(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c), data(size_t(w) * h * c, fill) {}

    double& at(int x, int y, int c) { return data[(size_t(y) * width + x) * channels + c]; }
    double at(int x, int y, int c) const { return data[(size_t(y) * width + x) * channels + c]; }

    Vec3 pixel(int x, int y) const {
        size_t i = (size_t(y) * width + x) * channels;
        if (channels == 1) return Vec3(data[i]);
        return {data[i], data[i + 1], data[i + 2]};
    }

    void set_pixel(int x, int y, const Vec3& v) {
        size_t i = (size_t(y) * width + x) * channels;
        if (channels == 1) { data[i] = v.x; return; }
        data[i] = v.x; data[i + 1] = v.y; data[i + 2] = v.z;
    }

    // Bilinear sample at uv in [0,1]^2, clamp wrap. Texel centers sit at
    // ((i+0.5)/w, (j+0.5)/h); v increases upward.
    Vec3 sample(double u, double v) const;

    // Scatter-add value into the 4 bilinear texels around uv.
    void splat(double u, double v, const Vec3& value);

    bool all_finite() const;
};

// Integer id image, same row order as TextureImage. 0 = unlabeled.
struct MaskImage {
    int width = 0;
    int height = 0;
    std::vector<int> ids;

    MaskImage() = default;
    MaskImage(int w, int h, int fill = 0) : width(w), height(h), ids(size_t(w) * h, fill) {}

    int& at(int x, int y) { return ids[size_t(y) * width + x]; }
    int at(int x, int y) const { return ids[size_t(y) * width + x]; }

    // Nearest-texel lookup at uv (clamped).
    int sample(double u, double v) const;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

TextureImage read_pfm(const std::string& path);
void write_pfm(const TextureImage& img, const std::string& path);

MaskImage read_mask_pgm(const std::string& path);
void write_mask_pgm(const MaskImage& mask, const std::string& path);

// LDR preview: gamma 2.2, clamp to [0,1], binary PPM (top row first on disk).
void write_ppm_preview(const TextureImage& img, const std::string& path);

// Per-channel tonemap used for metrics and previews.
TextureImage tonemap_gamma22(const TextureImage& hdr);

}  // namespace texir

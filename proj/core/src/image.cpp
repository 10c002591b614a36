#include "texir/image.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace texir {

Vec3 TextureImage::sample(double u, double v) const {
    double x = u * width - 0.5;
    double y = v * height - 0.5;
    int x0 = int(std::floor(x));
    int y0 = int(std::floor(y));
    double fx = x - x0;
    double fy = y - y0;
    auto cx = [&](int i) { return std::clamp(i, 0, width - 1); };
    auto cy = [&](int j) { return std::clamp(j, 0, height - 1); };
    Vec3 p00 = pixel(cx(x0), cy(y0));
    Vec3 p10 = pixel(cx(x0 + 1), cy(y0));
    Vec3 p01 = pixel(cx(x0), cy(y0 + 1));
    Vec3 p11 = pixel(cx(x0 + 1), cy(y0 + 1));
    return p00 * ((1 - fx) * (1 - fy)) + p10 * (fx * (1 - fy)) +
           p01 * ((1 - fx) * fy) + p11 * (fx * fy);
}

void TextureImage::splat(double u, double v, const Vec3& value) {
    double x = u * width - 0.5;
    double y = v * height - 0.5;
    int x0 = int(std::floor(x));
    int y0 = int(std::floor(y));
    double fx = x - x0;
    double fy = y - y0;
    auto cx = [&](int i) { return std::clamp(i, 0, width - 1); };
    auto cy = [&](int j) { return std::clamp(j, 0, height - 1); };
    const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    const int xs[4] = {cx(x0), cx(x0 + 1), cx(x0), cx(x0 + 1)};
    const int ys[4] = {cy(y0), cy(y0), cy(y0 + 1), cy(y0 + 1)};
    for (int k = 0; k < 4; ++k) {
        size_t i = (size_t(ys[k]) * width + xs[k]) * channels;
        if (channels == 1) {
            data[i] += w[k] * value.x;
        } else {
            data[i] += w[k] * value.x;
            data[i + 1] += w[k] * value.y;
            data[i + 2] += w[k] * value.z;
        }
    }
}

bool TextureImage::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

int MaskImage::sample(double u, double v) const {
    int x = std::clamp(int(u * width), 0, width - 1);
    int y = std::clamp(int(v * height), 0, height - 1);
    return at(x, y);
}

namespace {

std::string read_line(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("unexpected end of header");
    return line;
}

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

float swap_if_needed(float f, bool file_le) {
    bool native_le = std::endian::native == std::endian::little;
    if (file_le == native_le) return f;
    uint32_t u;
    std::memcpy(&u, &f, 4);
    u = __builtin_bswap32(u);
    std::memcpy(&f, &u, 4);
    return f;
}

}  // namespace

TextureImage read_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open PFM file: " + path);
    std::string magic = read_line(in);
    int channels;
    if (magic == "PF") channels = 3;
    else if (magic == "Pf") channels = 1;
    else throw ParseError(path + ": not a PFM file");
    std::istringstream dims(read_line(in));
    int w = 0, h = 0;
    if (!(dims >> w >> h) || w <= 0 || h <= 0)
        throw ParseError(path + ": bad PFM dimensions");
    double scale = 0;
    std::istringstream sc(read_line(in));
    if (!(sc >> scale) || scale == 0) throw ParseError(path + ": bad PFM scale");
    bool file_le = scale < 0;

    TextureImage img(w, h, channels);
    std::vector<float> raw(size_t(w) * h * channels);
    in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size() * 4));
    if (size_t(in.gcount()) != raw.size() * 4)
        throw ParseError(path + ": truncated PFM payload");
    for (size_t i = 0; i < raw.size(); ++i) {
        float f = swap_if_needed(raw[i], file_le);
        if (!std::isfinite(f)) throw ParseError(path + ": non-finite PFM value");
        img.data[i] = f;
    }
    return img;
}

void write_pfm(const TextureImage& img, const std::string& path) {
    if (!img.all_finite()) throw ParseError("refusing to write non-finite PFM: " + path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << (img.channels == 3 ? "PF" : "Pf") << "\n"
        << img.width << " " << img.height << "\n-1.0\n";
    std::vector<float> raw(img.data.size());
    for (size_t i = 0; i < raw.size(); ++i)
        raw[i] = swap_if_needed(float(img.data[i]), true);
    out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size() * 4));
    if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

int next_pnm_int(std::istream& in, const char* what) {
    // skip whitespace and '#' comments
    int c = in.get();
    while (c != EOF && (std::isspace(c) || c == '#')) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        }
        c = in.get();
    }
    if (c == EOF || !std::isdigit(c)) throw ParseError(std::string("bad PNM token: ") + what);
    int v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        c = in.get();
    }
    return v;
}

}  // namespace

MaskImage read_mask_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open PGM file: " + path);
    char m0 = char(in.get()), m1 = char(in.get());
    if (m0 != 'P' || m1 != '5')
        throw ParseError(path + ": not a binary PGM (P5) file");
    int w = next_pnm_int(in, "width");
    int h = next_pnm_int(in, "height");
    int maxval = next_pnm_int(in, "maxval");
    if (w <= 0 || h <= 0) throw ParseError(path + ": bad PGM dimensions");
    if (maxval <= 0 || maxval > 65535) throw ParseError(path + ": unsupported PGM maxval");

    // PGM stores top row first; we keep bottom row first in memory.
    MaskImage mask(w, h);
    int bpp = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> raw(size_t(w) * h * bpp);
    in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
    if (size_t(in.gcount()) != raw.size()) throw ParseError(path + ": truncated PGM payload");
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            size_t i = (size_t(y) * w + x) * bpp;
            int v = bpp == 1 ? raw[i] : (raw[i] << 8) | raw[i + 1];
            mask.at(x, h - 1 - y) = v;
        }
    }
    return mask;
}

void write_mask_pgm(const MaskImage& mask, const std::string& path) {
    int maxid = 0;
    for (int v : mask.ids) {
        if (v < 0) throw std::runtime_error("negative mask id");
        maxid = std::max(maxid, v);
    }
    if (maxid > 65535) throw std::runtime_error("mask id exceeds 65535");
    int maxval = maxid < 256 ? 255 : 65535;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "P5\n" << mask.width << " " << mask.height << "\n" << maxval << "\n";
    for (int y = mask.height - 1; y >= 0; --y) {
        for (int x = 0; x < mask.width; ++x) {
            int v = mask.at(x, y);
            if (maxval == 255) {
                out.put(char(v));
            } else {
                out.put(char(v >> 8));
                out.put(char(v & 0xff));
            }
        }
    }
}

TextureImage tonemap_gamma22(const TextureImage& hdr) {
    TextureImage out(hdr.width, hdr.height, hdr.channels);
    for (size_t i = 0; i < hdr.data.size(); ++i)
        out.data[i] = std::pow(clamp(hdr.data[i], 0.0, 1.0), 1.0 / 2.2);
    return out;
}

void write_ppm_preview(const TextureImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    for (int y = img.height - 1; y >= 0; --y) {
        for (int x = 0; x < img.width; ++x) {
            Vec3 p = img.pixel(x, y);
            for (double c : {p.x, p.y, p.z}) {
                double t = std::pow(clamp(c, 0.0, 1.0), 1.0 / 2.2);
                out.put(char(int(std::lround(t * 255.0))));
            }
        }
    }
}

}  // namespace texir

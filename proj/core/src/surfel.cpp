#include "texir/surfel.hpp"

#include <cmath>
#include <stdexcept>

namespace texir {

bool tri_box_overlap_2d(const Vec2& a, const Vec2& b, const Vec2& c,
                        const Vec2& lo, const Vec2& hi) {
    double tminx = std::min({a.x, b.x, c.x}), tmaxx = std::max({a.x, b.x, c.x});
    double tminy = std::min({a.y, b.y, c.y}), tmaxy = std::max({a.y, b.y, c.y});
    if (tmaxx < lo.x || tminx > hi.x || tmaxy < lo.y || tminy > hi.y) return false;

    const Vec2 verts[3] = {a, b, c};
    const Vec2 corners[4] = {lo, {hi.x, lo.y}, hi, {lo.x, hi.y}};
    for (int e = 0; e < 3; ++e) {
        Vec2 d = verts[(e + 1) % 3] - verts[e];
        Vec2 n{-d.y, d.x};
        double t0 = 1e30, t1 = -1e30, s0 = 1e30, s1 = -1e30;
        for (const Vec2& v : verts) {
            double p = dot(n, v);
            t0 = std::min(t0, p);
            t1 = std::max(t1, p);
        }
        for (const Vec2& v : corners) {
            double p = dot(n, v);
            s0 = std::min(s0, p);
            s1 = std::max(s1, p);
        }
        if (t1 < s0 || t0 > s1) return false;
    }
    return true;
}

namespace {

// Closest point to p inside triangle (a,b,c), returned as barycentrics.
void closest_bary(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c,
                  double& b0, double& b1, double& b2) {
    Vec2 ab = b - a, ac = c - a, ap = p - a;
    double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0 && d2 <= 0) { b0 = 1; b1 = 0; b2 = 0; return; }
    Vec2 bp = p - b;
    double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0 && d4 <= d3) { b0 = 0; b1 = 1; b2 = 0; return; }
    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) {
        double v = d1 / (d1 - d3);
        b0 = 1 - v; b1 = v; b2 = 0;
        return;
    }
    Vec2 cp = p - c;
    double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0 && d5 <= d6) { b0 = 0; b1 = 0; b2 = 1; return; }
    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) {
        double w = d2 / (d2 - d6);
        b0 = 1 - w; b1 = 0; b2 = w;
        return;
    }
    double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
        double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        b0 = 0; b1 = 1 - w; b2 = w;
        return;
    }
    double denom = 1.0 / (va + vb + vc);
    double v = vb * denom, w = vc * denom;
    b0 = 1 - v - w; b1 = v; b2 = w;
}

}  // namespace

std::vector<Surfel> texel_surfels(const TriangleMesh& mesh, int atlas_res) {
    if (!mesh.has_uvs) throw std::runtime_error("texel_surfels requires a mesh with UVs");
    if (atlas_res < 1) throw std::runtime_error("atlas resolution must be >= 1");

    std::vector<int> owner(size_t(atlas_res) * atlas_res, -1);
    std::vector<Surfel> surfels;
    const double texel = 1.0 / atlas_res;

    auto make_surfel = [&](int tri, int x, int y, double b0, double b1, double b2) {
        const Triangle& t = mesh.triangles[size_t(tri)];
        Surfel s;
        s.x = x;
        s.y = y;
        s.triangle = tri;
        s.position = mesh.positions[size_t(t.v0)] * b0 + mesh.positions[size_t(t.v1)] * b1 +
                     mesh.positions[size_t(t.v2)] * b2;
        s.normal = normalize(mesh.normals[size_t(t.v0)] * b0 + mesh.normals[size_t(t.v1)] * b1 +
                             mesh.normals[size_t(t.v2)] * b2);
        s.uv = mesh.uvs[size_t(t.v0)] * b0 + mesh.uvs[size_t(t.v1)] * b1 +
               mesh.uvs[size_t(t.v2)] * b2;
        return s;
    };

    std::vector<bool> claimed_any(mesh.triangles.size(), false);

    auto uv_bbox = [&](const Vec2& a, const Vec2& b, const Vec2& c, int& x0, int& x1, int& y0,
                       int& y1) {
        x0 = std::clamp(int(std::floor(std::min({a.x, b.x, c.x}) * atlas_res)), 0, atlas_res - 1);
        x1 = std::clamp(int(std::floor(std::max({a.x, b.x, c.x}) * atlas_res)), 0, atlas_res - 1);
        y0 = std::clamp(int(std::floor(std::min({a.y, b.y, c.y}) * atlas_res)), 0, atlas_res - 1);
        y1 = std::clamp(int(std::floor(std::max({a.y, b.y, c.y}) * atlas_res)), 0, atlas_res - 1);
    };

    // pass 1: texel centers inside a triangle map exactly (first triangle wins)
    for (int tri = 0; tri < int(mesh.triangles.size()); ++tri) {
        const Triangle& t = mesh.triangles[size_t(tri)];
        Vec2 a = mesh.uvs[size_t(t.v0)];
        Vec2 b = mesh.uvs[size_t(t.v1)];
        Vec2 c = mesh.uvs[size_t(t.v2)];
        double denom = cross2(b - a, c - a);
        if (std::abs(denom) < 1e-14) continue;
        int x0, x1, y0, y1;
        uv_bbox(a, b, c, x0, x1, y0, y1);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                size_t idx = size_t(y) * atlas_res + x;
                if (owner[idx] >= 0) continue;
                Vec2 center{(x + 0.5) * texel, (y + 0.5) * texel};
                double b1 = cross2(center - a, c - a) / denom;
                double b2 = cross2(b - a, center - a) / denom;
                double b0 = 1.0 - b1 - b2;
                if (b0 < -1e-9 || b1 < -1e-9 || b2 < -1e-9) continue;
                owner[idx] = tri;
                surfels.push_back(make_surfel(tri, x, y, b0, b1, b2));
                claimed_any[size_t(tri)] = true;
            }
        }
    }

    // pass 2: remaining overlapped texels (chart gutters) snap to the
    // closest point on an overlapping triangle
    for (int tri = 0; tri < int(mesh.triangles.size()); ++tri) {
        const Triangle& t = mesh.triangles[size_t(tri)];
        Vec2 a = mesh.uvs[size_t(t.v0)];
        Vec2 b = mesh.uvs[size_t(t.v1)];
        Vec2 c = mesh.uvs[size_t(t.v2)];
        if (std::abs(cross2(b - a, c - a)) < 1e-14) continue;
        int x0, x1, y0, y1;
        uv_bbox(a, b, c, x0, x1, y0, y1);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                size_t idx = size_t(y) * atlas_res + x;
                if (owner[idx] >= 0) continue;
                Vec2 lo{x * texel, y * texel};
                Vec2 hi{(x + 1) * texel, (y + 1) * texel};
                if (!tri_box_overlap_2d(a, b, c, lo, hi)) continue;
                Vec2 center{(x + 0.5) * texel, (y + 0.5) * texel};
                double b0, b1, b2;
                closest_bary(center, a, b, c, b0, b1, b2);
                // the closest point sits on the chart boundary, i.e. on a
                // geometric edge where gather rays graze the neighboring
                // face inside the ray epsilon; pull it a quarter texel
                // toward the centroid so the surfel is strictly interior
                Vec2 p = a * b0 + b * b1 + c * b2;
                Vec2 g = (a + b + c) * (1.0 / 3.0);
                Vec2 d = g - p;
                double dist = std::sqrt(dot(d, d));
                if (dist > 1e-12) {
                    p = p + d * (std::min(0.25 * texel, dist) / dist);
                    double denom = cross2(b - a, c - a);
                    b1 = cross2(p - a, c - a) / denom;
                    b2 = cross2(b - a, p - a) / denom;
                    b0 = 1.0 - b1 - b2;
                }
                owner[idx] = tri;
                surfels.push_back(make_surfel(tri, x, y, b0, b1, b2));
                claimed_any[size_t(tri)] = true;
            }
        }
    }

    // fallback: a sliver that claimed nothing drops its centroid into a texel
    for (int tri = 0; tri < int(mesh.triangles.size()); ++tri) {
        if (claimed_any[size_t(tri)]) continue;
        const Triangle& t = mesh.triangles[size_t(tri)];
        Vec2 centroid = (mesh.uvs[size_t(t.v0)] + mesh.uvs[size_t(t.v1)] +
                         mesh.uvs[size_t(t.v2)]) * (1.0 / 3.0);
        int x = std::clamp(int(centroid.x * atlas_res), 0, atlas_res - 1);
        int y = std::clamp(int(centroid.y * atlas_res), 0, atlas_res - 1);
        size_t idx = size_t(y) * atlas_res + x;
        if (owner[idx] < 0) {
            owner[idx] = tri;
            surfels.push_back(make_surfel(tri, x, y, 1.0 / 3, 1.0 / 3, 1.0 / 3));
        }
    }
    return surfels;
}

MaskImage surfel_coverage(const std::vector<Surfel>& surfels, int atlas_res) {
    MaskImage cov(atlas_res, atlas_res, 0);
    for (const Surfel& s : surfels) cov.at(s.x, s.y) = 1;
    return cov;
}

}  // namespace texir

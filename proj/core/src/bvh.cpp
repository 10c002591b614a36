#include "texir/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace texir {

namespace {

constexpr int kLeafSize = 4;

struct TriHit {
    double t, b0, b1, b2;
};

// Moller-Trumbore
bool intersect_triangle(const Vec3& p0, const Vec3& p1, const Vec3& p2,
                        const Ray& ray, double t_best, TriHit& out) {
    Vec3 e1 = p1 - p0;
    Vec3 e2 = p2 - p0;
    Vec3 pv = cross(ray.direction, e2);
    double det = dot(e1, pv);
    if (std::abs(det) < 1e-12) return false;
    double inv_det = 1.0 / det;
    Vec3 tv = ray.origin - p0;
    double u = dot(tv, pv) * inv_det;
    if (u < -1e-9 || u > 1 + 1e-9) return false;
    Vec3 qv = cross(tv, e1);
    double v = dot(ray.direction, qv) * inv_det;
    if (v < -1e-9 || u + v > 1 + 1e-9) return false;
    double t = dot(e2, qv) * inv_det;
    if (t <= ray.t_min || t >= std::min(ray.t_max, t_best)) return false;
    out = {t, 1 - u - v, u, v};
    return true;
}

bool intersect_aabb(const Vec3& lo, const Vec3& hi, const Ray& ray, double t_best) {
    double t0 = ray.t_min, t1 = std::min(ray.t_max, t_best);
    for (int a = 0; a < 3; ++a) {
        double inv = 1.0 / ray.direction[a];
        double tn = (lo[a] - ray.origin[a]) * inv;
        double tf = (hi[a] - ray.origin[a]) * inv;
        if (inv < 0) std::swap(tn, tf);
        t0 = std::max(t0, tn);
        t1 = std::min(t1, tf);
        if (t0 > t1) return false;
    }
    return true;
}

}  // namespace

Bvh::Bvh(const TriangleMesh& mesh) : mesh_(&mesh) {
    if (mesh.triangles.empty()) throw std::runtime_error("cannot build BVH over empty mesh");
    int n = int(mesh.triangles.size());
    centroids_.resize(size_t(n));
    for (int i = 0; i < n; ++i) {
        const Triangle& t = mesh.triangles[size_t(i)];
        centroids_[size_t(i)] =
            (mesh.positions[t.v0] + mesh.positions[t.v1] + mesh.positions[t.v2]) / 3.0;
    }
    std::vector<int> tris(size_t(n), 0);
    for (int i = 0; i < n; ++i) tris[size_t(i)] = i;
    nodes_.reserve(size_t(2 * n));
    build(tris, 0, n);
    centroids_.clear();
}

int Bvh::build(std::vector<int>& tris, int begin, int end) {
    Node node;
    node.lo = Vec3(1e30);
    node.hi = Vec3(-1e30);
    for (int i = begin; i < end; ++i) {
        const Triangle& t = mesh_->triangles[size_t(tris[size_t(i)])];
        for (int v : {t.v0, t.v1, t.v2}) {
            node.lo = min(node.lo, mesh_->positions[size_t(v)]);
            node.hi = max(node.hi, mesh_->positions[size_t(v)]);
        }
    }
    int id = int(nodes_.size());
    nodes_.push_back(node);

    if (end - begin <= kLeafSize) {
        nodes_[size_t(id)].first = int(tri_order_.size());
        nodes_[size_t(id)].count = end - begin;
        for (int i = begin; i < end; ++i) tri_order_.push_back(tris[size_t(i)]);
        return id;
    }

    // split the widest centroid axis at the median
    Vec3 clo(1e30), chi(-1e30);
    for (int i = begin; i < end; ++i) {
        clo = min(clo, centroids_[size_t(tris[size_t(i)])]);
        chi = max(chi, centroids_[size_t(tris[size_t(i)])]);
    }
    Vec3 ext = chi - clo;
    int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
    int mid = (begin + end) / 2;
    std::nth_element(tris.begin() + begin, tris.begin() + mid, tris.begin() + end,
                     [&](int a, int b) {
                         double ca = centroids_[size_t(a)][axis];
                         double cb = centroids_[size_t(b)][axis];
                         return ca != cb ? ca < cb : a < b;
                     });

    int left = build(tris, begin, mid);
    int right = build(tris, mid, end);
    nodes_[size_t(id)].left = left;
    nodes_[size_t(id)].first = right;  // internal nodes reuse 'first' for the right child
    return id;
}

std::optional<Hit> Bvh::hit_triangle(int tri, const Ray& ray, double t_best) const {
    const Triangle& t = mesh_->triangles[size_t(tri)];
    TriHit th;
    if (!intersect_triangle(mesh_->positions[size_t(t.v0)], mesh_->positions[size_t(t.v1)],
                            mesh_->positions[size_t(t.v2)], ray, t_best, th))
        return std::nullopt;
    Hit h;
    h.t = th.t;
    h.triangle = tri;
    h.b0 = th.b0;
    h.b1 = th.b1;
    h.b2 = th.b2;
    h.position = mesh_->positions[size_t(t.v0)] * th.b0 + mesh_->positions[size_t(t.v1)] * th.b1 +
                 mesh_->positions[size_t(t.v2)] * th.b2;
    h.normal = normalize(mesh_->normals[size_t(t.v0)] * th.b0 + mesh_->normals[size_t(t.v1)] * th.b1 +
                         mesh_->normals[size_t(t.v2)] * th.b2);
    Vec2 uv0 = mesh_->uvs[size_t(t.v0)], uv1 = mesh_->uvs[size_t(t.v1)], uv2 = mesh_->uvs[size_t(t.v2)];
    h.uv = uv0 * th.b0 + uv1 * th.b1 + uv2 * th.b2;
    return h;
}

std::optional<Hit> Bvh::intersect(const Ray& ray) const {
    std::optional<Hit> best;
    double t_best = ray.t_max;
    int stack[64];
    int sp = 0;
    stack[sp++] = 0;
    while (sp > 0) {
        int id = stack[--sp];
        const Node& node = nodes_[size_t(id)];
        if (!intersect_aabb(node.lo, node.hi, ray, t_best)) continue;
        if (node.left < 0) {
            for (int i = node.first; i < node.first + node.count; ++i) {
                auto h = hit_triangle(tri_order_[size_t(i)], ray, t_best);
                if (h && (!best || h->t < best->t ||
                          (h->t == best->t && h->triangle < best->triangle))) {
                    best = h;
                    t_best = h->t;
                }
            }
        } else {
            stack[sp++] = node.first;  // right child
            stack[sp++] = node.left;
        }
    }
    return best;
}

bool Bvh::occluded(const Ray& ray) const {
    return intersect(ray).has_value();
}

std::optional<Hit> Bvh::intersect_brute_force(const Ray& ray) const {
    std::optional<Hit> best;
    double t_best = ray.t_max;
    for (int i = 0; i < int(mesh_->triangles.size()); ++i) {
        auto h = hit_triangle(i, ray, t_best);
        if (h && (!best || h->t < best->t)) {
            best = h;
            t_best = h->t;
        }
    }
    return best;
}

}  // namespace texir

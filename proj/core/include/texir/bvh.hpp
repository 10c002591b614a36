#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "texir/mesh.hpp"

namespace texir {

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit
    double t_min = 0.0;
    double t_max = std::numeric_limits<double>::infinity();
};

struct Hit {
    double t = 0;
    int triangle = -1;
    double b0 = 0, b1 = 0, b2 = 0;
    Vec3 position;
    Vec3 normal;  // interpolated shading normal, unit
    Vec2 uv;
};

// Binary BVH over mesh triangles, median split. Deterministic for a
// fixed mesh.
class Bvh {
public:
    explicit Bvh(const TriangleMesh& mesh);

    std::optional<Hit> intersect(const Ray& ray) const;
    bool occluded(const Ray& ray) const;

    const TriangleMesh& mesh() const { return *mesh_; }

    // All-triangles reference path, used as the traversal oracle in tests.
    std::optional<Hit> intersect_brute_force(const Ray& ray) const;

private:
    struct Node {
        Vec3 lo, hi;
        int left = -1;        // internal: child pair (left, left+1)
        int first = 0, count = 0;  // leaf: range into tri_order_
    };

    int build(std::vector<int>& tris, int begin, int end);
    std::optional<Hit> hit_triangle(int tri, const Ray& ray, double t_best) const;

    const TriangleMesh* mesh_;
    std::vector<Node> nodes_;
    std::vector<int> tri_order_;
    std::vector<Vec3> centroids_;
};

}  // namespace texir

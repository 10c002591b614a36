#pragma once

#include <string>
#include <vector>

#include "texir/vec.hpp"

namespace texir {

struct Triangle {
    int v0, v1, v2;
};

// Indexed triangle mesh; every vertex carries position, normal and UV.
struct TriangleMesh {
    std::vector<Vec3> positions;
    std::vector<Vec3> normals;
    std::vector<Vec2> uvs;
    std::vector<Triangle> triangles;

    bool has_uvs = false;

    Vec3 face_normal(int tri) const {
        const Triangle& t = triangles[tri];
        return normalize(cross(positions[t.v1] - positions[t.v0],
                               positions[t.v2] - positions[t.v0]));
    }

    double surface_area() const;
    void bounds(Vec3& lo, Vec3& hi) const;
    double diagonal() const;
};

// Wavefront OBJ loader: v/vt/vn/f, polygon faces fan-triangulated.
// Vertex normals are area-weighted face normals when the file has none.
TriangleMesh load_obj(const std::string& path);

void save_obj(const TriangleMesh& mesh, const std::string& path);

}  // namespace texir

#include "texir/mesh.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace texir {

double TriangleMesh::surface_area() const {
    double area = 0;
    for (const Triangle& t : triangles)
        area += 0.5 * length(cross(positions[t.v1] - positions[t.v0],
                                   positions[t.v2] - positions[t.v0]));
    return area;
}

void TriangleMesh::bounds(Vec3& lo, Vec3& hi) const {
    lo = Vec3(1e30);
    hi = Vec3(-1e30);
    for (const Vec3& p : positions) {
        lo = min(lo, p);
        hi = max(hi, p);
    }
}

double TriangleMesh::diagonal() const {
    if (positions.empty()) return 0;
    Vec3 lo, hi;
    bounds(lo, hi);
    return length(hi - lo);
}

namespace {

struct ObjIndex {
    int v = 0, vt = 0, vn = 0;
    bool operator<(const ObjIndex& o) const {
        if (v != o.v) return v < o.v;
        if (vt != o.vt) return vt < o.vt;
        return vn < o.vn;
    }
};

ObjIndex parse_face_vertex(const std::string& token) {
    ObjIndex idx;
    size_t s1 = token.find('/');
    idx.v = std::stoi(token.substr(0, s1));
    if (s1 != std::string::npos) {
        size_t s2 = token.find('/', s1 + 1);
        std::string vt = token.substr(s1 + 1, s2 == std::string::npos ? std::string::npos : s2 - s1 - 1);
        if (!vt.empty()) idx.vt = std::stoi(vt);
        if (s2 != std::string::npos && s2 + 1 < token.size()) idx.vn = std::stoi(token.substr(s2 + 1));
    }
    return idx;
}

int resolve(int idx, size_t count, const char* what) {
    // OBJ indices are 1-based; negative counts from the end
    int r = idx > 0 ? idx - 1 : int(count) + idx;
    if (r < 0 || size_t(r) >= count)
        throw std::runtime_error(std::string("OBJ ") + what + " index out of range: " + std::to_string(idx));
    return r;
}

}  // namespace

TriangleMesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open OBJ file: " + path);

    std::vector<Vec3> positions, normals;
    std::vector<Vec2> uvs;
    std::vector<std::vector<ObjIndex>> faces;

    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            Vec3 p;
            ss >> p.x >> p.y >> p.z;
            positions.push_back(p);
        } else if (tag == "vt") {
            Vec2 t;
            ss >> t.x >> t.y;
            uvs.push_back(t);
        } else if (tag == "vn") {
            Vec3 n;
            ss >> n.x >> n.y >> n.z;
            normals.push_back(n);
        } else if (tag == "f") {
            std::vector<ObjIndex> face;
            std::string tok;
            while (ss >> tok) face.push_back(parse_face_vertex(tok));
            if (face.size() >= 3) faces.push_back(std::move(face));
        }
    }

    TriangleMesh mesh;
    mesh.has_uvs = !uvs.empty();
    std::map<ObjIndex, int> remap;

    auto vertex = [&](const ObjIndex& oi) {
        auto it = remap.find(oi);
        if (it != remap.end()) return it->second;
        int id = int(mesh.positions.size());
        mesh.positions.push_back(positions[size_t(resolve(oi.v, positions.size(), "vertex"))]);
        if (oi.vt != 0)
            mesh.uvs.push_back(uvs[size_t(resolve(oi.vt, uvs.size(), "texcoord"))]);
        else
            mesh.uvs.push_back({0, 0});
        if (oi.vn != 0)
            mesh.normals.push_back(normalize(normals[size_t(resolve(oi.vn, normals.size(), "normal"))]));
        else
            mesh.normals.push_back({0, 0, 0});
        remap[oi] = id;
        return id;
    };

    for (const auto& face : faces) {
        for (size_t k = 2; k < face.size(); ++k) {
            Triangle t{vertex(face[0]), vertex(face[k - 1]), vertex(face[k])};
            // drop degenerate (zero area) triangles
            Vec3 n = cross(mesh.positions[t.v1] - mesh.positions[t.v0],
                           mesh.positions[t.v2] - mesh.positions[t.v0]);
            if (length_sq(n) > 0) mesh.triangles.push_back(t);
        }
    }

    // area-weighted vertex normals where the file gave none
    bool missing = false;
    for (const Vec3& n : mesh.normals)
        if (length_sq(n) == 0) missing = true;
    if (missing) {
        std::vector<Vec3> accum(mesh.positions.size());
        for (const Triangle& t : mesh.triangles) {
            Vec3 n = cross(mesh.positions[t.v1] - mesh.positions[t.v0],
                           mesh.positions[t.v2] - mesh.positions[t.v0]);
            accum[size_t(t.v0)] += n;
            accum[size_t(t.v1)] += n;
            accum[size_t(t.v2)] += n;
        }
        for (size_t i = 0; i < mesh.normals.size(); ++i)
            if (length_sq(mesh.normals[i]) == 0) mesh.normals[i] = normalize(accum[i]);
    }

    // clamp uvs into [0,1]
    for (Vec2& uv : mesh.uvs) {
        uv.x = clamp(uv.x, 0.0, 1.0);
        uv.y = clamp(uv.y, 0.0, 1.0);
    }
    return mesh;
}

void save_obj(const TriangleMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(9);
    for (const Vec3& p : mesh.positions) out << "v " << p.x << " " << p.y << " " << p.z << "\n";
    for (const Vec2& t : mesh.uvs) out << "vt " << t.x << " " << t.y << "\n";
    for (const Vec3& n : mesh.normals) out << "vn " << n.x << " " << n.y << " " << n.z << "\n";
    for (const Triangle& t : mesh.triangles) {
        out << "f";
        for (int v : {t.v0, t.v1, t.v2}) out << " " << v + 1 << "/" << v + 1 << "/" << v + 1;
        out << "\n";
    }
}

}  // namespace texir

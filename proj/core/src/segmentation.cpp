#include "texir/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <stdexcept>

#include "texir/surfel.hpp"

namespace texir {

RoomMap compute_rooms(const TriangleMesh& mesh, int atlas_res, double cell_size,
                      double slice_lo, double slice_hi) {
    Vec3 lo, hi;
    mesh.bounds(lo, hi);
    RoomMap rm;
    rm.cell_size = cell_size;
    // tight grid over the footprint: boundary walls land on border cells,
    // so a closed scene has no free cells outside the rooms
    rm.origin_x = lo.x;
    rm.origin_z = lo.z;
    rm.nx = std::max(1, int(std::ceil((hi.x - lo.x) / cell_size)));
    rm.nz = std::max(1, int(std::ceil((hi.z - lo.z) / cell_size)));
    rm.cells.assign(size_t(rm.nx) * rm.nz, 0);

    std::vector<uint8_t> occupied(rm.cells.size(), 0);
    for (const Triangle& t : mesh.triangles) {
        const Vec3& p0 = mesh.positions[size_t(t.v0)];
        const Vec3& p1 = mesh.positions[size_t(t.v1)];
        const Vec3& p2 = mesh.positions[size_t(t.v2)];
        double ymin = std::min({p0.y, p1.y, p2.y});
        double ymax = std::max({p0.y, p1.y, p2.y});
        if (ymax < slice_lo || ymin > slice_hi) continue;
        Vec2 a{p0.x, p0.z}, b{p1.x, p1.z}, c{p2.x, p2.z};
        int x0 = std::clamp(int((std::min({a.x, b.x, c.x}) - rm.origin_x) / cell_size), 0, rm.nx - 1);
        int x1 = std::clamp(int((std::max({a.x, b.x, c.x}) - rm.origin_x) / cell_size), 0, rm.nx - 1);
        int z0 = std::clamp(int((std::min({a.y, b.y, c.y}) - rm.origin_z) / cell_size), 0, rm.nz - 1);
        int z1 = std::clamp(int((std::max({a.y, b.y, c.y}) - rm.origin_z) / cell_size), 0, rm.nz - 1);
        for (int z = z0; z <= z1; ++z) {
            for (int x = x0; x <= x1; ++x) {
                Vec2 blo{rm.origin_x + x * cell_size, rm.origin_z + z * cell_size};
                Vec2 bhi{blo.x + cell_size, blo.y + cell_size};
                if (tri_box_overlap_2d(a, b, c, blo, bhi))
                    occupied[size_t(z) * rm.nx + x] = 1;
            }
        }
    }

    size_t free_count = 0;
    for (uint8_t o : occupied)
        if (!o) ++free_count;
    if (free_count == 0) throw std::runtime_error("compute_rooms: all occupancy cells occupied");

    // 4-connected flood fill in scan order, ids from 1
    int next_id = 0;
    for (int z = 0; z < rm.nz; ++z) {
        for (int x = 0; x < rm.nx; ++x) {
            size_t idx = size_t(z) * rm.nx + x;
            if (occupied[idx] || rm.cells[idx] != 0) continue;
            ++next_id;
            std::deque<std::pair<int, int>> queue{{x, z}};
            rm.cells[idx] = next_id;
            while (!queue.empty()) {
                auto [cx, cz] = queue.front();
                queue.pop_front();
                const int dx[4] = {1, -1, 0, 0}, dz[4] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    int nx2 = cx + dx[k], nz2 = cz + dz[k];
                    if (nx2 < 0 || nz2 < 0 || nx2 >= rm.nx || nz2 >= rm.nz) continue;
                    size_t ni = size_t(nz2) * rm.nx + nx2;
                    if (occupied[ni] || rm.cells[ni] != 0) continue;
                    rm.cells[ni] = next_id;
                    queue.emplace_back(nx2, nz2);
                }
            }
        }
    }
    rm.room_count = next_id;

    // nearest free-cell room id for every cell (multi-source BFS; ties
    // resolve to the lower id through scan-order seeding)
    rm.nearest.assign(rm.cells.size(), 0);
    std::vector<int> dist(rm.cells.size(), -1);
    std::deque<size_t> queue;
    for (size_t i = 0; i < rm.cells.size(); ++i) {
        if (rm.cells[i] != 0) {
            rm.nearest[i] = rm.cells[i];
            dist[i] = 0;
            queue.push_back(i);
        }
    }
    while (!queue.empty()) {
        size_t i = queue.front();
        queue.pop_front();
        int cx = int(i % size_t(rm.nx)), cz = int(i / size_t(rm.nx));
        const int dx[4] = {1, -1, 0, 0}, dz[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
            int nx2 = cx + dx[k], nz2 = cz + dz[k];
            if (nx2 < 0 || nz2 < 0 || nx2 >= rm.nx || nz2 >= rm.nz) continue;
            size_t ni = size_t(nz2) * rm.nx + nx2;
            if (dist[ni] >= 0) continue;
            dist[ni] = dist[i] + 1;
            rm.nearest[ni] = rm.nearest[i];
            queue.push_back(ni);
        }
    }

    // texture-space room assignment through the surfel set
    rm.texel_rooms = MaskImage(atlas_res, atlas_res, 0);
    auto surfels = texel_surfels(mesh, atlas_res);
    for (const Surfel& s : surfels) {
        int x = std::clamp(int((s.position.x - rm.origin_x) / cell_size), 0, rm.nx - 1);
        int z = std::clamp(int((s.position.z - rm.origin_z) / cell_size), 0, rm.nz - 1);
        rm.texel_rooms.at(s.x, s.y) = rm.nearest[size_t(z) * rm.nx + x];
    }
    return rm;
}

VhlMasks detect_vhl(const Scene& scene, const TblLight& tbl,
                    const std::vector<GBuffer>& gbuffers, const VhlConfig& config) {
    VhlMasks out;
    RenderConfig rc;
    rc.sampler = SpecularSampler::Ggx;
    rc.specular_samples = config.samples;
    rc.seed = config.seed;

    for (const GBuffer& gb : gbuffers) {
        size_t n = gb.pixels.size();
        TextureImage probe_roughness(1, 1, 1, config.probe_roughness);
        TextureImage spec = shade_specular(gb, probe_roughness, tbl, rc);

        // diffuse reference for the relative threshold
        TextureImage diffuse;
        if (scene.albedo && scene.irradiance) {
            IrradianceTexture irt;
            irt.texture = *scene.irradiance;
            irt.coverage = scene.irradiance_coverage;
            diffuse = shade_diffuse(gb, *scene.albedo, irt);
        }

        VhlMasks::View view;
        view.width = gb.width;
        view.height = gb.height;
        view.vhl.assign(n, 0);
        view.class_ids.assign(n, 0);

        std::map<int, std::vector<double>> class_diffuse;
        for (size_t i = 0; i < n; ++i) {
            const GPixel& px = gb.pixels[i];
            if (!px.valid || px.class_id == 0) continue;
            view.class_ids[i] = px.class_id;
            double d;
            if (diffuse.width > 0) {
                d = luminance(diffuse.pixel(int(i % size_t(gb.width)), int(i / size_t(gb.width))));
            } else {
                // before materials exist, the input image stands in
                const TextureImage& img = scene.images[size_t(&gb - gbuffers.data())];
                d = luminance(img.pixel(int(i % size_t(gb.width)), int(i / size_t(gb.width))));
            }
            class_diffuse[px.class_id].push_back(d);
        }

        std::map<int, double> threshold;
        for (auto& [cid, vals] : class_diffuse) {
            std::vector<uint8_t> all(vals.size(), 1);
            double med = masked_quantile(vals, all, 0.5);
            threshold[cid] = std::max(config.tau_abs, config.tau_rel * med);
        }

        for (size_t i = 0; i < n; ++i) {
            int cid = view.class_ids[i];
            if (cid == 0) continue;
            double s = luminance(spec.pixel(int(i % size_t(gb.width)), int(i / size_t(gb.width))));
            if (s > threshold[cid]) view.vhl[i] = 1;
        }
        out.views.push_back(std::move(view));
    }
    return out;
}

void class_stats(const std::vector<double>& values, const std::vector<uint8_t>& mask,
                 double& mean, size_t& count) {
    double sum = 0;
    count = 0;
    for (size_t i = 0; i < values.size(); ++i) {
        if (mask[i]) {
            sum += values[i];
            ++count;
        }
    }
    mean = count > 0 ? sum / double(count) : 0.0;
}

double masked_quantile(const std::vector<double>& values, const std::vector<uint8_t>& mask,
                       double q) {
    std::vector<double> sel;
    for (size_t i = 0; i < values.size(); ++i)
        if (mask[i]) sel.push_back(values[i]);
    if (sel.empty()) throw std::runtime_error("quantile over empty mask");
    std::sort(sel.begin(), sel.end());
    double pos = clamp(q, 0.0, 1.0) * double(sel.size() - 1);
    size_t i0 = size_t(pos);
    size_t i1 = std::min(sel.size() - 1, i0 + 1);
    double f = pos - double(i0);
    return sel[i0] * (1.0 - f) + sel[i1] * f;
}

}  // namespace texir

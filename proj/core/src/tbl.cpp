#include "texir/tbl.hpp"

#include <cmath>
#include <stdexcept>

#include "texir/parallel.hpp"

namespace texir {

Vec3 TblLight::query_radiance(const Vec3& x, const Vec3& omega_i) const {
    Ray ray;
    ray.origin = x;
    ray.direction = omega_i;
    ray.t_min = epsilon;
    auto hit = bvh->intersect(ray);
    if (!hit) return escape_radiance;
    return emissive->sample(hit->uv.x, hit->uv.y);
}

BakedEmissive build_tbl_from_views(const Scene& scene) {
    if (scene.cameras.empty()) throw std::runtime_error("scene has no cameras");
    const int res = scene.emissive.width > 0 ? scene.emissive.width : 256;
    auto surfels = texel_surfels(*scene.mesh, res);
    const double eps = scene.ray_epsilon();

    BakedEmissive out;
    out.texture = TextureImage(res, res, 3, 0.0);
    out.coverage = MaskImage(res, res, 0);

    std::vector<int> seen(surfels.size(), 0);
    parallel_for(surfels.size(), [&](size_t i) {
        const Surfel& s = surfels[i];
        double best_frontal = 0;
        Vec3 radiance;
        for (size_t ci = 0; ci < scene.cameras.size(); ++ci) {
            const Camera& cam = scene.cameras[ci];
            double px, py;
            if (!cam.project(s.position, px, py)) continue;
            Vec3 to_cam = cam.translation - s.position;
            double dist = length(to_cam);
            if (dist < eps) continue;
            to_cam = to_cam / dist;
            double frontal = dot(to_cam, s.normal);
            if (frontal <= 1e-6 || frontal <= best_frontal) continue;
            Ray vis;
            vis.origin = s.position;
            vis.direction = to_cam;
            vis.t_min = eps;
            vis.t_max = dist - eps;
            if (scene.bvh->intersect(vis)) continue;  // occluded
            best_frontal = frontal;
            radiance = scene.images[ci].sample((px + 0.5) / cam.width, (py + 0.5) / cam.height);
        }
        if (best_frontal > 0) {
            seen[i] = 1;
            out.texture.set_pixel(surfels[i].x, surfels[i].y, radiance);
        }
    });

    bool any_seen = false;
    for (size_t i = 0; i < surfels.size(); ++i) {
        if (seen[i]) {
            out.coverage.at(surfels[i].x, surfels[i].y) = 1;
            any_seen = true;
        }
    }
    if (!any_seen) throw std::runtime_error("no camera sees any surface texel");

    // which texels belong to the atlas at all
    MaskImage occupied = surfel_coverage(surfels, res);

    // iterative 8-neighborhood dilation for unseen texels
    MaskImage filled = out.coverage;
    for (int iter = 0; iter < 64; ++iter) {
        bool changed = false;
        MaskImage next = filled;
        TextureImage next_tex = out.texture;
        for (int y = 0; y < res; ++y) {
            for (int x = 0; x < res; ++x) {
                if (filled.at(x, y) || !occupied.at(x, y)) continue;
                Vec3 sum{0, 0, 0};
                int n = 0;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        int nx = x + dx, ny = y + dy;
                        if (nx < 0 || ny < 0 || nx >= res || ny >= res) continue;
                        if (!filled.at(nx, ny)) continue;
                        sum += out.texture.pixel(nx, ny);
                        ++n;
                    }
                }
                if (n > 0) {
                    next_tex.set_pixel(x, y, sum / double(n));
                    next.at(x, y) = 1;
                    changed = true;
                }
            }
        }
        filled = std::move(next);
        out.texture = std::move(next_tex);
        if (!changed) break;
    }
    return out;
}

}  // namespace texir

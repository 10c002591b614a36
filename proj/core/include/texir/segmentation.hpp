#pragma once

#include <cstdint>
#include <vector>

#include "texir/renderer.hpp"
#include "texir/scene.hpp"

namespace texir {

// 2D occupancy grid over the xz plane (y up). Free cells are flood
// filled into rooms; ids are contiguous from 1, 0 marks occupied cells.
struct RoomMap {
    double cell_size = 0.1;
    double origin_x = 0, origin_z = 0;
    int nx = 0, nz = 0;
    std::vector<int> cells;       // room id per cell, 0 = occupied
    std::vector<int> nearest;     // room id of the nearest free cell, for every cell
    int room_count = 0;
    MaskImage texel_rooms;        // texture-space room ids

    int cell(int x, int z) const { return cells[size_t(z) * nx + x]; }
};

RoomMap compute_rooms(const TriangleMesh& mesh, int atlas_res, double cell_size = 0.1,
                      double slice_lo = 0.5, double slice_hi = 1.5);

// Per-view virtual-highlight masks: pixels whose near-mirror specular
// rendering is bright relative to the class's diffuse appearance.
struct VhlMasks {
    struct View {
        int width = 0, height = 0;
        std::vector<uint8_t> vhl;     // 1 = highlight pixel
        std::vector<int> class_ids;   // class id per pixel (0 = none/invalid)
    };
    std::vector<View> views;
};

struct VhlConfig {
    double tau_abs = 0.05;
    double tau_rel = 1.0;
    double probe_roughness = 0.01;
    int samples = 64;
    uint64_t seed = 0;
};

VhlMasks detect_vhl(const Scene& scene, const TblLight& tbl,
                    const std::vector<GBuffer>& gbuffers, const VhlConfig& config = {});

// Mean over masked entries; count of masked entries.
void class_stats(const std::vector<double>& values, const std::vector<uint8_t>& mask,
                 double& mean, size_t& count);

// Linear-interpolation quantile at position q*(n-1) over sorted masked
// values. Throws on an empty mask.
double masked_quantile(const std::vector<double>& values, const std::vector<uint8_t>& mask,
                       double q);

}  // namespace texir

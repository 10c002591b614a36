#include <benchmark/benchmark.h>

#include "texir/irradiance.hpp"
#include "texir/surfel.hpp"
#include "../tests/support.hpp"

using namespace texir;

static void BM_BakeIrt(benchmark::State& state) {
    auto bs = test::make_bright_wall_box(2.0, 0.2);
    TblLight tbl = make_tbl(bs.scene);
    auto surfels = texel_surfels(*bs.scene.mesh, 16);
    for (auto _ : state) {
        IrradianceTexture irt = bake_irt(surfels, tbl, 16, int(state.range(0)), 1);
        benchmark::DoNotOptimize(irt.texture.data.data());
    }
}
BENCHMARK(BM_BakeIrt)->Arg(64)->Arg(256);

static void BM_GatherIrradiance(benchmark::State& state) {
    auto bs = test::make_bright_wall_box(2.0, 0.2);
    TblLight tbl = make_tbl(bs.scene);
    uint64_t stream = 0;
    for (auto _ : state) {
        Vec3 ir = gather_irradiance(tbl, {1.5, 0.0, 1.5}, {0, 1, 0}, 256, 1, stream++);
        benchmark::DoNotOptimize(ir);
    }
}
BENCHMARK(BM_GatherIrradiance);

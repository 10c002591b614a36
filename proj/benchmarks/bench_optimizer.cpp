#include <benchmark/benchmark.h>

#include "texir/optimizer.hpp"
#include "../tests/support.hpp"

using namespace texir;

namespace {

struct Fixture {
    test::BuiltScene bs;
    IrradianceTexture irt;
    std::vector<ViewData> views;

    Fixture() {
        test::BuildConfig cfg;
        cfg.albedo_res = cfg.roughness_res = 32;
        cfg.emissive_res = cfg.semantic_res = 64;
        bs = test::make_bright_wall_box(2.0, 0.2, cfg);
        bs.scene.cameras.push_back(
            test::look_at({1.5, 1.2, 1.5}, {1.5, 0.3, 0.2}, 90, 48, 48));
        test::render_inputs(bs, 16, 8, 3);
        irt.texture = *bs.scene.irradiance;
        irt.coverage = bs.scene.irradiance_coverage;
        views = build_views(bs.scene);
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

}  // namespace

static void BM_Stage1Epoch(benchmark::State& state) {
    Fixture& f = fixture();
    for (auto _ : state) {
        OptimHyper hp;
        hp.epochs = 1;
        OptimState st;
        st.init(32, 32, hp);
        run_stage1(f.views, f.irt, st);
        benchmark::DoNotOptimize(st.albedo.value.data.data());
    }
}
BENCHMARK(BM_Stage1Epoch);

static void BM_ShadeSpecular(benchmark::State& state) {
    Fixture& f = fixture();
    TblLight tbl = make_tbl(f.bs.scene);
    RenderConfig rc;
    rc.sampler = SpecularSampler::Cosine;
    for (auto _ : state) {
        TextureImage spec = shade_specular(f.views[0].gbuffer, f.bs.gt_roughness, tbl, rc);
        benchmark::DoNotOptimize(spec.data.data());
    }
}
BENCHMARK(BM_ShadeSpecular);

#include <doctest.h>

#include <numbers>
#include <string>

#include "texir/optimizer.hpp"
#include "texir/parallel.hpp"
#include "texir/rng.hpp"
#include "texir/surfel.hpp"
#include "support.hpp"

using namespace texir;
using std::numbers::pi;

TEST_CASE("semantic smoothness: means, signs, exclusions") {
    TextureImage f(2, 1, 1);
    f.data = {1.0, 3.0};
    std::vector<int> ids{1, 1};
    std::vector<uint8_t> inc{1, 1};
    TextureImage g;
    double loss = loss_semantic_smooth(f, ids, inc, 1e-8, g);
    CHECK(loss == doctest::Approx(2.0));
    CHECK(g.data[0] == -1.0);
    CHECK(g.data[1] == 1.0);

    // constant zero is exactly zero loss and zero gradient
    TextureImage z(4, 1, 1, 0.0);
    std::vector<int> ids4{1, 1, 1, 1};
    std::vector<uint8_t> inc4{1, 1, 1, 1};
    CHECK(loss_semantic_smooth(z, ids4, inc4, 1e-8, g) == 0.0);
    for (double v : g.data) CHECK(v == 0.0);

    // constant nonzero image is also exact: the mean is not perturbed
    TextureImage cs(4, 1, 1, 0.5);
    CHECK(loss_semantic_smooth(cs, ids4, inc4, 1e-8, g) == 0.0);
    for (double v : g.data) CHECK(v == 0.0);

    // two classes, each internally constant: no cross-class coupling
    TextureImage two(4, 1, 1);
    two.data = {0.2, 0.2, 0.9, 0.9};
    std::vector<int> ids2{1, 1, 2, 2};
    CHECK(loss_semantic_smooth(two, ids2, inc4, 1e-8, g) == 0.0);

    // sign gradients cancel over each class ([1,3]: -1 + 1 = 0)
    loss_semantic_smooth(f, ids, inc, 1e-8, g);
    CHECK(g.data[0] + g.data[1] == 0.0);

    // excluded pixels and id 0 contribute nothing
    TextureImage mix(4, 1, 1);
    mix.data = {1.0, 3.0, 100.0, -50.0};
    std::vector<int> ids3{1, 1, 0, 1};
    std::vector<uint8_t> inc3{1, 1, 1, 0};
    loss = loss_semantic_smooth(mix, ids3, inc3, 1e-8, g);
    CHECK(loss == doctest::Approx(2.0));
    CHECK(g.data[2] == 0.0);
    CHECK(g.data[3] == 0.0);
}

TEST_CASE("propagation loss pulls non-VHL texels to the VHL quantile") {
    TextureImage r(6, 1, 1);
    r.data = {0.1, 0.2, 0.3, 0.4, 0.5, 0.5};
    std::vector<int> ids{1, 1, 1, 1, 1, 1};
    std::vector<uint8_t> vhl{1, 1, 1, 1, 1, 0};
    std::vector<uint8_t> inc{1, 1, 1, 1, 1, 1};
    TextureImage g;
    double loss = loss_propagation(r, ids, vhl, inc, 0.4, g);
    CHECK(loss == doctest::Approx(0.5 - 0.26));
    for (int i = 0; i < 5; ++i) CHECK(g.data[size_t(i)] == 0.0);  // VHL pixels fixed
    CHECK(g.data[5] == 1.0);

    // a class with no VHL pixels is skipped entirely
    std::vector<int> other{2, 2, 2, 2, 2, 2};
    std::vector<uint8_t> none(6, 0);
    CHECK(loss_propagation(r, other, none, inc, 0.4, g) == 0.0);
    for (double v : g.data) CHECK(v == 0.0);
}

TEST_CASE("data loss: normalized L1 with exclusions") {
    TextureImage render(2, 2, 1, 0.5), input(2, 2, 1, 0.7);
    std::vector<uint8_t> inc{1, 1, 1, 1};
    TextureImage g;
    double loss = loss_data(render, input, inc, g);
    CHECK(loss == doctest::Approx(0.2));
    for (double v : g.data) CHECK(v == doctest::Approx(-0.25));

    std::vector<uint8_t> part{1, 1, 1, 0};
    loss = loss_data(render, input, part, g);
    CHECK(loss == doctest::Approx(0.2));
    CHECK(g.data[3] == 0.0);
    CHECK(g.data[0] == doctest::Approx(-1.0 / 3.0));

    TextureImage wrong(3, 2, 1, 0.5);
    CHECK_THROWS(loss_data(wrong, input, inc, g));
}

TEST_CASE("adam step: hand-computed first update, projection, errors") {
    OptimHyper hp;
    AdamTexture tex;
    tex.init(2, 1, 0.5, 0.0, 1.0);

    std::vector<double> g{1.0, 0.0, 0.0, 0.0};
    adam_step(tex, g, hp);
    // t=1: m_hat = g, v_hat = g^2 -> step of exactly lr/(1+eps)
    CHECK(tex.value.data[0] == doctest::Approx(0.5 - 0.03).epsilon(1e-6));
    CHECK(tex.value.data[1] == 0.5);  // zero gradient leaves the texel alone
    CHECK(tex.step == 1);

    // projection clamps into [lo, hi]
    AdamTexture edge;
    edge.init(1, 1, 0.99, 0.0, 1.0);
    adam_step(edge, {-1.0}, hp);
    CHECK(edge.value.data[0] == 1.0);
    AdamTexture low;
    low.init(1, 1, 0.02, 0.01, 1.0);
    for (int i = 0; i < 5; ++i) adam_step(low, {1.0}, hp);
    CHECK(low.value.data[0] == 0.01);

    CHECK_THROWS(adam_step(tex, {1.0}, hp));  // size mismatch
    bool named = false;
    try {
        adam_step(tex, {0.0, std::nan(""), 0.0, 0.0}, hp);
    } catch (const std::exception& e) {
        named = std::string(e.what()).find("entry 1") != std::string::npos;
    }
    CHECK(named);
}

TEST_CASE("backprop scatters pixel gradients with bilinear weights") {
    GBuffer gb;
    gb.width = gb.height = 1;
    gb.pixels.resize(1);
    gb.pixels[0].valid = true;
    gb.pixels[0].uv = {0.25, 0.25};  // texel (0,0) center of a 2x2 atlas
    TextureImage img_grad(1, 1, 3);
    img_grad.set_pixel(0, 0, {1, 2, 3});

    std::vector<double> tg;
    backprop_to_texture(gb, img_grad, tg, 2, 2, 3);
    REQUIRE(tg.size() == 12);
    CHECK(tg[0] == doctest::Approx(1.0));
    CHECK(tg[1] == doctest::Approx(2.0));
    CHECK(tg[2] == doctest::Approx(3.0));
    for (size_t i = 3; i < 12; ++i) CHECK(tg[i] == doctest::Approx(0.0));

    gb.pixels[0].uv = {0.5, 0.5};  // equidistant from all four texels
    backprop_to_texture(gb, img_grad, tg, 2, 2, 3);
    for (int t = 0; t < 4; ++t) CHECK(tg[size_t(t) * 3] == doctest::Approx(0.25));

    gb.pixels[0].valid = false;  // invalid pixels are ignored
    backprop_to_texture(gb, img_grad, tg, 2, 2, 3);
    for (double v : tg) CHECK(v == 0.0);
}

namespace {

// forward model shared by the finite-difference checks: diffuse from the
// irradiance texture plus a cosine-sampled specular gather, then L1 data
// loss against the stored input
double model_loss(const ViewData& vd, const IrradianceTexture& irt, const TblLight& tbl,
                  const TextureImage& albedo, const TextureImage& roughness, uint64_t seed,
                  TextureImage* g_data = nullptr, TextureImage* dspec_dr = nullptr,
                  TextureImage* ir_out = nullptr) {
    const GBuffer& gb = vd.gbuffer;
    RenderConfig rc;
    rc.sampler = SpecularSampler::Cosine;
    rc.specular_samples = 16;
    rc.seed = seed;
    TextureImage spec = shade_specular(gb, roughness, tbl, rc, dspec_dr);

    TextureImage lo(gb.width, gb.height, 3, 0.0);
    TextureImage ir(gb.width, gb.height, 3, 0.0);
    for (int y = 0; y < gb.height; ++y)
        for (int x = 0; x < gb.width; ++x) {
            const GPixel& px = gb.at(x, y);
            if (!px.valid) continue;
            Vec3 a = albedo.sample(px.uv.x, px.uv.y);
            Vec3 irr = irt.query(px.uv.x, px.uv.y);
            ir.set_pixel(x, y, irr);
            lo.set_pixel(x, y, a / pi * irr + spec.pixel(x, y));
        }
    if (ir_out) *ir_out = ir;
    TextureImage g;
    double loss = loss_data(lo, *vd.input, vd.include, g_data ? *g_data : g);
    return loss;
}

}  // namespace

TEST_CASE("analytic texture gradients match central finite differences") {
    test::BuildConfig cfg;
    cfg.emissive_res = cfg.semantic_res = 32;
    cfg.albedo_res = cfg.roughness_res = 8;
    auto faces = test::box_faces({0, 0, 0}, {3, 2.5, 3});
    for (size_t i = 0; i < faces.size(); ++i) {
        faces[i].class_id = int(i) + 1;
        faces[i].radiance = Vec3(i == 4 ? 2.5 : 0.3);
        faces[i].albedo = {0.3 + 0.1 * double(i), 0.5, 0.7 - 0.08 * double(i)};
        faces[i].roughness = 0.2 + 0.12 * double(i);
    }
    auto bs = test::build_scene(faces, cfg);
    bs.scene.cameras.push_back(test::look_at({1.5, 1.4, 2.6}, {1.4, 0.6, 0.8}, 85, 16, 16));
    test::render_inputs(bs, 16, 8, 2);

    IrradianceTexture irt;
    irt.texture = *bs.scene.irradiance;
    irt.coverage = bs.scene.irradiance_coverage;
    TblLight tbl = make_tbl(bs.scene);
    auto views = build_views(bs.scene);
    const ViewData& vd = views[0];

    TextureImage albedo(8, 8, 3, 0.5);
    TextureImage rough(8, 8, 1, 0.5);
    const uint64_t seed = 77;

    TextureImage g_data, dspec_dr, ir_img;
    model_loss(vd, irt, tbl, albedo, rough, seed, &g_data, &dspec_dr, &ir_img);

    // chain rule into the textures
    TextureImage albedo_pg(16, 16, 3, 0.0);
    TextureImage rough_pg(16, 16, 1, 0.0);
    for (size_t i = 0; i < size_t(16 * 16); ++i) {
        double acc = 0;
        for (int c = 0; c < 3; ++c) {
            albedo_pg.data[i * 3 + c] = g_data.data[i * 3 + c] * ir_img.data[i * 3 + c] / pi;
            acc += g_data.data[i * 3 + c] * dspec_dr.data[i * 3 + c];
        }
        rough_pg.data[i] = acc;
    }
    std::vector<double> g_albedo, g_rough;
    backprop_to_texture(vd.gbuffer, albedo_pg, g_albedo, 8, 8, 3);
    backprop_to_texture(vd.gbuffer, rough_pg, g_rough, 8, 8, 1);

    const double h = 1e-6;
    Rng pick(31, 0);
    int tested_a = 0;
    for (int i = 0; i < 40 && tested_a < 12; ++i) {
        size_t j = size_t(pick.next_u64() % g_albedo.size());
        if (std::abs(g_albedo[j]) < 1e-9) continue;
        TextureImage a2 = albedo;
        a2.data[j] += h;
        double up = model_loss(vd, irt, tbl, a2, rough, seed);
        a2.data[j] -= 2 * h;
        double down = model_loss(vd, irt, tbl, a2, rough, seed);
        double fd = (up - down) / (2 * h);
        CHECK(g_albedo[j] == doctest::Approx(fd).epsilon(1e-3));
        ++tested_a;
    }
    CHECK(tested_a >= 8);

    int tested_r = 0;
    for (int i = 0; i < 40 && tested_r < 12; ++i) {
        size_t j = size_t(pick.next_u64() % g_rough.size());
        if (std::abs(g_rough[j]) < 1e-9) continue;
        TextureImage r2 = rough;
        r2.data[j] += h;
        double up = model_loss(vd, irt, tbl, albedo, r2, seed);
        r2.data[j] -= 2 * h;
        double down = model_loss(vd, irt, tbl, albedo, r2, seed);
        double fd = (up - down) / (2 * h);
        CHECK(g_rough[j] == doctest::Approx(fd).epsilon(1e-2));
        ++tested_r;
    }
    CHECK(tested_r >= 8);
}

TEST_CASE("stage 1 recovers albedo from diffuse-only inputs") {
    test::BuildConfig cfg;
    cfg.emissive_res = cfg.semantic_res = 32;
    cfg.albedo_res = cfg.roughness_res = 16;
    auto faces = test::box_faces({0, 0, 0}, {3, 2.5, 3});
    Vec3 gt[6] = {{0.62, 0.41, 0.23}, {0.85, 0.85, 0.85}, {0.3, 0.5, 0.7},
                  {0.7, 0.5, 0.3},    {0.45, 0.6, 0.2},   {0.2, 0.35, 0.55}};
    for (size_t i = 0; i < faces.size(); ++i) {
        faces[i].class_id = int(i) + 1;
        faces[i].albedo = gt[i];
        faces[i].radiance = Vec3(0.3);  // below the emitter threshold
    }
    auto bs = test::build_scene(faces, cfg);
    Camera pano = test::look_at({1.5, 1.25, 1.5}, {1.5, 1.25, 0.2}, 90, 48, 24);
    pano.model = CameraModel::Equirect;
    bs.scene.cameras.push_back(pano);

    TblLight tbl = make_tbl(bs.scene);
    auto surfels = texel_surfels(*bs.scene.mesh, 16);
    IrradianceTexture irt = bake_irt(surfels, tbl, 16, 1024, 4);

    // diffuse-only ground-truth inputs so stage 1 can fit exactly
    bs.scene.images.clear();
    for (const Camera& cam : bs.scene.cameras) {
        GBuffer gb = make_gbuffer(bs.scene, cam);
        bs.scene.images.push_back(shade_diffuse(gb, bs.gt_albedo, irt));
    }

    auto views = build_views(bs.scene);
    OptimState state;
    OptimHyper hp;
    state.init(16, 16, hp);
    run_stage1(views, irt, state);

    REQUIRE(state.epoch_losses[0].size() == 40);
    // the unnormalized smoothness term keeps the final loss jittering near
    // the step size, so judge convergence on the image residual below
    for (double l : state.epoch_losses[0]) CHECK(std::isfinite(l));

    // image-space residual after fitting
    GBuffer gb = make_gbuffer(bs.scene, bs.scene.cameras[0]);
    TextureImage refit = shade_diffuse(gb, state.albedo.value, irt);
    double err = 0;
    int n = 0;
    for (size_t i = 0; i < refit.data.size(); ++i) {
        if (!gb.pixels[i / 3].valid) continue;
        err += std::abs(refit.data[i] - bs.scene.images[0].data[i]);
        ++n;
    }
    CHECK(err / n < 0.01);

    // chart-center texels of the floor and ceiling recover the paint
    for (int face : {0, 1}) {
        const test::ChartRect& ch = bs.charts[size_t(face)];
        int tx = int((ch.lo.x + ch.hi.x) / 2 * 16), ty = int((ch.lo.y + ch.hi.y) / 2 * 16);
        Vec3 got = state.albedo.value.pixel(tx, ty);
        CHECK(got.x == doctest::Approx(gt[face].x).epsilon(0.12));
        CHECK(got.z == doctest::Approx(gt[face].z).epsilon(0.12));
    }
}

TEST_CASE("all stages are bit-identical across thread counts") {
    test::BuildConfig cfg;
    cfg.emissive_res = cfg.semantic_res = 32;
    cfg.albedo_res = cfg.roughness_res = 8;
    auto bs = test::make_bright_wall_box(2.0, 0.2, cfg);
    bs.scene.cameras.push_back(test::look_at({1.5, 1.3, 2.5}, {1.3, 0.5, 0.8}, 80, 12, 12));
    test::render_inputs(bs, 8, 4, 6);

    IrradianceTexture irt;
    irt.texture = *bs.scene.irradiance;
    irt.coverage = bs.scene.irradiance_coverage;
    TblLight tbl = make_tbl(bs.scene);
    auto views = build_views(bs.scene);

    VhlMasks no_vhl;
    no_vhl.views.resize(1);
    no_vhl.views[0].width = 12;
    no_vhl.views[0].height = 12;
    no_vhl.views[0].vhl.assign(144, 0);
    no_vhl.views[0].class_ids = views[0].class_ids;

    auto run_all = [&]() {
        OptimState st;
        OptimHyper hp;
        hp.epochs = 3;
        hp.specular_samples = 4;
        st.init(8, 8, hp);
        run_stage1(views, irt, st);
        run_stage2(views, irt, tbl, no_vhl, st);
        run_stage3(views, irt, tbl, no_vhl, st);
        return st;
    };

    int saved = thread_count();
    set_thread_count(1);
    OptimState serial = run_all();
    set_thread_count(5);
    OptimState parallel5 = run_all();
    set_thread_count(saved);

    CHECK(serial.albedo.value.data == parallel5.albedo.value.data);
    CHECK(serial.roughness.value.data == parallel5.roughness.value.data);
    CHECK(serial.epoch_losses == parallel5.epoch_losses);
    CHECK(serial.roughness.m == parallel5.roughness.m);

    // mismatched VHL view count is rejected
    OptimState st;
    OptimHyper hp;
    hp.epochs = 1;
    st.init(8, 8, hp);
    VhlMasks wrong;
    CHECK_THROWS(run_stage2(views, irt, tbl, wrong, st));
}

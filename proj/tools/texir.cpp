// texir: batch driver for the texture-based inverse rendering pipeline.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "texir/eval.hpp"
#include "texir/optimizer.hpp"
#include "texir/parallel.hpp"
#include "texir/renderer.hpp"
#include "texir/segmentation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace texir;

namespace {

struct BadInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_manifest(const fs::path& out_dir, const json& manifest) {
    fs::path tmp = out_dir / "manifest.json.tmp";
    {
        std::ofstream f(tmp);
        f << manifest.dump(2) << "\n";
    }
    fs::rename(tmp, out_dir / "manifest.json");
}

Scene load_scene_checked(const std::string& path) {
    try {
        return load_scene(path);
    } catch (const std::exception& e) {
        throw BadInput(e.what());
    }
}

Vec3 parse_vec3(const std::string& s) {
    Vec3 v;
    char c1, c2;
    std::istringstream ss(s);
    if (!(ss >> v.x >> c1 >> v.y >> c2 >> v.z) || c1 != ',' || c2 != ',')
        throw BadInput("expected three comma-separated numbers, got '" + s + "'");
    return v;
}

IrradianceTexture bake_scene_irt(const Scene& scene, const TblLight& tbl, int res, int samples,
                                 uint64_t seed) {
    auto surfels = texel_surfels(*scene.mesh, res);
    return bake_irt(surfels, tbl, res, samples, seed);
}

TextureImage metrics_input(const std::string& path) {
    return tonemap_gamma22(read_pfm(path));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"texir - texture-based lighting inverse renderer"};
    app.require_subcommand(1);

    int threads = 0;
    if (const char* env = std::getenv("TEXIR_THREADS")) threads = std::atoi(env);
    app.add_option("--threads", threads, "worker threads (default: all cores; env TEXIR_THREADS)");

    std::string scene_path, out_dir = "out";
    uint64_t seed = 0;

    // ---- bake ----
    auto* bake = app.add_subcommand("bake", "reconstruct the emissive atlas from the input views and bake the irradiance texture");
    int irt_res = 0, bake_samples = 2048;
    bool use_emissive = false;
    bake->add_option("scene", scene_path, "scene JSON file")->required();
    bake->add_option("--out", out_dir, "output directory");
    bake->add_option("--irt-res", irt_res, "irradiance texture resolution (default: scene atlas setting)");
    bake->add_option("--samples", bake_samples, "Monte-Carlo samples per texel");
    bake->add_option("--seed", seed, "RNG seed");
    bake->add_flag("--use-emissive", use_emissive, "skip view reconstruction, use the scene's emissive texture directly");

    // ---- optimize ----
    auto* optimize = app.add_subcommand("optimize", "three-stage albedo/roughness estimation");
    std::string stages = "1,2,3";
    std::string init_albedo, init_roughness, irt_path;
    int albedo_res = 0, roughness_res = 0, opt_irt_res = 0, epochs = 40;
    optimize->add_option("scene", scene_path, "scene JSON file")->required();
    optimize->add_option("--out", out_dir, "output directory");
    optimize->add_option("--stages", stages, "comma-separated stage list, e.g. 1,2,3");
    optimize->add_option("--seed", seed, "RNG seed");
    optimize->add_option("--epochs", epochs, "epochs per stage");
    optimize->add_option("--albedo-res", albedo_res, "albedo atlas resolution override");
    optimize->add_option("--roughness-res", roughness_res, "roughness atlas resolution override");
    optimize->add_option("--irt-res", opt_irt_res, "irradiance texture resolution override");
    optimize->add_option("--init-albedo", init_albedo, "albedo PFM checkpoint (allows starting at stage 2/3)");
    optimize->add_option("--init-roughness", init_roughness, "roughness PFM checkpoint");
    optimize->add_option("--irt", irt_path, "precomputed irradiance PFM (skips baking)");

    // ---- render ----
    auto* render_cmd = app.add_subcommand("render", "render a camera view with the scene materials");
    int camera_index = 0, spp = 16;
    std::string sampler = "ggx", rot_str, trans_str, model_str;
    double fov = 90.0;
    int nv_width = 0, nv_height = 0;
    render_cmd->add_option("scene", scene_path, "scene JSON file")->required();
    render_cmd->add_option("--out", out_dir, "output directory");
    render_cmd->add_option("--camera", camera_index, "scene camera index");
    render_cmd->add_option("--spp", spp, "specular samples per pixel");
    render_cmd->add_option("--sampler", sampler, "ggx | cosine");
    render_cmd->add_option("--seed", seed, "RNG seed");
    render_cmd->add_option("--rotation", rot_str, "novel view: 9 comma-separated rotation entries, row major");
    render_cmd->add_option("--translation", trans_str, "novel view: camera position x,y,z");
    render_cmd->add_option("--model", model_str, "novel view: pinhole | equirect");
    render_cmd->add_option("--fov", fov, "novel view: horizontal fov degrees");
    render_cmd->add_option("--width", nv_width, "novel view: image width");
    render_cmd->add_option("--height", nv_height, "novel view: image height");

    // ---- relight ----
    auto* relight_cmd = app.add_subcommand("relight", "swap the emissive atlas, re-bake irradiance, render");
    std::string new_emissive;
    relight_cmd->add_option("scene", scene_path, "scene JSON file")->required();
    relight_cmd->add_option("--emissive", new_emissive, "replacement emissive PFM")->required();
    relight_cmd->add_option("--out", out_dir, "output directory");
    relight_cmd->add_option("--camera", camera_index, "scene camera index");
    relight_cmd->add_option("--spp", spp, "specular samples per pixel");
    relight_cmd->add_option("--samples", bake_samples, "irradiance bake samples");
    relight_cmd->add_option("--seed", seed, "RNG seed");

    // ---- edit ----
    auto* edit_cmd = app.add_subcommand("edit", "per-class material edit");
    int edit_class = 0;
    std::string edit_albedo, edit_roughness;
    edit_cmd->add_option("scene", scene_path, "scene JSON file")->required();
    edit_cmd->add_option("--class", edit_class, "semantic class id")->required();
    edit_cmd->add_option("--albedo", edit_albedo, "new albedo r,g,b");
    edit_cmd->add_option("--roughness", edit_roughness, "new roughness value");
    edit_cmd->add_option("--out", out_dir, "output directory");

    // ---- rooms ----
    auto* rooms_cmd = app.add_subcommand("rooms", "occupancy-grid room segmentation");
    double cell_size = 0.1, slice_lo = 0.5, slice_hi = 1.5;
    int rooms_res = 0;
    rooms_cmd->add_option("scene", scene_path, "scene JSON file")->required();
    rooms_cmd->add_option("--out", out_dir, "output directory");
    rooms_cmd->add_option("--cell-size", cell_size, "grid cell size in meters");
    rooms_cmd->add_option("--slice-lo", slice_lo, "wall slice lower height");
    rooms_cmd->add_option("--slice-hi", slice_hi, "wall slice upper height");
    rooms_cmd->add_option("--res", rooms_res, "texture-space resolution (default: semantic mask)");

    // ---- vhl ----
    auto* vhl_cmd = app.add_subcommand("vhl", "virtual-highlight detection per view");
    int vhl_samples = 64;
    vhl_cmd->add_option("scene", scene_path, "scene JSON file")->required();
    vhl_cmd->add_option("--out", out_dir, "output directory");
    vhl_cmd->add_option("--samples", vhl_samples, "specular probe samples");
    vhl_cmd->add_option("--seed", seed, "RNG seed");

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM/MSE/MAE between two PFM images");
    std::string eval_a, eval_b, eval_report;
    eval_cmd->add_option("--a", eval_a, "first image")->required();
    eval_cmd->add_option("--b", eval_b, "second image")->required();
    eval_cmd->add_option("--report", eval_report, "optional JSON report path");

    // ---- spheres ----
    auto* spheres_cmd = app.add_subcommand("spheres", "lighting-representation comparison on virtual spheres");
    std::string probe_str = "0,0,0";
    int sh_samples = 200000, sg_samples = 4096, sphere_size = 64;
    spheres_cmd->add_option("scene", scene_path, "scene JSON file")->required();
    spheres_cmd->add_option("--probe", probe_str, "probe point x,y,z");
    spheres_cmd->add_option("--out", out_dir, "output directory");
    spheres_cmd->add_option("--sh-samples", sh_samples, "SH projection samples");
    spheres_cmd->add_option("--sg-samples", sg_samples, "SG fit samples");
    spheres_cmd->add_option("--size", sphere_size, "sphere image size");
    spheres_cmd->add_option("--seed", seed, "RNG seed");

    CLI11_PARSE(app, argc, argv);
    set_thread_count(threads);
    auto t0 = std::chrono::steady_clock::now();

    try {
        fs::create_directories(out_dir);
        json manifest;
        manifest["scene"] = scene_path;
        manifest["seed"] = seed;

        if (*bake) {
            Scene scene = load_scene_checked(scene_path);
            manifest["command"] = "bake";
            if (!use_emissive) {
                BakedEmissive baked = build_tbl_from_views(scene);
                scene.emissive = baked.texture;
                write_pfm(baked.texture, (fs::path(out_dir) / "emissive.pfm").string());
                write_mask_pgm(baked.coverage, (fs::path(out_dir) / "emissive_coverage.pgm").string());
            }
            TblLight tbl = make_tbl(scene);
            int res = irt_res > 0 ? irt_res : scene.atlas.irt_res;
            IrradianceTexture irt = bake_scene_irt(scene, tbl, res, bake_samples, seed);
            write_pfm(irt.texture, (fs::path(out_dir) / "irt.pfm").string());
            write_mask_pgm(irt.coverage, (fs::path(out_dir) / "irt_coverage.pgm").string());
            manifest["samples"] = bake_samples;
            manifest["irt_res"] = res;
            manifest["outputs"] = {"irt.pfm", "irt_coverage.pgm"};
        } else if (*optimize) {
            Scene scene = load_scene_checked(scene_path);
            if (!scene.has_semantic())
                throw BadInput("optimize requires a semantic mask (scene key 'semantic_mask')");
            manifest["command"] = "optimize";

            std::vector<int> stage_list;
            {
                std::istringstream ss(stages);
                std::string tok;
                while (std::getline(ss, tok, ',')) stage_list.push_back(std::stoi(tok));
            }
            bool want2 = false, want3 = false, want1 = false;
            for (int s : stage_list) {
                if (s == 1) want1 = true;
                else if (s == 2) want2 = true;
                else if (s == 3) want3 = true;
                else throw BadInput("unknown stage: " + std::to_string(s));
            }
            if ((want2 || want3) && !want1 && init_albedo.empty())
                throw BadInput("stages 2/3 need a stage-1 albedo checkpoint (--init-albedo)");

            OptimHyper hp;
            hp.seed = seed;
            hp.epochs = epochs;
            // desk-scale defaults unless the scene pins its atlas or flags override
            int a_res = albedo_res > 0 ? albedo_res
                        : (scene.atlas_explicit ? scene.atlas.albedo_res : 512);
            int r_res = roughness_res > 0 ? roughness_res
                        : (scene.atlas_explicit ? scene.atlas.roughness_res : 512);
            int i_res = opt_irt_res > 0 ? opt_irt_res
                        : (scene.atlas_explicit ? scene.atlas.irt_res : 256);

            OptimState state;
            state.init(a_res, r_res, hp);
            if (!init_albedo.empty()) state.albedo.value = read_pfm(init_albedo);
            if (!init_roughness.empty()) state.roughness.value = read_pfm(init_roughness);

            TblLight tbl = make_tbl(scene);
            IrradianceTexture irt;
            if (!irt_path.empty()) {
                irt.texture = read_pfm(irt_path);
                irt.coverage = MaskImage(irt.texture.width, irt.texture.height, 1);
            } else if (scene.irradiance) {
                irt.texture = *scene.irradiance;
                irt.coverage = scene.irradiance_coverage;
            } else {
                irt = bake_scene_irt(scene, tbl, i_res, 2048, seed);
            }

            if (want3) {
                RoomMap rooms = compute_rooms(*scene.mesh, scene.semantic.width);
                scene.rooms = rooms.texel_rooms;
            }
            std::vector<ViewData> views = build_views(scene);

            auto checkpoint = [&](int stage) {
                fs::path dir = fs::path(out_dir) / ("checkpoint_stage" + std::to_string(stage));
                fs::create_directories(dir);
                auto dump = [&](const AdamTexture& t, const std::string& name) {
                    write_pfm(t.value, (dir / (name + ".pfm")).string());
                    TextureImage mom = t.value;
                    mom.data = t.m;
                    write_pfm(mom, (dir / (name + "_m.pfm")).string());
                    mom.data = t.v;
                    write_pfm(mom, (dir / (name + "_v.pfm")).string());
                };
                dump(state.albedo, "albedo");
                dump(state.roughness, "roughness");
            };

            if (want1) { run_stage1(views, irt, state); checkpoint(1); }
            if (want2 || want3) {
                scene.albedo = state.albedo.value;  // frozen coarse albedo for VHL detection
                scene.irradiance = irt.texture;
                scene.irradiance_coverage = irt.coverage;
            }
            VhlMasks vhl;
            if (want2 || want3) {
                std::vector<GBuffer> gbs;
                for (const ViewData& vd : views) gbs.push_back(vd.gbuffer);
                VhlConfig vc;
                vc.seed = seed;
                vhl = detect_vhl(scene, tbl, gbs, vc);
            }
            if (want2) { run_stage2(views, irt, tbl, vhl, state); checkpoint(2); }
            if (want3) { run_stage3(views, irt, tbl, vhl, state); checkpoint(3); }

            write_pfm(state.albedo.value, (fs::path(out_dir) / "albedo.pfm").string());
            if (want2 || want3)
                write_pfm(state.roughness.value, (fs::path(out_dir) / "roughness.pfm").string());
            write_pfm(irt.texture, (fs::path(out_dir) / "irt.pfm").string());
            manifest["stages"] = stage_list;
            manifest["hyper"] = {{"lr", hp.learning_rate}, {"epochs", hp.epochs},
                                 {"beta_ssa", hp.beta_ssa}, {"beta_sp", hp.beta_sp},
                                 {"beta_ssr", hp.beta_ssr},
                                 {"albedo_res", a_res}, {"roughness_res", r_res}};
            manifest["epoch_losses"] = state.epoch_losses;
            manifest["outputs"] = {"albedo.pfm", "roughness.pfm", "irt.pfm"};
        } else if (*render_cmd) {
            Scene scene = load_scene_checked(scene_path);
            manifest["command"] = "render";
            Camera cam;
            if (!rot_str.empty() || !trans_str.empty()) {
                if (rot_str.empty() || trans_str.empty() || nv_width == 0 || nv_height == 0)
                    throw BadInput("novel view needs --rotation, --translation, --width, --height");
                std::istringstream ss(rot_str);
                std::string tok;
                int i = 0;
                while (std::getline(ss, tok, ',') && i < 9) cam.rotation.m[i++] = std::stod(tok);
                if (i != 9) throw BadInput("--rotation needs 9 entries");
                cam.translation = parse_vec3(trans_str);
                cam.model = model_str == "equirect" ? CameraModel::Equirect : CameraModel::Pinhole;
                cam.fov_deg = fov;
                cam.width = nv_width;
                cam.height = nv_height;
            } else {
                if (camera_index < 0 || size_t(camera_index) >= scene.cameras.size())
                    throw BadInput("camera index out of range");
                cam = scene.cameras[size_t(camera_index)];
            }
            RenderConfig rc;
            rc.specular_samples = spp;
            rc.sampler = sampler == "cosine" ? SpecularSampler::Cosine : SpecularSampler::Ggx;
            rc.seed = seed;
            TextureImage img = render(scene, cam, rc);
            write_pfm(img, (fs::path(out_dir) / "render.pfm").string());
            write_ppm_preview(img, (fs::path(out_dir) / "render.ppm").string());
            manifest["outputs"] = {"render.pfm", "render.ppm"};
        } else if (*relight_cmd) {
            Scene scene = load_scene_checked(scene_path);
            manifest["command"] = "relight";
            TextureImage emissive = read_pfm(new_emissive);
            RenderConfig rc;
            rc.specular_samples = spp;
            rc.seed = seed;
            relight(scene, emissive, rc, bake_samples);
            if (camera_index < 0 || size_t(camera_index) >= scene.cameras.size())
                throw BadInput("camera index out of range");
            TextureImage img = render(scene, scene.cameras[size_t(camera_index)], rc);
            write_pfm(img, (fs::path(out_dir) / "render.pfm").string());
            write_ppm_preview(img, (fs::path(out_dir) / "render.ppm").string());
            write_pfm(*scene.irradiance, (fs::path(out_dir) / "irt.pfm").string());
            manifest["outputs"] = {"render.pfm", "render.ppm", "irt.pfm"};
        } else if (*edit_cmd) {
            Scene scene = load_scene_checked(scene_path);
            manifest["command"] = "edit";
            std::optional<Vec3> alb;
            std::optional<double> rough;
            if (!edit_albedo.empty()) alb = parse_vec3(edit_albedo);
            if (!edit_roughness.empty()) rough = std::stod(edit_roughness);
            if (!alb && !rough) throw BadInput("edit needs --albedo and/or --roughness");
            edit_material(scene, edit_class, alb, rough);
            if (scene.albedo) write_pfm(*scene.albedo, (fs::path(out_dir) / "albedo.pfm").string());
            if (scene.roughness)
                write_pfm(*scene.roughness, (fs::path(out_dir) / "roughness.pfm").string());
            manifest["class"] = edit_class;
            manifest["outputs"] = {"albedo.pfm", "roughness.pfm"};
        } else if (*rooms_cmd) {
            Scene scene = load_scene_checked(scene_path);
            manifest["command"] = "rooms";
            int res = rooms_res > 0 ? rooms_res
                      : (scene.semantic.width > 0 ? scene.semantic.width : 256);
            RoomMap rm = compute_rooms(*scene.mesh, res, cell_size, slice_lo, slice_hi);
            write_mask_pgm(rm.texel_rooms, (fs::path(out_dir) / "rooms.pgm").string());
            manifest["room_count"] = rm.room_count;
            manifest["outputs"] = {"rooms.pgm"};
            std::cout << "rooms: " << rm.room_count << "\n";
        } else if (*vhl_cmd) {
            Scene scene = load_scene_checked(scene_path);
            if (!scene.has_semantic()) throw BadInput("vhl requires a semantic mask");
            manifest["command"] = "vhl";
            TblLight tbl = make_tbl(scene);
            std::vector<GBuffer> gbs;
            for (const Camera& cam : scene.cameras) gbs.push_back(make_gbuffer(scene, cam));
            VhlConfig vc;
            vc.samples = vhl_samples;
            vc.seed = seed;
            VhlMasks vhl = detect_vhl(scene, tbl, gbs, vc);
            json outputs = json::array();
            for (size_t i = 0; i < vhl.views.size(); ++i) {
                MaskImage m(vhl.views[i].width, vhl.views[i].height, 0);
                for (size_t p = 0; p < vhl.views[i].vhl.size(); ++p)
                    m.ids[p] = vhl.views[i].vhl[p];
                std::string name = "vhl_" + std::to_string(i) + ".pgm";
                write_mask_pgm(m, (fs::path(out_dir) / name).string());
                outputs.push_back(name);
            }
            manifest["outputs"] = outputs;
        } else if (*eval_cmd) {
            manifest["command"] = "eval";
            TextureImage a = metrics_input(eval_a);
            TextureImage b = metrics_input(eval_b);
            json report = {{"psnr", psnr(a, b)}, {"ssim", ssim(a, b)},
                           {"mse", mse(a, b)}, {"mae", mae(a, b)}};
            std::cout << report.dump(2) << "\n";
            if (!eval_report.empty()) {
                std::ofstream f(eval_report);
                f << report.dump(2) << "\n";
            }
            manifest["report"] = report;
        } else if (*spheres_cmd) {
            Scene scene = load_scene_checked(scene_path);
            manifest["command"] = "spheres";
            Vec3 probe = parse_vec3(probe_str);
            TblLight tbl = make_tbl(scene);
            ShLighting sh = sh_project(tbl, probe, 5, sh_samples, seed);
            SgFitConfig sgc;
            sgc.n_samples = sg_samples;
            sgc.seed = seed;
            SgLighting sg = sg_fit(tbl, probe, sgc);

            SphereHarnessConfig shc;
            shc.image_size = sphere_size;
            shc.seed = seed;
            const char* mat_names[] = {"diffuse", "matte_silver", "mirror_silver"};
            const SphereMaterial mats[] = {SphereMaterial::Diffuse, SphereMaterial::MatteSilver,
                                           SphereMaterial::MirrorSilver};
            json report;
            for (int mi = 0; mi < 3; ++mi) {
                TextureImage gt = sphere_harness(env_from_tbl(tbl, probe), mats[mi], shc);
                TextureImage im_sh = sphere_harness(env_from_sh(sh), mats[mi], shc);
                TextureImage im_sg = sphere_harness(env_from_sg(sg), mats[mi], shc);
                for (auto& [name, img] : {std::pair<std::string, TextureImage*>{"tbl", &gt},
                                          {"sh", &im_sh}, {"sg", &im_sg}}) {
                    std::string file = std::string("sphere_") + mat_names[mi] + "_" + name + ".pfm";
                    write_pfm(*img, (fs::path(out_dir) / file).string());
                    TextureImage ta = tonemap_gamma22(gt), tb = tonemap_gamma22(*img);
                    report[mat_names[mi]][name] = {{"mae", mae(ta, tb)}, {"ssim", ssim(ta, tb)}};
                }
            }
            std::cout << report.dump(2) << "\n";
            manifest["report"] = report;
        }

        manifest["seconds"] = seconds_since(t0);
        manifest["threads"] = thread_count();
        write_manifest(out_dir, manifest);
        return 0;
    } catch (const BadInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

// Command-line front end: simulate -> wind -> detect -> evaluate -> report,
// plus dataset tiling/splitting. Exit codes: 0 ok, 2 config error,
// 3 data/IO error, 4 internal error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sarslick/dataset.hpp"
#include "sarslick/detect.hpp"
#include "sarslick/evaluate.hpp"
#include "sarslick/gmf.hpp"
#include "sarslick/pipeline.hpp"
#include "sarslick/raster.hpp"
#include "sarslick/simulate.hpp"
#include "sarslick/wind.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

json load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw sarslick::IoError("cannot open", path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw sarslick::DataError("invalid JSON in " + path + ": " + e.what());
    }
    return j;
}

std::string scene_id_from_base(const std::string& scene_base) {
    return fs::path(scene_base).filename().string();
}

// Strips a per-product suffix if the user pointed at e.g. foo_sigma0.
std::string normalize_scene_base(std::string base) {
    for (const char* suf : {"_sigma0", ".bin", ".json"}) {
        if (base.size() > std::strlen(suf) &&
            base.ends_with(suf))
            base.resize(base.size() - std::strlen(suf));
    }
    return base;
}

std::vector<sarslick::SlickInstance> instances_from_label_grid(
    const sarslick::RasterGrid& labels) {
    std::map<int, std::vector<sarslick::Pixel>> by_id;
    for (int r = 0; r < labels.height; ++r)
        for (int c = 0; c < labels.width; ++c) {
            float v = labels.at(r, c);
            if (labels.is_nodata(v) || v == 0.0f) continue;
            by_id[static_cast<int>(v)].push_back({r, c});
        }
    std::vector<sarslick::SlickInstance> out;
    for (auto& [id, px] : by_id) {
        sarslick::SlickInstance inst;
        inst.instance_id = id;
        std::sort(px.begin(), px.end());
        inst.bbox = {px.front().row, labels.width, px.front().row, 0};
        for (const auto& p : px) {
            inst.bbox.r0 = std::min(inst.bbox.r0, p.row);
            inst.bbox.r1 = std::max(inst.bbox.r1, p.row);
            inst.bbox.c0 = std::min(inst.bbox.c0, p.col);
            inst.bbox.c1 = std::max(inst.bbox.c1, p.col);
        }
        inst.area_hm2 = sarslick::area_hm2(px.size(), labels.pixel_spacing);
        inst.pixel_set = std::move(px);
        inst.source = sarslick::InstanceSource::GroundTruth;
        out.push_back(std::move(inst));
    }
    return out;
}

struct EvalSceneResult {
    sarslick::EvaluationReport report;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SAR oil-slick simulation, detection and evaluation toolkit"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads,
                   "worker thread cap (default: machine parallelism)");

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
    std::string sim_config, sim_out;
    std::uint64_t sim_seed = 0;
    sim->add_option("--config", sim_config, "dataset config JSON")->required();
    sim->add_option("--out", sim_out, "output directory")->required();
    sim->add_option("--seed", sim_seed, "dataset seed")->required();

    // ---- wind ----
    auto* wnd = app.add_subcommand("wind", "retrieve wind speed from a scene");
    std::string wnd_scene, wnd_out;
    wnd->add_option("--scene", wnd_scene, "scene base path (e.g. data/scene_0000)")
        ->required();
    wnd->add_option("--out", wnd_out, "output directory")->required();

    // ---- detect ----
    auto* det = app.add_subcommand("detect", "run the dark-spot baseline or import a mask");
    std::string det_scene, det_params, det_import, det_out;
    det->add_option("--scene", det_scene, "scene base path")->required();
    det->add_option("--params", det_params, "detector params JSON");
    det->add_option("--import", det_import, "external prediction mask (raster base path)");
    det->add_option("--out", det_out, "output directory")->required();

    // ---- tile ----
    auto* til = app.add_subcommand("tile", "tile scenes and assign train/val/test splits");
    std::string til_in, til_out, til_split = "0.85,0.15";
    std::uint64_t til_seed = 0;
    int til_size = 512;
    bool til_crop_level = false;
    std::vector<std::string> til_test_scenes;
    til->add_option("--in", til_in, "dataset directory (with manifest.json)")->required();
    til->add_option("--out", til_out, "output directory")->required();
    til->add_option("--split", til_split, "train,val ratios (default 0.85,0.15)");
    til->add_option("--seed", til_seed, "shuffle seed")->required();
    til->add_option("--tile-size", til_size, "tile edge in pixels (default 512)");
    til->add_flag("--crop-level", til_crop_level,
                  "split at crop granularity instead of scene granularity");
    til->add_option("--test-scene", til_test_scenes,
                    "scene id held out as test (repeatable)");

    // ---- evaluate ----
    auto* eva = app.add_subcommand("evaluate", "match predictions against ground truth");
    std::string eva_gt, eva_pred, eva_wind, eva_bins, eva_out;
    int eva_min_intersection = 1;
    eva->add_option("--gt", eva_gt, "ground-truth dataset directory")->required();
    eva->add_option("--pred", eva_pred, "prediction directory (detect output)")->required();
    eva->add_option("--wind", eva_wind, "retrieved wind directory (wind output)")->required();
    eva->add_option("--bins", eva_bins, "binning spec JSON");
    eva->add_option("--min-intersection", eva_min_intersection,
                    "minimum GT/prediction overlap in pixels (default 1)");
    eva->add_option("--out", eva_out, "output directory")->required();

    // ---- report ----
    auto* rep = app.add_subcommand("report", "re-emit report files from an evaluation");
    std::string rep_eval, rep_bins, rep_out;
    rep->add_option("--eval", rep_eval, "evaluate output directory")->required();
    rep->add_option("--bins", rep_bins, "binning spec JSON (re-bin)");
    rep->add_option("--out", rep_out, "output directory")->required();

    // ---- export-png ----
    auto* png = app.add_subcommand("export-png", "render a raster to 8-bit grayscale PNG");
    std::string png_in, png_out;
    double png_lo = -30.0, png_hi = -5.0;
    png->add_option("--in", png_in, "raster base path")->required();
    png->add_option("--out", png_out, "PNG file path")->required();
    png->add_option("--low-db", png_lo, "dB mapped to black (default -30)");
    png->add_option("--high-db", png_hi, "dB mapped to white (default -5)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        if (*sim) {
            auto cfg = sarslick::DatasetConfig::from_json(load_json(sim_config));
            auto manifest = sarslick::gen_dataset(cfg, sim_out, sim_seed, threads);
            sarslick::write_run_record(sim_out, "simulate", args,
                                       {{"config", sim_config},
                                        {"seed", sim_seed},
                                        {"scenes", cfg.scenes}});
            std::printf("simulate: %d scene(s), slick pixel ratio %.4f\n", cfg.scenes,
                        manifest["slick_pixel_ratio"].get<double>());
        } else if (*wnd) {
            const std::string base = normalize_scene_base(wnd_scene);
            const std::string id = scene_id_from_base(base);
            auto [sigma0, meta] = sarslick::read_raster(base + "_sigma0");
            auto [dir, dmeta] = sarslick::read_raster(base + "_winddir");
            auto gmf = sarslick::find_gmf("cmod5n");
            auto lut = sarslick::InversionLut::make_default(
                gmf, std::min(meta.incidence_near, meta.incidence_far),
                std::max(meta.incidence_near, meta.incidence_far));
            sarslick::WindRetrievalSummary sum;
            auto field = sarslick::retrieve_wind(sigma0, dir, meta, lut, &sum);
            fs::create_directories(wnd_out);
            sarslick::write_raster(field.speed, meta, wnd_out + "/" + id + "_retrspeed");
            ordered_json sj = {{"scene_id", id},
                               {"clamped_low", sum.clamped_low},
                               {"clamped_high", sum.clamped_high},
                               {"nodata", sum.nodata}};
            std::ofstream f(wnd_out + "/" + id + "_wind_summary.json");
            f << sj.dump(2) << "\n";
            sarslick::write_run_record(wnd_out, "wind", args, {{"scene", base}});
            std::printf("wind: %s retrieved (%zu clamped low, %zu high)\n", id.c_str(),
                        sum.clamped_low, sum.clamped_high);
        } else if (*det) {
            const std::string base = normalize_scene_base(det_scene);
            const std::string id = scene_id_from_base(base);
            auto [sigma0, meta] = sarslick::read_raster(base + "_sigma0");
            sarslick::BinaryMask mask;
            std::string source;
            if (!det_import.empty()) {
                mask = sarslick::import_prediction_mask(det_import, sigma0.width,
                                                        sigma0.height);
                source = "imported";
            } else {
                sarslick::DetectorParams params;
                if (!det_params.empty()) {
                    json pj = load_json(det_params);
                    params.background_window =
                        pj.value("background_window", params.background_window);
                    params.threshold_db = pj.value("threshold_db", params.threshold_db);
                    params.min_area_hm2 = pj.value("min_area_hm2", params.min_area_hm2);
                    params.morph_radius = pj.value("morph_radius", params.morph_radius);
                    params.connectivity = pj.value("connectivity", params.connectivity);
                }
                sarslick::DetectorDiagnostics diag;
                mask = sarslick::dark_spot_mask(sigma0, params, &diag);
                if (diag.all_nodata)
                    std::fprintf(stderr, "warning: %s is entirely nodata\n", id.c_str());
                source = "baseline";
            }
            auto insts = sarslick::instances_from_mask(
                mask, sigma0.pixel_spacing, 8,
                source == "imported" ? sarslick::InstanceSource::Imported
                                     : sarslick::InstanceSource::Baseline);
            fs::create_directories(det_out);
            sarslick::write_raster(sarslick::grid_from_mask(mask, sigma0.pixel_spacing),
                                   meta, det_out + "/" + id + "_predmask");
            ordered_json ij;
            ij["scene_id"] = id;
            ij["source"] = source;
            ij["instances"] = ordered_json::array();
            for (const auto& inst : insts)
                ij["instances"].push_back(
                    {{"id", inst.instance_id},
                     {"area_hm2", inst.area_hm2},
                     {"bbox", {inst.bbox.r0, inst.bbox.c0, inst.bbox.r1, inst.bbox.c1}}});
            std::ofstream f(det_out + "/" + id + "_pred_instances.json");
            f << ij.dump(2) << "\n";
            sarslick::write_run_record(det_out, "detect", args,
                                       {{"scene", base}, {"source", source}});
            std::printf("detect: %s -> %zu instance(s)\n", id.c_str(), insts.size());
        } else if (*til) {
            double tr = 0.85, vr = 0.15;
            if (std::sscanf(til_split.c_str(), "%lf,%lf", &tr, &vr) != 2)
                throw sarslick::ConfigError("--split expects 'train,val' ratios");
            json manifest = load_json(til_in + "/manifest.json");
            std::vector<sarslick::SceneTiles> scenes;
            for (const auto& sj : manifest.at("scenes")) {
                sarslick::SceneTiles st;
                st.scene_id = sj.at("scene_id").get<std::string>();
                st.held_out_test =
                    std::find(til_test_scenes.begin(), til_test_scenes.end(),
                              st.scene_id) != til_test_scenes.end();
                int w = sj.at("width").get<int>(), h = sj.at("height").get<int>();
                st.tiles = sarslick::tile_scene(w, h, til_size);
                auto [gtg, gtm] = sarslick::read_raster(
                    sarslick::scene_files(til_in, st.scene_id).gt_mask);
                for (const auto& t : st.tiles) {
                    std::size_t n = 0;
                    for (int r = t.row0; r < t.row0 + t.size; ++r)
                        for (int c = t.col0; c < t.col0 + t.size; ++c)
                            n += gtg.at(r, c) == 1.0f;
                    st.tile_slick_pixels.push_back(n);
                }
                scenes.push_back(std::move(st));
            }
            auto tm = sarslick::split_dataset(scenes, tr, vr, til_seed, !til_crop_level);
            fs::create_directories(til_out);
            {
                std::ofstream f(til_out + "/tiles.json");
                f << sarslick::tile_manifest_to_json(tm).dump(2) << "\n";
            }
            auto stats = sarslick::dataset_stats(tm);
            sarslick::write_dataset_stats(stats, til_out + "/stats.json",
                                          til_out + "/stats.csv");
            sarslick::write_run_record(til_out, "tile", args,
                                       {{"in", til_in}, {"seed", til_seed}});
            std::printf("tile: %zu tile(s), total slick ratio %.4f\n",
                        tm.entries.size(), stats.back().second.ratio);
        } else if (*eva) {
            sarslick::BinningSpec bins;
            if (!eva_bins.empty()) {
                json bj = load_json(eva_bins);
                if (bj.contains("wind_edges"))
                    bins.wind_edges = bj["wind_edges"].get<std::vector<double>>();
                if (bj.contains("size_edges"))
                    bins.size_edges = bj["size_edges"].get<std::vector<double>>();
                bins.validate();
            }
            json manifest = load_json(eva_gt + "/manifest.json");
            const auto& scene_list = manifest.at("scenes");
            std::vector<sarslick::EvaluationReport> partials(
                scene_list.size(), sarslick::EvaluationReport(bins));
            sarslick::parallel_for(scene_list.size(), threads, [&](std::size_t i) {
                const std::string id = scene_list[i].at("scene_id").get<std::string>();
                auto files = sarslick::scene_files(eva_gt, id);
                auto [labels, lm] = sarslick::read_raster(files.gt_label);
                auto [gtmaskg, gm] = sarslick::read_raster(files.gt_mask);
                auto gt_mask = sarslick::mask_from_grid(gtmaskg);
                auto gt_insts = instances_from_label_grid(labels);
                auto pred_mask = sarslick::import_prediction_mask(
                    eva_pred + "/" + id + "_predmask", labels.width, labels.height);
                auto pred_insts = sarslick::instances_from_mask(
                    pred_mask, labels.pixel_spacing);
                auto [speed, sm] =
                    sarslick::read_raster(eva_wind + "/" + id + "_retrspeed");
                sarslick::WindField wf{speed, speed,
                                       sarslick::WindProvenance::Retrieved};

                auto match = sarslick::match_instances(gt_insts, pred_insts,
                                                       eva_min_intersection);
                // GT context excludes annotated slick pixels; FA context
                // additionally excludes every predicted pixel.
                sarslick::BinaryMask fa_excl = gt_mask;
                for (std::size_t k = 0; k < fa_excl.bits.size(); ++k)
                    fa_excl.bits[k] |= pred_mask.bits[k];
                // In crowded scenes the default 50 m ring around an instance
                // can lie entirely inside the exclusion mask. Widen the ring
                // until clean sea appears; only give up when even a ring
                // spanning the whole image finds none.
                auto context_speed = [&](const std::vector<sarslick::Pixel>& px,
                                         const sarslick::BinaryMask& excl,
                                         int id) {
                    const double max_radius =
                        std::hypot(labels.width, labels.height) *
                        labels.pixel_spacing;
                    for (double radius = 50.0;; radius *= 2.0) {
                        try {
                            return sarslick::slick_neighborhood_wind(
                                       px, wf, excl, radius, id)
                                .mean_neighborhood_speed;
                        } catch (const sarslick::DataError&) {
                            if (radius >= max_radius) throw;
                        }
                    }
                };
                std::map<int, double> gt_ctx, gt_sizes, fa_ctx, pred_sizes;
                for (const auto& gi : gt_insts) {
                    gt_ctx[gi.instance_id] =
                        context_speed(gi.pixel_set, gt_mask, gi.instance_id);
                    gt_sizes[gi.instance_id] = gi.area_hm2;
                }
                for (const auto& pi : pred_insts) {
                    pred_sizes[pi.instance_id] = pi.area_hm2;
                    fa_ctx[pi.instance_id] =
                        context_speed(pi.pixel_set, fa_excl, pi.instance_id);
                }
                auto px = sarslick::pixel_metrics(gt_mask, pred_mask);
                partials[i] = sarslick::bin_outcomes(match, id, gt_ctx, gt_sizes,
                                                     fa_ctx, pred_sizes, bins, px);
            });
            sarslick::EvaluationReport total(bins);
            for (const auto& p : partials) total.merge(p);
            fs::create_directories(eva_out);
            {
                std::ofstream f(eva_out + "/evaluation.json");
                f << sarslick::report_to_json(total).dump(2) << "\n";
            }
            sarslick::write_report(total, eva_out);
            sarslick::write_run_record(eva_out, "evaluate", args,
                                       {{"gt", eva_gt},
                                        {"pred", eva_pred},
                                        {"wind", eva_wind},
                                        {"min_intersection", eva_min_intersection}});
            std::printf("evaluate: %ld detected, %ld missed, %ld FA, IoU %.3f\n",
                        total.detected, total.missed, total.false_alarms,
                        total.iou_slick());
        } else if (*rep) {
            json ej = load_json(rep_eval + "/evaluation.json");
            sarslick::BinningSpec bins;
            const sarslick::BinningSpec* override_bins = nullptr;
            if (!rep_bins.empty()) {
                json bj = load_json(rep_bins);
                if (bj.contains("wind_edges"))
                    bins.wind_edges = bj["wind_edges"].get<std::vector<double>>();
                if (bj.contains("size_edges"))
                    bins.size_edges = bj["size_edges"].get<std::vector<double>>();
                bins.validate();
                override_bins = &bins;
            }
            auto report = sarslick::report_from_json(ej, override_bins);
            fs::create_directories(rep_out);
            sarslick::write_report(report, rep_out);
            {
                std::ofstream f(rep_out + "/evaluation.json");
                f << sarslick::report_to_json(report).dump(2) << "\n";
            }
            sarslick::write_run_record(rep_out, "report", args, {{"eval", rep_eval}});
            std::printf("report: %zu record(s) written\n", report.records.size());
        } else if (*png) {
            auto [grid, meta] = sarslick::read_raster(png_in);
            sarslick::export_png(grid, png_lo, png_hi, png_out);
            std::printf("export-png: %s\n", png_out.c_str());
        }
    } catch (const sarslick::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const sarslick::DomainError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const sarslick::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const sarslick::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 4;
    }
    return 0;
}

#ifndef SARSLICK_DATASET_HPP
#define SARSLICK_DATASET_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sarslick/errors.hpp"
#include "sarslick/raster.hpp"
#include "sarslick/rng.hpp"
#include "sarslick/simulate.hpp"

namespace sarslick {

// Index-sharded parallel loop. Work is partitioned by index, so results
// are identical at any thread count.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t)>& fn) {
    if (threads <= 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    if (threads == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mu;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(err_mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

struct DatasetConfig {
    int scenes = 20;
    int width = 512;
    int height = 512;
    double pixel_spacing = kDefaultPixelSpacing;
    double incidence_near = 30.0;
    double incidence_far = 40.0;
    double speckle_looks = 4.4;
    std::string gmf_name = "cmod5n";

    // wind
    double wind_mean_lo = 2.5, wind_mean_hi = 8.0;
    double wind_variance = 0.15;
    double wind_correlation_px = 24.0;
    double pocket_scene_fraction = 0.25;   // scenes that get low-wind pockets
    int pockets_per_scene = 2;
    double pocket_area_hm2 = 8.0;
    double pocket_floor_mps = 0.3;
    double pocket_scene_mean_speed = 2.2;  // windless-area ambient level

    // slicks
    int slicks_per_scene_max = 8;
    double slick_area_log10_lo = 0.3;      // hm^2
    double slick_area_log10_hi = 1.6;
    double seep_fraction = 0.3;
    double damping_max_db = 6.0;

    double target_pixel_ratio = 0.034;
    double lookalike_wind_threshold = 1.5;

    void validate() const {
        if (scenes < 0) throw ConfigError("scenes must be >= 0");
        if (width <= 0 || height <= 0) throw ConfigError("scene size must be positive");
        if (target_pixel_ratio < 0.0 || target_pixel_ratio > 0.5)
            throw ConfigError("target_pixel_ratio must be in [0, 0.5]");
        if (slick_area_log10_hi < slick_area_log10_lo)
            throw ConfigError("slick area range inverted");
        if (wind_mean_hi < wind_mean_lo) throw ConfigError("wind mean range inverted");
    }

    static DatasetConfig from_json(const nlohmann::json& j) {
        DatasetConfig c;
        c.scenes = j.value("scenes", c.scenes);
        if (j.contains("scene")) {
            const auto& s = j["scene"];
            c.width = s.value("width", c.width);
            c.height = s.value("height", c.height);
            c.pixel_spacing = s.value("pixel_spacing", c.pixel_spacing);
            c.incidence_near = s.value("incidence_near", c.incidence_near);
            c.incidence_far = s.value("incidence_far", c.incidence_far);
        }
        c.speckle_looks = j.value("speckle_looks", c.speckle_looks);
        c.gmf_name = j.value("gmf", c.gmf_name);
        if (j.contains("wind")) {
            const auto& w = j["wind"];
            if (w.contains("mean_speed_range")) {
                c.wind_mean_lo = w["mean_speed_range"][0].get<double>();
                c.wind_mean_hi = w["mean_speed_range"][1].get<double>();
            }
            c.wind_variance = w.value("variance", c.wind_variance);
            c.wind_correlation_px = w.value("correlation_length_px", c.wind_correlation_px);
            c.pocket_scene_fraction = w.value("pocket_scene_fraction", c.pocket_scene_fraction);
            c.pockets_per_scene = w.value("pockets_per_scene", c.pockets_per_scene);
            c.pocket_area_hm2 = w.value("pocket_area_hm2", c.pocket_area_hm2);
            c.pocket_floor_mps = w.value("pocket_floor_mps", c.pocket_floor_mps);
            c.pocket_scene_mean_speed =
                w.value("pocket_scene_mean_speed", c.pocket_scene_mean_speed);
        }
        if (j.contains("slicks")) {
            const auto& s = j["slicks"];
            c.slicks_per_scene_max = s.value("per_scene_max", c.slicks_per_scene_max);
            if (s.contains("area_log10_range")) {
                c.slick_area_log10_lo = s["area_log10_range"][0].get<double>();
                c.slick_area_log10_hi = s["area_log10_range"][1].get<double>();
            }
            c.seep_fraction = s.value("seep_fraction", c.seep_fraction);
            c.damping_max_db = s.value("damping_max_db", c.damping_max_db);
        }
        c.target_pixel_ratio = j.value("target_pixel_ratio", c.target_pixel_ratio);
        c.lookalike_wind_threshold =
            j.value("lookalike_wind_threshold", c.lookalike_wind_threshold);
        c.validate();
        return c;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["scenes"] = scenes;
        j["scene"] = {{"width", width},
                      {"height", height},
                      {"pixel_spacing", pixel_spacing},
                      {"incidence_near", incidence_near},
                      {"incidence_far", incidence_far}};
        j["speckle_looks"] = speckle_looks;
        j["gmf"] = gmf_name;
        j["wind"] = {{"mean_speed_range", {wind_mean_lo, wind_mean_hi}},
                     {"variance", wind_variance},
                     {"correlation_length_px", wind_correlation_px},
                     {"pocket_scene_fraction", pocket_scene_fraction},
                     {"pockets_per_scene", pockets_per_scene},
                     {"pocket_area_hm2", pocket_area_hm2},
                     {"pocket_floor_mps", pocket_floor_mps},
                     {"pocket_scene_mean_speed", pocket_scene_mean_speed}};
        j["slicks"] = {{"per_scene_max", slicks_per_scene_max},
                       {"area_log10_range", {slick_area_log10_lo, slick_area_log10_hi}},
                       {"seep_fraction", seep_fraction},
                       {"damping_max_db", damping_max_db}};
        j["target_pixel_ratio"] = target_pixel_ratio;
        j["lookalike_wind_threshold"] = lookalike_wind_threshold;
        return j;
    }
};

struct SceneFiles {
    std::string scene_id;
    std::string sigma0;     // raster base paths (no extension)
    std::string gt_mask;
    std::string gt_label;
    std::string lookalike;
    std::string wind_speed;
    std::string wind_dir;
    std::string truth_json;
};

inline SceneFiles scene_files(const std::string& dir, const std::string& scene_id) {
    const std::string base = dir + "/" + scene_id;
    return {scene_id,          base + "_sigma0",    base + "_gtmask",
            base + "_gtlabel", base + "_lookalike", base + "_windspeed",
            base + "_winddir", base + "_truth.json"};
}

// Generates one scene of the dataset: samples the wind regime and slick
// specs from the per-scene stream, renders, and writes all products.
inline nlohmann::ordered_json generate_scene(const DatasetConfig& cfg,
                                             const std::string& out_dir,
                                             std::uint64_t dataset_seed,
                                             int scene_index) {
    auto eng = make_engine(dataset_seed, 0x7363656eULL + scene_index);
    std::uniform_real_distribution<double> ur(0.0, 1.0);

    char idbuf[32];
    std::snprintf(idbuf, sizeof idbuf, "scene_%04d", scene_index);
    const std::string scene_id = idbuf;

    SceneMetadata meta;
    meta.incidence_near = cfg.incidence_near;
    meta.incidence_far = cfg.incidence_far;
    meta.pixel_spacing = cfg.pixel_spacing;
    meta.scene_id = scene_id;
    meta.acquisition_seed = derive_seed(dataset_seed, 0xac710000ULL + scene_index);

    WindParams wp;
    wp.variance = cfg.wind_variance;
    wp.correlation_length_px = cfg.wind_correlation_px;
    wp.pocket_area_hm2 = cfg.pocket_area_hm2;
    wp.pocket_floor_mps = cfg.pocket_floor_mps;
    wp.mean_direction_deg = 360.0 * ur(eng);
    const bool pocket_scene = ur(eng) < cfg.pocket_scene_fraction;
    if (pocket_scene) {
        wp.mean_speed = cfg.pocket_scene_mean_speed;
        wp.low_wind_pockets = cfg.pockets_per_scene;
    } else {
        wp.mean_speed = cfg.wind_mean_lo + ur(eng) * (cfg.wind_mean_hi - cfg.wind_mean_lo);
        wp.low_wind_pockets = 0;
    }
    WindField wind = gen_wind_field(cfg.width, cfg.height,
                                    derive_seed(dataset_seed, 0x77000000ULL + scene_index),
                                    wp);

    // draw slicks until the per-scene pixel budget is covered
    const double scene_px = static_cast<double>(cfg.width) * cfg.height;
    const double target_slick_px = cfg.target_pixel_ratio * scene_px;
    std::vector<SlickSpec> specs;
    double planned_px = 0.0;
    const double px_per_hm2 = 1e4 / (cfg.pixel_spacing * cfg.pixel_spacing);
    while (planned_px < target_slick_px &&
           static_cast<int>(specs.size()) < cfg.slicks_per_scene_max) {
        SlickSpec s;
        double lg = cfg.slick_area_log10_lo +
                    ur(eng) * (cfg.slick_area_log10_hi - cfg.slick_area_log10_lo);
        s.target_area_hm2 = std::pow(10.0, lg);
        // keep the last slick from overshooting the budget
        double remaining = (target_slick_px - planned_px) / px_per_hm2;
        if (s.target_area_hm2 > 1.6 * remaining)
            s.target_area_hm2 = std::max(remaining, std::pow(10.0, cfg.slick_area_log10_lo));
        s.kind = ur(eng) < cfg.seep_fraction ? SlickKind::Seep : SlickKind::Spill;
        s.damping_max_db = cfg.damping_max_db;
        s.shape_seed = derive_seed(dataset_seed,
                                   0x5100000000ULL + scene_index * 1024 + specs.size());
        double margin = 2.0 + 1.5 * std::sqrt(s.target_area_hm2 * px_per_hm2);
        margin = std::min(margin, cfg.width / 3.0);
        s.centroid = {static_cast<int>(margin + ur(eng) * (cfg.height - 2 * margin)),
                      static_cast<int>(margin + ur(eng) * (cfg.width - 2 * margin))};
        planned_px += s.target_area_hm2 * px_per_hm2;
        specs.push_back(s);
    }

    SceneConfig sc;
    sc.meta = meta;
    sc.speckle_looks = cfg.speckle_looks;
    sc.gmf_name = cfg.gmf_name;
    sc.lookalike.wind_threshold_mps = cfg.lookalike_wind_threshold;
    auto [sigma0, gt] = render_scene(sc, wind, specs,
                                     derive_seed(dataset_seed, 0x72000000ULL + scene_index));

    SceneFiles files = scene_files(out_dir, scene_id);
    write_raster(sigma0, meta, files.sigma0);
    write_raster(grid_from_mask(gt.semantic_mask, cfg.pixel_spacing), meta, files.gt_mask);
    write_raster(grid_from_mask(gt.lookalike_mask, cfg.pixel_spacing), meta, files.lookalike);
    write_raster(gt.wind_truth.speed, meta, files.wind_speed);
    write_raster(gt.wind_truth.direction, meta, files.wind_dir);
    {
        RasterGrid labels(cfg.width, cfg.height, 0.0f, cfg.pixel_spacing);
        for (const auto& inst : gt.instances)
            for (const Pixel& p : inst.pixel_set)
                labels.at(p.row, p.col) = static_cast<float>(inst.instance_id);
        write_raster(labels, meta, files.gt_label);
    }

    nlohmann::ordered_json tj;
    tj["scene_id"] = scene_id;
    tj["width"] = cfg.width;
    tj["height"] = cfg.height;
    tj["wind"] = {{"mean_speed", wp.mean_speed},
                  {"pockets", wp.low_wind_pockets},
                  {"mean_direction_deg", wp.mean_direction_deg}};
    tj["instances"] = nlohmann::ordered_json::array();
    std::size_t slick_px = 0;
    for (std::size_t i = 0; i < gt.instances.size(); ++i) {
        const auto& inst = gt.instances[i];
        slick_px += inst.pixel_set.size();
        tj["instances"].push_back(
            {{"id", inst.instance_id},
             {"kind", to_string(gt.instance_kinds[i])},
             {"area_hm2", inst.area_hm2},
             {"bbox", {inst.bbox.r0, inst.bbox.c0, inst.bbox.r1, inst.bbox.c1}}});
    }
    tj["slick_pixels"] = slick_px;
    {
        std::ofstream f(files.truth_json);
        if (!f) throw IoError("cannot open for writing", files.truth_json);
        f << tj.dump(2) << "\n";
    }

    nlohmann::ordered_json entry;
    entry["scene_id"] = scene_id;
    entry["width"] = cfg.width;
    entry["height"] = cfg.height;
    entry["slick_pixels"] = slick_px;
    entry["instances"] = tj["instances"];
    return entry;
}

// Writes N scenes plus manifest.json. Deterministic in (config, seed) at
// any thread count: each scene draws from its own derived stream and the
// manifest is assembled in scene order.
inline nlohmann::ordered_json gen_dataset(const DatasetConfig& cfg,
                                          const std::string& out_dir,
                                          std::uint64_t seed, int threads = 0) {
    cfg.validate();
    std::filesystem::create_directories(out_dir);
    std::vector<nlohmann::ordered_json> entries(cfg.scenes);
    parallel_for(cfg.scenes, threads, [&](std::size_t i) {
        entries[i] = generate_scene(cfg, out_dir, seed, static_cast<int>(i));
    });

    nlohmann::ordered_json manifest;
    manifest["format_version"] = 1;
    manifest["dataset_seed"] = seed;
    manifest["config"] = cfg.to_json();
    manifest["scenes"] = nlohmann::ordered_json::array();
    std::uint64_t slick_px = 0, total_px = 0;
    for (auto& e : entries) {
        slick_px += e["slick_pixels"].get<std::uint64_t>();
        total_px += static_cast<std::uint64_t>(cfg.width) * cfg.height;
        manifest["scenes"].push_back(std::move(e));
    }
    const double ratio = total_px ? static_cast<double>(slick_px) / total_px : 0.0;
    manifest["slick_pixels"] = slick_px;
    manifest["total_pixels"] = total_px;
    manifest["slick_pixel_ratio"] = ratio;
    manifest["warnings"] = nlohmann::ordered_json::array();
    if (cfg.scenes > 0 && cfg.target_pixel_ratio > 0.0 &&
        std::abs(ratio - cfg.target_pixel_ratio) > 0.4 * cfg.target_pixel_ratio)
        manifest["warnings"].push_back(
            "achieved slick pixel ratio " + std::to_string(ratio) +
            " misses target " + std::to_string(cfg.target_pixel_ratio));

    std::ofstream f(out_dir + "/manifest.json");
    if (!f) throw IoError("cannot open for writing", out_dir + "/manifest.json");
    f << manifest.dump(2) << "\n";
    return manifest;
}

}  // namespace sarslick

#endif

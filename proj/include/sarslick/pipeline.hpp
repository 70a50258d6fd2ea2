#ifndef SARSLICK_PIPELINE_HPP
#define SARSLICK_PIPELINE_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "sarslick/dataset.hpp"
#include "sarslick/errors.hpp"
#include "sarslick/raster.hpp"
#include "sarslick/rng.hpp"

namespace sarslick {

struct TileRect {
    int row0 = 0;
    int col0 = 0;
    int size = 512;
};

// Non-overlapping grid tiles; trailing partial tiles are anchored to the
// far edge (overlapping the previous tile) so every pixel is covered by
// full-size tiles.
inline std::vector<TileRect> tile_scene(int width, int height, int size = 512,
                                        int stride = 0) {
    if (stride <= 0) stride = size;
    if (width < size || height < size)
        throw ConfigError("scene smaller than tile size");
    auto starts = [&](int dim) {
        std::vector<int> s;
        for (int p = 0; p + size < dim; p += stride) s.push_back(p);
        s.push_back(dim - size);  // far-edge anchor
        // de-duplicate when the grid divides exactly
        s.erase(std::unique(s.begin(), s.end()), s.end());
        return s;
    };
    std::vector<TileRect> tiles;
    for (int r : starts(height))
        for (int c : starts(width)) tiles.push_back({r, c, size});
    return tiles;
}

enum class Split { Train, Val, Test };

inline std::string to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

struct SceneTiles {
    std::string scene_id;
    bool held_out_test = false;  // bypasses the shuffle entirely
    std::vector<TileRect> tiles;
    std::vector<std::size_t> tile_slick_pixels;  // parallel to tiles
};

struct TileEntry {
    std::string scene_id;
    int tile_id = 0;
    int row0 = 0, col0 = 0, size = 512;
    Split split = Split::Train;
    std::size_t slick_pixel_count = 0;
};

struct TileManifest {
    std::vector<TileEntry> entries;
    std::uint64_t dataset_seed = 0;
    bool scene_granular = true;
};

// Train/val assignment by seeded shuffle. Scene-granular by default: all
// tiles of a scene share a split so no scene leaks texture across splits.
// Scenes marked held_out_test go to the test split unconditionally.
inline TileManifest split_dataset(const std::vector<SceneTiles>& scenes,
                                  double train_ratio, double val_ratio,
                                  std::uint64_t seed,
                                  bool scene_granular = true) {
    if (std::abs(train_ratio + val_ratio - 1.0) > 1e-9)
        throw ConfigError("split ratios must sum to 1");
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < scenes.size(); ++i)
        if (!scenes[i].held_out_test) pool.push_back(i);
    if (pool.size() < 2)
        throw ConfigError("need at least 2 non-test scenes for a 2-way split");

    TileManifest out;
    out.dataset_seed = seed;
    out.scene_granular = scene_granular;
    auto eng = make_engine(seed, 0x73706c74ULL);

    std::vector<Split> scene_split(scenes.size(), Split::Test);
    if (scene_granular) {
        std::shuffle(pool.begin(), pool.end(), eng);
        std::size_t n_train = static_cast<std::size_t>(
            std::llround(train_ratio * static_cast<double>(pool.size())));
        for (std::size_t k = 0; k < pool.size(); ++k)
            scene_split[pool[k]] = k < n_train ? Split::Train : Split::Val;
    }

    // crop-level mode: shuffle the tiles of non-test scenes directly
    std::vector<std::pair<std::size_t, std::size_t>> crop_pool;  // scene, tile
    std::vector<Split> crop_split;
    if (!scene_granular) {
        for (std::size_t i : pool)
            for (std::size_t t = 0; t < scenes[i].tiles.size(); ++t)
                crop_pool.emplace_back(i, t);
        std::vector<std::size_t> order(crop_pool.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), eng);
        crop_split.assign(crop_pool.size(), Split::Val);
        std::size_t n_train = static_cast<std::size_t>(
            std::llround(train_ratio * static_cast<double>(crop_pool.size())));
        for (std::size_t k = 0; k < n_train && k < order.size(); ++k)
            crop_split[order[k]] = Split::Train;
    }

    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const SceneTiles& st = scenes[i];
        for (std::size_t t = 0; t < st.tiles.size(); ++t) {
            TileEntry e;
            e.scene_id = st.scene_id;
            e.tile_id = static_cast<int>(t);
            e.row0 = st.tiles[t].row0;
            e.col0 = st.tiles[t].col0;
            e.size = st.tiles[t].size;
            e.slick_pixel_count =
                t < st.tile_slick_pixels.size() ? st.tile_slick_pixels[t] : 0;
            if (st.held_out_test)
                e.split = Split::Test;
            else if (scene_granular)
                e.split = scene_split[i];
            else {
                auto it = std::find(crop_pool.begin(), crop_pool.end(),
                                    std::make_pair(i, t));
                e.split = crop_split[it - crop_pool.begin()];
            }
            out.entries.push_back(std::move(e));
        }
    }
    return out;
}

inline nlohmann::ordered_json tile_manifest_to_json(const TileManifest& m) {
    nlohmann::ordered_json j;
    j["format_version"] = 1;
    j["dataset_seed"] = m.dataset_seed;
    j["split_mode"] = m.scene_granular ? "scene" : "crop";
    j["entries"] = nlohmann::ordered_json::array();
    for (const auto& e : m.entries)
        j["entries"].push_back({{"scene_id", e.scene_id},
                                {"tile_id", e.tile_id},
                                {"row0", e.row0},
                                {"col0", e.col0},
                                {"size", e.size},
                                {"split", to_string(e.split)},
                                {"slick_pixel_count", e.slick_pixel_count}});
    return j;
}

inline TileManifest tile_manifest_from_json(const nlohmann::json& j) {
    if (j.value("format_version", -1) != 1)
        throw DataError("unsupported tile manifest format_version");
    TileManifest m;
    m.dataset_seed = j.value("dataset_seed", std::uint64_t(0));
    m.scene_granular = j.value("split_mode", "scene") == std::string("scene");
    for (const auto& e : j.at("entries")) {
        TileEntry t;
        t.scene_id = e.at("scene_id").get<std::string>();
        t.tile_id = e.at("tile_id").get<int>();
        t.row0 = e.at("row0").get<int>();
        t.col0 = e.at("col0").get<int>();
        t.size = e.at("size").get<int>();
        std::string s = e.at("split").get<std::string>();
        t.split = s == "train" ? Split::Train : s == "val" ? Split::Val : Split::Test;
        t.slick_pixel_count = e.at("slick_pixel_count").get<std::size_t>();
        m.entries.push_back(std::move(t));
    }
    return m;
}

struct DatasetStats {
    std::size_t crops = 0;
    std::uint64_t slick_pixels = 0;
    std::uint64_t sea_pixels = 0;
    double ratio = 0.0;  // slick / (slick + sea)
};

// Per-split and total crop/pixel statistics from a tile manifest.
inline std::vector<std::pair<std::string, DatasetStats>> dataset_stats(
    const TileManifest& m) {
    DatasetStats train, val, test, total;
    auto acc = [](DatasetStats& s, const TileEntry& e) {
        ++s.crops;
        s.slick_pixels += e.slick_pixel_count;
        std::uint64_t px = static_cast<std::uint64_t>(e.size) * e.size;
        s.sea_pixels += px - e.slick_pixel_count;
    };
    for (const auto& e : m.entries) {
        acc(total, e);
        switch (e.split) {
            case Split::Train: acc(train, e); break;
            case Split::Val: acc(val, e); break;
            case Split::Test: acc(test, e); break;
        }
    }
    for (DatasetStats* s : {&train, &val, &test, &total}) {
        std::uint64_t denom = s->slick_pixels + s->sea_pixels;
        s->ratio = denom ? static_cast<double>(s->slick_pixels) / denom : 0.0;
    }
    return {{"train", train}, {"val", val}, {"test", test}, {"total", total}};
}

inline void write_dataset_stats(
    const std::vector<std::pair<std::string, DatasetStats>>& stats,
    const std::string& json_path, const std::string& csv_path) {
    nlohmann::ordered_json j;
    for (const auto& [name, s] : stats)
        j[name] = {{"crops", s.crops},
                   {"slick_pixels", s.slick_pixels},
                   {"sea_pixels", s.sea_pixels},
                   {"ratio", s.ratio}};
    {
        std::ofstream f(json_path);
        if (!f) throw IoError("cannot open for writing", json_path);
        f << j.dump(2) << "\n";
    }
    std::ofstream f(csv_path);
    if (!f) throw IoError("cannot open for writing", csv_path);
    f << "split,crops,slick_pixels,sea_pixels,ratio\n";
    char buf[64];
    for (const auto& [name, s] : stats) {
        std::snprintf(buf, sizeof buf, "%.6g", s.ratio);
        f << name << ',' << s.crops << ',' << s.slick_pixels << ',' << s.sea_pixels
          << ',' << buf << "\n";
    }
}

// Machine-readable provenance for a CLI run, dropped into the output dir.
inline void write_run_record(const std::string& out_dir,
                             const std::string& subcommand,
                             const std::vector<std::string>& args,
                             const nlohmann::ordered_json& inputs) {
    std::filesystem::create_directories(out_dir);
    nlohmann::ordered_json j;
    j["tool"] = "sarslick";
    j["tool_version"] = "1.0.0";
    j["format_version"] = 1;
    j["subcommand"] = subcommand;
    j["args"] = args;
    j["inputs"] = inputs;
    std::ofstream f(out_dir + "/run_record_" + subcommand + ".json");
    if (!f) throw IoError("cannot open for writing",
                          out_dir + "/run_record_" + subcommand + ".json");
    f << j.dump(2) << "\n";
}

}  // namespace sarslick

#endif

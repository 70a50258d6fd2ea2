#ifndef SARSLICK_RASTER_HPP
#define SARSLICK_RASTER_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sarslick/errors.hpp"
#include "sarslick/png.hpp"

namespace sarslick {

inline constexpr double kRadarFrequencyGHz = 5.405;
inline constexpr double kDefaultPixelSpacing = 10.0;
inline constexpr int kRasterFormatVersion = 1;

// Area of a pixel region in square hectometers (1 hm^2 = 10^4 m^2).
inline double area_hm2(std::size_t pixel_count, double pixel_spacing) {
    return static_cast<double>(pixel_count) * pixel_spacing * pixel_spacing / 1e4;
}

// Row-major 2-D field of 32-bit floats. (0,0) is the top-left pixel.
// Values are immutable by convention once a grid leaves its producer;
// grids are shared read-only across parallel workers.
struct RasterGrid {
    int width = 0;
    int height = 0;
    double pixel_spacing = kDefaultPixelSpacing;
    float nodata_value = std::numeric_limits<float>::quiet_NaN();
    std::vector<float> values;

    RasterGrid() = default;
    RasterGrid(int w, int h, float fill = 0.0f,
               double spacing = kDefaultPixelSpacing)
        : width(w), height(h), pixel_spacing(spacing),
          values(static_cast<std::size_t>(w) * h, fill) {
        validate();
    }

    void validate() const {
        if (width <= 0 || height <= 0)
            throw DataError("RasterGrid: non-positive dimensions");
        if (pixel_spacing <= 0.0)
            throw DataError("RasterGrid: pixel_spacing must be > 0");
        if (static_cast<std::int64_t>(width) * height > (std::int64_t(1) << 31))
            throw DataError("RasterGrid: dimension overflow (width*height > 2^31)");
        if (values.size() != static_cast<std::size_t>(width) * height)
            throw DataError("RasterGrid: values length != width*height");
    }

    std::size_t index(int r, int c) const {
        return static_cast<std::size_t>(r) * width + c;
    }
    float at(int r, int c) const { return values[index(r, c)]; }
    float& at(int r, int c) { return values[index(r, c)]; }
    bool in_bounds(int r, int c) const {
        return r >= 0 && r < height && c >= 0 && c < width;
    }
    std::size_t size() const { return values.size(); }

    bool is_nodata(float v) const {
        if (std::isnan(nodata_value)) return std::isnan(v);
        return v == nodata_value;
    }

    bool same_shape(const RasterGrid& o) const {
        return width == o.width && height == o.height;
    }
};

// Acquisition geometry. Incidence angle is either constant or a linear
// per-column ramp from near to far range.
struct SceneMetadata {
    double radar_frequency = kRadarFrequencyGHz;
    double incidence_near = 35.0;   // degrees at column 0
    double incidence_far = 35.0;    // degrees at the last column
    double pixel_spacing = kDefaultPixelSpacing;
    std::string scene_id;
    std::uint64_t acquisition_seed = 0;
    std::string polarization = "VV";  // tag only, single intensity channel

    void validate() const {
        if (radar_frequency != kRadarFrequencyGHz)
            throw DataError("SceneMetadata: radar_frequency must be 5.405 GHz");
        for (double a : {incidence_near, incidence_far})
            if (a < 18.0 || a > 50.0)
                throw DataError("SceneMetadata: incidence angle outside [18, 50] degrees");
        if (pixel_spacing <= 0.0)
            throw DataError("SceneMetadata: pixel_spacing must be > 0");
    }

    double incidence_at_col(int col, int width) const {
        if (width <= 1) return incidence_near;
        double t = static_cast<double>(col) / (width - 1);
        return incidence_near + t * (incidence_far - incidence_near);
    }
};

// Boolean mask with the same pixel layout as the raster it annotates.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int w, int h, bool fill = false)
        : width(w), height(h),
          bits(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

    std::size_t index(int r, int c) const {
        return static_cast<std::size_t>(r) * width + c;
    }
    bool at(int r, int c) const { return bits[index(r, c)] != 0; }
    void set(int r, int c, bool v) { bits[index(r, c)] = v ? 1 : 0; }
    bool in_bounds(int r, int c) const {
        return r >= 0 && r < height && c >= 0 && c < width;
    }
    std::size_t count() const {
        std::size_t n = 0;
        for (auto b : bits) n += b;
        return n;
    }
    bool same_shape(const BinaryMask& o) const {
        return width == o.width && height == o.height;
    }
};

namespace detail {

inline nlohmann::ordered_json meta_to_json(const RasterGrid& g,
                                           const SceneMetadata& m) {
    nlohmann::ordered_json j;
    j["format_version"] = kRasterFormatVersion;
    j["width"] = g.width;
    j["height"] = g.height;
    j["pixel_spacing"] = g.pixel_spacing;
    if (std::isnan(g.nodata_value))
        j["nodata"] = nullptr;
    else
        j["nodata"] = g.nodata_value;
    j["metadata"] = {
        {"radar_frequency", m.radar_frequency},
        {"incidence_near", m.incidence_near},
        {"incidence_far", m.incidence_far},
        {"pixel_spacing", m.pixel_spacing},
        {"scene_id", m.scene_id},
        {"acquisition_seed", m.acquisition_seed},
        {"polarization", m.polarization},
    };
    return j;
}

}  // namespace detail

// Writes <path>.bin (little-endian float32, row-major) and a <path>.json
// sidecar. The pair round-trips bit-exactly, NaNs included.
inline void write_raster(const RasterGrid& grid, const SceneMetadata& meta,
                         const std::string& path) {
    grid.validate();
    static_assert(std::endian::native == std::endian::little,
                  "raster container is little-endian");
    const std::string bin_path = path + ".bin";
    const std::string json_path = path + ".json";
    {
        std::ofstream f(bin_path, std::ios::binary);
        if (!f) throw IoError("cannot open for writing", bin_path);
        f.write(reinterpret_cast<const char*>(grid.values.data()),
                static_cast<std::streamsize>(grid.values.size() * sizeof(float)));
        if (!f) throw IoError("write failed", bin_path);
    }
    {
        std::ofstream f(json_path);
        if (!f) throw IoError("cannot open for writing", json_path);
        f << detail::meta_to_json(grid, meta).dump(2) << "\n";
        if (!f) throw IoError("write failed", json_path);
    }
}

inline std::pair<RasterGrid, SceneMetadata> read_raster(const std::string& path) {
    const std::string bin_path = path + ".bin";
    const std::string json_path = path + ".json";
    if (!std::filesystem::exists(json_path))
        throw IoError("sidecar not found", json_path);
    if (!std::filesystem::exists(bin_path))
        throw IoError("payload not found", bin_path);

    nlohmann::json j;
    {
        std::ifstream f(json_path);
        try {
            f >> j;
        } catch (const nlohmann::json::exception& e) {
            throw DataError("invalid sidecar " + json_path + ": " + e.what());
        }
    }
    int version = j.value("format_version", -1);
    if (version != kRasterFormatVersion)
        throw DataError("unsupported format_version " + std::to_string(version) +
                        " in " + json_path);

    RasterGrid g;
    g.width = j.at("width").get<int>();
    g.height = j.at("height").get<int>();
    g.pixel_spacing = j.at("pixel_spacing").get<double>();
    if (j.at("nodata").is_null())
        g.nodata_value = std::numeric_limits<float>::quiet_NaN();
    else
        g.nodata_value = j.at("nodata").get<float>();

    SceneMetadata m;
    if (j.contains("metadata")) {
        const auto& mj = j["metadata"];
        m.radar_frequency = mj.value("radar_frequency", kRadarFrequencyGHz);
        m.incidence_near = mj.value("incidence_near", 35.0);
        m.incidence_far = mj.value("incidence_far", 35.0);
        m.pixel_spacing = mj.value("pixel_spacing", g.pixel_spacing);
        m.scene_id = mj.value("scene_id", std::string());
        m.acquisition_seed = mj.value("acquisition_seed", std::uint64_t(0));
        m.polarization = mj.value("polarization", std::string("VV"));
    }

    const std::size_t expected =
        static_cast<std::size_t>(g.width) * g.height * sizeof(float);
    std::error_code ec;
    const std::size_t actual = std::filesystem::file_size(bin_path, ec);
    if (ec) throw IoError("cannot stat", bin_path);
    if (actual != expected)
        throw DataError("corrupt payload " + bin_path + ": expected " +
                        std::to_string(expected) + " bytes, found " +
                        std::to_string(actual));

    g.values.resize(static_cast<std::size_t>(g.width) * g.height);
    std::ifstream f(bin_path, std::ios::binary);
    if (!f) throw IoError("cannot open", bin_path);
    f.read(reinterpret_cast<char*>(g.values.data()),
           static_cast<std::streamsize>(expected));
    if (f.gcount() != static_cast<std::streamsize>(expected))
        throw DataError("corrupt payload " + bin_path + ": short read");
    g.validate();
    return {std::move(g), std::move(m)};
}

// Masks travel in the same container with values restricted to {0.0, 1.0}.
inline RasterGrid grid_from_mask(const BinaryMask& m,
                                 double spacing = kDefaultPixelSpacing) {
    RasterGrid g(m.width, m.height, 0.0f, spacing);
    for (std::size_t i = 0; i < m.bits.size(); ++i)
        g.values[i] = m.bits[i] ? 1.0f : 0.0f;
    return g;
}

inline BinaryMask mask_from_grid(const RasterGrid& g) {
    BinaryMask m(g.width, g.height);
    std::size_t offending = 0;
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        float v = g.values[i];
        if (v == 0.0f) continue;
        if (v == 1.0f) { m.bits[i] = 1; continue; }
        ++offending;
    }
    if (offending)
        throw DataError("mask raster has " + std::to_string(offending) +
                        " pixel(s) outside {0, 1}");
    return m;
}

// Linear dB stretch of the grid into an 8-bit grayscale PNG. Values are
// converted 10*log10(v), clamped to [low_db, high_db]. Nodata and
// non-positive pixels render as 0.
inline std::vector<std::uint8_t> render_db_gray(const RasterGrid& grid,
                                                double low_db, double high_db) {
    if (!(low_db < high_db))
        throw ConfigError("export_png: low_db must be < high_db");
    std::vector<std::uint8_t> px(grid.size());
    const double scale = 255.0 / (high_db - low_db);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        float v = grid.values[i];
        if (grid.is_nodata(v) || !(v > 0.0f)) { px[i] = 0; continue; }
        double db = 10.0 * std::log10(static_cast<double>(v));
        double t = std::clamp((db - low_db) * scale, 0.0, 255.0);
        px[i] = static_cast<std::uint8_t>(std::lround(t));
    }
    return px;
}

inline void export_png(const RasterGrid& grid, double low_db, double high_db,
                       const std::string& path) {
    write_gray_png(path, grid.width, grid.height,
                   render_db_gray(grid, low_db, high_db));
}

}  // namespace sarslick

#endif

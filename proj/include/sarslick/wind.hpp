#ifndef SARSLICK_WIND_HPP
#define SARSLICK_WIND_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sarslick/detect.hpp"
#include "sarslick/errors.hpp"
#include "sarslick/gmf.hpp"
#include "sarslick/raster.hpp"
#include "sarslick/simulate.hpp"

namespace sarslick {

struct WindRetrievalSummary {
    std::size_t clamped_low = 0;
    std::size_t clamped_high = 0;
    std::size_t nodata = 0;
};

// Per-pixel GMF inversion of a sigma0 scene. Direction is ancillary input
// (simulator truth or external field); theta follows the scene metadata.
// Nodata pixels stay nodata and are counted.
inline WindField retrieve_wind(const RasterGrid& sigma0,
                               const RasterGrid& direction,
                               const SceneMetadata& meta,
                               const InversionLut& lut,
                               WindRetrievalSummary* summary = nullptr) {
    sigma0.validate();
    direction.validate();
    meta.validate();
    if (!sigma0.same_shape(direction))
        throw DataError("retrieve_wind: sigma0/direction dimension mismatch");

    const int w = sigma0.width, h = sigma0.height;
    RasterGrid speed(w, h, 0.0f, sigma0.pixel_spacing);
    speed.nodata_value = sigma0.nodata_value;
    WindRetrievalSummary local;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            float s = sigma0.at(r, c);
            if (sigma0.is_nodata(s) || !(s > 0.0f)) {
                speed.at(r, c) = speed.nodata_value;
                ++local.nodata;
                continue;
            }
            double phi = normalize_degrees(direction.at(r, c));
            double theta = meta.incidence_at_col(c, w);
            double v = lut.invert(s, phi, theta);
            if (v <= kWindSpeedFloor + 1e-12) ++local.clamped_low;
            if (v >= kWindSpeedCeiling - 1e-12) ++local.clamped_high;
            speed.at(r, c) = static_cast<float>(v);
        }
    }
    if (summary) *summary = local;
    return {std::move(speed), direction, WindProvenance::Retrieved};
}

// Exact (bisection) variant, used as the reference path in tests.
inline WindField retrieve_wind_exact(const RasterGrid& sigma0,
                                     const RasterGrid& direction,
                                     const SceneMetadata& meta, const Gmf& gmf,
                                     WindRetrievalSummary* summary = nullptr) {
    const int w = sigma0.width, h = sigma0.height;
    RasterGrid speed(w, h, 0.0f, sigma0.pixel_spacing);
    speed.nodata_value = sigma0.nodata_value;
    WindRetrievalSummary local;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            float s = sigma0.at(r, c);
            if (sigma0.is_nodata(s) || !(s > 0.0f)) {
                speed.at(r, c) = speed.nodata_value;
                ++local.nodata;
                continue;
            }
            auto res = invert_speed(gmf, s, direction.at(r, c),
                                    meta.incidence_at_col(c, w));
            if (res.flag == ClampFlag::Low) ++local.clamped_low;
            if (res.flag == ClampFlag::High) ++local.clamped_high;
            speed.at(r, c) = static_cast<float>(res.speed);
        }
    if (summary) *summary = local;
    return {std::move(speed), direction, WindProvenance::Retrieved};
}

// Contextual wind attached to one slick instance.
struct SlickWindContext {
    int instance_id = 0;
    double mean_neighborhood_speed = 0.0;  // m/s
    std::size_t neighborhood_pixel_count = 0;
    double radius_m = 50.0;
};

// Mean wind speed over pixels within Euclidean distance radius_m of the
// instance, excluding every pixel of all_slick_mask so damped pixels never
// contaminate the estimate. At 10 m spacing the default radius is 5 px.
inline SlickWindContext slick_neighborhood_wind(
    const std::vector<Pixel>& instance_pixels, const WindField& wind,
    const BinaryMask& all_slick_mask, double radius_m = 50.0,
    int instance_id = 0) {
    if (instance_pixels.empty())
        throw DataError("slick_neighborhood_wind: empty instance");
    if (!(radius_m > 0.0)) throw ConfigError("radius_m must be > 0");
    wind.validate();
    const RasterGrid& spd = wind.speed;
    if (all_slick_mask.width != spd.width || all_slick_mask.height != spd.height)
        throw DataError("slick_neighborhood_wind: mask dimension mismatch");

    const int radius_px =
        static_cast<int>(std::lround(radius_m / spd.pixel_spacing));
    auto offsets = disk_offsets(std::max(radius_px, 0));

    BinaryMask visited(spd.width, spd.height);
    double sum = 0.0;
    std::size_t count = 0;
    for (const Pixel& p : instance_pixels)
        for (const Pixel& d : offsets) {
            int r = p.row + d.row, c = p.col + d.col;
            if (!spd.in_bounds(r, c) || visited.at(r, c)) continue;
            visited.set(r, c, true);
            if (all_slick_mask.at(r, c)) continue;
            float v = spd.at(r, c);
            if (spd.is_nodata(v)) continue;
            sum += v;
            ++count;
        }
    if (count == 0)
        throw DataError("slick_neighborhood_wind: no clean-sea neighborhood");
    return {instance_id, sum / static_cast<double>(count), count, radius_m};
}

}  // namespace sarslick

#endif

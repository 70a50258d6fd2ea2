#ifndef SARSLICK_SIMULATE_HPP
#define SARSLICK_SIMULATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sarslick/detect.hpp"
#include "sarslick/errors.hpp"
#include "sarslick/gmf.hpp"
#include "sarslick/raster.hpp"
#include "sarslick/rng.hpp"

namespace sarslick {

enum class WindProvenance { SimulatedTruth, Retrieved };

struct WindField {
    RasterGrid speed;      // m/s
    RasterGrid direction;  // degrees, meteorological
    WindProvenance provenance = WindProvenance::SimulatedTruth;

    void validate() const {
        speed.validate();
        direction.validate();
        if (!speed.same_shape(direction))
            throw DataError("WindField: speed/direction dimension mismatch");
    }
};

struct WindParams {
    double mean_speed = 5.0;           // m/s, [0, 15]
    double variance = 0.25;            // (m/s)^2 of the smooth fluctuation
    double correlation_length_px = 16.0;
    int low_wind_pockets = 0;
    double pocket_area_hm2 = 8.0;      // area below 1.5 m/s per pocket
    double pocket_floor_mps = 0.3;     // speed at pocket center
    double mean_direction_deg = 0.0;
    double direction_spread_deg = 10.0;

    void validate() const {
        if (mean_speed < 0.0 || mean_speed > 15.0)
            throw ConfigError("wind mean_speed must be in [0, 15] m/s");
        if (correlation_length_px < 1.0)
            throw ConfigError("correlation_length_px must be >= 1");
        if (variance < 0.0) throw ConfigError("wind variance must be >= 0");
        if (low_wind_pockets < 0) throw ConfigError("low_wind_pockets must be >= 0");
        if (pocket_area_hm2 <= 0.0) throw ConfigError("pocket_area_hm2 must be > 0");
    }
};

enum class SlickKind { Spill, Seep };

inline std::string to_string(SlickKind k) {
    return k == SlickKind::Spill ? "spill" : "seep";
}

struct SlickSpec {
    std::uint64_t shape_seed = 0;
    Pixel centroid{0, 0};
    double target_area_hm2 = 1.0;   // (0, 1e6]
    SlickKind kind = SlickKind::Spill;
    double damping_max_db = 6.0;

    void validate() const {
        if (!(target_area_hm2 > 0.0) || target_area_hm2 > 1e6)
            throw ConfigError("slick target_area must be in (0, 1e6] hm^2");
        if (!(damping_max_db > 0.0))
            throw ConfigError("slick damping_max must be > 0 dB");
    }
};

struct SceneGroundTruth {
    BinaryMask semantic_mask;
    std::vector<SlickInstance> instances;
    std::vector<SlickKind> instance_kinds;  // parallel to instances
    BinaryMask lookalike_mask;
    WindField wind_truth;
    nlohmann::ordered_json config_echo;
};

namespace detail {

inline std::vector<double> gaussian_kernel(double sigma) {
    int half = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * half + 1);
    double sum = 0.0;
    for (int i = -half; i <= half; ++i) {
        k[i + half] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += k[i + half];
    }
    for (double& v : k) v /= sum;
    return k;
}

// Separable convolution with edge replication.
inline void blur_separable(std::vector<double>& img, int w, int h,
                           const std::vector<double>& k) {
    const int half = static_cast<int>(k.size()) / 2;
    std::vector<double> tmp(img.size());
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double s = 0.0;
            for (int i = -half; i <= half; ++i)
                s += k[i + half] * img[static_cast<std::size_t>(r) * w +
                                       std::clamp(c + i, 0, w - 1)];
            tmp[static_cast<std::size_t>(r) * w + c] = s;
        }
    for (int c = 0; c < w; ++c)
        for (int r = 0; r < h; ++r) {
            double s = 0.0;
            for (int i = -half; i <= half; ++i)
                s += k[i + half] * tmp[static_cast<std::size_t>(
                                           std::clamp(r + i, 0, h - 1)) * w + c];
            img[static_cast<std::size_t>(r) * w + c] = s;
        }
}

inline double kernel_power(const std::vector<double>& k) {
    double p = 0.0;
    for (double v : k) p += v * v;
    return p;
}

}  // namespace detail

// Smooth positive random wind field (filtered white noise) with optional
// low-wind pockets: wide-floor depressions that pull speed below the
// 1.5 m/s detectability limit over a contiguous region of configured area.
inline WindField gen_wind_field(int width, int height, std::uint64_t seed,
                                const WindParams& params) {
    params.validate();
    RasterGrid speed(width, height, 0.0f);
    RasterGrid dir(width, height, 0.0f);
    auto eng = make_engine(seed, 0x77696e64ULL);
    std::normal_distribution<double> gauss(0.0, 1.0);

    auto kernel = detail::gaussian_kernel(params.correlation_length_px);
    // variance after separable smoothing of unit white noise is (sum w^2)^2
    const double norm = 1.0 / detail::kernel_power(kernel);
    // Smooth noise on a padded field and crop the center, so edge
    // replication in the blur never touches the delivered pixels and the
    // statistics are stationary up to the scene border.
    const int pad = static_cast<int>(kernel.size()) / 2;
    const int pw = width + 2 * pad, ph = height + 2 * pad;
    const std::size_t pn = static_cast<std::size_t>(pw) * ph;
    const std::size_t n = speed.size();
    std::vector<double> pfield(pn), pdfield(pn);
    for (std::size_t i = 0; i < pn; ++i) pfield[i] = gauss(eng);
    for (std::size_t i = 0; i < pn; ++i) pdfield[i] = gauss(eng);
    detail::blur_separable(pfield, pw, ph, kernel);
    detail::blur_separable(pdfield, pw, ph, kernel);
    std::vector<double> field(n), dfield(n);
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c) {
            std::size_t src = static_cast<std::size_t>(r + pad) * pw + (c + pad);
            std::size_t dst = static_cast<std::size_t>(r) * width + c;
            field[dst] = pfield[src];
            dfield[dst] = pdfield[src];
        }
    const double amp = std::sqrt(params.variance) * norm;
    const double damp = params.direction_spread_deg * norm;

    for (std::size_t i = 0; i < n; ++i)
        field[i] = params.mean_speed + amp * field[i];

    // Pockets: supergaussian depressions toward pocket_floor_mps. The core
    // radius is sized so the area below 1.5 m/s matches pocket_area_hm2
    // when the ambient speed sits near mean_speed.
    if (params.low_wind_pockets > 0) {
        if (params.mean_speed <= 1.5)
            throw ConfigError("low-wind pockets need mean_speed > 1.5 m/s");
        const double area_px =
            params.pocket_area_hm2 * 1e4 / (kDefaultPixelSpacing * kDefaultPixelSpacing);
        const double r_thresh = std::sqrt(area_px / M_PI);
        const double g_thresh = (params.mean_speed - 1.5) /
                                (params.mean_speed - params.pocket_floor_mps);
        // profile g(r) = exp(-(r/rc)^4); solve g(r_thresh) = g_thresh
        const double rc = r_thresh / std::pow(std::log(1.0 / g_thresh), 0.25);
        const double total_area = M_PI * r_thresh * r_thresh * params.low_wind_pockets;
        if (total_area > 0.5 * static_cast<double>(width) * height)
            throw ConfigError("low-wind pockets would cover more than 50% of the scene");

        std::uniform_real_distribution<double> ur(0.0, 1.0);
        std::vector<std::pair<double, double>> centers;
        const double margin = 2.0 * r_thresh + 2.0;
        for (int p = 0; p < params.low_wind_pockets; ++p) {
            double cr = 0.0, cc = 0.0;
            bool ok = false;
            for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
                cr = margin + ur(eng) * (height - 2.0 * margin);
                cc = margin + ur(eng) * (width - 2.0 * margin);
                ok = true;
                for (auto& [pr, pc] : centers) {
                    double d2 = (pr - cr) * (pr - cr) + (pc - cc) * (pc - cc);
                    if (d2 < (4.0 * r_thresh + 6.0) * (4.0 * r_thresh + 6.0)) {
                        ok = false;
                        break;
                    }
                }
            }
            if (!ok)
                throw ConfigError("cannot place non-overlapping low-wind pockets");
            centers.emplace_back(cr, cc);
            const int reach = static_cast<int>(std::ceil(3.0 * rc));
            for (int r = std::max(0, (int)cr - reach);
                 r <= std::min(height - 1, (int)cr + reach); ++r)
                for (int c = std::max(0, (int)cc - reach);
                     c <= std::min(width - 1, (int)cc + reach); ++c) {
                    double rr = std::hypot(r - cr, c - cc) / rc;
                    double g = std::exp(-std::pow(rr, 4.0));
                    std::size_t i = static_cast<std::size_t>(r) * width + c;
                    field[i] = field[i] - (field[i] - params.pocket_floor_mps) * g;
                }
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        speed.values[i] = static_cast<float>(std::max(0.0, field[i]));
        dir.values[i] = static_cast<float>(
            normalize_degrees(params.mean_direction_deg + damp * dfield[i]));
    }
    return {std::move(speed), std::move(dir), WindProvenance::SimulatedTruth};
}

struct ShapeBounds {
    int width = 0;
    int height = 0;
    double pixel_spacing = kDefaultPixelSpacing;
};

namespace detail {

// Scanline fill of a closed polygon (even-odd rule), pixel centers.
inline std::vector<Pixel> fill_polygon(const std::vector<std::pair<double, double>>& poly,
                                       const ShapeBounds& b) {
    std::vector<Pixel> out;
    double rmin = 1e18, rmax = -1e18;
    for (auto& [r, c] : poly) { rmin = std::min(rmin, r); rmax = std::max(rmax, r); }
    int r0 = std::max(0, static_cast<int>(std::floor(rmin)));
    int r1 = std::min(b.height - 1, static_cast<int>(std::ceil(rmax)));
    const std::size_t nv = poly.size();
    std::vector<double> xs;
    for (int r = r0; r <= r1; ++r) {
        double y = r + 0.0;
        xs.clear();
        for (std::size_t i = 0; i < nv; ++i) {
            auto [y1, x1] = poly[i];
            auto [y2, x2] = poly[(i + 1) % nv];
            if ((y1 <= y && y2 > y) || (y2 <= y && y1 > y)) {
                double t = (y - y1) / (y2 - y1);
                xs.push_back(x1 + t * (x2 - x1));
            }
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
            int c0 = std::max(0, static_cast<int>(std::ceil(xs[i])));
            int c1 = std::min(b.width - 1, static_cast<int>(std::floor(xs[i + 1])));
            for (int c = c0; c <= c1; ++c) out.push_back({r, c});
        }
    }
    return out;
}

// Keep the largest 8-connected component of a pixel set.
inline std::vector<Pixel> largest_component(const std::vector<Pixel>& px) {
    if (px.empty()) return px;
    std::set<Pixel> all(px.begin(), px.end());
    std::vector<Pixel> best;
    while (!all.empty()) {
        std::vector<Pixel> comp, stack{*all.begin()};
        all.erase(all.begin());
        while (!stack.empty()) {
            Pixel p = stack.back();
            stack.pop_back();
            comp.push_back(p);
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    if (!dr && !dc) continue;
                    auto it = all.find({p.row + dr, p.col + dc});
                    if (it != all.end()) {
                        stack.push_back(*it);
                        all.erase(it);
                    }
                }
        }
        if (comp.size() > best.size()) best = std::move(comp);
    }
    std::sort(best.begin(), best.end());
    return best;
}

}  // namespace detail

// One 8-connected region with realized area within +/-10% of target.
// Spills: elongated blob from a noisy closed spline, bbox aspect >= 2.
// Seeps: filamentary ribbon traced by a random walk.
inline std::vector<Pixel> gen_slick_shape(const SlickSpec& spec,
                                          const ShapeBounds& bounds) {
    spec.validate();
    const double target_px =
        spec.target_area_hm2 * 1e4 / (bounds.pixel_spacing * bounds.pixel_spacing);
    if (target_px > 0.9 * bounds.width * bounds.height)
        throw ConfigError("slick target_area does not fit scene bounds");
    auto eng = make_engine(spec.shape_seed, 0x736c6b31ULL);
    std::uniform_real_distribution<double> ur(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (int attempt = 0; attempt < 100; ++attempt) {
        std::vector<Pixel> px;
        if (spec.kind == SlickKind::Spill) {
            const int k = 14;
            std::vector<double> radii(k);
            for (int i = 0; i < k; ++i) radii[i] = 1.0 + 0.35 * (2.0 * ur(eng) - 1.0);
            double aspect = 2.3 + 2.0 * ur(eng);
            // near-axis-aligned orientation keeps the bbox elongated
            double rot = (ur(eng) - 0.5) * (M_PI / 7.0) + (ur(eng) < 0.5 ? 0.0 : M_PI / 2.0);
            // unit-shape area estimate -> initial scale for target_px
            double scale = std::sqrt(target_px / (M_PI * aspect));
            for (int iter = 0; iter < 12; ++iter) {
                std::vector<std::pair<double, double>> poly;
                const int seg = 8;  // spline samples per control arc
                for (int i = 0; i < k * seg; ++i) {
                    double t = static_cast<double>(i) / seg;
                    int i0 = static_cast<int>(t) % k;
                    double f = t - std::floor(t);
                    // Catmull-Rom on the radius samples
                    double rm1 = radii[(i0 + k - 1) % k], r0 = radii[i0];
                    double r1 = radii[(i0 + 1) % k], r2 = radii[(i0 + 2) % k];
                    double rr = 0.5 * ((2 * r0) + (-rm1 + r1) * f +
                                       (2 * rm1 - 5 * r0 + 4 * r1 - r2) * f * f +
                                       (-rm1 + 3 * r0 - 3 * r1 + r2) * f * f * f);
                    double ang = 2.0 * M_PI * t / k;
                    double ex = std::cos(ang) * rr * aspect * scale;
                    double ey = std::sin(ang) * rr * scale;
                    double row = spec.centroid.row + ex * std::sin(rot) + ey * std::cos(rot);
                    double col = spec.centroid.col + ex * std::cos(rot) - ey * std::sin(rot);
                    poly.emplace_back(row, col);
                }
                px = detail::largest_component(detail::fill_polygon(poly, bounds));
                if (px.empty()) { scale *= 1.3; continue; }
                double ratio = target_px / static_cast<double>(px.size());
                if (ratio > 0.92 && ratio < 1.09) break;
                scale *= std::sqrt(std::clamp(ratio, 0.3, 3.0));
            }
        } else {
            // random-walk ribbon
            const int width_px = target_px > 400 ? 2 : 1;
            auto stamp_off = disk_offsets(width_px);
            std::set<Pixel> painted;
            double r = spec.centroid.row, c = spec.centroid.col;
            double heading = 2.0 * M_PI * ur(eng);
            const std::size_t want = static_cast<std::size_t>(std::llround(target_px));
            std::size_t guard = 0;
            while (painted.size() < want && guard++ < 200000) {
                for (const Pixel& d : stamp_off) {
                    int rr = static_cast<int>(std::lround(r)) + d.row;
                    int cc = static_cast<int>(std::lround(c)) + d.col;
                    if (rr >= 0 && rr < bounds.height && cc >= 0 && cc < bounds.width)
                        painted.insert({rr, cc});
                    if (painted.size() >= want) break;
                }
                heading += 0.35 * gauss(eng);
                r += std::sin(heading);
                c += std::cos(heading);
                // steer back toward the interior near borders
                if (r < 2 || r > bounds.height - 3 || c < 2 || c > bounds.width - 3)
                    heading = std::atan2(bounds.height / 2.0 - r, bounds.width / 2.0 - c);
            }
            px = detail::largest_component({painted.begin(), painted.end()});
        }
        if (px.empty()) continue;
        double realized = static_cast<double>(px.size());
        if (realized >= 0.9 * target_px && realized <= 1.1 * target_px) return px;
    }
    throw ConfigError("unable to fit slick shape after 100 attempts");
}

// Wind-dependent slick/sea contrast in dB. Zero outside the detectability
// window [1.5, 10] m/s, cosine ramps to a plateau at damping_max on [3, 6].
inline double damping_contrast(double v, double damping_max_db) {
    if (v < 0.0) throw DomainError("wind_speed", "must be >= 0");
    if (v <= 1.5 || v >= 10.0) return 0.0;
    if (v < 3.0) return damping_max_db * 0.5 * (1.0 - std::cos(M_PI * (v - 1.5) / 1.5));
    if (v <= 6.0) return damping_max_db;
    return damping_max_db * 0.5 * (1.0 + std::cos(M_PI * (v - 6.0) / 4.0));
}

struct LookalikeConfig {
    double wind_threshold_mps = 1.5;  // regions below this count as lookalikes
};

struct SceneConfig {
    SceneMetadata meta;
    double speckle_looks = 4.4;
    std::string gmf_name = "cmod5n";
    LookalikeConfig lookalike;
};

// Render one scene: GMF-driven clean sea, dB damping inside slicks,
// lookalikes dark only through their locally low wind, multiplicative
// gamma speckle. Pure function of its inputs and seed.
inline std::pair<RasterGrid, SceneGroundTruth> render_scene(
    const SceneConfig& cfg, const WindField& wind,
    const std::vector<SlickSpec>& slicks, std::uint64_t seed) {
    cfg.meta.validate();
    wind.validate();
    if (cfg.speckle_looks < 1.0)
        throw ConfigError("speckle_looks must be >= 1");
    auto gmf = find_gmf(cfg.gmf_name);
    const int w = wind.speed.width, h = wind.speed.height;
    ShapeBounds bounds{w, h, cfg.meta.pixel_spacing};

    SceneGroundTruth gt;
    gt.semantic_mask = BinaryMask(w, h);
    gt.lookalike_mask = BinaryMask(w, h);

    // realize slick shapes; later slicks never steal pixels from earlier ones
    std::vector<std::vector<Pixel>> regions;
    std::vector<SlickKind> kinds;
    std::vector<double> dampings;
    for (const SlickSpec& s : slicks) {
        std::vector<Pixel> px;
        try {
            px = gen_slick_shape(s, bounds);
        } catch (const ConfigError& e) {
            throw ConfigError("scene " + cfg.meta.scene_id + ": " + e.what());
        }
        std::vector<Pixel> kept;
        for (const Pixel& p : px)
            if (!gt.semantic_mask.at(p.row, p.col)) kept.push_back(p);
        if (kept.empty()) continue;
        for (const Pixel& p : kept) gt.semantic_mask.set(p.row, p.col, true);
        regions.push_back(detail::largest_component(kept));
        // drop fragments cut off by the overlap subtraction
        for (const Pixel& p : kept)
            if (!std::binary_search(regions.back().begin(), regions.back().end(), p))
                gt.semantic_mask.set(p.row, p.col, false);
        kinds.push_back(s.kind);
        dampings.push_back(s.damping_max_db);
    }

    RasterGrid sigma0(w, h, 0.0f, cfg.meta.pixel_spacing);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double v = std::clamp<double>(wind.speed.at(r, c), kWindSpeedFloor,
                                          kWindSpeedCeiling);
            double phi = normalize_degrees(wind.direction.at(r, c));
            double theta = cfg.meta.incidence_at_col(c, w);
            sigma0.at(r, c) =
                static_cast<float>(gmf->forward({v, phi, theta}).sigma0);
        }

    // slick damping in dB, driven by the local truth wind
    for (std::size_t i = 0; i < regions.size(); ++i)
        for (const Pixel& p : regions[i]) {
            double d = damping_contrast(wind.speed.at(p.row, p.col), dampings[i]);
            sigma0.at(p.row, p.col) *= static_cast<float>(std::pow(10.0, -d / 10.0));
        }

    // lookalikes: low-wind regions, rendered dark by the GMF alone
    {
        BinaryMask low(w, h);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c)
                low.set(r, c, wind.speed.at(r, c) < cfg.lookalike.wind_threshold_mps &&
                                  !gt.semantic_mask.at(r, c));
        gt.lookalike_mask = low;
    }

    // multiplicative gamma speckle, shape L, mean 1, i.i.d. per pixel
    auto eng = make_engine(seed, 0x73706b6cULL);
    std::gamma_distribution<double> gamma(cfg.speckle_looks, 1.0 / cfg.speckle_looks);
    for (float& v : sigma0.values) v = static_cast<float>(v * gamma(eng));

    // ground-truth instances from the realized regions
    for (std::size_t i = 0; i < regions.size(); ++i) {
        SlickInstance inst;
        inst.pixel_set = regions[i];
        inst.source = InstanceSource::GroundTruth;
        inst.bbox = {regions[i].front().row, w, regions[i].front().row, 0};
        for (const Pixel& p : regions[i]) {
            inst.bbox.r0 = std::min(inst.bbox.r0, p.row);
            inst.bbox.r1 = std::max(inst.bbox.r1, p.row);
            inst.bbox.c0 = std::min(inst.bbox.c0, p.col);
            inst.bbox.c1 = std::max(inst.bbox.c1, p.col);
        }
        inst.area_hm2 = area_hm2(regions[i].size(), cfg.meta.pixel_spacing);
        gt.instances.push_back(std::move(inst));
        gt.instance_kinds.push_back(kinds[i]);
    }
    // order instances like instances_from_mask does
    std::vector<std::size_t> order(gt.instances.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const BBox &ba = gt.instances[a].bbox, &bb = gt.instances[b].bbox;
        if (ba.r0 != bb.r0) return ba.r0 < bb.r0;
        return ba.c0 < bb.c0;
    });
    std::vector<SlickInstance> sorted_inst;
    std::vector<SlickKind> sorted_kind;
    for (std::size_t i : order) {
        sorted_inst.push_back(std::move(gt.instances[i]));
        sorted_kind.push_back(gt.instance_kinds[i]);
    }
    gt.instances = std::move(sorted_inst);
    gt.instance_kinds = std::move(sorted_kind);
    for (std::size_t i = 0; i < gt.instances.size(); ++i)
        gt.instances[i].instance_id = static_cast<int>(i) + 1;

    gt.wind_truth = wind;
    return {std::move(sigma0), std::move(gt)};
}

}  // namespace sarslick

#endif

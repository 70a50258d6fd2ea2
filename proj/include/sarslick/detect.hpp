#ifndef SARSLICK_DETECT_HPP
#define SARSLICK_DETECT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sarslick/errors.hpp"
#include "sarslick/raster.hpp"

namespace sarslick {

struct Pixel {
    int row;
    int col;
    friend bool operator==(const Pixel&, const Pixel&) = default;
    friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

struct BBox {
    int r0 = 0, c0 = 0, r1 = 0, c1 = 0;  // inclusive
    friend bool operator==(const BBox&, const BBox&) = default;
};

enum class InstanceSource { GroundTruth, Baseline, Imported };

inline std::string to_string(InstanceSource s) {
    switch (s) {
        case InstanceSource::GroundTruth: return "ground-truth";
        case InstanceSource::Baseline: return "baseline";
        case InstanceSource::Imported: return "imported";
    }
    return "?";
}

// One connected slick region.
struct SlickInstance {
    int instance_id = 0;
    std::vector<Pixel> pixel_set;  // sorted (row, col)
    double area_hm2 = 0.0;
    BBox bbox;
    InstanceSource source = InstanceSource::Baseline;
};

// Disk structuring element / neighborhood offsets, dx^2+dy^2 <= r^2.
inline std::vector<Pixel> disk_offsets(int radius) {
    std::vector<Pixel> off;
    for (int dr = -radius; dr <= radius; ++dr)
        for (int dc = -radius; dc <= radius; ++dc)
            if (dr * dr + dc * dc <= radius * radius) off.push_back({dr, dc});
    return off;
}

// 8-connected (or 4-connected) component labeling by iterative flood fill.
// Instances come out sorted by bbox (r0, c0) so output is independent of
// scan order.
inline std::vector<SlickInstance> instances_from_mask(
    const BinaryMask& mask, double pixel_spacing = kDefaultPixelSpacing,
    int connectivity = 8, InstanceSource source = InstanceSource::Baseline) {
    if (connectivity != 4 && connectivity != 8)
        throw ConfigError("connectivity must be 4 or 8");
    const int w = mask.width, h = mask.height;
    std::vector<std::int32_t> label(static_cast<std::size_t>(w) * h, 0);
    std::vector<SlickInstance> out;

    static const int off8[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                                   {0, 1},  {1, -1}, {1, 0},  {1, 1}};
    static const int off4[4][2] = {{-1, 0}, {0, -1}, {0, 1}, {1, 0}};
    const auto* off = connectivity == 8 ? off8 : off4;
    const int noff = connectivity;

    std::vector<Pixel> stack;
    std::int32_t next = 0;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            std::size_t i = mask.index(r, c);
            if (!mask.bits[i] || label[i]) continue;
            ++next;
            SlickInstance inst;
            stack.clear();
            stack.push_back({r, c});
            label[i] = next;
            while (!stack.empty()) {
                Pixel p = stack.back();
                stack.pop_back();
                inst.pixel_set.push_back(p);
                for (int k = 0; k < noff; ++k) {
                    int nr = p.row + off[k][0], nc = p.col + off[k][1];
                    if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
                    std::size_t ni = mask.index(nr, nc);
                    if (mask.bits[ni] && !label[ni]) {
                        label[ni] = next;
                        stack.push_back({nr, nc});
                    }
                }
            }
            std::sort(inst.pixel_set.begin(), inst.pixel_set.end());
            inst.bbox = {inst.pixel_set.front().row, w, inst.pixel_set.front().row, 0};
            for (const Pixel& p : inst.pixel_set) {
                inst.bbox.r0 = std::min(inst.bbox.r0, p.row);
                inst.bbox.r1 = std::max(inst.bbox.r1, p.row);
                inst.bbox.c0 = std::min(inst.bbox.c0, p.col);
                inst.bbox.c1 = std::max(inst.bbox.c1, p.col);
            }
            inst.area_hm2 = area_hm2(inst.pixel_set.size(), pixel_spacing);
            inst.source = source;
            out.push_back(std::move(inst));
        }
    }
    std::sort(out.begin(), out.end(), [](const SlickInstance& a,
                                         const SlickInstance& b) {
        if (a.bbox.r0 != b.bbox.r0) return a.bbox.r0 < b.bbox.r0;
        if (a.bbox.c0 != b.bbox.c0) return a.bbox.c0 < b.bbox.c0;
        return a.pixel_set.front() < b.pixel_set.front();
    });
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i].instance_id = static_cast<int>(i) + 1;
    return out;
}

inline BinaryMask mask_from_instances(const std::vector<SlickInstance>& insts,
                                      int width, int height) {
    BinaryMask m(width, height);
    for (const auto& inst : insts)
        for (const Pixel& p : inst.pixel_set) m.set(p.row, p.col, true);
    return m;
}

inline BinaryMask erode(const BinaryMask& m, const std::vector<Pixel>& se) {
    BinaryMask out(m.width, m.height);
    for (int r = 0; r < m.height; ++r)
        for (int c = 0; c < m.width; ++c) {
            bool all = true;
            for (const Pixel& d : se) {
                int nr = r + d.row, nc = c + d.col;
                if (!m.in_bounds(nr, nc) || !m.at(nr, nc)) { all = false; break; }
            }
            out.set(r, c, all);
        }
    return out;
}

inline BinaryMask dilate(const BinaryMask& m, const std::vector<Pixel>& se) {
    BinaryMask out(m.width, m.height);
    for (int r = 0; r < m.height; ++r)
        for (int c = 0; c < m.width; ++c) {
            if (!m.at(r, c)) continue;
            for (const Pixel& d : se) {
                int nr = r + d.row, nc = c + d.col;
                if (out.in_bounds(nr, nc)) out.set(nr, nc, true);
            }
        }
    return out;
}

inline BinaryMask morph_open(const BinaryMask& m, int radius) {
    auto se = disk_offsets(radius);
    return dilate(erode(m, se), se);
}

inline BinaryMask morph_close(const BinaryMask& m, int radius) {
    auto se = disk_offsets(radius);
    return erode(dilate(m, se), se);
}

// Stage-1 dark-pattern isolation parameters.
struct DetectorParams {
    int background_window = 129;   // pixels, odd
    double threshold_db = 2.5;     // below local background
    double min_area_hm2 = 0.2;     // components below this are dropped
    int morph_radius = 1;
    int connectivity = 8;

    void validate() const {
        if (background_window <= 0 || background_window % 2 == 0)
            throw ConfigError("background_window must be odd and positive");
        if (background_window <= 2 * morph_radius)
            throw ConfigError("background_window must exceed 2*morph_radius");
        if (!(threshold_db > 0.0))
            throw ConfigError("threshold_db must be > 0");
        if (morph_radius < 0) throw ConfigError("morph_radius must be >= 0");
        if (min_area_hm2 < 0.0) throw ConfigError("min_area_hm2 must be >= 0");
    }
};

struct DetectorDiagnostics {
    bool all_nodata = false;
    std::size_t nodata_pixels = 0;
};

namespace detail {

// Sliding-window median of a dB image, edge handling by replication.
// Histogram method: dB values are quantized to 1024 bins over the finite
// value range; per-column histograms slide down the (padded) image and the
// kernel histogram slides across each row.
inline std::vector<float> sliding_median(const std::vector<float>& db,
                                         const std::vector<std::uint8_t>& valid,
                                         int w, int h, int window) {
    constexpr int kBins = 1024;
    float lo = 0.0f, hi = 0.0f;
    bool any = false;
    for (int i = 0; i < w * h; ++i) {
        if (!valid[i]) continue;
        if (!any) { lo = hi = db[i]; any = true; }
        lo = std::min(lo, db[i]);
        hi = std::max(hi, db[i]);
    }
    std::vector<float> med(static_cast<std::size_t>(w) * h, 0.0f);
    if (!any) return med;
    const float span = std::max(hi - lo, 1e-6f);
    const float inv_bin = (kBins - 1) / span;

    const int half = window / 2;
    const int pw = w + 2 * half, ph = h + 2 * half;
    // Padded quantized image; invalid pixels keep a sentinel and are not
    // counted in the histograms.
    std::vector<std::int16_t> q(static_cast<std::size_t>(pw) * ph);
    auto src = [&](int r, int c) {
        int rr = std::clamp(r - half, 0, h - 1);
        int cc = std::clamp(c - half, 0, w - 1);
        int i = rr * w + cc;
        if (!valid[i]) return std::int16_t(-1);
        return static_cast<std::int16_t>(
            std::clamp(static_cast<int>((db[i] - lo) * inv_bin), 0, kBins - 1));
    };
    for (int r = 0; r < ph; ++r)
        for (int c = 0; c < pw; ++c) q[static_cast<std::size_t>(r) * pw + c] = src(r, c);

    // col_hist[c][bin]: rows [row, row+window) of padded column c.
    std::vector<std::uint16_t> col_hist(static_cast<std::size_t>(pw) * kBins, 0);
    std::vector<int> col_count(pw, 0);
    for (int c = 0; c < pw; ++c)
        for (int r = 0; r < window; ++r) {
            std::int16_t b = q[static_cast<std::size_t>(r) * pw + c];
            if (b >= 0) { ++col_hist[static_cast<std::size_t>(c) * kBins + b]; ++col_count[c]; }
        }

    std::vector<std::int32_t> kern(kBins);
    const float bin_width = span / (kBins - 1);
    for (int r = 0; r < h; ++r) {
        if (r > 0) {
            // slide every column histogram down one row
            int r_out = r - 1, r_in = r - 1 + window;
            for (int c = 0; c < pw; ++c) {
                std::int16_t bo = q[static_cast<std::size_t>(r_out) * pw + c];
                if (bo >= 0) { --col_hist[static_cast<std::size_t>(c) * kBins + bo]; --col_count[c]; }
                std::int16_t bi = q[static_cast<std::size_t>(r_in) * pw + c];
                if (bi >= 0) { ++col_hist[static_cast<std::size_t>(c) * kBins + bi]; ++col_count[c]; }
            }
        }
        std::fill(kern.begin(), kern.end(), 0);
        int count = 0;
        for (int c = 0; c < window; ++c) {
            const std::uint16_t* ch = &col_hist[static_cast<std::size_t>(c) * kBins];
            for (int b = 0; b < kBins; ++b) kern[b] += ch[b];
            count += col_count[c];
        }
        for (int c = 0; c < w; ++c) {
            if (c > 0) {
                const std::uint16_t* rem = &col_hist[static_cast<std::size_t>(c - 1) * kBins];
                const std::uint16_t* add = &col_hist[static_cast<std::size_t>(c - 1 + window) * kBins];
                for (int b = 0; b < kBins; ++b) kern[b] += add[b] - rem[b];
                count += col_count[c - 1 + window] - col_count[c - 1];
            }
            std::size_t out_i = static_cast<std::size_t>(r) * w + c;
            if (count == 0) { med[out_i] = lo; continue; }
            int target = (count + 1) / 2;
            int acc = 0, b = 0;
            for (; b < kBins; ++b) {
                acc += kern[b];
                if (acc >= target) break;
            }
            med[out_i] = lo + b * bin_width;
        }
    }
    return med;
}

}  // namespace detail

// Classical dark-spot baseline: threshold against the local sliding-median
// background in dB, clean up with opening+closing, drop small components.
inline BinaryMask dark_spot_mask(const RasterGrid& sigma0,
                                 const DetectorParams& params,
                                 DetectorDiagnostics* diag = nullptr) {
    params.validate();
    sigma0.validate();
    if (sigma0.width < params.background_window ||
        sigma0.height < params.background_window)
        throw ConfigError("image smaller than background_window");

    const int w = sigma0.width, h = sigma0.height;
    std::vector<float> db(static_cast<std::size_t>(w) * h, 0.0f);
    std::vector<std::uint8_t> valid(static_cast<std::size_t>(w) * h, 0);
    std::size_t n_nodata = 0;
    for (std::size_t i = 0; i < sigma0.size(); ++i) {
        float v = sigma0.values[i];
        if (sigma0.is_nodata(v) || !(v > 0.0f)) { ++n_nodata; continue; }
        db[i] = 10.0f * std::log10(v);
        valid[i] = 1;
    }
    if (diag) {
        diag->nodata_pixels = n_nodata;
        diag->all_nodata = (n_nodata == sigma0.size());
    }
    if (n_nodata == sigma0.size()) return BinaryMask(w, h);

    std::vector<float> background =
        detail::sliding_median(db, valid, w, h, params.background_window);

    BinaryMask flagged(w, h);
    for (std::size_t i = 0; i < db.size(); ++i)
        if (valid[i] && db[i] < background[i] - params.threshold_db)
            flagged.bits[i] = 1;

    BinaryMask cleaned = flagged;
    if (params.morph_radius > 0) {
        cleaned = morph_open(cleaned, params.morph_radius);
        cleaned = morph_close(cleaned, params.morph_radius);
    }

    if (params.min_area_hm2 > 0.0) {
        auto insts = instances_from_mask(cleaned, sigma0.pixel_spacing,
                                         params.connectivity);
        BinaryMask out(w, h);
        for (const auto& inst : insts)
            if (inst.area_hm2 >= params.min_area_hm2)
                for (const Pixel& p : inst.pixel_set) out.set(p.row, p.col, true);
        return out;
    }
    return cleaned;
}

// Bridge for externally produced semantic masks: raster container with
// values in {0, 1}, dimension-checked against the scene it annotates.
inline BinaryMask import_prediction_mask(const std::string& path,
                                         int scene_width, int scene_height) {
    auto [grid, meta] = read_raster(path);
    (void)meta;
    if (grid.width != scene_width || grid.height != scene_height)
        throw DataError("prediction mask is " + std::to_string(grid.width) + "x" +
                        std::to_string(grid.height) + " but scene is " +
                        std::to_string(scene_width) + "x" +
                        std::to_string(scene_height));
    return mask_from_grid(grid);
}

}  // namespace sarslick

#endif

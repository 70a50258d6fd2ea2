#ifndef SARSLICK_EVALUATE_HPP
#define SARSLICK_EVALUATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "sarslick/detect.hpp"
#include "sarslick/errors.hpp"
#include "sarslick/raster.hpp"
#include "sarslick/wind.hpp"

namespace sarslick {

// Instance-level matching outcome for one scene. A GT instance is detected
// iff some prediction shares at least min_intersection_px pixels with it;
// a prediction overlapping no GT at that level is a false alarm.
// Many-to-many overlaps are allowed (fragmented predictions all credit the
// same GT instead of being penalized).
struct MatchResult {
    std::vector<std::pair<int, std::vector<int>>> detected_gt;  // gt_id -> pred ids
    std::vector<int> missed_gt;
    std::vector<int> false_alarms;  // pred ids
    int min_intersection_px = 1;
};

inline MatchResult match_instances(const std::vector<SlickInstance>& gt,
                                   const std::vector<SlickInstance>& pred,
                                   int min_intersection_px = 1) {
    if (min_intersection_px < 1)
        throw ConfigError("min_intersection_px must be >= 1");
    auto check_unique = [](const std::vector<SlickInstance>& v, const char* what) {
        std::set<int> seen;
        for (const auto& i : v)
            if (!seen.insert(i.instance_id).second)
                throw DataError(std::string("duplicate ") + what + " instance id " +
                                std::to_string(i.instance_id));
    };
    check_unique(gt, "GT");
    check_unique(pred, "prediction");

    // pixel -> gt index
    std::unordered_map<std::int64_t, int> owner;
    for (std::size_t gi = 0; gi < gt.size(); ++gi)
        for (const Pixel& p : gt[gi].pixel_set)
            owner[(static_cast<std::int64_t>(p.row) << 32) | static_cast<std::uint32_t>(p.col)] =
                static_cast<int>(gi);

    std::vector<std::vector<int>> gt_preds(gt.size());
    MatchResult res;
    res.min_intersection_px = min_intersection_px;
    for (const auto& pr : pred) {
        std::map<int, int> overlap;  // gt index -> shared pixel count
        for (const Pixel& p : pr.pixel_set) {
            auto it = owner.find((static_cast<std::int64_t>(p.row) << 32) |
                                 static_cast<std::uint32_t>(p.col));
            if (it != owner.end()) ++overlap[it->second];
        }
        bool any = false;
        for (auto [gi, n] : overlap)
            if (n >= min_intersection_px) {
                gt_preds[gi].push_back(pr.instance_id);
                any = true;
            }
        if (!any) res.false_alarms.push_back(pr.instance_id);
    }
    for (std::size_t gi = 0; gi < gt.size(); ++gi) {
        if (gt_preds[gi].empty())
            res.missed_gt.push_back(gt[gi].instance_id);
        else
            res.detected_gt.emplace_back(gt[gi].instance_id, gt_preds[gi]);
    }
    return res;
}

struct PixelMetrics {
    double iou_slick = 0.0;
    double well_detected_fraction = 0.0;
    bool iou_defined = true;
    bool wdf_defined = true;
    std::size_t intersection = 0;
    std::size_t union_ = 0;
    std::size_t gt_pixels = 0;
};

inline PixelMetrics pixel_metrics(const BinaryMask& gt, const BinaryMask& pred) {
    if (!gt.same_shape(pred))
        throw DataError("pixel_metrics: mask dimension mismatch");
    PixelMetrics m;
    for (std::size_t i = 0; i < gt.bits.size(); ++i) {
        bool g = gt.bits[i], p = pred.bits[i];
        m.intersection += (g && p);
        m.union_ += (g || p);
        m.gt_pixels += g;
    }
    if (m.union_ == 0) {
        m.iou_defined = false;
        m.iou_slick = 0.0;
    } else {
        m.iou_slick = static_cast<double>(m.intersection) / m.union_;
    }
    if (m.gt_pixels == 0) {
        m.wdf_defined = false;
        m.well_detected_fraction = 0.0;
    } else {
        m.well_detected_fraction = static_cast<double>(m.intersection) / m.gt_pixels;
    }
    return m;
}

// Context bins: interior intervals are left-closed/right-open; the final
// wind bin is open-ended.
struct BinningSpec {
    std::vector<double> wind_edges = {0, 1, 2, 3, 4, 5, 6};
    std::vector<double> size_edges = {0, 10, 100, 1000, 10000, 100000, 1000000};

    void validate() const {
        for (const auto* e : {&wind_edges, &size_edges}) {
            if (e->size() < 2) throw ConfigError("bin edges need >= 2 entries");
            if ((*e)[0] != 0.0) throw ConfigError("first bin edge must be 0");
            for (std::size_t i = 1; i < e->size(); ++i)
                if (!((*e)[i] > (*e)[i - 1]))
                    throw ConfigError("bin edges must be strictly increasing");
        }
    }

    // wind bins: [e0,e1), ..., [e_{n-1}, inf)
    std::size_t wind_bin(double v) const { return open_bin(wind_edges, v); }
    std::size_t wind_bin_count() const { return wind_edges.size(); }
    std::string wind_bin_label(std::size_t b) const {
        if (b + 1 < wind_edges.size())
            return "[" + fmt(wind_edges[b]) + ";" + fmt(wind_edges[b + 1]) + ")";
        return "[" + fmt(wind_edges.back()) + ";inf)";
    }

    std::size_t size_bin(double a) const {
        return std::min(open_bin(size_edges, a), size_edges.size() - 2);
    }
    std::size_t size_bin_count() const { return size_edges.size() - 1; }
    std::string size_bin_label(std::size_t b) const {
        return "[" + fmt(size_edges[b]) + ";" + fmt(size_edges[b + 1]) + ")";
    }

  private:
    static std::size_t open_bin(const std::vector<double>& e, double v) {
        if (v < e.front()) return 0;
        auto it = std::upper_bound(e.begin(), e.end(), v);
        std::size_t i = (it - e.begin());
        return i == 0 ? 0 : i - 1;
    }
    static std::string fmt(double v) {
        char buf[32];
        if (v == std::floor(v) && std::abs(v) < 1e15)
            std::snprintf(buf, sizeof buf, "%.0f", v);
        else
            std::snprintf(buf, sizeof buf, "%g", v);
        return buf;
    }
};

struct BinCounts {
    long detected = 0;
    long missed = 0;
    long false_alarm = 0;
};

struct InstanceRecord {
    std::string scene_id;
    std::string outcome;  // detected | missed | false_alarm
    int instance_id = 0;
    double size_hm2 = 0.0;
    double wind_mps = 0.0;
};

// Aggregated metrics, overall and per context bin. Mergeable across
// scenes; the merge is associative and commutative.
struct EvaluationReport {
    BinningSpec bins;
    long scenes = 0;
    long detected = 0, missed = 0, false_alarms = 0;
    std::vector<BinCounts> wind_bins, size_bins;
    std::size_t px_intersection = 0, px_union = 0, px_gt = 0;
    std::vector<InstanceRecord> records;

    explicit EvaluationReport(BinningSpec b = {}) : bins(std::move(b)) {
        bins.validate();
        wind_bins.resize(bins.wind_bin_count());
        size_bins.resize(bins.size_bin_count());
    }

    double detection_rate() const {
        long tot = detected + missed;
        return tot ? static_cast<double>(detected) / tot : 0.0;
    }
    double fa_per_scene() const {
        return scenes ? static_cast<double>(false_alarms) / scenes : 0.0;
    }
    double fa_per_gt() const {
        long tot = detected + missed;
        return tot ? static_cast<double>(false_alarms) / tot : 0.0;
    }
    double iou_slick() const {
        return px_union ? static_cast<double>(px_intersection) / px_union : 0.0;
    }
    double well_detected_fraction() const {
        return px_gt ? static_cast<double>(px_intersection) / px_gt : 0.0;
    }

    void merge(const EvaluationReport& o) {
        if (wind_bins.size() != o.wind_bins.size() ||
            size_bins.size() != o.size_bins.size())
            throw DataError("EvaluationReport::merge: binning mismatch");
        scenes += o.scenes;
        detected += o.detected;
        missed += o.missed;
        false_alarms += o.false_alarms;
        for (std::size_t i = 0; i < wind_bins.size(); ++i) {
            wind_bins[i].detected += o.wind_bins[i].detected;
            wind_bins[i].missed += o.wind_bins[i].missed;
            wind_bins[i].false_alarm += o.wind_bins[i].false_alarm;
        }
        for (std::size_t i = 0; i < size_bins.size(); ++i) {
            size_bins[i].detected += o.size_bins[i].detected;
            size_bins[i].missed += o.size_bins[i].missed;
            size_bins[i].false_alarm += o.size_bins[i].false_alarm;
        }
        px_intersection += o.px_intersection;
        px_union += o.px_union;
        px_gt += o.px_gt;
        records.insert(records.end(), o.records.begin(), o.records.end());
    }
};

// Bin one scene's match outcome by contextual wind and size. `contexts`
// maps instance id to neighborhood wind, separately for GT and predictions;
// `gt_sizes`/`pred_sizes` map ids to areas in hm^2.
inline EvaluationReport bin_outcomes(
    const MatchResult& match, const std::string& scene_id,
    const std::map<int, double>& gt_context,
    const std::map<int, double>& gt_sizes,
    const std::map<int, double>& fa_context,
    const std::map<int, double>& pred_sizes, const BinningSpec& bins,
    const PixelMetrics& px) {
    EvaluationReport rep(bins);
    rep.scenes = 1;
    auto need = [](const std::map<int, double>& m, int id, const char* what) {
        auto it = m.find(id);
        if (it == m.end())
            throw DataError(std::string("missing ") + what + " for instance " +
                            std::to_string(id));
        return it->second;
    };
    auto add = [&](int id, const char* outcome, double wind, double size) {
        std::size_t wb = rep.bins.wind_bin(wind);
        std::size_t sb = rep.bins.size_bin(size);
        if (std::string(outcome) == "detected") {
            ++rep.detected;
            ++rep.wind_bins[wb].detected;
            ++rep.size_bins[sb].detected;
        } else if (std::string(outcome) == "missed") {
            ++rep.missed;
            ++rep.wind_bins[wb].missed;
            ++rep.size_bins[sb].missed;
        } else {
            ++rep.false_alarms;
            ++rep.wind_bins[wb].false_alarm;
            ++rep.size_bins[sb].false_alarm;
        }
        rep.records.push_back({scene_id, outcome, id, size, wind});
    };
    for (const auto& [gid, preds] : match.detected_gt)
        add(gid, "detected", need(gt_context, gid, "wind context"),
            need(gt_sizes, gid, "size"));
    for (int gid : match.missed_gt)
        add(gid, "missed", need(gt_context, gid, "wind context"),
            need(gt_sizes, gid, "size"));
    for (int pid : match.false_alarms)
        add(pid, "false_alarm", need(fa_context, pid, "FA wind context"),
            need(pred_sizes, pid, "FA size"));
    rep.px_intersection = px.intersection;
    rep.px_union = px.union_;
    rep.px_gt = px.gt_pixels;
    return rep;
}

// Full-fidelity dump of an evaluation, re-loadable (and re-binnable) by
// the report stage.
inline nlohmann::ordered_json report_to_json(const EvaluationReport& rep) {
    nlohmann::ordered_json j;
    j["format_version"] = 1;
    j["wind_edges"] = rep.bins.wind_edges;
    j["size_edges"] = rep.bins.size_edges;
    j["scenes"] = rep.scenes;
    j["px_intersection"] = rep.px_intersection;
    j["px_union"] = rep.px_union;
    j["px_gt"] = rep.px_gt;
    j["records"] = nlohmann::ordered_json::array();
    auto sorted = rep.records;
    std::sort(sorted.begin(), sorted.end(),
              [](const InstanceRecord& a, const InstanceRecord& b) {
                  if (a.scene_id != b.scene_id) return a.scene_id < b.scene_id;
                  if (a.outcome != b.outcome) return a.outcome < b.outcome;
                  return a.instance_id < b.instance_id;
              });
    for (const auto& r : sorted)
        j["records"].push_back({{"scene_id", r.scene_id},
                                {"outcome", r.outcome},
                                {"instance_id", r.instance_id},
                                {"size_hm2", r.size_hm2},
                                {"wind_mps", r.wind_mps}});
    return j;
}

inline EvaluationReport report_from_json(const nlohmann::json& j,
                                         const BinningSpec* override_bins = nullptr) {
    if (j.value("format_version", -1) != 1)
        throw DataError("unsupported evaluation format_version");
    BinningSpec bins;
    if (override_bins) {
        bins = *override_bins;
    } else {
        bins.wind_edges = j.at("wind_edges").get<std::vector<double>>();
        bins.size_edges = j.at("size_edges").get<std::vector<double>>();
    }
    EvaluationReport rep(bins);
    rep.scenes = j.at("scenes").get<long>();
    rep.px_intersection = j.at("px_intersection").get<std::size_t>();
    rep.px_union = j.at("px_union").get<std::size_t>();
    rep.px_gt = j.at("px_gt").get<std::size_t>();
    for (const auto& rj : j.at("records")) {
        InstanceRecord r;
        r.scene_id = rj.at("scene_id").get<std::string>();
        r.outcome = rj.at("outcome").get<std::string>();
        r.instance_id = rj.at("instance_id").get<int>();
        r.size_hm2 = rj.at("size_hm2").get<double>();
        r.wind_mps = rj.at("wind_mps").get<double>();
        std::size_t wb = rep.bins.wind_bin(r.wind_mps);
        std::size_t sb = rep.bins.size_bin(r.size_hm2);
        if (r.outcome == "detected") {
            ++rep.detected;
            ++rep.wind_bins[wb].detected;
            ++rep.size_bins[sb].detected;
        } else if (r.outcome == "missed") {
            ++rep.missed;
            ++rep.wind_bins[wb].missed;
            ++rep.size_bins[sb].missed;
        } else if (r.outcome == "false_alarm") {
            ++rep.false_alarms;
            ++rep.wind_bins[wb].false_alarm;
            ++rep.size_bins[sb].false_alarm;
        } else {
            throw DataError("unknown outcome '" + r.outcome + "' in evaluation");
        }
        rep.records.push_back(std::move(r));
    }
    return rep;
}

namespace detail {

inline std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace detail

// Emits summary.json, per_instance.csv, bins_wind.csv, bins_size.csv.
// Byte-stable for identical inputs.
inline void write_report(const EvaluationReport& rep, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    nlohmann::ordered_json j;
    j["scenes"] = rep.scenes;
    j["detected"] = rep.detected;
    j["missed"] = rep.missed;
    j["false_alarms"] = rep.false_alarms;
    j["detection_rate"] = rep.detection_rate();
    j["fa_per_scene"] = rep.fa_per_scene();
    j["fa_per_gt"] = rep.fa_per_gt();
    j["iou_slick"] = rep.iou_slick();
    j["iou_defined"] = rep.px_union != 0;
    j["well_detected_fraction"] = rep.well_detected_fraction();
    j["well_detected_defined"] = rep.px_gt != 0;
    j["wind_edges"] = rep.bins.wind_edges;
    j["size_edges"] = rep.bins.size_edges;
    {
        std::ofstream f(dir + "/summary.json");
        if (!f) throw IoError("cannot open for writing", dir + "/summary.json");
        f << j.dump(2) << "\n";
    }
    {
        std::ofstream f(dir + "/per_instance.csv");
        if (!f) throw IoError("cannot open for writing", dir + "/per_instance.csv");
        f << "scene_id,instance_id,outcome,size_hm2,wind_mps\n";
        auto sorted = rep.records;
        std::sort(sorted.begin(), sorted.end(),
                  [](const InstanceRecord& a, const InstanceRecord& b) {
                      if (a.scene_id != b.scene_id) return a.scene_id < b.scene_id;
                      if (a.outcome != b.outcome) return a.outcome < b.outcome;
                      return a.instance_id < b.instance_id;
                  });
        for (const auto& r : sorted)
            f << r.scene_id << ',' << r.instance_id << ',' << r.outcome << ','
              << detail::csv_num(r.size_hm2) << ',' << detail::csv_num(r.wind_mps)
              << "\n";
    }
    auto write_bins = [&](const std::string& name,
                          const std::vector<BinCounts>& counts,
                          auto label_fn) {
        std::ofstream f(dir + "/" + name);
        if (!f) throw IoError("cannot open for writing", dir + "/" + name);
        f << "bin,detected,missed,false_alarms\n";
        for (std::size_t i = 0; i < counts.size(); ++i)
            f << label_fn(i) << ',' << counts[i].detected << ',' << counts[i].missed
              << ',' << counts[i].false_alarm << "\n";
    };
    write_bins("bins_wind.csv", rep.wind_bins,
               [&](std::size_t i) { return rep.bins.wind_bin_label(i); });
    write_bins("bins_size.csv", rep.size_bins,
               [&](std::size_t i) { return rep.bins.size_bin_label(i); });
}

}  // namespace sarslick

#endif

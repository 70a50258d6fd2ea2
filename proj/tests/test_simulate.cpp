#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sarslick/simulate.hpp"

using namespace sarslick;

namespace {

// Independent oracle for the contrast window: piecewise definition written
// out directly from the window knots (zero below 1.5 and above 10 m/s,
// plateau on [3, 6], raised-cosine ramps between).
double contrast_oracle(double v, double dmax) {
    if (v <= 1.5 || v >= 10.0) return 0.0;
    if (v < 3.0) {
        double t = (v - 1.5) / 1.5;
        return dmax * (1.0 - std::cos(M_PI * t)) / 2.0;
    }
    if (v <= 6.0) return dmax;
    double t = (v - 6.0) / 4.0;
    return dmax * (1.0 + std::cos(M_PI * t)) / 2.0;
}

double mask_mean(const RasterGrid& g, const BinaryMask& m, bool inside) {
    double s = 0.0;
    std::size_t n = 0;
    for (int r = 0; r < g.height; ++r)
        for (int c = 0; c < g.width; ++c)
            if (m.at(r, c) == inside) {
                s += g.at(r, c);
                ++n;
            }
    REQUIRE(n > 0);
    return s / static_cast<double>(n);
}

SceneConfig flat_scene(double incidence = 35.0) {
    SceneConfig cfg;
    cfg.meta.scene_id = "test";
    cfg.meta.incidence_near = incidence;
    cfg.meta.incidence_far = incidence;
    return cfg;
}

WindField uniform_wind(int w, int h, float speed, float dir = 0.0f) {
    WindField wf;
    wf.speed = RasterGrid(w, h, speed);
    wf.direction = RasterGrid(w, h, dir);
    return wf;
}

}  // namespace

TEST_CASE("contrast window hits the published knots") {
    CHECK(damping_contrast(0.0, 6.0) == 0.0);
    CHECK(damping_contrast(1.0, 6.0) == 0.0);
    CHECK(damping_contrast(1.5, 6.0) == 0.0);
    CHECK_THAT(damping_contrast(2.25, 6.0), Catch::Matchers::WithinAbs(3.0, 1e-12));
    CHECK(damping_contrast(3.0, 6.0) == 6.0);
    CHECK(damping_contrast(4.5, 6.0) == 6.0);
    CHECK(damping_contrast(6.0, 6.0) == 6.0);
    CHECK_THAT(damping_contrast(8.0, 6.0), Catch::Matchers::WithinAbs(3.0, 1e-12));
    CHECK(damping_contrast(10.0, 6.0) == 0.0);
    CHECK(damping_contrast(12.0, 6.0) == 0.0);
    CHECK_THROWS_AS(damping_contrast(-0.1, 6.0), DomainError);
}

TEST_CASE("contrast window matches the oracle and is continuous") {
    for (double v = 0.0; v <= 12.0; v += 0.01)
        CHECK_THAT(damping_contrast(v, 4.0),
                   Catch::Matchers::WithinAbs(contrast_oracle(v, 4.0), 1e-12));
    // continuity at the window knots
    for (double knot : {1.5, 3.0, 6.0, 10.0}) {
        double lo = damping_contrast(knot - 1e-9, 6.0);
        double hi = damping_contrast(knot + 1e-9, 6.0);
        CHECK_THAT(lo, Catch::Matchers::WithinAbs(hi, 1e-6));
    }
}

TEST_CASE("wind field is deterministic in the seed") {
    WindParams p;
    auto a = gen_wind_field(128, 96, 42, p);
    auto b = gen_wind_field(128, 96, 42, p);
    auto c = gen_wind_field(128, 96, 43, p);
    CHECK(a.speed.values == b.speed.values);
    CHECK(a.direction.values == b.direction.values);
    CHECK(a.speed.values != c.speed.values);
    CHECK(a.speed.width == 128);
    CHECK(a.speed.height == 96);
    CHECK(a.provenance == WindProvenance::SimulatedTruth);
}

TEST_CASE("zero variance collapses to a uniform field") {
    WindParams p;
    p.mean_speed = 6.5;
    p.variance = 0.0;
    auto wf = gen_wind_field(64, 64, 1, p);
    for (float v : wf.speed.values) CHECK(v == 6.5f);
}

TEST_CASE("wind field statistics track the requested moments") {
    WindParams p;
    p.mean_speed = 5.0;
    p.variance = 0.25;
    p.correlation_length_px = 16.0;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        auto wf = gen_wind_field(512, 512, seed, p);
        double s = 0.0, s2 = 0.0;
        for (float v : wf.speed.values) {
            s += v;
            s2 += static_cast<double>(v) * v;
        }
        double n = static_cast<double>(wf.speed.size());
        double mean = s / n;
        double sd = std::sqrt(s2 / n - mean * mean);
        CHECK_THAT(mean, Catch::Matchers::WithinAbs(5.0, 0.2));
        CHECK_THAT(sd, Catch::Matchers::WithinAbs(0.5, 0.12));
    }
}

TEST_CASE("wind direction stays in [0, 360) around the requested mean") {
    WindParams p;
    p.mean_direction_deg = 200.0;
    p.direction_spread_deg = 10.0;
    auto wf = gen_wind_field(256, 256, 9, p);
    double s = 0.0;
    for (float d : wf.direction.values) {
        CHECK(d >= 0.0f);
        CHECK(d < 360.0f);
        s += d;
    }
    CHECK_THAT(s / static_cast<double>(wf.direction.size()),
               Catch::Matchers::WithinAbs(200.0, 3.0));
}

TEST_CASE("low-wind pockets appear with the configured count and area") {
    WindParams p;
    p.mean_speed = 2.2;
    p.variance = 0.01;
    p.correlation_length_px = 24.0;
    p.low_wind_pockets = 2;
    p.pocket_area_hm2 = 8.0;
    for (std::uint64_t seed : {10ULL, 11ULL, 12ULL}) {
        auto wf = gen_wind_field(512, 512, seed, p);
        BinaryMask low(512, 512);
        for (int r = 0; r < 512; ++r)
            for (int c = 0; c < 512; ++c)
                low.set(r, c, wf.speed.at(r, c) < 1.5f);
        auto comps = instances_from_mask(low, 10.0, 8);
        REQUIRE(comps.size() == 2);
        for (const auto& inst : comps)
            CHECK_THAT(inst.area_hm2, Catch::Matchers::WithinAbs(8.0, 2.0));
    }
}

TEST_CASE("pocket configuration errors are rejected") {
    WindParams p;
    p.mean_speed = 1.2;
    p.low_wind_pockets = 1;
    CHECK_THROWS_AS(gen_wind_field(128, 128, 1, p), ConfigError);

    WindParams q;
    q.mean_speed = 5.0;
    q.low_wind_pockets = 4;
    q.pocket_area_hm2 = 300.0;  // 4 * 30000 px in a 128x128 scene
    CHECK_THROWS_MATCHES(gen_wind_field(128, 128, 1, q), ConfigError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("50%")));

    WindParams r;
    r.mean_speed = 16.0;
    CHECK_THROWS_AS(gen_wind_field(32, 32, 1, r), ConfigError);
}

TEST_CASE("slick shapes land within ten percent of the target area") {
    ShapeBounds b{512, 512, 10.0};
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        for (SlickKind kind : {SlickKind::Spill, SlickKind::Seep}) {
            SlickSpec s;
            s.shape_seed = seed;
            s.centroid = {256, 256};
            s.target_area_hm2 = 1.0;  // 100 px at 10 m spacing
            s.kind = kind;
            auto px = gen_slick_shape(s, b);
            CHECK(px.size() >= 90);
            CHECK(px.size() <= 110);
        }
    }
}

TEST_CASE("slick shapes are a single 8-connected region inside bounds") {
    ShapeBounds b{256, 256, 10.0};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SlickSpec s;
        s.shape_seed = seed;
        s.centroid = {128, 128};
        s.target_area_hm2 = 2.0;
        s.kind = seed % 2 ? SlickKind::Seep : SlickKind::Spill;
        auto px = gen_slick_shape(s, b);
        BinaryMask m(256, 256);
        for (const Pixel& p : px) {
            REQUIRE(m.in_bounds(p.row, p.col));
            m.set(p.row, p.col, true);
        }
        CHECK(instances_from_mask(m, 10.0, 8).size() == 1);
    }
}

TEST_CASE("spill bounding boxes stay elongated") {
    ShapeBounds b{512, 512, 10.0};
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        SlickSpec s;
        s.shape_seed = seed;
        s.centroid = {256, 256};
        s.target_area_hm2 = 1.0;
        s.kind = SlickKind::Spill;
        auto px = gen_slick_shape(s, b);
        int r0 = b.height, r1 = -1, c0 = b.width, c1 = -1;
        for (const Pixel& p : px) {
            r0 = std::min(r0, p.row);
            r1 = std::max(r1, p.row);
            c0 = std::min(c0, p.col);
            c1 = std::max(c1, p.col);
        }
        double lo = std::min(r1 - r0 + 1, c1 - c0 + 1);
        double hi = std::max(r1 - r0 + 1, c1 - c0 + 1);
        CHECK(hi / lo >= 2.0);
    }
}

TEST_CASE("oversized slick target is a config error") {
    ShapeBounds b{64, 64, 10.0};
    SlickSpec s;
    s.centroid = {32, 32};
    s.target_area_hm2 = 100.0;  // 10000 px in a 4096 px scene
    CHECK_THROWS_AS(gen_slick_shape(s, b), ConfigError);
}

TEST_CASE("rendering is deterministic in the seed") {
    auto cfg = flat_scene();
    auto wf = uniform_wind(64, 64, 5.0f);
    SlickSpec s;
    s.centroid = {32, 32};
    s.target_area_hm2 = 0.5;
    auto [a, ga] = render_scene(cfg, wf, {s}, 7);
    auto [b, gb] = render_scene(cfg, wf, {s}, 7);
    auto [c, gc] = render_scene(cfg, wf, {s}, 8);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
    CHECK(ga.semantic_mask.bits == gb.semantic_mask.bits);
}

TEST_CASE("speckle matches the configured number of looks") {
    auto cfg = flat_scene();
    cfg.speckle_looks = 4.4;
    auto wf = uniform_wind(384, 384, 7.0f);
    auto [sig, gt] = render_scene(cfg, wf, {}, 3);
    double s = 0.0, s2 = 0.0;
    for (float v : sig.values) {
        s += v;
        s2 += static_cast<double>(v) * v;
    }
    double n = static_cast<double>(sig.size());
    REQUIRE(n >= 1e5);
    double mean = s / n;
    double var = s2 / n - mean * mean;
    double ratio = var / (mean * mean);
    CHECK(ratio > 0.9 / 4.4);
    CHECK(ratio < 1.1 / 4.4);
}

TEST_CASE("slick contrast follows the damping window") {
    auto cfg = flat_scene();
    SlickSpec s;
    s.centroid = {128, 128};
    s.target_area_hm2 = 5.0;
    s.damping_max_db = 6.0;

    auto contrast_at = [&](float speed) {
        auto wf = uniform_wind(256, 256, speed);
        auto [sig, gt] = render_scene(cfg, wf, {s}, 77);
        REQUIRE(gt.instances.size() == 1);
        double inside = mask_mean(sig, gt.semantic_mask, true);
        double outside = mask_mean(sig, gt.semantic_mask, false);
        return 10.0 * std::log10(outside / inside);
    };

    CHECK_THAT(contrast_at(1.0f), Catch::Matchers::WithinAbs(0.0, 0.3));
    CHECK_THAT(contrast_at(4.5f), Catch::Matchers::WithinAbs(6.0, 0.3));
    CHECK_THAT(contrast_at(12.0f), Catch::Matchers::WithinAbs(0.0, 0.3));
}

TEST_CASE("low-wind regions become lookalikes, never slicks") {
    auto cfg = flat_scene();
    WindParams p;
    p.mean_speed = 2.2;
    p.variance = 0.01;
    p.correlation_length_px = 24.0;
    p.low_wind_pockets = 1;
    p.pocket_area_hm2 = 8.0;
    auto wf = gen_wind_field(256, 256, 21, p);
    SlickSpec s;
    s.centroid = {40, 40};
    s.target_area_hm2 = 1.0;
    auto [sig, gt] = render_scene(cfg, wf, {s}, 5);

    CHECK(gt.lookalike_mask.count() > 0);
    for (std::size_t i = 0; i < gt.lookalike_mask.bits.size(); ++i)
        CHECK((gt.lookalike_mask.bits[i] & gt.semantic_mask.bits[i]) == 0);
    // lookalike pixels are exactly the sub-threshold wind pixels off-slick
    for (int r = 0; r < 256; ++r)
        for (int c = 0; c < 256; ++c) {
            bool expect = wf.speed.at(r, c) < 1.5f && !gt.semantic_mask.at(r, c);
            REQUIRE(gt.lookalike_mask.at(r, c) == expect);
        }
}

TEST_CASE("ground truth instances partition the semantic mask") {
    auto cfg = flat_scene();
    auto wf = uniform_wind(256, 256, 5.0f);
    std::vector<SlickSpec> specs;
    for (int i = 0; i < 3; ++i) {
        SlickSpec s;
        s.shape_seed = 100 + i;
        s.centroid = {60 + 70 * i, 60 + 70 * i};
        s.target_area_hm2 = 1.5;
        s.kind = i == 1 ? SlickKind::Seep : SlickKind::Spill;
        specs.push_back(s);
    }
    auto [sig, gt] = render_scene(cfg, wf, specs, 9);

    REQUIRE(gt.instances.size() == gt.instance_kinds.size());
    BinaryMask acc(256, 256);
    for (std::size_t i = 0; i < gt.instances.size(); ++i) {
        CHECK(gt.instances[i].instance_id == static_cast<int>(i) + 1);
        CHECK(gt.instances[i].source == InstanceSource::GroundTruth);
        for (const Pixel& p : gt.instances[i].pixel_set) {
            CHECK(!acc.at(p.row, p.col));  // disjoint
            acc.set(p.row, p.col, true);
        }
    }
    CHECK(acc.bits == gt.semantic_mask.bits);  // exact cover
}

TEST_CASE("scene rendering validates its configuration") {
    auto cfg = flat_scene();
    cfg.speckle_looks = 0.5;
    auto wf = uniform_wind(32, 32, 5.0f);
    CHECK_THROWS_AS(render_scene(cfg, wf, {}, 1), ConfigError);

    auto bad = flat_scene();
    bad.gmf_name = "nope";
    CHECK_THROWS_AS(render_scene(bad, wf, {}, 1), ConfigError);

    WindField mismatched;
    mismatched.speed = RasterGrid(32, 32, 5.0f);
    mismatched.direction = RasterGrid(16, 32, 0.0f);
    CHECK_THROWS_AS(render_scene(flat_scene(), mismatched, {}, 1), DataError);
}

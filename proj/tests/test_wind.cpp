#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "sarslick/wind.hpp"

using namespace sarslick;

namespace {

SceneMetadata flat_meta(double incidence = 35.0) {
    SceneMetadata m;
    m.scene_id = "w";
    m.incidence_near = incidence;
    m.incidence_far = incidence;
    return m;
}

// Brute-force neighborhood oracle: scan every pixel of the grid and test
// the Euclidean pixel distance to every instance pixel directly.
double neighborhood_oracle(const std::vector<Pixel>& inst,
                           const WindField& wind, const BinaryMask& excl,
                           double radius_m) {
    const RasterGrid& spd = wind.speed;
    const int radius_px =
        static_cast<int>(std::lround(radius_m / spd.pixel_spacing));
    double sum = 0.0;
    std::size_t n = 0;
    for (int r = 0; r < spd.height; ++r)
        for (int c = 0; c < spd.width; ++c) {
            bool near = false;
            for (const Pixel& p : inst) {
                int dr = r - p.row, dc = c - p.col;
                if (dr * dr + dc * dc <= radius_px * radius_px) {
                    near = true;
                    break;
                }
            }
            if (!near || excl.at(r, c)) continue;
            float v = spd.at(r, c);
            if (spd.is_nodata(v)) continue;
            sum += v;
            ++n;
        }
    REQUIRE(n > 0);
    return sum / static_cast<double>(n);
}

}  // namespace

TEST_CASE("retrieval round-trips a speckle-free scene") {
    auto gmf = find_gmf("cmod5n");
    auto lut = InversionLut::make_default(gmf, 30.0, 40.0);
    auto meta = flat_meta(35.0);

    WindParams p;
    p.mean_speed = 6.0;
    p.variance = 0.2;
    p.correlation_length_px = 8.0;
    auto truth = gen_wind_field(96, 96, 5, p);

    RasterGrid sigma0(96, 96, 0.0f);
    for (int r = 0; r < 96; ++r)
        for (int c = 0; c < 96; ++c)
            sigma0.at(r, c) = static_cast<float>(
                gmf->forward({truth.speed.at(r, c), truth.direction.at(r, c),
                              35.0}).sigma0);

    WindRetrievalSummary summary;
    auto retrieved = retrieve_wind(sigma0, truth.direction, meta, lut, &summary);
    CHECK(retrieved.provenance == WindProvenance::Retrieved);
    CHECK(summary.nodata == 0);
    double worst = 0.0;
    for (std::size_t i = 0; i < retrieved.speed.values.size(); ++i)
        worst = std::max(worst, std::abs(double(retrieved.speed.values[i]) -
                                         double(truth.speed.values[i])));
    CHECK(worst <= 0.1);
}

TEST_CASE("LUT retrieval matches the exact bisection path") {
    auto gmf = find_gmf("cmod5n");
    auto lut = InversionLut::make_default(gmf, 30.0, 40.0);
    auto meta = flat_meta();
    meta.incidence_near = 30.0;
    meta.incidence_far = 40.0;

    std::mt19937_64 eng(3);
    std::uniform_real_distribution<float> us(0.005f, 0.3f), ud(0.0f, 360.0f);
    RasterGrid sigma0(64, 64, 0.0f);
    RasterGrid dir(64, 64, 0.0f);
    for (auto& v : sigma0.values) v = us(eng);
    for (auto& v : dir.values) v = ud(eng);

    auto a = retrieve_wind(sigma0, dir, meta, lut);
    auto b = retrieve_wind_exact(sigma0, dir, meta, *gmf);
    for (std::size_t i = 0; i < a.speed.values.size(); ++i) {
        double va = a.speed.values[i], vb = b.speed.values[i];
        // compare inside the validated band of the default table
        if (vb > 1.0 && vb < 20.0)
            CHECK_THAT(va, Catch::Matchers::WithinAbs(vb, 0.1));
    }
}

TEST_CASE("nodata pixels propagate and are counted") {
    auto gmf = find_gmf("cmod5n");
    auto lut = InversionLut::make_default(gmf, 30.0, 40.0);
    RasterGrid sigma0(8, 8, 0.1f);
    sigma0.at(2, 3) = std::numeric_limits<float>::quiet_NaN();
    sigma0.at(5, 5) = std::numeric_limits<float>::quiet_NaN();
    RasterGrid dir(8, 8, 90.0f);
    WindRetrievalSummary summary;
    auto wf = retrieve_wind(sigma0, dir, flat_meta(), lut, &summary);
    CHECK(summary.nodata == 2);
    CHECK(std::isnan(wf.speed.at(2, 3)));
    CHECK(std::isnan(wf.speed.at(5, 5)));
    CHECK(!std::isnan(wf.speed.at(0, 0)));
}

TEST_CASE("clamped pixels are counted") {
    auto gmf = find_gmf("cmod5n");
    RasterGrid sigma0(4, 4, 1e-6f);
    sigma0.at(0, 0) = 10.0f;  // far above any achievable sigma0
    RasterGrid dir(4, 4, 0.0f);
    WindRetrievalSummary summary;
    retrieve_wind_exact(sigma0, dir, flat_meta(), *gmf, &summary);
    CHECK(summary.clamped_low == 15);
    CHECK(summary.clamped_high == 1);
}

TEST_CASE("dimension mismatch is a data error") {
    auto gmf = find_gmf("cmod5n");
    auto lut = InversionLut::make_default(gmf, 30.0, 40.0);
    RasterGrid sigma0(8, 8, 0.1f);
    RasterGrid dir(8, 4, 0.0f);
    CHECK_THROWS_AS(retrieve_wind(sigma0, dir, flat_meta(), lut), DataError);
}

TEST_CASE("neighborhood wind over a uniform field is the field value") {
    WindField wind;
    wind.speed = RasterGrid(64, 64, 4.25f);
    wind.direction = RasterGrid(64, 64, 0.0f);
    BinaryMask slicks(64, 64);
    std::vector<Pixel> inst{{30, 30}, {30, 31}, {31, 30}};
    for (const Pixel& p : inst) slicks.set(p.row, p.col, true);
    auto ctx = slick_neighborhood_wind(inst, wind, slicks, 50.0, 7);
    CHECK(ctx.instance_id == 7);
    CHECK_THAT(ctx.mean_neighborhood_speed,
               Catch::Matchers::WithinAbs(4.25, 1e-6));
    CHECK(ctx.radius_m == 50.0);
}

TEST_CASE("neighborhood wind matches a brute-force oracle") {
    std::mt19937_64 eng(17);
    std::uniform_real_distribution<float> us(1.0f, 9.0f);
    for (int trial = 0; trial < 20; ++trial) {
        WindField wind;
        wind.speed = RasterGrid(48, 48, 0.0f);
        wind.direction = RasterGrid(48, 48, 0.0f);
        for (auto& v : wind.speed.values) v = us(eng);

        BinaryMask slicks(48, 48);
        std::vector<Pixel> inst;
        int r0 = 5 + static_cast<int>(eng() % 35);
        int c0 = 5 + static_cast<int>(eng() % 35);
        for (int i = 0; i < 1 + static_cast<int>(eng() % 12); ++i) {
            Pixel p{std::clamp(r0 + static_cast<int>(eng() % 5) - 2, 0, 47),
                    std::clamp(c0 + static_cast<int>(eng() % 5) - 2, 0, 47)};
            if (!slicks.at(p.row, p.col)) {
                inst.push_back(p);
                slicks.set(p.row, p.col, true);
            }
        }
        // a second, unrelated slick also excluded from the context
        slicks.set(std::clamp(r0 + 4, 0, 47), std::clamp(c0 + 4, 0, 47), true);

        auto ctx = slick_neighborhood_wind(inst, wind, slicks, 50.0);
        double oracle = neighborhood_oracle(inst, wind, slicks, 50.0);
        CHECK_THAT(ctx.mean_neighborhood_speed,
                   Catch::Matchers::WithinAbs(oracle, 1e-9));
    }
}

TEST_CASE("neighborhood clips at the scene border") {
    WindField wind;
    wind.speed = RasterGrid(32, 32, 3.0f);
    wind.direction = RasterGrid(32, 32, 0.0f);
    BinaryMask slicks(32, 32);
    std::vector<Pixel> corner{{0, 0}};
    slicks.set(0, 0, true);
    auto ctx = slick_neighborhood_wind(corner, wind, slicks, 50.0);
    // quarter disk minus the instance pixel itself
    auto full = disk_offsets(5).size();
    CHECK(ctx.neighborhood_pixel_count < full);
    CHECK_THAT(ctx.mean_neighborhood_speed, Catch::Matchers::WithinAbs(3.0, 1e-6));
}

TEST_CASE("damped pixels never contaminate the neighborhood mean") {
    WindField wind;
    wind.speed = RasterGrid(32, 32, 5.0f);
    wind.direction = RasterGrid(32, 32, 0.0f);
    BinaryMask slicks(32, 32);
    std::vector<Pixel> inst;
    // slick block with artificially low wind values on it
    for (int r = 14; r <= 17; ++r)
        for (int c = 14; c <= 17; ++c) {
            inst.push_back({r, c});
            slicks.set(r, c, true);
            wind.speed.at(r, c) = 0.1f;
        }
    auto ctx = slick_neighborhood_wind(inst, wind, slicks, 50.0);
    CHECK_THAT(ctx.mean_neighborhood_speed, Catch::Matchers::WithinAbs(5.0, 1e-6));
}

TEST_CASE("neighborhood wind is shift equivariant") {
    std::mt19937_64 eng(29);
    std::uniform_real_distribution<float> us(1.0f, 9.0f);
    RasterGrid base(40, 40, 0.0f);
    for (auto& v : base.values) v = us(eng);

    auto eval_at = [&](int dr, int dc) {
        WindField wind;
        wind.speed = RasterGrid(40, 40, 0.0f);
        wind.direction = RasterGrid(40, 40, 0.0f);
        for (int r = 0; r < 40; ++r)
            for (int c = 0; c < 40; ++c) {
                int sr = (r - dr + 40) % 40, sc = (c - dc + 40) % 40;
                wind.speed.at(r, c) = base.at(sr, sc);
            }
        BinaryMask slicks(40, 40);
        std::vector<Pixel> inst{{15 + dr, 15 + dc}, {16 + dr, 15 + dc}};
        for (const Pixel& p : inst) slicks.set(p.row, p.col, true);
        return slick_neighborhood_wind(inst, wind, slicks, 50.0)
            .mean_neighborhood_speed;
    };
    // interior shifts keep the neighborhood inside the scene
    CHECK_THAT(eval_at(0, 0), Catch::Matchers::WithinAbs(eval_at(7, 3), 1e-9));
    CHECK_THAT(eval_at(0, 0), Catch::Matchers::WithinAbs(eval_at(11, 13), 1e-9));
}

TEST_CASE("fully excluded neighborhood is a data error") {
    WindField wind;
    wind.speed = RasterGrid(16, 16, 5.0f);
    wind.direction = RasterGrid(16, 16, 0.0f);
    BinaryMask everything(16, 16, true);
    std::vector<Pixel> inst{{8, 8}};
    CHECK_THROWS_MATCHES(slick_neighborhood_wind(inst, wind, everything, 50.0),
                         DataError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("neighborhood")));
    CHECK_THROWS_AS(slick_neighborhood_wind({}, wind, everything, 50.0),
                    DataError);
    BinaryMask none(16, 16);
    CHECK_THROWS_AS(slick_neighborhood_wind(inst, wind, none, 0.0), ConfigError);
}

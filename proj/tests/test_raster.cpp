#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "sarslick/raster.hpp"

using namespace sarslick;
namespace fs = std::filesystem;

namespace {

std::string tmp_base(const std::string& name) {
    auto dir = fs::temp_directory_path() / "sarslick_raster_tests";
    fs::create_directories(dir);
    return (dir / name).string();
}

SceneMetadata test_meta() {
    SceneMetadata m;
    m.scene_id = "test";
    m.incidence_near = 30.0;
    m.incidence_far = 40.0;
    return m;
}

}  // namespace

TEST_CASE("2x2 grid round-trips bit-exactly") {
    RasterGrid g(2, 2);
    g.values = {0.0f, 1.0f, 2.0f, 3.0f};
    auto base = tmp_base("roundtrip");
    write_raster(g, test_meta(), base);

    CHECK(fs::file_size(base + ".bin") == 16);

    auto [r, m] = read_raster(base);
    CHECK(r.width == 2);
    CHECK(r.height == 2);
    CHECK(r.values == g.values);
    CHECK(m.scene_id == "test");
    CHECK(m.radar_frequency == kRadarFrequencyGHz);
}

TEST_CASE("NaN nodata survives the round trip") {
    RasterGrid g(3, 1);
    g.values = {1.0f, std::numeric_limits<float>::quiet_NaN(), 3.0f};
    auto base = tmp_base("nan");
    write_raster(g, test_meta(), base);
    auto [r, m] = read_raster(base);
    CHECK(r.values[0] == 1.0f);
    CHECK(std::isnan(r.values[1]));
    CHECK(r.values[2] == 3.0f);
    CHECK(std::isnan(r.nodata_value));
}

TEST_CASE("sidecar records pixel spacing") {
    RasterGrid g(512, 512, 0.5f, 10.0);
    auto base = tmp_base("crop512");
    write_raster(g, test_meta(), base);
    std::ifstream f(base + ".json");
    nlohmann::json j;
    f >> j;
    CHECK(j["pixel_spacing"].get<double>() == 10.0);
    CHECK(j["width"] == 512);
    CHECK(j["format_version"] == 1);
}

TEST_CASE("missing sidecar is a structured error") {
    auto base = tmp_base("missing_sidecar");
    {
        std::ofstream f(base + ".bin", std::ios::binary);
        f << "x";
    }
    fs::remove(base + ".json");
    CHECK_THROWS_MATCHES(read_raster(base), IoError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("sidecar not found")));
}

TEST_CASE("truncated payload names expected vs actual byte count") {
    RasterGrid g(4, 4, 1.0f);
    auto base = tmp_base("truncated");
    write_raster(g, test_meta(), base);
    fs::resize_file(base + ".bin", 10);
    try {
        read_raster(base);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        std::string msg = e.what();
        CHECK(msg.find("64") != std::string::npos);
        CHECK(msg.find("10") != std::string::npos);
    }
}

TEST_CASE("unknown format_version is rejected") {
    RasterGrid g(2, 2, 1.0f);
    auto base = tmp_base("badversion");
    write_raster(g, test_meta(), base);
    nlohmann::json j;
    {
        std::ifstream f(base + ".json");
        f >> j;
    }
    j["format_version"] = 99;
    {
        std::ofstream f(base + ".json");
        f << j.dump();
    }
    CHECK_THROWS_MATCHES(read_raster(base), DataError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("format_version")));
}

TEST_CASE("random grids round-trip bit-exactly, NaN positions included") {
    std::mt19937_64 eng(7);
    std::uniform_real_distribution<float> ur(-50.0f, 50.0f);
    for (int trial = 0; trial < 10; ++trial) {
        int w = 1 + static_cast<int>(eng() % 40);
        int h = 1 + static_cast<int>(eng() % 40);
        RasterGrid g(w, h);
        for (auto& v : g.values) {
            v = ur(eng);
            if (eng() % 17 == 0) v = std::numeric_limits<float>::quiet_NaN();
        }
        auto base = tmp_base("prop");
        write_raster(g, test_meta(), base);
        auto [r, m] = read_raster(base);
        REQUIRE(r.values.size() == g.values.size());
        for (std::size_t i = 0; i < g.values.size(); ++i) {
            if (std::isnan(g.values[i]))
                CHECK(std::isnan(r.values[i]));
            else
                CHECK(r.values[i] == g.values[i]);
        }
    }
}

TEST_CASE("area conversion is exact for integer pixel counts") {
    CHECK(area_hm2(100, 10.0) == 1.0);
    CHECK(area_hm2(1, 10.0) == 0.01);
    CHECK(area_hm2(12345, 10.0) == 123.45);
}

TEST_CASE("mask container validates {0,1} payload") {
    RasterGrid g(2, 2, 0.0f);
    g.values = {0.0f, 1.0f, 0.5f, 1.0f};
    try {
        mask_from_grid(g);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("1 pixel") != std::string::npos);
    }
    g.values[2] = 0.0f;
    auto m = mask_from_grid(g);
    CHECK(m.count() == 2);
    auto back = mask_from_grid(grid_from_mask(m));
    CHECK(back.bits == m.bits);
}

TEST_CASE("PNG export clamps and maps linearly") {
    const double lo = -30.0, hi = -10.0;
    auto uniform = [](double db_value) {
        return RasterGrid(8, 8, static_cast<float>(std::pow(10.0, db_value / 10.0)));
    };

    auto at_floor = render_db_gray(uniform(lo), lo, hi);
    for (auto p : at_floor) CHECK(p == 0);
    auto below_floor = render_db_gray(uniform(-40.0), lo, hi);
    for (auto p : below_floor) CHECK(p == 0);
    auto at_ceiling = render_db_gray(uniform(-5.0), lo, hi);
    for (auto p : at_ceiling) CHECK(p == 255);
    auto at_mid = render_db_gray(uniform(-20.0), lo, hi);
    for (auto p : at_mid) CHECK(std::abs(int(p) - 128) <= 1);

    RasterGrid g(4, 4, 0.01f);
    auto path = tmp_base("img") + ".png";
    export_png(g, -30.0, -10.0, path);
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    unsigned char sig[8];
    f.read(reinterpret_cast<char*>(sig), 8);
    CHECK(sig[1] == 'P');
    CHECK(sig[2] == 'N');
    CHECK(sig[3] == 'G');
    CHECK_THROWS_AS(export_png(g, -10.0, -30.0, path), ConfigError);
}

TEST_CASE("dimension overflow is rejected") {
    RasterGrid g;
    g.width = 70000;
    g.height = 70000;
    CHECK_THROWS_AS(g.validate(), DataError);
}

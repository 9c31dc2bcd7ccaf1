#include <doctest.h>

#include <string>

#include "uavirs/scenario.hpp"

using namespace uavirs;

TEST_CASE("default scenario validates and round-trips bit-exactly") {
    ScenarioConfig cfg = default_scenario();
    validate_scenario(cfg);
    const std::string once = serialize_scenario(cfg);
    ScenarioConfig back = parse_scenario(once);
    CHECK(serialize_scenario(back) == once);
    CHECK(back.uav.altitude_m == cfg.uav.altitude_m);
    CHECK(back.channel.noise_psd_w_per_hz == cfg.channel.noise_psd_w_per_hz);
    CHECK(back.ues.size() == cfg.ues.size());
}

TEST_CASE("noise figure conversion") {
    const double w = dbm_per_hz_to_w_per_hz(-174.0);
    CHECK(w == doctest::Approx(3.9810717055349695e-21).epsilon(1e-12));
    CHECK(w_per_hz_to_dbm_per_hz(w) == doctest::Approx(-174.0).epsilon(1e-12));
}

TEST_CASE("frozen elevation defaults and overrides") {
    UeSpec ue;
    IrsSpec irs;
    CHECK(effective_ue_elevation_deg(ue) == 60.0);
    CHECK(effective_irs_elevation_deg(irs) == 54.2);
    ue.fixed_elevation_deg = 75.0;
    irs.fixed_elevation_deg = 40.0;
    CHECK(effective_ue_elevation_deg(ue) == 75.0);
    CHECK(effective_irs_elevation_deg(irs) == 40.0);
}

TEST_CASE("parse rejects unknown keys naming the offender") {
    CHECK_THROWS_WITH_AS(parse_scenario(R"({"uav": {"bogus_key": 1}})"),
                         doctest::Contains("bogus_key"), ScenarioError);
}

TEST_CASE("parse requires at least one user") {
    CHECK_THROWS_WITH_AS(parse_scenario(R"({"ues": []})"),
                         doctest::Contains("ues"), ScenarioError);
}

TEST_CASE("parse reports the offending field on type mismatch") {
    CHECK_THROWS_WITH_AS(
        parse_scenario(R"({"uav": {"altitude_m": "high"}})"),
        doctest::Contains("altitude_m"), ScenarioError);
}

TEST_CASE("validation rejects out-of-range values") {
    ScenarioConfig cfg = default_scenario();
    SUBCASE("blocked-link attenuation at or above one") {
        cfg.channel.nlos_attenuation = 1.0;
        CHECK_THROWS_AS(validate_scenario(cfg), ScenarioError);
    }
    SUBCASE("surface above the flight altitude") {
        cfg.irss.push_back({});
        cfg.irss.back().height_m = cfg.uav.altitude_m + 1.0;
        CHECK_THROWS_AS(validate_scenario(cfg), ScenarioError);
    }
    SUBCASE("nonpositive speed cap") {
        cfg.uav.v_max_mps = 0.0;
        CHECK_THROWS_AS(validate_scenario(cfg), ScenarioError);
    }
    SUBCASE("negative data quota") {
        cfg.ues[0].data_bits = -1.0;
        CHECK_THROWS_AS(validate_scenario(cfg), ScenarioError);
    }
    SUBCASE("frozen elevation outside 0..90") {
        cfg.ues[0].fixed_elevation_deg = 120.0;
        CHECK_THROWS_AS(validate_scenario(cfg), ScenarioError);
    }
}

TEST_CASE("per-node overrides survive a round trip") {
    ScenarioConfig cfg = default_scenario();
    cfg.irss.push_back({});
    cfg.irss.back().xy_m = {40.0, 60.0};
    cfg.irss.back().fixed_elevation_deg = 47.5;
    cfg.ues[0].fixed_elevation_deg = 70.0;
    cfg.channel.data_margin_bits = 128.0;
    ScenarioConfig back = parse_scenario(serialize_scenario(cfg));
    REQUIRE(back.irss.size() == 2);
    CHECK(back.irss[1].fixed_elevation_deg.value() == 47.5);
    CHECK(!back.irss[0].fixed_elevation_deg.has_value());
    CHECK(back.ues[0].fixed_elevation_deg.value() == 70.0);
    CHECK(back.channel.data_margin_bits == 128.0);
}

TEST_CASE("noise authored in dBm per hertz lands in watts") {
    ScenarioConfig cfg = parse_scenario(
        R"({"ues": [{"xy_m": [1, 1]}], "channel": {"noise_dbm_per_hz": -170}})");
    CHECK(cfg.channel.noise_psd_w_per_hz ==
          doctest::Approx(1e-20).epsilon(1e-12));
}

#include <doctest.h>

#include <cmath>
#include <complex>

#include "uavirs/channel.hpp"
#include "uavirs/rate.hpp"

using namespace uavirs;
using namespace uavirs::channel;

TEST_CASE("link geometry from a 5-12-13 style triangle") {
    LinkGeometry g = link_geometry({0.0, 0.0}, 0.0, {3.0, 4.0}, 12.0);
    CHECK(g.distance_m == doctest::Approx(13.0).epsilon(1e-12));
    CHECK(g.elevation_deg ==
          doctest::Approx(std::asin(12.0 / 13.0) * 180.0 / M_PI).epsilon(1e-12));
}

TEST_CASE("geometry rejects degenerate placements") {
    CHECK_THROWS(link_geometry({0.0, 0.0}, 10.0, {0.0, 0.0}, 10.0));
    CHECK_THROWS(link_geometry({1.0, 1.0}, 20.0, {5.0, 5.0}, 10.0));
}

TEST_CASE("line of sight probability at the frozen user elevation") {
    CHECK(los_probability(60.0, 30.0, 0.15) ==
          doctest::Approx(0.7500354).epsilon(1e-5));
    CHECK(los_probability(90.0, 30.0, 0.15) ==
          doctest::Approx(0.9963100).epsilon(1e-5));
    CHECK(los_probability(70.0, 30.0, 0.15) > los_probability(60.0, 30.0, 0.15));
}

TEST_CASE("small-scale magnitude mean matches the closed form") {
    // Monte Carlo over the sampler against the analytic Rician mean; the two
    // implementations share nothing beyond the distribution definition.
    for (double kappa : {0.0, 5.0, 30.0}) {
        rng::Substream stream(77, static_cast<std::uint64_t>(kappa));
        double mag = 0.0, power = 0.0;
        const int n = 200000;
        for (int i = 0; i < n; i += 50) {
            auto draws = sample_small_scale(kappa, 50, stream);
            for (const auto& g : draws) {
                mag += std::abs(g);
                power += std::norm(g);
            }
        }
        CHECK(mag / n ==
              doctest::Approx(rate::rician_magnitude_mean(kappa)).epsilon(3e-3));
        CHECK(power / n == doctest::Approx(1.0).epsilon(5e-3));
    }
}

TEST_CASE("phase alignment turns the cascade into a magnitude sum") {
    ChannelDraw draw;
    draw.h_ua_ue = std::polar(0.8, 0.3);
    draw.h_ua_irs = {{std::polar(1.1, 1.0), std::polar(0.5, -2.0)}};
    draw.h_irs_ue = {{std::polar(0.9, 2.2), std::polar(1.3, 0.4)}};
    draw.los = {1, {1}};
    auto phases = optimal_phase_shifts(draw, 0);
    REQUIRE(phases.size() == 2);
    std::complex<double> total = draw.h_ua_ue;
    for (int m = 0; m < 2; ++m)
        total += draw.h_ua_irs[0][m] * std::polar(1.0, phases[m]) *
                 std::conj(draw.h_irs_ue[0][m]);
    const double expect = 0.8 + 1.1 * 0.9 + 0.5 * 1.3;
    CHECK(std::abs(total) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(std::arg(total) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(combined_magnitude(draw.los, std::abs(draw.h_ua_ue),
                             {1.1 * 0.9 + 0.5 * 1.3}) ==
          doctest::Approx(expect).epsilon(1e-12));
}

namespace {

ScenarioConfig direct_only_scenario() {
    ScenarioConfig cfg = default_scenario();
    cfg.irss.clear();
    cfg.ues.resize(1);
    cfg.ues[0].xy_m = {50.0, 50.0};
    return cfg;
}

}  // namespace

TEST_CASE("monte carlo rate reproduces per seed and per thread count") {
    ScenarioConfig cfg = direct_only_scenario();
    const Vec2 at{30.0, 40.0};
    McRate a = monte_carlo_rate(cfg, at, 0, {}, 20000, 5, 1);
    McRate b = monte_carlo_rate(cfg, at, 0, {}, 20000, 5, 3);
    McRate c = monte_carlo_rate(cfg, at, 0, {}, 20000, 6, 1);
    CHECK(a.rate_bps == b.rate_bps);
    CHECK(a.stderr_bps == b.stderr_bps);
    CHECK(a.rate_bps != c.rate_bps);
    CHECK(a.stderr_bps > 0.0);
}

TEST_CASE("standard error shrinks with the sample budget") {
    ScenarioConfig cfg = direct_only_scenario();
    const Vec2 at{30.0, 40.0};
    McRate small = monte_carlo_rate(cfg, at, 0, {}, 10000, 5);
    McRate large = monte_carlo_rate(cfg, at, 0, {}, 40000, 5);
    CHECK(large.stderr_bps < small.stderr_bps);
    CHECK(large.stderr_bps == doctest::Approx(small.stderr_bps / 2.0).epsilon(0.25));
}

TEST_CASE("deterministic limit matches the two-state direct formula") {
    // Huge K-factor freezes the fades, leaving only blockage randomness; the
    // sampled rate must then match the closed two-state average.
    ScenarioConfig cfg = direct_only_scenario();
    cfg.channel.kappa_ua_ue = 1e8;
    cfg.channel.nlos_attenuation = 0.25;
    const Vec2 at{30.0, 40.0};
    const double d =
        link_geometry(cfg.ues[0].xy_m, 0.0, at, cfg.uav.altitude_m).distance_m;
    const double p = los_probability(60.0, 30.0, 0.15);
    const double snr = cfg.channel.beta0 * cfg.uav.tx_power_w /
                       (cfg.channel.bandwidth_hz * cfg.channel.noise_psd_w_per_hz) *
                       std::pow(d, -cfg.channel.alpha_ua_ue);
    const double nu2 = 0.25 * 0.25;
    const double expect =
        cfg.channel.bandwidth_hz *
        (p * std::log2(1.0 + snr) + (1.0 - p) * std::log2(1.0 + nu2 * snr));
    McRate mc = monte_carlo_rate(cfg, at, 0, {}, 100000, 11);
    CHECK(mc.rate_bps == doctest::Approx(expect).epsilon(2e-3));
}

TEST_CASE("deterministic limit with one surface matches the expected rate") {
    ScenarioConfig cfg = direct_only_scenario();
    cfg.irss.push_back({});
    cfg.irss.back().xy_m = {45.0, 45.0};
    cfg.irss.back().n_elements = 200;
    cfg.channel.kappa_ua_ue = 1e8;
    cfg.channel.kappa_ua_irs = 1e8;
    cfg.channel.kappa_irs_ue = 1e8;
    const Vec2 at{30.0, 40.0};
    rate::RateModel model = rate::make_rate_model(cfg);
    const double d_ue =
        link_geometry(cfg.ues[0].xy_m, 0.0, at, cfg.uav.altitude_m).distance_m;
    const double d_irs[] = {
        link_geometry(cfg.irss[0].xy_m, 20.0, at, cfg.uav.altitude_m)
            .distance_m};
    const std::size_t active[] = {0};
    const double closed = rate::expected_rate(model, 0, d_ue, d_irs, active);
    McRate mc = monte_carlo_rate(cfg, at, 0, {0}, 20000, 13);
    CHECK(mc.rate_bps == doctest::Approx(closed).epsilon(3e-3));
}

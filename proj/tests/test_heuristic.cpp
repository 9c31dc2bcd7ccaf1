#include "uavirs/heuristic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "uavirs/power.hpp"
#include "uavirs/rng.hpp"
#include "uavirs/trajectory.hpp"

using namespace uavirs;

namespace {

ScenarioConfig two_cell_cfg() {
    ScenarioConfig cfg = default_scenario();
    cfg.uav.seg_max_m = 40.0;
    cfg.ues[0].xy_m = {30.0, 55.0};
    cfg.ues[0].data_bits = 4e6;
    UeSpec second = cfg.ues[0];
    second.xy_m = {70.0, 45.0};
    cfg.ues.push_back(second);
    cfg.irss[0].xy_m = {27.0, 57.0};
    IrsSpec other = cfg.irss[0];
    other.xy_m = {73.0, 43.0};
    cfg.irss.push_back(other);
    cfg.channel.data_margin_bits = 1e4;
    return cfg;
}

double path_cost(std::span<const Vec2> pts,
                 const std::vector<std::size_t>& order, Vec2 start, Vec2 end) {
    double cost = 0.0;
    Vec2 at = start;
    for (std::size_t i : order) {
        cost += norm(pts[i] - at);
        at = pts[i];
    }
    return cost + norm(end - at);
}

double brute_force_cost(std::span<const Vec2> pts, Vec2 start, Vec2 end) {
    std::vector<std::size_t> perm(pts.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    double best = std::numeric_limits<double>::infinity();
    do {
        best = std::min(best, path_cost(pts, perm, start, end));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace

TEST_SUITE("heuristic") {

TEST_CASE("users pair with their nearest surface") {
    ScenarioConfig cfg = two_cell_cfg();
    const auto pairing = heuristic::pair_ues(cfg);
    REQUIRE(pairing.size() == 2);
    CHECK(pairing[0] == 0);
    CHECK(pairing[1] == 1);

    SUBCASE("no surfaces means no pairing") {
        cfg.irss.clear();
        CHECK(heuristic::pair_ues(cfg).empty());
    }
    SUBCASE("ties go to the lowest index") {
        cfg.irss[1] = cfg.irss[0];
        const auto tied = heuristic::pair_ues(cfg);
        CHECK(tied[0] == 0);
        CHECK(tied[1] == 0);
    }
}

TEST_CASE("best rate point lies on the user-surface segment") {
    const ScenarioConfig cfg = two_cell_cfg();
    const Vec2 p = heuristic::best_rate_point(cfg, 0, 0);
    const Vec2 a = cfg.ues[0].xy_m;
    const Vec2 b = cfg.irss[0].xy_m;
    // Collinearity and the parameter range certify segment membership.
    const Vec2 d = b - a;
    const double t = dot(p - a, d) / dot(d, d);
    CHECK(t >= -1e-9);
    CHECK(t <= 1.0 + 1e-9);
    const double cross = (p.x - a.x) * d.y - (p.y - a.y) * d.x;
    CHECK(std::abs(cross) < 1e-6);
}

TEST_CASE("toy fractions scale with the quota") {
    ScenarioConfig cfg = two_cell_cfg();
    cfg.ues[1].data_bits = 0.0;
    const auto f = heuristic::toy_fractions(cfg);
    REQUIRE(f.size() == 2);
    CHECK(f[0] > 0.0);
    CHECK(std::isinf(f[1]));

    ScenarioConfig heavy = cfg;
    heavy.ues[0].data_bits *= 100.0;
    const auto g = heuristic::toy_fractions(heavy);
    CHECK(g[0] < f[0]);
    CHECK(g[0] == doctest::Approx(f[0] * (cfg.ues[0].data_bits + 1e4) /
                                  (heavy.ues[0].data_bits + 1e4))
                      .epsilon(1e-9));
}

TEST_CASE("transmit points interpolate toward the route") {
    const std::vector<Vec2> q_hat = {{10.0, 10.0}, {20.0, 0.0}};
    const std::vector<Vec2> q_bar = {{0.0, 0.0}, {30.0, 10.0}};
    const std::vector<double> fractions = {0.5, 7.0};
    const auto pts = heuristic::transmit_points(fractions, q_hat, q_bar);
    CHECK(pts[0] == Vec2{5.0, 5.0});
    // A fraction above one snaps onto the route.
    CHECK(pts[1] == q_bar[1]);
}

TEST_CASE("open path ordering matches brute force") {
    rng::Substream stream(99, 0);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t m = 2 + stream.next_u64() % 6;  // 2..7 points
        std::vector<Vec2> pts(m);
        for (auto& p : pts)
            p = {stream.uniform01() * 100.0, stream.uniform01() * 100.0};
        const Vec2 start = {0.0, 0.0}, end = {100.0, 100.0};
        const auto order = heuristic::open_path_tsp(pts, start, end);
        REQUIRE(order.size() == m);
        std::vector<std::size_t> sorted = order;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < m; ++i) REQUIRE(sorted[i] == i);
        CHECK(path_cost(pts, order, start, end) ==
              doctest::Approx(brute_force_cost(pts, start, end))
                  .epsilon(1e-12));
    }
}

TEST_CASE("large instances fall back to local search") {
    rng::Substream stream(7, 1);
    std::vector<Vec2> pts(20);
    for (auto& p : pts)
        p = {stream.uniform01() * 100.0, stream.uniform01() * 100.0};
    const Vec2 start = {0.0, 0.0}, end = {100.0, 100.0};
    const auto order = heuristic::open_path_tsp(pts, start, end);
    REQUIRE(order.size() == 20);
    std::vector<std::size_t> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < 20; ++i) CHECK(sorted[i] == i);
    // Local search must not be worse than the naive identity order.
    std::vector<std::size_t> identity(20);
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    CHECK(path_cost(pts, order, start, end) <=
          path_cost(pts, identity, start, end) + 1e-9);
}

TEST_CASE("plan delivers every quota with a valid trajectory") {
    ScenarioConfig cfg = two_cell_cfg();
    cfg.ues[0].data_bits = 2e8;
    cfg.ues[1].data_bits = 2e8;
    const heuristic::HeuristicPlan hp = heuristic::plan(cfg);
    CHECK(validate(hp.solution.trajectory, cfg).empty());
    CHECK(hp.solution.variant == "heuristic");
    REQUIRE(hp.solution.delivered_bits.size() == 2);
    for (std::size_t k = 0; k < 2; ++k)
        CHECK(hp.solution.delivered_bits[k] >=
              cfg.ues[k].data_bits + cfg.channel.data_margin_bits);
    CHECK(hp.visit_order.size() == 2);
    CHECK(hp.solution.energy.total_j > 0.0);
}

TEST_CASE("tiny quotas ride the straight dash with an even split") {
    const ScenarioConfig cfg = two_cell_cfg();
    const heuristic::HeuristicPlan hp = heuristic::plan(cfg);
    for (double f : hp.fractions) CHECK(f >= 1.0);
    CHECK(validate(hp.solution.trajectory, cfg).empty());
    CHECK(hp.solution.trajectory.path_length() ==
          doctest::Approx(std::sqrt(2.0) * 100.0).epsilon(1e-12));
    CHECK(hp.visit_order.empty());
    for (std::size_t k = 0; k < 2; ++k)
        CHECK(hp.solution.delivered_bits[k] >=
              cfg.ues[k].data_bits + cfg.channel.data_margin_bits);
    const auto& tt = hp.solution.trajectory.tx_times;
    const auto& ft = hp.solution.trajectory.flight_times;
    REQUIRE(!tt.empty());
    for (std::size_t n = 0; n < tt.size(); ++n)
        for (std::size_t k = 0; k < 2; ++k)
            CHECK(tt[n][k] == doctest::Approx(ft[n] / 2.0).epsilon(1e-12));
}

TEST_CASE("zero quotas reduce the plan to the straight dash") {
    ScenarioConfig cfg = two_cell_cfg();
    for (auto& ue : cfg.ues) ue.data_bits = 0.0;
    const heuristic::HeuristicPlan hp = heuristic::plan(cfg);
    CHECK(validate(hp.solution.trajectory, cfg).empty());
    CHECK(hp.solution.trajectory.path_length() ==
          doctest::Approx(std::sqrt(2.0) * 100.0).epsilon(1e-12));
    CHECK(hp.solution.energy.comm_j == 0.0);
    CHECK(hp.visit_order.empty());
}

TEST_CASE("raising a quota never cheapens the routed plan") {
    ScenarioConfig cfg = two_cell_cfg();
    cfg.ues[0].data_bits = 2e8;
    cfg.ues[1].data_bits = 2e8;
    for (std::size_t k = 0; k < 2; ++k) {
        cfg.ues[0].data_bits = 2e8;
        cfg.ues[1].data_bits = 2e8;
        double prev = heuristic::plan(cfg).solution.energy.total_j;
        for (double q : {5e8, 1e9, 2e9}) {
            cfg.ues[k].data_bits = q;
            const double raised = heuristic::plan(cfg).solution.energy.total_j;
            CHECK(raised >= prev - 1e-9);
            prev = raised;
        }
    }
}

TEST_CASE("heavy quotas park the platform near the best rate points") {
    ScenarioConfig cfg = two_cell_cfg();
    cfg.ues[0].data_bits = 2e9;
    cfg.ues[1].data_bits = 2e9;
    const heuristic::HeuristicPlan hp = heuristic::plan(cfg);
    CHECK(validate(hp.solution.trajectory, cfg).empty());
    // Nearly starved toy fractions leave the transmit points at the
    // best-rate points.
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(hp.fractions[k] < 0.1);
        CHECK(norm(hp.transmit_points[k] - hp.q_hat[k]) <
              0.1 * norm(hp.q_bar[k] - hp.q_hat[k]) + 1e-9);
    }
    // Hover segments dominate the schedule.
    const Trajectory& t = hp.solution.trajectory;
    double hover_t = 0.0;
    for (std::size_t n = 0; n < t.num_segments(); ++n)
        if (t.segment_length(n) < 1e-9) hover_t += t.flight_times[n];
    CHECK(hover_t > 0.5 * t.mission_time());
}

}

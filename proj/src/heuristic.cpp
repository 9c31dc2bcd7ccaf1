#include "uavirs/heuristic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <utility>

#include "uavirs/channel.hpp"
#include "uavirs/power.hpp"
#include "uavirs/rate.hpp"

namespace uavirs::heuristic {

namespace {

constexpr double kGridStep = 0.1;
// Factor over the exact residual hover so rounding in later accounting
// cannot flip delivery short.
constexpr double kHoverPad = 1.0001;

double need_bits(const ScenarioConfig& cfg, std::size_t k) {
    return cfg.ues[k].data_bits > 0.0
               ? cfg.ues[k].data_bits + cfg.channel.data_margin_bits
               : 0.0;
}

// Rate toward user k with only surface w assisting; w < 0 means the direct
// link alone.
double single_rate(const ScenarioConfig& cfg, const rate::RateModel& model,
                   std::size_t k, std::ptrdiff_t w, Vec2 at) {
    const double v = link_height_distance(cfg, k, at);
    if (w < 0) return rate::expected_rate(model, k, v, {}, {});
    const std::size_t wi = static_cast<std::size_t>(w);
    const double u = channel::link_geometry(cfg.irss[wi].xy_m,
                                            cfg.irss[wi].height_m, at,
                                            cfg.uav.altitude_m)
                         .distance_m;
    return rate::expected_rate(model, k, v, std::span<const double>(&u, 1),
                               std::span<const std::size_t>(&wi, 1));
}

std::ptrdiff_t paired_surface(std::span<const std::size_t> pairing,
                              std::size_t k) {
    return pairing.empty() ? -1 : static_cast<std::ptrdiff_t>(pairing[k]);
}

Vec2 project_on_route(const ScenarioConfig& cfg, Vec2 p) {
    const Vec2 a = cfg.uav.start_xy_m;
    const Vec2 d = cfg.uav.finish_xy_m - a;
    const double dd = dot(d, d);
    if (dd <= 0.0) return a;
    const double t = std::clamp(dot(p - a, d) / dd, 0.0, 1.0);
    return a + t * d;
}

}  // namespace

std::vector<std::size_t> pair_ues(const ScenarioConfig& cfg) {
    const std::size_t w_count = cfg.irss.size();
    if (w_count == 0) return {};
    std::vector<std::size_t> pairing(cfg.ues.size(), 0);
    for (std::size_t k = 0; k < cfg.ues.size(); ++k) {
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t w = 0; w < w_count; ++w) {
            const double d =
                std::hypot(norm(cfg.irss[w].xy_m - cfg.ues[k].xy_m),
                           cfg.irss[w].height_m - cfg.ues[k].height_m);
            if (d < best_d) {
                best_d = d;
                pairing[k] = w;
            }
        }
    }
    return pairing;
}

Vec2 best_rate_point(const ScenarioConfig& cfg, std::size_t ue_k,
                     std::size_t irs_w) {
    const rate::RateModel model = rate::make_rate_model(cfg);
    
    const Vec2 a = cfg.ues[ue_k].xy_m;
    const Vec2 b = cfg.irss[irs_w].xy_m;
    const double len = norm(b - a);
    auto rate_at = [&](double s) {
        return single_rate(cfg, model, ue_k,
                           static_cast<std::ptrdiff_t>(irs_w), a + s * (b - a));
    };
    if (len <= kGridStep) {
        return rate_at(0.0) >= rate_at(1.0) ? a : b;
    }

    const std::size_t steps =
        static_cast<std::size_t>(std::ceil(len / kGridStep));
    double best_s = 0.0, best_r = rate_at(0.0);
    for (std::size_t i = 1; i <= steps; ++i) {
        const double s = double(i) / double(steps);
        const double r = rate_at(s);
        if (r > best_r) {
            best_r = r;
            best_s = s;
        }
    }

    // Ternary refinement inside the bracketing grid cells.
    double lo = std::max(0.0, best_s - 1.0 / double(steps));
    double hi = std::min(1.0, best_s + 1.0 / double(steps));
    for (int it = 0; it < 80; ++it) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        if (rate_at(m1) < rate_at(m2))
            lo = m1;
        else
            hi = m2;
    }
    const double s = 0.5 * (lo + hi);
    return rate_at(s) > best_r ? a + s * (b - a) : a + best_s * (b - a);
}

std::vector<double> toy_fractions(const ScenarioConfig& cfg) {
    const std::size_t k_count = cfg.ues.size();
    const rate::RateModel model = rate::make_rate_model(cfg);
    const std::vector<std::size_t> pairing = pair_ues(cfg);
    const Vec2 a = cfg.uav.start_xy_m;
    const Vec2 b = cfg.uav.finish_xy_m;
    const double len = norm(b - a);
    const double ve =
        std::min(energy_efficient_speed(cfg.power), cfg.uav.v_max_mps);

    std::vector<double> delivered(k_count, 0.0);
    const std::size_t steps =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len)));
    const double dt = len / double(steps) / ve;
    for (std::size_t i = 0; i < steps; ++i) {
        const Vec2 mid = a + ((double(i) + 0.5) / double(steps)) * (b - a);
        for (std::size_t k = 0; k < k_count; ++k)
            delivered[k] +=
                dt / double(k_count) *
                single_rate(cfg, model, k, paired_surface(pairing, k), mid);
    }

    std::vector<double> fractions(k_count, 0.0);
    for (std::size_t k = 0; k < k_count; ++k) {
        const double need = need_bits(cfg, k);
        fractions[k] = need > 0.0 ? delivered[k] / need
                                  : std::numeric_limits<double>::infinity();
    }
    return fractions;
}

std::vector<Vec2> transmit_points(std::span<const double> fractions,
                                  std::span<const Vec2> q_hat,
                                  std::span<const Vec2> q_bar) {
    std::vector<Vec2> out(q_hat.size());
    for (std::size_t k = 0; k < q_hat.size(); ++k) {
        const double f = std::min(fractions[k], 1.0);
        out[k] = q_hat[k] + f * (q_bar[k] - q_hat[k]);
    }
    return out;
}

std::vector<std::size_t> open_path_tsp(std::span<const Vec2> points,
                                       Vec2 start, Vec2 end) {
    const std::size_t m = points.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (m <= 1) return order;

    if (m <= 12) {
        const std::size_t full = std::size_t{1} << m;
        const double inf = std::numeric_limits<double>::infinity();
        std::vector<std::vector<double>> dp(full,
                                            std::vector<double>(m, inf));
        std::vector<std::vector<int>> parent(full,
                                             std::vector<int>(m, -1));
        for (std::size_t i = 0; i < m; ++i)
            dp[std::size_t{1} << i][i] = norm(points[i] - start);
        for (std::size_t mask = 1; mask < full; ++mask)
            for (std::size_t i = 0; i < m; ++i) {
                if (!(mask >> i & 1) || dp[mask][i] == inf) continue;
                for (std::size_t j = 0; j < m; ++j) {
                    if (mask >> j & 1) continue;
                    const std::size_t next = mask | std::size_t{1} << j;
                    const double cand =
                        dp[mask][i] + norm(points[j] - points[i]);
                    if (cand < dp[next][j]) {
                        dp[next][j] = cand;
                        parent[next][j] = static_cast<int>(i);
                    }
                }
            }
        std::size_t tail = 0;
        double best = inf;
        for (std::size_t i = 0; i < m; ++i) {
            const double cand = dp[full - 1][i] + norm(end - points[i]);
            if (cand < best) {
                best = cand;
                tail = i;
            }
        }
        std::size_t mask = full - 1;
        for (std::size_t pos = m; pos-- > 0;) {
            order[pos] = tail;
            const int prev = parent[mask][tail];
            mask ^= std::size_t{1} << tail;
            if (prev < 0) break;
            tail = static_cast<std::size_t>(prev);
        }
        return order;
    }

    // Nearest neighbor seed, then 2-opt on the open path.
    {
        std::vector<bool> used(m, false);
        Vec2 at = start;
        for (std::size_t pos = 0; pos < m; ++pos) {
            std::size_t pick = m;
            double best = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                if (used[i]) continue;
                const double d = norm(points[i] - at);
                if (pick == m || d < best) {
                    pick = i;
                    best = d;
                }
            }
            used[pick] = true;
            order[pos] = pick;
            at = points[pick];
        }
    }
    auto at = [&](std::size_t pos) -> Vec2 {
        if (pos == 0) return start;
        if (pos == m + 1) return end;
        return points[order[pos - 1]];
    };
    bool improved = true;
    while (improved) {
        improved = false;
        for (std::size_t i = 1; i <= m - 1; ++i)
            for (std::size_t j = i + 1; j <= m; ++j) {
                const double before =
                    norm(at(i) - at(i - 1)) + norm(at(j + 1) - at(j));
                const double after =
                    norm(at(j) - at(i - 1)) + norm(at(j + 1) - at(i));
                if (after < before - 1e-9) {
                    std::reverse(order.begin() + (i - 1),
                                 order.begin() + j);
                    improved = true;
                }
            }
    }
    return order;
}

HeuristicPlan plan(const ScenarioConfig& cfg) {
    validate_scenario(cfg);
    const std::size_t k_count = cfg.ues.size();
    const rate::RateModel model = rate::make_rate_model(cfg);

    HeuristicPlan out;
    out.pairing = pair_ues(cfg);
    out.q_hat.resize(k_count);
    out.q_bar.resize(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
        out.q_hat[k] = out.pairing.empty()
                           ? cfg.ues[k].xy_m
                           : best_rate_point(cfg, k, out.pairing[k]);
        out.q_bar[k] = project_on_route(cfg, out.q_hat[k]);
    }
    out.fractions = toy_fractions(cfg);
    out.transmit_points =
        transmit_points(out.fractions, out.q_hat, out.q_bar);

    std::vector<std::size_t> needy;
    for (std::size_t k = 0; k < k_count; ++k)
        if (need_bits(cfg, k) > 0.0) needy.push_back(k);

    const double ve =
        std::min(energy_efficient_speed(cfg.power), cfg.uav.v_max_mps);
    Trajectory traj;
    traj.waypoints.push_back(cfg.uav.start_xy_m);
    std::vector<double> delivered(k_count, 0.0);

    auto add_segment = [&](Vec2 to, double t,
                           const std::vector<std::pair<std::size_t, double>>&
                               shares) {
        traj.waypoints.push_back(to);
        traj.flight_times.push_back(t);
        traj.tx_times.emplace_back(k_count, 0.0);
        for (const auto& [k, tau] : shares)
            if (tau > 0.0) {
                traj.tx_times.back()[k] = tau;
                delivered[k] +=
                    tau * single_rate(cfg, model, k,
                                      paired_surface(out.pairing, k), to);
            }
    };

    bool done = false;
    const bool all_covered = std::all_of(
        needy.begin(), needy.end(),
        [&](std::size_t k) { return out.fractions[k] >= 1.0; });
    if (all_covered) {
        // Toy plan: straight dash with the flight time split evenly over
        // all K users. Kept only when its discretized delivery holds up.
        const Vec2 a = cfg.uav.start_xy_m;
        const Vec2 b = cfg.uav.finish_xy_m;
        const double len = norm(b - a);
        const int segs = std::max(
            1, static_cast<int>(std::ceil(len / cfg.uav.seg_max_m)));
        const double t = len / segs / ve;
        for (int s = 1; s <= segs; ++s) {
            std::vector<std::pair<std::size_t, double>> shares;
            for (std::size_t k : needy)
                shares.emplace_back(k, t / double(k_count));
            add_segment(a + (double(s) / segs) * (b - a), t, shares);
        }
        done = std::all_of(needy.begin(), needy.end(), [&](std::size_t k) {
            return delivered[k] >= need_bits(cfg, k);
        });
        if (!done) {
            traj.waypoints.assign(1, cfg.uav.start_xy_m);
            traj.flight_times.clear();
            traj.tx_times.clear();
            std::fill(delivered.begin(), delivered.end(), 0.0);
        }
    }

    if (!done) {
        std::vector<Vec2> stops;
        for (std::size_t k : needy) stops.push_back(out.transmit_points[k]);
        const std::vector<std::size_t> tsp =
            open_path_tsp(stops, cfg.uav.start_xy_m, cfg.uav.finish_xy_m);
        for (std::size_t i : tsp) out.visit_order.push_back(needy[i]);

        // Fly leg by leg at the energy-efficient speed, transmitting to the
        // leg's destination user on the way, then hover out what is still
        // owed.
        std::vector<Vec2> route = {cfg.uav.start_xy_m};
        for (std::size_t k : out.visit_order)
            route.push_back(out.transmit_points[k]);
        route.push_back(cfg.uav.finish_xy_m);

        for (std::size_t j = 0; j + 1 < route.size(); ++j) {
            const Vec2 a = route[j];
            const Vec2 b = route[j + 1];
            const double len = norm(b - a);
            const bool to_user = j + 2 < route.size();
            const std::size_t k = to_user ? out.visit_order[j] : 0;
            if (len > 1e-9) {
                const int segs = std::max(
                    1, static_cast<int>(std::ceil(len / cfg.uav.seg_max_m)));
                const double t = len / segs / ve;
                for (int s = 1; s <= segs; ++s)
                    add_segment(a + (double(s) / segs) * (b - a), t,
                                to_user ? std::vector<std::pair<std::size_t,
                                                                double>>{
                                              {k, t}}
                                        : std::vector<std::pair<std::size_t,
                                                                double>>{});
            }
            if (to_user) {
                const double residual = need_bits(cfg, k) - delivered[k];
                if (residual > 0.0) {
                    const double r = single_rate(
                        cfg, model, k, paired_surface(out.pairing, k), b);
                    if (r <= 0.0)
                        throw ScenarioError(
                            "user " + std::to_string(k) +
                            " is unreachable: zero rate at its transmit "
                            "point");
                    const double t = kHoverPad * residual / r;
                    add_segment(b, t, {{k, t}});
                }
            }
        }
        if (traj.waypoints.size() == 1) {
            traj.waypoints.push_back(cfg.uav.finish_xy_m);
            traj.flight_times.push_back(
                std::max(norm(cfg.uav.finish_xy_m - cfg.uav.start_xy_m),
                         1.0) /
                ve);
            traj.tx_times.emplace_back(k_count, 0.0);
        }
    }

    out.solution.trajectory = std::move(traj);
    out.solution.energy = total_energy(out.solution.trajectory,
                                       cfg.uav.tx_power_w, cfg.power);
    out.solution.delivered_bits = delivered;
    out.solution.variant = "heuristic";
    double ratio = 1.0;
    for (std::size_t k = 0; k < k_count; ++k)
        if (need_bits(cfg, k) > 0.0)
            ratio = std::min(ratio, delivered[k] / need_bits(cfg, k));
    out.solution.convergence = {out.solution.energy.total_j};
    out.solution.trace = {{out.solution.energy.total_j, 0.0, ratio}};
    return out;
}

}  // namespace uavirs::heuristic

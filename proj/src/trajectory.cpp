#include "uavirs/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "uavirs/channel.hpp"
#include "uavirs/rate.hpp"

namespace uavirs {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Tiny transmit time seeded on every moving segment so later rate
/// linearizations anchor away from zero.
constexpr double kSeedTxTime = 1e-6;

}  // namespace

double Trajectory::path_length() const {
    double l = 0.0;
    for (std::size_t n = 0; n < num_segments(); ++n) l += segment_length(n);
    return l;
}

double Trajectory::mission_time() const {
    return std::accumulate(flight_times.begin(), flight_times.end(), 0.0);
}

Trajectory initial_plan(const ScenarioConfig& cfg, int n_segments_hint,
                        bool use_surfaces) {
    const std::size_t k_count = cfg.ues.size();
    const std::size_t w_count = cfg.irss.size();
    const double chi = cfg.channel.data_margin_bits;
    const rate::RateModel model = rate::make_rate_model(cfg);

    // Visit order over users that carry data: nearest neighbor from the
    // start. Idle users impose nothing and are overflown only incidentally.
    std::vector<std::size_t> order;
    {
        std::vector<bool> used(k_count, false);
        for (std::size_t k = 0; k < k_count; ++k)
            used[k] = cfg.ues[k].data_bits <= 0.0;
        Vec2 at = cfg.uav.start_xy_m;
        for (;;) {
            std::size_t best = k_count;
            double best_d = 0.0;
            for (std::size_t k = 0; k < k_count; ++k) {
                if (used[k]) continue;
                const double d = norm(cfg.ues[k].xy_m - at);
                if (best == k_count || d < best_d) {
                    best = k;
                    best_d = d;
                }
            }
            if (best == k_count) break;
            used[best] = true;
            order.push_back(best);
            at = cfg.ues[best].xy_m;
        }
    }

    // Best hover rate over each user, used to size the hover time.
    std::vector<double> hover_rate(k_count, 0.0);
    for (std::size_t k = 0; k < k_count; ++k) {
        const Vec2 at = cfg.ues[k].xy_m;
        const double v = link_height_distance(cfg, k, at);
        double best = rate::expected_rate(model, k, v, {}, {});
        if (use_surfaces) {
            for (std::size_t w = 0; w < w_count; ++w) {
                const channel::LinkGeometry g = channel::link_geometry(
                    cfg.irss[w].xy_m, cfg.irss[w].height_m, at,
                    cfg.uav.altitude_m);
                const double u[] = {g.distance_m};
                const std::size_t active[] = {w};
                best = std::max(best,
                                rate::expected_rate(model, k, v, u, active));
            }
        }
        hover_rate[k] = best;
        if (cfg.ues[k].data_bits > 0.0 && best <= 0.0)
            throw ScenarioError("user " + std::to_string(k) +
                                " is unreachable: zero expected rate overhead");
    }

    // Polyline through the users, discretized per leg.
    std::vector<Vec2> stations;
    stations.push_back(cfg.uav.start_xy_m);
    for (std::size_t k : order) stations.push_back(cfg.ues[k].xy_m);
    stations.push_back(cfg.uav.finish_xy_m);

    double total_len = 0.0;
    for (std::size_t j = 0; j + 1 < stations.size(); ++j)
        total_len += norm(stations[j + 1] - stations[j]);

    const double v_e =
        std::min(energy_efficient_speed(cfg.power), cfg.uav.v_max_mps);

    Trajectory traj;
    traj.waypoints.push_back(stations[0]);
    auto add_segment = [&](Vec2 to, double t, std::size_t served,
                           double tau_served) {
        traj.waypoints.push_back(to);
        traj.flight_times.push_back(t);
        std::vector<double> tau(k_count, 0.0);
        if (served < k_count) tau[served] = tau_served;
        traj.tx_times.push_back(std::move(tau));
    };

    for (std::size_t j = 0; j + 1 < stations.size(); ++j) {
        const Vec2 a = stations[j];
        const Vec2 b = stations[j + 1];
        const double len = norm(b - a);
        if (len > 0.0) {
            int segs;
            if (n_segments_hint > 0)
                segs = std::max(
                    1, static_cast<int>(std::lround(n_segments_hint * len /
                                                    total_len)));
            else
                segs = static_cast<int>(
                    std::ceil(1.5 * len / cfg.uav.seg_max_m));
            const double step_t = len / segs / v_e;
            for (int s = 1; s <= segs; ++s)
                add_segment(a + (double(s) / segs) * (b - a), step_t, k_count,
                            0.0);
        }
        // Hover over the user just reached.
        if (j + 2 < stations.size()) {
            const std::size_t k = order[j];
            // The margin tops up real quotas; idle users need nothing.
            const double need =
                cfg.ues[k].data_bits > 0.0 ? cfg.ues[k].data_bits + chi : 0.0;
            if (need > 0.0) {
                const double t_hover = 1.001 * need / hover_rate[k];
                add_segment(stations[j + 1], t_hover, k, t_hover);
            }
        }
    }

    // Seed transmit time on moving segments for users that carry data.
    for (std::size_t n = 0; n < traj.num_segments(); ++n) {
        if (traj.segment_length(n) == 0.0) continue;
        for (std::size_t k = 0; k < k_count; ++k)
            if (cfg.ues[k].data_bits > 0.0)
                traj.tx_times[n][k] = kSeedTxTime;
    }
    return traj;
}

double link_height_distance(const ScenarioConfig& cfg, std::size_t ue,
                            Vec2 uav_xy) {
    return channel::link_geometry(cfg.ues[ue].xy_m, cfg.ues[ue].height_m,
                                  uav_xy, cfg.uav.altitude_m)
        .distance_m;
}

std::vector<std::string> validate(const Trajectory& traj,
                                  const ScenarioConfig& cfg) {
    constexpr double kSlack = 1e-6;
    std::vector<std::string> issues;
    auto flag = [&](const std::string& msg) { issues.push_back(msg); };

    const std::size_t n_seg = traj.num_segments();
    if (traj.waypoints.size() != n_seg + 1) {
        flag("waypoint count does not match segment count");
        return issues;
    }
    if (traj.tx_times.size() != n_seg) {
        flag("transmit-time rows do not match segment count");
        return issues;
    }
    if (n_seg == 0) {
        flag("trajectory has no segments");
        return issues;
    }

    if (norm(traj.waypoints.front() - cfg.uav.start_xy_m) > kSlack)
        flag("first waypoint is not the start location");
    if (norm(traj.waypoints.back() - cfg.uav.finish_xy_m) > kSlack)
        flag("last waypoint is not the finish location");

    for (std::size_t n = 0; n < n_seg; ++n) {
        const std::string seg = "segment " + std::to_string(n);
        const double t = traj.flight_times[n];
        if (!(t > 0.0)) flag(seg + ": flight time must be positive");
        const double len = traj.segment_length(n);
        if (len > cfg.uav.seg_max_m + kSlack)
            flag(seg + ": length exceeds the segment cap");
        if (t > 0.0 && len > cfg.uav.v_max_mps * t + kSlack)
            flag(seg + ": implied speed exceeds the speed cap");
        if (traj.tx_times[n].size() != cfg.ues.size()) {
            flag(seg + ": transmit-time row has wrong width");
            continue;
        }
        double tau_sum = 0.0;
        for (double tau : traj.tx_times[n]) {
            if (tau < -kSlack) flag(seg + ": negative transmit time");
            tau_sum += tau;
        }
        if (tau_sum > t + kSlack)
            flag(seg + ": transmit times exceed the flight time");
        if (!traj.match_times.empty()) {
            if (traj.match_times.size() != n_seg) {
                flag("matching-time rows do not match segment count");
                break;
            }
            for (std::size_t w = 0; w < traj.match_times[n].size(); ++w) {
                for (std::size_t k = 0; k < cfg.ues.size(); ++k)
                    if (traj.match_times[n][w][k] < -kSlack)
                        flag(seg + ": negative matching time");
            }
            for (std::size_t k = 0; k < cfg.ues.size(); ++k) {
                double eta_sum = 0.0;
                for (std::size_t w = 0; w < traj.match_times[n].size(); ++w)
                    eta_sum += traj.match_times[n][w][k];
                if (eta_sum > traj.tx_times[n][k] + kSlack)
                    flag(seg + ": matching times exceed the transmit time");
            }
        }
    }
    return issues;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    const std::size_t n_seg = traj.num_segments();
    const std::size_t k_count = n_seg ? traj.tx_times[0].size() : 0;
    const std::size_t w_count =
        traj.match_times.empty() ? 0 : traj.match_times[0].size();

    out << "n,x_m,y_m,delta_m,T_s,V_mps";
    for (std::size_t k = 0; k < k_count; ++k) out << ",tau_" << k << "_s";
    for (std::size_t w = 0; w < w_count; ++w)
        for (std::size_t k = 0; k < k_count; ++k)
            out << ",eta_" << w << "_" << k << "_s";
    out << "\n";

    for (std::size_t n = 0; n <= n_seg; ++n) {
        out << n << "," << fmt(traj.waypoints[n].x) << ","
            << fmt(traj.waypoints[n].y);
        if (n < n_seg) {
            const double len = traj.segment_length(n);
            const double t = traj.flight_times[n];
            out << "," << fmt(len) << "," << fmt(t) << "," << fmt(len / t);
            for (std::size_t k = 0; k < k_count; ++k)
                out << "," << fmt(traj.tx_times[n][k]);
            for (std::size_t w = 0; w < w_count; ++w)
                for (std::size_t k = 0; k < k_count; ++k)
                    out << "," << fmt(traj.match_times[n][w][k]);
        } else {
            // Final waypoint row carries no segment quantities.
            out << ",0,0,0";
            for (std::size_t c = 0; c < k_count + w_count * k_count; ++c)
                out << ",0";
        }
        out << "\n";
    }
}

Trajectory read_trajectory_csv(std::istream& in) {
    Trajectory traj;
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("empty trajectory file");

    std::size_t k_count = 0, w_count = 0;
    {
        std::stringstream header(line);
        std::string col;
        while (std::getline(header, col, ',')) {
            if (col.rfind("tau_", 0) == 0) ++k_count;
            if (col.rfind("eta_", 0) == 0) ++w_count;
        }
        if (k_count) w_count /= k_count;
    }

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2) throw std::runtime_error("trajectory needs two rows");

    for (const auto& row : rows) traj.waypoints.push_back({row[1], row[2]});
    for (std::size_t n = 0; n + 1 < rows.size(); ++n) {
        const auto& row = rows[n];
        traj.flight_times.push_back(row[4]);
        std::vector<double> tau(row.begin() + 6, row.begin() + 6 + k_count);
        traj.tx_times.push_back(std::move(tau));
        if (w_count) {
            std::vector<std::vector<double>> eta(
                w_count, std::vector<double>(k_count));
            for (std::size_t w = 0; w < w_count; ++w)
                for (std::size_t k = 0; k < k_count; ++k)
                    eta[w][k] = row[6 + k_count + w * k_count + k];
            traj.match_times.push_back(std::move(eta));
        }
    }
    return traj;
}

}  // namespace uavirs

#include "uavirs/sca.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

#include "uavirs/channel.hpp"
#include "uavirs/power.hpp"

namespace uavirs::sca {

namespace {

// Data rows are scaled to megabits so the delivered-bit slacks share the
// magnitude of the geometry variables.
constexpr double kRateScale = 1e-6;
// Absolute objective headroom (joules) when accepting an iterate.
constexpr double kMonotoneSlack = 1e-6;
constexpr int kMaxHalvings = 6;
constexpr double kFeasSlack = 1e-6;

bool surface_free(Variant v) { return v == Variant::NoIrs; }

// The single-user alias shares the general builder; matching without any
// surfaces collapses onto the direct-link problem.
Variant effective(Variant v, std::size_t w_count) {
    if (v == Variant::Sisu) return Variant::MimuGeneral;
    if (v == Variant::MimuMatching && w_count == 0) return Variant::NoIrs;
    return v;
}

double surface_distance(const ScenarioConfig& cfg, std::size_t w, Vec2 at) {
    return channel::link_geometry(cfg.irss[w].xy_m, cfg.irss[w].height_m, at,
                                  cfg.uav.altitude_m)
        .distance_m;
}

double single_surface_rate(const rate::RateModel& model, std::size_t k,
                           double dist_ue, double dist_irs, std::size_t w) {
    return rate::expected_rate(model, k, dist_ue,
                               std::span<const double>(&dist_irs, 1),
                               std::span<const std::size_t>(&w, 1));
}

// Binding induced-power slack for one segment: the positive root of
// z^2 + (delta^2/v0^2) z = t^4 in z = y^2, in a form stable at cruise
// speeds where the two natural terms nearly cancel.
double binding_speed_slack(double delta, double t, double v0) {
    const double w = delta * delta / (v0 * v0);
    const double t2 = t * t;
    const double z = 2.0 * t2 * t2 / (w + std::hypot(w, 2.0 * t2));
    return std::sqrt(z);
}

[[noreturn]] void bad_anchor(const std::string& what) {
    throw SolveError("anchor state: " + what);
}

void check_anchor(const ScenarioConfig& cfg, Variant var, const LocalPoint& lp,
                  std::size_t n_seg, std::size_t k_count, std::size_t w_count) {
    if (lp.delta.size() != n_seg || lp.flight_t.size() != n_seg ||
        lp.y.size() != n_seg || lp.tau.size() != n_seg ||
        lp.v.size() != n_seg || lp.rate.size() != n_seg ||
        lp.a.size() != n_seg)
        bad_anchor("per-segment arrays disagree with the waypoint count");
    if (w_count > 0 && lp.u.size() != n_seg)
        bad_anchor("surface distance slacks missing");
    if (norm(lp.q.front() - cfg.uav.start_xy_m) > kFeasSlack)
        bad_anchor("path does not begin at the start location");
    if (norm(lp.q.back() - cfg.uav.finish_xy_m) > kFeasSlack)
        bad_anchor("path does not end at the finish location");

    const bool matching = var == Variant::MimuMatching;
    if (matching &&
        (lp.eta.size() != n_seg || lp.a_wk.size() != n_seg ||
         lp.rate_wk.size() != n_seg))
        bad_anchor("matching state missing");

    for (std::size_t n = 0; n < n_seg; ++n) {
        if (!(lp.flight_t[n] > 0.0)) bad_anchor("nonpositive flight time");
        if (!(lp.y[n] > 0.0)) bad_anchor("nonpositive speed slack");
        const double len = norm(lp.q[n + 1] - lp.q[n]);
        if (std::abs(lp.delta[n] - len) > kFeasSlack * std::max(1.0, len))
            bad_anchor("segment length slack off the waypoints");
        if (lp.tau[n].size() != k_count || lp.v[n].size() != k_count ||
            lp.rate[n].size() != k_count || lp.a[n].size() != k_count)
            bad_anchor("per-user arrays have the wrong width");
        const Vec2 at = lp.q[n + 1];
        for (std::size_t k = 0; k < k_count; ++k) {
            if (lp.tau[n][k] < -1e-9) bad_anchor("negative transmit time");
            if (!(lp.rate[n][k] >= 0.0) || !std::isfinite(lp.rate[n][k]))
                bad_anchor("rate anchor not finite");
            if (lp.v[n][k] + kFeasSlack < link_height_distance(cfg, k, at))
                bad_anchor("user distance slack below the true distance");
            const double cap = lp.tau[n][k] * lp.rate[n][k];
            if (lp.a[n][k] * lp.a[n][k] > cap + kFeasSlack * std::max(1.0, cap))
                bad_anchor("delivered-bit slack above its transmit budget");
        }
        for (std::size_t w = 0; w < w_count; ++w)
            if (lp.u[n][w] + kFeasSlack < surface_distance(cfg, w, at))
                bad_anchor("surface distance slack below the true distance");
        if (matching) {
            if (lp.eta[n].size() != w_count || lp.a_wk[n].size() != w_count ||
                lp.rate_wk[n].size() != w_count)
                bad_anchor("matching arrays have the wrong surface count");
            for (std::size_t w = 0; w < w_count; ++w)
                if (lp.eta[n][w].size() != k_count ||
                    lp.a_wk[n][w].size() != k_count ||
                    lp.rate_wk[n][w].size() != k_count)
                    bad_anchor("matching arrays have the wrong user count");
            for (std::size_t k = 0; k < k_count; ++k) {
                double eta_sum = 0.0;
                for (std::size_t w = 0; w < w_count; ++w) {
                    const double e = lp.eta[n][w][k];
                    if (e < -1e-9) bad_anchor("negative matching time");
                    eta_sum += e;
                    const double cap = e * lp.rate_wk[n][w][k];
                    const double awk = lp.a_wk[n][w][k];
                    if (awk * awk > cap + kFeasSlack * std::max(1.0, cap))
                        bad_anchor("matched delivered-bit slack above budget");
                }
                if (eta_sum > lp.tau[n][k] + kFeasSlack)
                    bad_anchor("matching times exceed the transmit time");
            }
        }
    }
}

}  // namespace

Variant variant_from_string(const std::string& name) {
    if (name == "sisu") return Variant::Sisu;
    if (name == "mimu-general") return Variant::MimuGeneral;
    if (name == "mimu-matching") return Variant::MimuMatching;
    if (name == "no-irs") return Variant::NoIrs;
    throw ScenarioError("unknown variant: " + name);
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::Sisu: return "sisu";
        case Variant::MimuGeneral: return "mimu-general";
        case Variant::MimuMatching: return "mimu-matching";
        case Variant::NoIrs: return "no-irs";
    }
    return "?";
}

LocalPoint make_local_point(const ScenarioConfig& cfg, const Trajectory& traj,
                            Variant variant, const rate::RateModel& model) {
    const Variant var = effective(variant, cfg.irss.size());
    const bool matching = var == Variant::MimuMatching;
    const std::size_t n_seg = traj.num_segments();
    const std::size_t k_count = cfg.ues.size();
    const std::size_t w_count = surface_free(var) ? 0 : cfg.irss.size();

    LocalPoint lp;
    lp.q = traj.waypoints;
    lp.delta.resize(n_seg);
    lp.flight_t = traj.flight_times;
    lp.tau = traj.tx_times;
    lp.y.resize(n_seg);
    lp.v.assign(n_seg, std::vector<double>(k_count, 0.0));
    if (w_count > 0) lp.u.assign(n_seg, std::vector<double>(w_count, 0.0));
    lp.rate.assign(n_seg, std::vector<double>(k_count, 0.0));
    lp.a.assign(n_seg, std::vector<double>(k_count, 0.0));
    if (matching) {
        const std::vector<std::vector<double>> sheet(
            w_count, std::vector<double>(k_count, 0.0));
        lp.eta.assign(n_seg, sheet);
        lp.a_wk.assign(n_seg, sheet);
        lp.rate_wk.assign(n_seg, sheet);
    }

    std::vector<std::size_t> all(w_count);
    std::iota(all.begin(), all.end(), std::size_t{0});

    for (std::size_t n = 0; n < n_seg; ++n) {
        lp.delta[n] = traj.segment_length(n);
        lp.y[n] = binding_speed_slack(lp.delta[n], traj.flight_times[n],
                                      cfg.power.v0_mps);
        const Vec2 at = traj.waypoints[n + 1];
        for (std::size_t w = 0; w < w_count; ++w)
            lp.u[n][w] = surface_distance(cfg, w, at);
        for (std::size_t k = 0; k < k_count; ++k) {
            const double v = link_height_distance(cfg, k, at);
            lp.v[n][k] = v;
            if (matching) {
                double best = 0.0;
                for (std::size_t w = 0; w < w_count; ++w) {
                    const double r =
                        single_surface_rate(model, k, v, lp.u[n][w], w);
                    lp.rate_wk[n][w][k] = r;
                    best = std::max(best, r);
                }
                lp.rate[n][k] = best;
            } else if (w_count > 0) {
                lp.rate[n][k] = rate::expected_rate(model, k, v, lp.u[n], all);
            } else {
                lp.rate[n][k] = rate::expected_rate(model, k, v, {}, {});
            }
            const double tau = std::max(0.0, lp.tau[n][k]);
            lp.a[n][k] = std::sqrt(tau * lp.rate[n][k]);
        }
        if (matching) {
            for (std::size_t k = 0; k < k_count; ++k) {
                const double tau = std::max(0.0, lp.tau[n][k]);
                if (!traj.match_times.empty()) {
                    for (std::size_t w = 0; w < w_count; ++w)
                        lp.eta[n][w][k] =
                            std::max(0.0, traj.match_times[n][w][k]);
                } else if (tau > 0.0) {
                    // Concentrate on the strongest surface but keep every
                    // split strictly positive so the linearized delivery
                    // terms stay responsive.
                    std::size_t best = 0;
                    for (std::size_t w = 1; w < w_count; ++w)
                        if (lp.rate_wk[n][w][k] > lp.rate_wk[n][best][k])
                            best = w;
                    const double eps =
                        std::min(1e-6, tau / static_cast<double>(w_count));
                    for (std::size_t w = 0; w < w_count; ++w)
                        lp.eta[n][w][k] = eps;
                    lp.eta[n][best][k] =
                        tau - static_cast<double>(w_count - 1) * eps;
                }
                for (std::size_t w = 0; w < w_count; ++w)
                    lp.a_wk[n][w][k] =
                        std::sqrt(lp.eta[n][w][k] * lp.rate_wk[n][w][k]);
            }
        }
    }
    return lp;
}

conic::ConicProgram build_subproblem(const ScenarioConfig& cfg, Variant variant,
                                     const LocalPoint& local,
                                     const rate::RateModel& model,
                                     double margin_bits,
                                     SubproblemLayout* layout) {
    const Variant var = effective(variant, cfg.irss.size());
    const bool matching = var == Variant::MimuMatching;
    const std::size_t k_count = cfg.ues.size();
    const std::size_t w_count = surface_free(var) ? 0 : cfg.irss.size();
    const double chi =
        margin_bits < 0 ? cfg.channel.data_margin_bits : margin_bits;

    if (local.q.size() < 2) bad_anchor("no segments");
    const std::size_t n_seg = local.q.size() - 1;
    check_anchor(cfg, var, local, n_seg, k_count, w_count);

    std::vector<char> served(k_count, 0);
    for (std::size_t k = 0; k < k_count; ++k)
        served[k] = cfg.ues[k].data_bits > 0.0;

    conic::ConicProgram prog;
    SubproblemLayout lay;
    lay.n_segments = static_cast<int>(n_seg);
    lay.n_ues = static_cast<int>(k_count);
    lay.n_irs = static_cast<int>(w_count);

    lay.q.assign(n_seg + 1, {});
    for (std::size_t i = 1; i < n_seg; ++i)
        lay.q[i] = {prog.add_var("qx" + std::to_string(i)),
                    prog.add_var("qy" + std::to_string(i))};
    lay.delta = prog.add_vars(n_seg, "d");
    lay.flight_t = prog.add_vars(n_seg, "T");
    lay.y = prog.add_vars(n_seg, "y");
    lay.tau.assign(n_seg, std::vector<conic::Var>(k_count));
    lay.v.assign(n_seg, std::vector<conic::Var>(k_count));
    lay.a.assign(n_seg, std::vector<conic::Var>(k_count));
    lay.u.assign(n_seg, std::vector<conic::Var>(w_count));
    if (matching) {
        lay.eta.assign(n_seg, std::vector<std::vector<conic::Var>>(
                                  w_count, std::vector<conic::Var>(k_count)));
        lay.a_wk = lay.eta;
    }
    for (std::size_t n = 0; n < n_seg; ++n) {
        const std::string tag = std::to_string(n);
        prog.set_lower_bound(lay.delta[n], 0.0);
        prog.set_lower_bound(lay.flight_t[n], 0.0);
        prog.set_lower_bound(lay.y[n], 0.0);
        for (std::size_t w = 0; w < w_count; ++w)
            lay.u[n][w] = prog.add_var("u" + tag + "_" + std::to_string(w));
        for (std::size_t k = 0; k < k_count; ++k) {
            if (!served[k]) continue;
            const std::string sk = tag + "_" + std::to_string(k);
            lay.tau[n][k] = prog.add_var("tau" + sk);
            lay.v[n][k] = prog.add_var("v" + sk);
            lay.a[n][k] = prog.add_var("A" + sk);
            prog.set_lower_bound(lay.tau[n][k], 0.0);
            prog.set_lower_bound(lay.a[n][k], 0.0);
            if (matching)
                for (std::size_t w = 0; w < w_count; ++w) {
                    const std::string swk =
                        tag + "_" + std::to_string(w) + "_" + std::to_string(k);
                    lay.eta[n][w][k] = prog.add_var("eta" + swk);
                    lay.a_wk[n][w][k] = prog.add_var("B" + swk);
                    prog.set_lower_bound(lay.eta[n][w][k], 0.0);
                    prog.set_lower_bound(lay.a_wk[n][w][k], 0.0);
                }
        }
    }

    auto q_expr = [&](std::size_t i, int axis) -> conic::LinExpr {
        if (i == 0)
            return axis ? cfg.uav.start_xy_m.y : cfg.uav.start_xy_m.x;
        if (i == n_seg)
            return axis ? cfg.uav.finish_xy_m.y : cfg.uav.finish_xy_m.x;
        return lay.q[i][axis];
    };

    const double p0 = cfg.power.p0_w;
    const double pi_w = cfg.power.pi_w;
    const double delta_b = 3.0 / (cfg.power.u_tip_mps * cfg.power.u_tip_mps);
    const double delta_p = 0.5 * cfg.power.d0 * cfg.power.rho *
                           cfg.power.solidity * cfg.power.rotor_area_m2;
    const double v0sq = cfg.power.v0_mps * cfg.power.v0_mps;
    const double dz_base = cfg.uav.altitude_m;

    std::vector<std::size_t> all(w_count);
    std::iota(all.begin(), all.end(), std::size_t{0});

    for (std::size_t n = 0; n < n_seg; ++n) {
        const conic::LinExpr dx = q_expr(n + 1, 0) - q_expr(n, 0);
        const conic::LinExpr dy = q_expr(n + 1, 1) - q_expr(n, 1);
        prog.add_soc({lay.delta[n], dx, dy});
        prog.add_nonneg(cfg.uav.seg_max_m - lay.delta[n]);
        prog.add_nonneg(cfg.uav.v_max_mps * conic::LinExpr(lay.flight_t[n]) -
                        lay.delta[n]);

        conic::LinExpr tau_sum = 0.0;
        bool any_served = false;
        for (std::size_t k = 0; k < k_count; ++k)
            if (served[k]) {
                tau_sum += lay.tau[n][k];
                any_served = true;
            }
        if (any_served) prog.add_nonneg(lay.flight_t[n] - tau_sum);

        // Induced-power slack: t4 >= T^4/y^2 against the first-order
        // under-estimate of y^2 + |dq|^2/v0^2 around the anchor.
        const double y0 = local.y[n];
        const Vec2 dq0 = local.q[n + 1] - local.q[n];
        conic::LinExpr ytilde = 2.0 * y0 * conic::LinExpr(lay.y[n]);
        ytilde += -y0 * y0 - dot(dq0, dq0) / v0sq;
        ytilde += (2.0 * dq0.x / v0sq) * dx;
        ytilde += (2.0 * dq0.y / v0sq) * dy;
        const conic::Var t4 =
            prog.add_quartic_over_square(lay.flight_t[n], lay.y[n]);
        prog.add_nonneg(ytilde - t4);

        const conic::Var e_blade =
            prog.add_quad_over_lin(lay.delta[n], lay.flight_t[n]);
        const conic::Var e_drag =
            prog.add_cubic_over_square(lay.delta[n], lay.flight_t[n]);
        prog.add_objective(lay.flight_t[n], p0);
        prog.add_objective(e_blade, p0 * delta_b);
        prog.add_objective(e_drag, delta_p);
        prog.add_objective(lay.y[n], pi_w);

        const std::size_t e = n + 1;
        for (std::size_t w = 0; w < w_count; ++w)
            prog.add_soc({lay.u[n][w], q_expr(e, 0) - cfg.irss[w].xy_m.x,
                          q_expr(e, 1) - cfg.irss[w].xy_m.y,
                          dz_base - cfg.irss[w].height_m});

        for (std::size_t k = 0; k < k_count; ++k) {
            if (!served[k]) continue;
            prog.add_objective(lay.tau[n][k], cfg.uav.tx_power_w);
            prog.add_soc({lay.v[n][k], q_expr(e, 0) - cfg.ues[k].xy_m.x,
                          q_expr(e, 1) - cfg.ues[k].xy_m.y,
                          dz_base - cfg.ues[k].height_m});

            auto affine_rate = [&](const rate::AffineRateBound& b,
                                   std::span<const conic::Var> u_vars)
                -> conic::LinExpr {
                conic::LinExpr r = kRateScale * b.value_at_anchor;
                r += (kRateScale * b.gradient[0]) *
                     (conic::LinExpr(lay.v[n][k]) - b.anchor[0]);
                for (std::size_t j = 0; j < u_vars.size(); ++j)
                    r += (kRateScale * b.gradient[1 + j]) *
                         (conic::LinExpr(u_vars[j]) - b.anchor[1 + j]);
                return r;
            };

            if (!matching) {
                const rate::AffineRateBound bound = rate::taylor_lower_bound(
                    model, k, local.v[n][k],
                    w_count ? std::span<const double>(local.u[n])
                            : std::span<const double>{},
                    all);
                prog.add_rsoc({0.5 * affine_rate(bound, lay.u[n]),
                               lay.tau[n][k], lay.a[n][k]});
            } else {
                conic::LinExpr eta_sum = 0.0;
                for (std::size_t w = 0; w < w_count; ++w) {
                    const rate::AffineRateBound bound =
                        rate::taylor_lower_bound(
                            model, k, local.v[n][k],
                            std::span<const double>(&local.u[n][w], 1),
                            std::span<const std::size_t>(&w, 1));
                    prog.add_rsoc(
                        {0.5 * affine_rate(
                                   bound, std::span<const conic::Var>(
                                              &lay.u[n][w], 1)),
                         lay.eta[n][w][k], lay.a_wk[n][w][k]});
                    eta_sum += lay.eta[n][w][k];
                }
                prog.add_nonneg(lay.tau[n][k] - eta_sum);
            }
        }
    }

    // Delivery: the linearized square of each bit slack must cover the
    // quota plus margin.
    const double bit_scale = std::sqrt(kRateScale);
    for (std::size_t k = 0; k < k_count; ++k) {
        if (!served[k]) continue;
        conic::LinExpr total = 0.0;
        for (std::size_t n = 0; n < n_seg; ++n) {
            if (!matching) {
                const double a0 = local.a[n][k] * bit_scale;
                if (a0 > 0.0)
                    total += 2.0 * a0 * conic::LinExpr(lay.a[n][k]) - a0 * a0;
            } else {
                for (std::size_t w = 0; w < w_count; ++w) {
                    const double a0 = local.a_wk[n][w][k] * bit_scale;
                    if (a0 > 0.0)
                        total += 2.0 * a0 * conic::LinExpr(lay.a_wk[n][w][k]) -
                                 a0 * a0;
                }
            }
        }
        total += -kRateScale * (cfg.ues[k].data_bits + chi);
        prog.add_nonneg(total);
    }

    if (layout) *layout = std::move(lay);
    return prog;
}

namespace {

struct Assessment {
    double energy = 0.0;
    double max_violation = 0.0;
    double min_ratio = 1.0;
    std::vector<double> delivered;
    bool delivery_ok = true;
};

Assessment assess(const ScenarioConfig& cfg, Variant var,
                  const rate::RateModel& model, const Trajectory& traj,
                  double chi) {
    const std::size_t n_seg = traj.num_segments();
    const std::size_t k_count = cfg.ues.size();
    const std::size_t w_count = surface_free(var) ? 0 : cfg.irss.size();
    const bool matching =
        var == Variant::MimuMatching && !traj.match_times.empty();

    std::vector<std::size_t> all(w_count);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<double> u(w_count, 0.0);

    Assessment out;
    out.delivered.assign(k_count, 0.0);
    double viol = std::max(norm(traj.waypoints.front() - cfg.uav.start_xy_m),
                           norm(traj.waypoints.back() - cfg.uav.finish_xy_m));

    for (std::size_t n = 0; n < n_seg; ++n) {
        const double t = traj.flight_times[n];
        const double len = traj.segment_length(n);
        viol = std::max(viol, len - cfg.uav.seg_max_m);
        viol = std::max(viol, len - cfg.uav.v_max_mps * std::max(t, 0.0));
        if (!(t > 0.0)) viol = std::max(viol, 1.0);
        double tau_sum = 0.0;
        const Vec2 at = traj.waypoints[n + 1];
        for (std::size_t w = 0; w < w_count; ++w)
            u[w] = surface_distance(cfg, w, at);
        for (std::size_t k = 0; k < k_count; ++k) {
            const double tau = traj.tx_times[n][k];
            viol = std::max(viol, -tau);
            tau_sum += tau;
            const double v = link_height_distance(cfg, k, at);
            if (matching) {
                double eta_sum = 0.0;
                for (std::size_t w = 0; w < w_count; ++w) {
                    const double eta = traj.match_times[n][w][k];
                    viol = std::max(viol, -eta);
                    eta_sum += eta;
                    if (eta > 0.0)
                        out.delivered[k] +=
                            eta * single_surface_rate(model, k, v, u[w], w);
                }
                viol = std::max(viol, eta_sum - tau);
            } else if (tau > 0.0) {
                out.delivered[k] +=
                    tau * (w_count
                               ? rate::expected_rate(model, k, v, u, all)
                               : rate::expected_rate(model, k, v, {}, {}));
            }
        }
        viol = std::max(viol, tau_sum - t);
    }
    out.max_violation = std::max(0.0, viol);

    out.energy =
        total_energy(traj, cfg.uav.tx_power_w, cfg.power).total_j;
    for (std::size_t k = 0; k < k_count; ++k) {
        if (cfg.ues[k].data_bits <= 0.0) continue;
        const double need = cfg.ues[k].data_bits + chi;
        out.min_ratio = std::min(out.min_ratio, out.delivered[k] / need);
        if (out.delivered[k] <
            need - kFeasSlack * std::max(1.0, cfg.ues[k].data_bits))
            out.delivery_ok = false;
    }
    return out;
}

Trajectory extract_candidate(const ScenarioConfig& cfg,
                             const SubproblemLayout& lay,
                             const std::vector<double>& x, bool matching) {
    const std::size_t n_seg = static_cast<std::size_t>(lay.n_segments);
    const std::size_t k_count = static_cast<std::size_t>(lay.n_ues);
    const std::size_t w_count = static_cast<std::size_t>(lay.n_irs);
    auto val = [&](conic::Var v) { return x[static_cast<std::size_t>(v.id)]; };

    Trajectory out;
    out.waypoints.resize(n_seg + 1);
    out.waypoints.front() = cfg.uav.start_xy_m;
    out.waypoints.back() = cfg.uav.finish_xy_m;
    for (std::size_t i = 1; i < n_seg; ++i)
        out.waypoints[i] = {val(lay.q[i][0]), val(lay.q[i][1])};

    out.flight_times.resize(n_seg);
    out.tx_times.assign(n_seg, std::vector<double>(k_count, 0.0));
    if (matching)
        out.match_times.assign(
            n_seg, std::vector<std::vector<double>>(
                       w_count, std::vector<double>(k_count, 0.0)));

    for (std::size_t n = 0; n < n_seg; ++n) {
        const double t = std::max(val(lay.flight_t[n]), 1e-9);
        out.flight_times[n] = t;
        double tau_sum = 0.0;
        for (std::size_t k = 0; k < k_count; ++k) {
            if (lay.tau[n][k].id < 0) continue;
            out.tx_times[n][k] = std::max(0.0, val(lay.tau[n][k]));
            tau_sum += out.tx_times[n][k];
        }
        // Solver slop can leave the time shares a hair over budget; shrink
        // proportionally rather than hand validation a broken plan.
        if (tau_sum > t) {
            const double f = t / tau_sum;
            for (std::size_t k = 0; k < k_count; ++k) out.tx_times[n][k] *= f;
        }
        if (matching)
            for (std::size_t k = 0; k < k_count; ++k) {
                double eta_sum = 0.0;
                for (std::size_t w = 0; w < w_count; ++w) {
                    if (lay.eta[n][w][k].id < 0) continue;
                    out.match_times[n][w][k] =
                        std::max(0.0, val(lay.eta[n][w][k]));
                    eta_sum += out.match_times[n][w][k];
                }
                if (eta_sum > out.tx_times[n][k] && eta_sum > 0.0) {
                    const double f = out.tx_times[n][k] / eta_sum;
                    for (std::size_t w = 0; w < w_count; ++w)
                        out.match_times[n][w][k] *= f;
                }
            }
    }
    return out;
}

double lerp(double a, double b, double s) { return a + s * (b - a); }

Trajectory blend(const Trajectory& a, const Trajectory& b, double s) {
    Trajectory out = b;
    for (std::size_t i = 0; i < out.waypoints.size(); ++i)
        out.waypoints[i] = {lerp(a.waypoints[i].x, b.waypoints[i].x, s),
                            lerp(a.waypoints[i].y, b.waypoints[i].y, s)};
    for (std::size_t n = 0; n < out.flight_times.size(); ++n) {
        out.flight_times[n] = lerp(a.flight_times[n], b.flight_times[n], s);
        for (std::size_t k = 0; k < out.tx_times[n].size(); ++k)
            out.tx_times[n][k] = lerp(a.tx_times[n][k], b.tx_times[n][k], s);
    }
    if (!out.match_times.empty() && !a.match_times.empty())
        for (std::size_t n = 0; n < out.match_times.size(); ++n)
            for (std::size_t w = 0; w < out.match_times[n].size(); ++w)
                for (std::size_t k = 0; k < out.match_times[n][w].size(); ++k)
                    out.match_times[n][w][k] = lerp(a.match_times[n][w][k],
                                                    b.match_times[n][w][k], s);
    return out;
}

}  // namespace

PlanSolution sca_optimize(const ScenarioConfig& cfg, const ScaOptions& opts) {
    validate_scenario(cfg);
    ScenarioConfig run = cfg;
    const double chi = opts.margin_bits < 0 ? cfg.channel.data_margin_bits
                                            : opts.margin_bits;
    run.channel.data_margin_bits = chi;
    const Variant var = effective(opts.variant, run.irss.size());
    const bool matching = var == Variant::MimuMatching;

    const rate::RateModel model = rate::make_rate_model(run);
    Trajectory current =
        initial_plan(run, opts.n_segments_hint, !surface_free(var));
    if (current.num_segments() == 0)
        throw SolveError("mission collapses to a single point");

    LocalPoint local = make_local_point(run, current, var, model);
    if (matching && current.match_times.empty()) current.match_times = local.eta;

    Assessment last = assess(run, var, model, current, chi);
    if (!last.delivery_ok)
        throw SolveError("seed plan misses a quota; scenario is inconsistent");

    PlanSolution sol;
    sol.variant = to_string(opts.variant);
    sol.convergence.push_back(last.energy);
    sol.trace.push_back({last.energy, last.max_violation, last.min_ratio});
    double e_prev = last.energy;

    conic::SolverOptions sopts;
    sopts.tol = opts.solver_tol;

    for (int it = 1; it <= opts.max_iters; ++it) {
        SubproblemLayout lay;
        conic::ConicProgram prog =
            build_subproblem(run, var, local, model, chi, &lay);
        const conic::SolveReport rep = prog.solve(sopts);
        const bool usable =
            rep.status == conic::SolveStatus::Optimal ||
            (rep.status == conic::SolveStatus::NumericalLimit &&
             std::max(rep.primal_residual, rep.dual_residual) < 1e-5);
        if (!usable) {
            if (it == 1)
                throw SolveError("first subproblem unsolvable: " +
                                 conic::to_string(rep.status));
            if (opts.verbose)
                std::fprintf(stderr, "[%s] stop at iter %d: solver %s\n",
                             sol.variant.c_str(), it,
                             conic::to_string(rep.status).c_str());
            break;
        }

        const Trajectory cand = extract_candidate(run, lay, rep.x, matching);
        bool accepted = false;
        double step = 1.0;
        Assessment as;
        Trajectory chosen;
        for (int h = 0; h <= kMaxHalvings; ++h, step *= 0.5) {
            Trajectory trial = h == 0 ? cand : blend(current, cand, step);
            as = assess(run, var, model, trial, chi);
            if (as.energy <= e_prev + kMonotoneSlack && as.delivery_ok &&
                as.max_violation <= kFeasSlack) {
                accepted = true;
                chosen = std::move(trial);
                break;
            }
        }
        if (!accepted) {
            if (opts.verbose)
                std::fprintf(stderr,
                             "[%s] stop at iter %d: no acceptable step\n",
                             sol.variant.c_str(), it);
            break;
        }

        current = std::move(chosen);
        local = make_local_point(run, current, var, model);
        last = as;
        sol.convergence.push_back(last.energy);
        sol.trace.push_back({last.energy, last.max_violation, last.min_ratio});
        const double rel =
            (e_prev - last.energy) / std::max(1.0, std::abs(e_prev));
        e_prev = last.energy;
        if (opts.verbose)
            std::fprintf(stderr,
                         "[%s] it %3d  E %12.4f J  viol %.2e  deliv %.6f  "
                         "step %.4g\n",
                         sol.variant.c_str(), it, last.energy,
                         last.max_violation, last.min_ratio, step);
        if (rel < opts.rel_decrease_threshold) break;
    }

    sol.trajectory = current;
    sol.energy = total_energy(current, run.uav.tx_power_w, run.power);
    sol.delivered_bits = last.delivered;
    return sol;
}

MatchingAssignment matching_extraction(const ScenarioConfig& cfg,
                                       const PlanSolution& solution) {
    const Trajectory& traj = solution.trajectory;
    if (traj.match_times.empty())
        throw std::invalid_argument(
            "matching extraction needs per-surface transmit times");
    const std::size_t n_seg = traj.num_segments();
    const std::size_t k_count = cfg.ues.size();
    const std::size_t w_count = cfg.irss.size();
    const rate::RateModel model = rate::make_rate_model(cfg);

    MatchingAssignment out;
    out.chosen.assign(n_seg, std::vector<int>(k_count, -1));
    for (std::size_t n = 0; n < n_seg; ++n) {
        const Vec2 at = traj.waypoints[n + 1];
        for (std::size_t k = 0; k < k_count; ++k) {
            const double tau = traj.tx_times[n][k];
            if (tau <= 1e-9) continue;
            const double v = link_height_distance(cfg, k, at);
            std::size_t best = 0;
            double best_rate = -1.0;
            for (std::size_t w = 0; w < w_count; ++w) {
                const double r = single_surface_rate(
                    model, k, v, surface_distance(cfg, w, at), w);
                if (r > best_rate) {
                    best_rate = r;
                    best = w;
                }
            }
            out.chosen[n][k] = static_cast<int>(best);
            if (traj.match_times[n][best][k] < (1.0 - 1e-3) * tau) {
                out.degenerate = true;
                out.notes.push_back(
                    "segment " + std::to_string(n) + ", user " +
                    std::to_string(k) +
                    ": transmit mass is not concentrated on the best surface");
            }
        }
    }
    return out;
}

}  // namespace uavirs::sca

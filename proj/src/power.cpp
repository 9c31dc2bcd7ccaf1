#include "uavirs/power.hpp"

#include <cmath>
#include <stdexcept>

#include "uavirs/trajectory.hpp"

namespace uavirs {

double flight_power(double v_mps, const PowerParams& p) {
    const double v2 = v_mps * v_mps;
    const double blade = p.p0_w * (1.0 + 3.0 * v2 / (p.u_tip_mps * p.u_tip_mps));
    const double v0sq = p.v0_mps * p.v0_mps;
    const double ratio = v2 / (2.0 * v0sq);
    const double induced =
        p.pi_w * std::sqrt(std::sqrt(1.0 + ratio * ratio) - ratio);
    const double parasite =
        0.5 * p.d0 * p.rho * p.solidity * p.rotor_area_m2 * v2 * v_mps;
    return blade + induced + parasite;
}

namespace {

double power_per_meter(double v, const PowerParams& p) {
    return flight_power(v, p) / v;
}

}  // namespace

double energy_efficient_speed(const PowerParams& p) {
    // Coarse scan brackets the minimum and confirms a single descent/ascent
    // pattern before the golden-section refinement.
    const double lo = 0.1, hi = 100.0, step = 0.5;
    double best_v = lo, best_f = power_per_meter(lo, p);
    for (double v = lo + step; v <= hi; v += step) {
        const double f = power_per_meter(v, p);
        if (f < best_f) {
            best_f = f;
            best_v = v;
        }
    }
    double a = std::max(lo, best_v - step);
    double b = std::min(hi, best_v + step);

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = power_per_meter(c, p);
    double fd = power_per_meter(d, p);
    while (b - a > 1e-4) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = power_per_meter(c, p);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = power_per_meter(d, p);
        }
    }
    return 0.5 * (a + b);
}

EnergyBreakdown total_energy(const Trajectory& traj, double p_c,
                             const PowerParams& params) {
    EnergyBreakdown e;
    for (std::size_t n = 0; n < traj.num_segments(); ++n) {
        const double len = traj.segment_length(n);
        const double t = traj.flight_times[n];
        if (t <= 0.0) {
            if (len > 0.0)
                throw std::invalid_argument(
                    "segment " + std::to_string(n) +
                    " has positive length but no flight time");
            continue;
        }
        e.flight_j += t * flight_power(len / t, params);
        for (double tau : traj.tx_times[n]) e.comm_j += tau * p_c;
    }
    e.total_j = e.flight_j + e.comm_j;
    return e;
}

}  // namespace uavirs

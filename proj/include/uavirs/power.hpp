#pragma once

#include "uavirs/scenario.hpp"

namespace uavirs {

struct Trajectory;

struct EnergyBreakdown {
    double flight_j = 0.0;
    double comm_j = 0.0;
    double total_j = 0.0;
};

/// Rotary-wing propulsion power at horizontal speed v: blade profile term
/// growing with v^2, induced term decaying from hover, and parasite drag
/// growing with v^3.
double flight_power(double v_mps, const PowerParams& params);

/// Speed minimizing energy per meter traveled, argmin of P(v)/v.
/// Bracketed golden-section search to 1e-3 m/s after a unimodality pre-scan.
double energy_efficient_speed(const PowerParams& params);

/// Propulsion plus communication energy of a planned trajectory.
/// Segment speed is segment length over segment time; zero-length segments
/// burn hover power for their full duration.
EnergyBreakdown total_energy(const Trajectory& traj, double p_c,
                             const PowerParams& params);

}  // namespace uavirs

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "uavirs/power.hpp"
#include "uavirs/scenario.hpp"
#include "uavirs/types.hpp"

namespace uavirs {

/// Discretized flight plan. N segments connect N+1 waypoints; segment n runs
/// from waypoints[n] to waypoints[n+1] and is flown in flight_times[n]
/// seconds, during which tx_times[n][k] seconds are spent transmitting to
/// user k. match_times, when non-empty, splits each tx_times[n][k] across
/// surfaces (match_times[n][w][k]).
struct Trajectory {
    std::vector<Vec2> waypoints;
    std::vector<double> flight_times;
    std::vector<std::vector<double>> tx_times;
    std::vector<std::vector<std::vector<double>>> match_times;

    std::size_t num_segments() const { return flight_times.size(); }
    double segment_length(std::size_t n) const {
        return norm(waypoints[n + 1] - waypoints[n]);
    }
    double segment_speed(std::size_t n) const {
        return segment_length(n) / flight_times[n];
    }
    double path_length() const;
    double mission_time() const;
};

/// Per-iteration health of an optimizer run. objective_j duplicates the
/// convergence entry; the other two certify the iterate against the true
/// constraints rather than the convexified ones.
struct IterationStats {
    double objective_j = 0.0;
    double max_violation = 0.0;       // worst trajectory-invariant breach
    double min_delivery_ratio = 1.0;  // min over users of delivered/(quota+margin)
};

struct PlanSolution {
    Trajectory trajectory;
    EnergyBreakdown energy;
    std::vector<double> delivered_bits;
    std::vector<double> convergence;  // objective value per iteration
    std::vector<IterationStats> trace;
    std::string variant;
};

/// Seed plan: visit each user's overhead point in nearest-neighbor order,
/// fly at the energy-efficient speed, and hover over each user long enough
/// to deliver its quota. Feasible for every optimizer variant by
/// construction. With use_surfaces false the hover times are sized from the
/// direct-link rate alone.
///
/// n_segments_hint, when positive, overrides the default segment count of
/// ceil(1.5 * path_length / seg_max) for the moving part of the path.
Trajectory initial_plan(const ScenarioConfig& cfg, int n_segments_hint = 0,
                        bool use_surfaces = true);

/// Slant range from the aircraft at uav_xy to user ue.
double link_height_distance(const ScenarioConfig& cfg, std::size_t ue,
                            Vec2 uav_xy);

/// Names every violated trajectory invariant (within 1e-6 absolute slack);
/// empty means valid.
std::vector<std::string> validate(const Trajectory& traj,
                                  const ScenarioConfig& cfg);

/// Columns: n, x_m, y_m, delta_m, T_s, V_mps, tau_<k>_s per user, then
/// eta_<w>_<k>_s per (surface, user) when matching times are present.
/// Row n carries the segment that starts at waypoint n.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

Trajectory read_trajectory_csv(std::istream& in);

}  // namespace uavirs

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "uavirs/scenario.hpp"
#include "uavirs/trajectory.hpp"
#include "uavirs/types.hpp"

namespace uavirs::heuristic {

/// Low-complexity plan: pair users to surfaces, place one transmit point per
/// user between its best-rate point and the direct route, order the points
/// as a shortest open path, fly it at the energy-efficient speed and hover
/// out any residual data.
struct HeuristicPlan {
    std::vector<std::size_t> pairing;   // per user: surface index
    std::vector<Vec2> q_hat;            // per user: best-rate point
    std::vector<Vec2> q_bar;            // per user: projection on the direct route
    std::vector<double> fractions;      // per user: toy-flight delivery fraction
    std::vector<Vec2> transmit_points;  // per user
    std::vector<std::size_t> visit_order;
    PlanSolution solution;
};

/// Nearest surface per user by 3-D distance, ties to the lowest index.
std::vector<std::size_t> pair_ues(const ScenarioConfig& cfg);

/// Platform position maximizing the single-surface expected rate on the
/// segment between the user and its surface. 0.1 m grid plus refinement.
Vec2 best_rate_point(const ScenarioConfig& cfg, std::size_t ue_k,
                     std::size_t irs_w);

/// Fraction of each quota delivered by a straight start-to-finish flight at
/// the energy-efficient speed with equal time split across users. Users with
/// a zero quota report +infinity.
std::vector<double> toy_fractions(const ScenarioConfig& cfg);

/// q*_k between best-rate point and route projection, moved toward the route
/// by min(fraction, 1).
std::vector<Vec2> transmit_points(std::span<const double> fractions,
                                  std::span<const Vec2> q_hat,
                                  std::span<const Vec2> q_bar);

/// Shortest Hamiltonian path from start through every point to end. Exact
/// dynamic programming up to 12 points, nearest-neighbor plus 2-opt beyond.
std::vector<std::size_t> open_path_tsp(std::span<const Vec2> points,
                                       Vec2 start, Vec2 end);

HeuristicPlan plan(const ScenarioConfig& cfg);

}  // namespace uavirs::heuristic

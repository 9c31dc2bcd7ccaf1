#pragma once

#include <string>
#include <vector>

#include "uavirs/conic.hpp"
#include "uavirs/rate.hpp"
#include "uavirs/scenario.hpp"
#include "uavirs/trajectory.hpp"

namespace uavirs::sca {

enum class Variant { Sisu, MimuGeneral, MimuMatching, NoIrs };

Variant variant_from_string(const std::string& name);
std::string to_string(Variant v);

/// Anchor state for one convexification step: the previous iterate's
/// waypoints, times and slack values. Slacks are stored consistent with the
/// trajectory (distance slacks equal the true distances, speed slack binding,
/// delivered-bit slacks equal sqrt(tau * rate)).
struct LocalPoint {
    std::vector<Vec2> q;                        // N+1 waypoints
    std::vector<double> delta;                  // N segment lengths
    std::vector<double> flight_t;               // N
    std::vector<std::vector<double>> tau;       // N x K
    std::vector<double> y;                      // N speed slack
    std::vector<std::vector<double>> u;         // N x W platform-surface distances
    std::vector<std::vector<double>> v;         // N x K platform-user distances
    std::vector<std::vector<double>> a;         // N x K delivered-bit slack
    std::vector<std::vector<double>> rate;      // N x K expected rate at anchor
    // Matching variant only: per-surface splits and their slacks/rates.
    std::vector<std::vector<std::vector<double>>> eta;     // N x W x K
    std::vector<std::vector<std::vector<double>>> a_wk;    // N x W x K
    std::vector<std::vector<std::vector<double>>> rate_wk; // N x W x K
};

struct ScaOptions {
    int max_iters = 60;
    double rel_decrease_threshold = 1e-3;
    /// Extra bits demanded beyond each quota; negative means use the
    /// scenario's configured margin.
    double margin_bits = -1.0;
    Variant variant = Variant::MimuGeneral;
    double solver_tol = 1e-7;
    int n_segments_hint = 0;
    bool verbose = false;
};

/// Variable layout of a built subproblem, for solution extraction.
struct SubproblemLayout {
    int n_segments = 0;
    int n_ues = 0;
    int n_irs = 0;  // surfaces the variant actually models
    std::vector<std::vector<conic::Var>> q;     // (N+1) x 2; interior only
    std::vector<conic::Var> delta, flight_t, y;
    std::vector<std::vector<conic::Var>> tau, a, v;
    std::vector<std::vector<conic::Var>> u;     // N x W
    std::vector<std::vector<std::vector<conic::Var>>> eta, a_wk;  // matching
};

/// Anchor state consistent with a concrete trajectory.
LocalPoint make_local_point(const ScenarioConfig& cfg, const Trajectory& traj,
                            Variant variant, const rate::RateModel& model);

/// Convex subproblem around the anchor: linearized delivered-bit and speed
/// slack couplings, first-order rate under-estimators over the distance
/// slacks, and the flight-geometry cones. The no-surface variant drops every
/// surface term, which makes it byte-identical to a scenario with no
/// surfaces configured.
conic::ConicProgram build_subproblem(const ScenarioConfig& cfg, Variant variant,
                                     const LocalPoint& local,
                                     const rate::RateModel& model,
                                     double margin_bits,
                                     SubproblemLayout* layout = nullptr);

/// Iterates build/solve/re-anchor until the relative objective decrease
/// falls below the threshold. Every accepted iterate is feasible for the
/// true (non-convexified) problem and the recorded objective sequence is
/// nonincreasing.
PlanSolution sca_optimize(const ScenarioConfig& cfg, const ScaOptions& opts);

/// Chosen surface per (segment, user) recovered from a matching-variant
/// solution; -1 where no transmission happens. Entries are degenerate when
/// the time split puts visible mass on a strictly worse surface.
struct MatchingAssignment {
    std::vector<std::vector<int>> chosen;  // N x K
    bool degenerate = false;
    std::vector<std::string> notes;
};

MatchingAssignment matching_extraction(const ScenarioConfig& cfg,
                                       const PlanSolution& solution);

}  // namespace uavirs::sca

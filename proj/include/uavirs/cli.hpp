#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uavirs/types.hpp"

namespace uavirs::cli {

struct RateValidateArgs {
    std::string scenario_path;
    std::string track_path;      // JSON [[x,y],...]; empty = straight track
    int track_points = 50;       // used when no track file is given
    std::size_t ue_index = 0;
    std::size_t n_samples = 100000;
    std::uint64_t seed = 1;      // 0 = scenario seed
    int n_threads = 0;           // 0 = hardware
    std::string out_dir;
};

struct OptimizeArgs {
    std::string scenario_path;
    std::string variant = "mimu-general";
    int max_iters = 60;
    double tol = 1e-3;           // relative objective decrease threshold
    double margin_bits = -1.0;   // negative = scenario value
    std::uint64_t seed = 0;
    std::string out_dir;
    bool verbose = false;
};

struct SweepArgs {
    std::string scenario_path;
    std::vector<double> q_bits;  // ascending grid
    std::vector<std::string> variants;
    int max_iters = 60;
    double tol = 1e-3;
    double margin_bits = -1.0;
    std::uint64_t seed = 0;
    int n_threads = 0;
    std::string out_dir;
};

/// Per-position closed-form vs Monte Carlo rate comparison written to
/// rate_validate.csv. Returns the worst relative gap encountered.
double cmd_rate_validate(const RateValidateArgs& args);

/// Runs one planner variant and writes trajectory.csv, energy.json and, for
/// the iterative variants, convergence.csv (plus matching.csv when the time
/// split carries per-surface columns).
void cmd_optimize(const OptimizeArgs& args);

/// Energy versus data volume over a grid, one row per (quota, variant),
/// written to sweep.csv. Grid points run concurrently; row order and
/// contents are independent of the thread count.
void cmd_sweep(const SweepArgs& args);

}  // namespace uavirs::cli

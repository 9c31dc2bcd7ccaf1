#include "uavirs/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <thread>
#include <vector>

#include <json.hpp>
#include "uavirs/channel.hpp"
#include "uavirs/heuristic.hpp"
#include "uavirs/power.hpp"
#include "uavirs/rate.hpp"
#include "uavirs/sca.hpp"
#include "uavirs/scenario.hpp"
#include "uavirs/trajectory.hpp"

namespace uavirs::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

fs::path prep_out_dir(const std::string& dir) {
    const fs::path p = dir.empty() ? fs::path(".") : fs::path(dir);
    fs::create_directories(p);
    return p;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p);
    if (!f) throw ScenarioError("cannot write " + p.string());
    return f;
}

PlanSolution run_variant(const ScenarioConfig& cfg, const std::string& variant,
                         int max_iters, double tol, double margin_bits,
                         bool verbose) {
    if (variant == "heuristic") {
        ScenarioConfig run = cfg;
        if (margin_bits >= 0.0) run.channel.data_margin_bits = margin_bits;
        return heuristic::plan(run).solution;
    }
    sca::ScaOptions opts;
    opts.variant = sca::variant_from_string(variant);
    opts.max_iters = max_iters;
    opts.rel_decrease_threshold = tol;
    opts.margin_bits = margin_bits;
    opts.verbose = verbose;
    return sca::sca_optimize(cfg, opts);
}

double min_delivered(const ScenarioConfig& cfg, const PlanSolution& sol) {
    double out = std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t k = 0; k < cfg.ues.size(); ++k)
        if (cfg.ues[k].data_bits > 0.0) {
            out = std::min(out, sol.delivered_bits[k]);
            any = true;
        }
    return any ? out : 0.0;
}

}  // namespace

double cmd_rate_validate(const RateValidateArgs& args) {
    const ScenarioConfig cfg = load_scenario(args.scenario_path);
    if (args.ue_index >= cfg.ues.size())
        throw ScenarioError("user index out of range");

    std::vector<Vec2> track;
    if (!args.track_path.empty()) {
        std::ifstream in(args.track_path);
        if (!in) throw ScenarioError("cannot read track " + args.track_path);
        for (const auto& row : json::parse(in))
            track.push_back({row.at(0).get<double>(), row.at(1).get<double>()});
        if (track.empty()) throw ScenarioError("track file has no points");
    } else {
        const int n = std::max(2, args.track_points);
        for (int i = 0; i < n; ++i) {
            const double s = double(i) / double(n - 1);
            track.push_back(cfg.uav.start_xy_m +
                            s * (cfg.uav.finish_xy_m - cfg.uav.start_xy_m));
        }
    }
    const std::uint64_t seed = args.seed ? args.seed : cfg.seed;

    const rate::RateModel model = rate::make_rate_model(cfg);
    std::vector<std::size_t> all(cfg.irss.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<double> u(cfg.irss.size(), 0.0);

    auto out = open_out(prep_out_dir(args.out_dir) / "rate_validate.csv");
    out << "position_index,x_m,y_m,rate_closed_form_bps,rate_mc_bps,"
           "mc_stderr_bps\n";
    double worst = 0.0;
    for (std::size_t i = 0; i < track.size(); ++i) {
        const Vec2 p = track[i];
        const double v = link_height_distance(cfg, args.ue_index, p);
        for (std::size_t w = 0; w < all.size(); ++w)
            u[w] = channel::link_geometry(cfg.irss[w].xy_m,
                                          cfg.irss[w].height_m, p,
                                          cfg.uav.altitude_m)
                       .distance_m;
        const double cf = rate::expected_rate(model, args.ue_index, v, u, all);
        const channel::McRate mc =
            channel::monte_carlo_rate(cfg, p, args.ue_index, all,
                                      args.n_samples, seed + i,
                                      args.n_threads);
        worst = std::max(worst, std::abs(cf - mc.rate_bps) /
                                    std::max(mc.rate_bps, 1e-12));
        out << i << ',' << fmt(p.x) << ',' << fmt(p.y) << ',' << fmt(cf)
            << ',' << fmt(mc.rate_bps) << ',' << fmt(mc.stderr_bps) << '\n';
    }
    return worst;
}

void cmd_optimize(const OptimizeArgs& args) {
    ScenarioConfig cfg = load_scenario(args.scenario_path);
    if (args.seed) cfg.seed = args.seed;
    const PlanSolution sol =
        run_variant(cfg, args.variant, args.max_iters, args.tol,
                    args.margin_bits, args.verbose);

    const fs::path dir = prep_out_dir(args.out_dir);
    {
        auto f = open_out(dir / "trajectory.csv");
        write_trajectory_csv(f, sol.trajectory);
    }
    {
        json e;
        e["variant"] = sol.variant;
        e["flight_j"] = sol.energy.flight_j;
        e["comm_j"] = sol.energy.comm_j;
        e["total_j"] = sol.energy.total_j;
        e["delivered_bits"] = sol.delivered_bits;
        e["iterations"] =
            sol.convergence.empty() ? 0 : sol.convergence.size() - 1;
        e["mission_time_s"] = sol.trajectory.mission_time();
        e["path_length_m"] = sol.trajectory.path_length();
        if (!sol.trajectory.match_times.empty()) {
            const sca::MatchingAssignment asg =
                sca::matching_extraction(cfg, sol);
            e["matching_degenerate"] = asg.degenerate;
        }
        open_out(dir / "energy.json") << e.dump(2) << '\n';
    }
    if (args.variant != "heuristic") {
        auto f = open_out(dir / "convergence.csv");
        f << "iter,objective_j,max_constraint_violation,"
             "true_delivered_bits_min_ratio\n";
        for (std::size_t i = 0; i < sol.trace.size(); ++i)
            f << i << ',' << fmt(sol.trace[i].objective_j) << ','
              << fmt(sol.trace[i].max_violation) << ','
              << fmt(sol.trace[i].min_delivery_ratio) << '\n';
    }
    if (!sol.trajectory.match_times.empty()) {
        const sca::MatchingAssignment asg = sca::matching_extraction(cfg, sol);
        auto f = open_out(dir / "matching.csv");
        f << "segment,user,surface,tau_s,eta_chosen_s\n";
        const Trajectory& t = sol.trajectory;
        for (std::size_t n = 0; n < t.num_segments(); ++n)
            for (std::size_t k = 0; k < cfg.ues.size(); ++k) {
                if (t.tx_times[n][k] <= 1e-9) continue;
                const int w = asg.chosen[n][k];
                f << n << ',' << k << ',' << w << ','
                  << fmt(t.tx_times[n][k]) << ','
                  << fmt(w >= 0 ? t.match_times[n][w][k] : 0.0) << '\n';
            }
    }
}

void cmd_sweep(const SweepArgs& args) {
    ScenarioConfig base = load_scenario(args.scenario_path);
    if (args.seed) base.seed = args.seed;
    if (args.q_bits.empty())
        throw ScenarioError("sweep needs at least one data volume");
    if (!std::is_sorted(args.q_bits.begin(), args.q_bits.end()))
        throw ScenarioError("data volumes must be ascending");
    if (args.variants.empty())
        throw ScenarioError("sweep needs at least one variant");
    for (const auto& v : args.variants)
        if (v != "heuristic") sca::variant_from_string(v);

    struct Point {
        double q = 0.0;
        std::string variant;
        PlanSolution sol;
        ScenarioConfig cfg;
        std::string status = "ok";
    };
    std::vector<Point> points;
    for (double q : args.q_bits)
        for (const auto& v : args.variants) {
            Point p;
            p.q = q;
            p.variant = v;
            p.cfg = base;
            for (auto& ue : p.cfg.ues) ue.data_bits = q;
            points.push_back(std::move(p));
        }

    // Static task list plus per-point results: output is identical for any
    // worker count. A failed point keeps its row; the rest still run.
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= points.size()) return;
            try {
                points[i].sol =
                    run_variant(points[i].cfg, points[i].variant,
                                args.max_iters, args.tol, args.margin_bits,
                                false);
            } catch (const std::exception& e) {
                points[i].status = e.what();
                for (char& c : points[i].status)
                    if (c == ',' || c == '\n') c = ';';
            }
        }
    };
    std::size_t n_threads =
        args.n_threads > 0 ? std::size_t(args.n_threads)
                           : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min(n_threads, points.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    auto out = open_out(prep_out_dir(args.out_dir) / "sweep.csv");
    out << "q_bits,variant,status,total_j,flight_j,comm_j,mission_time_s,"
           "path_length_m,iterations,min_delivered_bits\n";
    for (const Point& p : points) {
        out << fmt(p.q) << ',' << p.variant << ',' << p.status << ',';
        if (p.status == "ok")
            out << fmt(p.sol.energy.total_j) << ','
                << fmt(p.sol.energy.flight_j) << ','
                << fmt(p.sol.energy.comm_j) << ','
                << fmt(p.sol.trajectory.mission_time()) << ','
                << fmt(p.sol.trajectory.path_length()) << ','
                << (p.sol.convergence.empty() ? 0
                                              : p.sol.convergence.size() - 1)
                << ',' << fmt(min_delivered(p.cfg, p.sol)) << '\n';
        else
            out << ",,,,,,\n";
    }
}

}  // namespace uavirs::cli

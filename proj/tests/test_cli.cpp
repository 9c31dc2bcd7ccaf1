#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "uavirs/cli.hpp"
#include "uavirs/scenario.hpp"
#include <json.hpp>

using namespace uavirs;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    fs::path d = fs::temp_directory_path() / ("uavirs_cli_" + tag);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_scenario(const ScenarioConfig& cfg, const std::string& tag) {
    fs::path p = fresh_dir(tag) / "scenario.json";
    std::ofstream(p) << serialize_scenario(cfg);
    return p;
}

ScenarioConfig two_cell_cfg() {
    ScenarioConfig cfg = default_scenario();
    cfg.ues.clear();
    cfg.irss.clear();
    UeSpec u1;
    u1.xy_m = {30.0, 55.0};
    u1.data_bits = 4e6;
    cfg.ues.push_back(u1);
    UeSpec u2;
    u2.xy_m = {70.0, 45.0};
    u2.data_bits = 4e6;
    cfg.ues.push_back(u2);
    IrsSpec s1;
    s1.xy_m = {27.0, 57.0};
    cfg.irss.push_back(s1);
    IrsSpec s2;
    s2.xy_m = {73.0, 43.0};
    cfg.irss.push_back(s2);
    cfg.uav.seg_max_m = 40.0;
    cfg.channel.data_margin_bits = 1e4;
    validate_scenario(cfg);
    return cfg;
}

}  // namespace

TEST_CASE("rate validation output does not depend on the worker count") {
    const fs::path scenario = write_scenario(two_cell_cfg(), "rv_scn");
    cli::RateValidateArgs args;
    args.scenario_path = scenario.string();
    args.track_points = 6;
    args.n_samples = 400;
    args.seed = 7;

    args.n_threads = 1;
    args.out_dir = fresh_dir("rv1").string();
    const double g1 = cli::cmd_rate_validate(args);
    const std::string csv1 =
        slurp(fs::path(args.out_dir) / "rate_validate.csv");

    args.n_threads = 3;
    args.out_dir = fresh_dir("rv3").string();
    const double g3 = cli::cmd_rate_validate(args);

    CHECK(g1 == g3);
    CHECK(csv1 == slurp(fs::path(args.out_dir) / "rate_validate.csv"));
    CHECK(g1 < 0.25);
}

TEST_CASE("rate validation rejects a bad user index") {
    const fs::path scenario = write_scenario(two_cell_cfg(), "rv_bad");
    cli::RateValidateArgs args;
    args.scenario_path = scenario.string();
    args.ue_index = 9;
    args.out_dir = fresh_dir("rv_bad_out").string();
    CHECK_THROWS_AS(cli::cmd_rate_validate(args), ScenarioError);
}

TEST_CASE("optimize writes the file set for each planner family") {
    const fs::path scenario = write_scenario(two_cell_cfg(), "opt_scn");

    SUBCASE("heuristic") {
        cli::OptimizeArgs args;
        args.scenario_path = scenario.string();
        args.variant = "heuristic";
        args.out_dir = fresh_dir("opt_h").string();
        cli::cmd_optimize(args);
        const fs::path d(args.out_dir);
        CHECK(fs::exists(d / "trajectory.csv"));
        CHECK(!fs::exists(d / "convergence.csv"));
        const auto e = nlohmann::json::parse(slurp(d / "energy.json"));
        CHECK(e["variant"] == "heuristic");
        CHECK(e["total_j"].get<double>() > 0.0);
        CHECK(e["delivered_bits"].size() == 2);
    }

    SUBCASE("successive convex rounds") {
        cli::OptimizeArgs args;
        args.scenario_path = scenario.string();
        args.variant = "mimu-general";
        args.max_iters = 2;
        args.out_dir = fresh_dir("opt_g").string();
        cli::cmd_optimize(args);
        const fs::path d(args.out_dir);
        CHECK(fs::exists(d / "convergence.csv"));
        std::istringstream conv(slurp(d / "convergence.csv"));
        std::string line;
        std::getline(conv, line);
        CHECK(line ==
              "iter,objective_j,max_constraint_violation,"
              "true_delivered_bits_min_ratio");
        const auto e = nlohmann::json::parse(slurp(d / "energy.json"));
        CHECK(e["iterations"].get<int>() >= 1);
    }

    SUBCASE("matching adds the assignment table") {
        cli::OptimizeArgs args;
        args.scenario_path = scenario.string();
        args.variant = "mimu-matching";
        args.max_iters = 2;
        args.out_dir = fresh_dir("opt_m").string();
        cli::cmd_optimize(args);
        const fs::path d(args.out_dir);
        CHECK(fs::exists(d / "matching.csv"));
        const auto e = nlohmann::json::parse(slurp(d / "energy.json"));
        CHECK(e.contains("matching_degenerate"));
    }
}

TEST_CASE("optimize runs are reproducible byte for byte") {
    const fs::path scenario = write_scenario(two_cell_cfg(), "opt_re");
    cli::OptimizeArgs args;
    args.scenario_path = scenario.string();
    args.variant = "mimu-general";
    args.max_iters = 3;
    args.seed = 11;

    args.out_dir = fresh_dir("re_a").string();
    cli::cmd_optimize(args);
    const std::string a_traj = slurp(fs::path(args.out_dir) / "trajectory.csv");
    const std::string a_energy = slurp(fs::path(args.out_dir) / "energy.json");

    args.out_dir = fresh_dir("re_b").string();
    cli::cmd_optimize(args);
    CHECK(a_traj == slurp(fs::path(args.out_dir) / "trajectory.csv"));
    CHECK(a_energy == slurp(fs::path(args.out_dir) / "energy.json"));
}

TEST_CASE("sweep output does not depend on the worker count") {
    const fs::path scenario = write_scenario(two_cell_cfg(), "sw_scn");
    cli::SweepArgs args;
    args.scenario_path = scenario.string();
    args.q_bits = {0.0, 4e6};
    args.variants = {"heuristic", "no-irs"};
    args.max_iters = 2;

    args.n_threads = 1;
    args.out_dir = fresh_dir("sw1").string();
    cli::cmd_sweep(args);
    const std::string one = slurp(fs::path(args.out_dir) / "sweep.csv");

    args.n_threads = 4;
    args.out_dir = fresh_dir("sw4").string();
    cli::cmd_sweep(args);
    CHECK(one == slurp(fs::path(args.out_dir) / "sweep.csv"));

    std::istringstream rows(one);
    std::string header;
    std::getline(rows, header);
    CHECK(header ==
          "q_bits,variant,status,total_j,flight_j,comm_j,mission_time_s,"
          "path_length_m,iterations,min_delivered_bits");
    int n_rows = 0;
    for (std::string line; std::getline(rows, line);) {
        ++n_rows;
        CHECK(line.find(",ok,") != std::string::npos);
    }
    CHECK(n_rows == 4);
}

TEST_CASE("a failing sweep point is recorded and the rest still run") {
    ScenarioConfig cfg = two_cell_cfg();
    cfg.uav.altitude_m = 1e160;
    const fs::path scenario = write_scenario(cfg, "sw_fail");
    cli::SweepArgs args;
    args.scenario_path = scenario.string();
    args.q_bits = {0.0, 4e6};
    args.variants = {"heuristic"};
    args.out_dir = fresh_dir("sw_fail_out").string();
    cli::cmd_sweep(args);

    std::istringstream rows(slurp(fs::path(args.out_dir) / "sweep.csv"));
    std::string header, q0, q1;
    std::getline(rows, header);
    REQUIRE(std::getline(rows, q0));
    REQUIRE(std::getline(rows, q1));
    CHECK(q0.find(",ok,") != std::string::npos);
    CHECK(q1.find(",ok,") == std::string::npos);
    CHECK(q1.find("unreachable") != std::string::npos);
}

TEST_CASE("sweep rejects malformed grids") {
    const fs::path scenario = write_scenario(two_cell_cfg(), "sw_bad");
    cli::SweepArgs args;
    args.scenario_path = scenario.string();
    args.variants = {"heuristic"};
    args.out_dir = fresh_dir("sw_bad_out").string();

    args.q_bits = {};
    CHECK_THROWS_AS(cli::cmd_sweep(args), ScenarioError);
    args.q_bits = {2.0, 1.0};
    CHECK_THROWS_AS(cli::cmd_sweep(args), ScenarioError);
    args.q_bits = {1.0};
    args.variants = {"warp-drive"};
    CHECK_THROWS_AS(cli::cmd_sweep(args), ScenarioError);
}

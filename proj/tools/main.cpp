#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "uavirs/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{
        "Energy-minimal trajectory, speed and link scheduling planner for a "
        "rotary-wing platform serving ground users via reflecting surfaces"};
    app.require_subcommand(1);

    uavirs::cli::RateValidateArgs rv;
    CLI::App* c_rv = app.add_subcommand(
        "rate-validate",
        "Compare the closed-form expected rate against Monte Carlo draws "
        "along a track");
    c_rv->add_option("--scenario", rv.scenario_path, "Scenario JSON file")
        ->required();
    c_rv->add_option("--track", rv.track_path,
                     "Track JSON [[x,y],...]; omitted means a straight "
                     "start-finish track");
    c_rv->add_option("--points", rv.track_points,
                     "Point count for the straight track");
    c_rv->add_option("--ue", rv.ue_index, "User index under test");
    c_rv->add_option("--samples", rv.n_samples, "Monte Carlo draws per point");
    c_rv->add_option("--seed", rv.seed, "RNG seed; 0 uses the scenario seed");
    c_rv->add_option("--threads", rv.n_threads,
                     "Worker threads; 0 uses the hardware count");
    c_rv->add_option("--out", rv.out_dir, "Output directory");

    uavirs::cli::OptimizeArgs op;
    CLI::App* c_op = app.add_subcommand(
        "optimize", "Plan one scenario with a single planner variant");
    c_op->add_option("--scenario", op.scenario_path, "Scenario JSON file")
        ->required();
    c_op->add_option("--variant", op.variant, "Planner variant")
        ->check(CLI::IsMember({"sisu", "mimu-general", "mimu-matching",
                               "no-irs", "heuristic"}));
    c_op->add_option("--max-iters", op.max_iters, "Iteration cap");
    c_op->add_option("--tol", op.tol,
                     "Relative objective decrease that stops the iteration");
    c_op->add_option("--margin-bits", op.margin_bits,
                     "Delivery margin; negative uses the scenario value");
    c_op->add_option("--seed", op.seed, "Seed override; 0 keeps the scenario");
    c_op->add_option("--out", op.out_dir, "Output directory");
    c_op->add_flag("--verbose", op.verbose, "Per-iteration progress on stderr");

    uavirs::cli::SweepArgs sw;
    CLI::App* c_sw = app.add_subcommand(
        "sweep", "Energy against data volume over a grid of quotas");
    c_sw->add_option("--scenario", sw.scenario_path, "Scenario JSON file")
        ->required();
    c_sw->add_option("--q-bits", sw.q_bits,
                     "Ascending per-user data volumes in bits")
        ->required()
        ->delimiter(',');
    c_sw->add_option("--variants", sw.variants, "Planner variants to run")
        ->required()
        ->delimiter(',');
    c_sw->add_option("--max-iters", sw.max_iters, "Iteration cap per point");
    c_sw->add_option("--tol", sw.tol,
                     "Relative objective decrease that stops the iteration");
    c_sw->add_option("--margin-bits", sw.margin_bits,
                     "Delivery margin; negative uses the scenario value");
    c_sw->add_option("--seed", sw.seed, "Seed override; 0 keeps the scenario");
    c_sw->add_option("--threads", sw.n_threads,
                     "Worker threads; 0 uses the hardware count");
    c_sw->add_option("--out", sw.out_dir, "Output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_rv->parsed()) {
            const double worst = uavirs::cli::cmd_rate_validate(rv);
            std::printf("worst_rel_gap=%.17g\n", worst);
        } else if (c_op->parsed()) {
            uavirs::cli::cmd_optimize(op);
        } else {
            uavirs::cli::cmd_sweep(sw);
        }
    } catch (const std::exception& e) {
        const nlohmann::json err = {{"error", e.what()}};
        std::fprintf(stderr, "%s\n", err.dump().c_str());
        return 1;
    }
    return 0;
}

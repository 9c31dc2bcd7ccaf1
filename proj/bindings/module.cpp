#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "uavirs/channel.hpp"
#include "uavirs/heuristic.hpp"
#include "uavirs/power.hpp"
#include "uavirs/rate.hpp"
#include "uavirs/sca.hpp"
#include "uavirs/scenario.hpp"
#include "uavirs/trajectory.hpp"

namespace py = pybind11;
using namespace uavirs;

namespace {

py::dict solution_to_dict(const PlanSolution& sol) {
    py::dict out;
    out["variant"] = sol.variant;
    out["total_j"] = sol.energy.total_j;
    out["flight_j"] = sol.energy.flight_j;
    out["comm_j"] = sol.energy.comm_j;
    out["delivered_bits"] = sol.delivered_bits;
    out["mission_time_s"] = sol.trajectory.mission_time();
    out["path_length_m"] = sol.trajectory.path_length();
    out["objective_trace_j"] = sol.convergence;

    py::list waypoints;
    for (const Vec2& w : sol.trajectory.waypoints)
        waypoints.append(py::make_tuple(w.x, w.y));
    out["waypoints"] = waypoints;
    out["flight_times_s"] = sol.trajectory.flight_times;
    out["tx_times_s"] = sol.trajectory.tx_times;
    return out;
}

PlanSolution run_plan(const ScenarioConfig& cfg, const std::string& variant,
                      int max_iters, double tol, double margin_bits) {
    if (variant == "heuristic") {
        ScenarioConfig run = cfg;
        if (margin_bits >= 0.0) run.channel.data_margin_bits = margin_bits;
        return heuristic::plan(run).solution;
    }
    sca::ScaOptions opt;
    opt.variant = sca::variant_from_string(variant);
    opt.max_iters = max_iters;
    opt.rel_decrease_threshold = tol;
    opt.margin_bits = margin_bits;
    return sca::sca_optimize(cfg, opt);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Energy-minimal trajectory and link scheduling planner for a "
              "rotary-wing platform serving ground users via reflecting "
              "surfaces";

    py::class_<ScenarioConfig>(m, "Scenario")
        .def_property_readonly(
            "n_users",
            [](const ScenarioConfig& c) { return c.ues.size(); })
        .def_property_readonly(
            "n_surfaces",
            [](const ScenarioConfig& c) { return c.irss.size(); })
        .def_property_readonly(
            "seed", [](const ScenarioConfig& c) { return c.seed; })
        .def("to_json",
             [](const ScenarioConfig& c) { return serialize_scenario(c); })
        .def("with_data_bits",
             [](const ScenarioConfig& c, double q) {
                 ScenarioConfig out = c;
                 for (auto& ue : out.ues) ue.data_bits = q;
                 validate_scenario(out);
                 return out;
             },
             py::arg("q_bits"),
             "Copy of the scenario with every user's quota replaced.")
        .def("__repr__", [](const ScenarioConfig& c) {
            return "<Scenario " + std::to_string(c.ues.size()) + " users, " +
                   std::to_string(c.irss.size()) + " surfaces>";
        });

    m.def("default_scenario", &default_scenario);
    m.def("load_scenario", &load_scenario, py::arg("path"));
    m.def("parse_scenario", &parse_scenario, py::arg("json_text"));

    m.def("flight_power",
          [](const ScenarioConfig& cfg, double v) {
              return flight_power(v, cfg.power);
          },
          py::arg("scenario"), py::arg("speed_mps"),
          "Propulsion power in watts at the given forward speed.");
    m.def("energy_efficient_speed",
          [](const ScenarioConfig& cfg) {
              return energy_efficient_speed(cfg.power);
          },
          py::arg("scenario"),
          "Speed minimizing propulsion energy per meter flown.");

    m.def("expected_rate",
          [](const ScenarioConfig& cfg, double x, double y, std::size_t ue) {
              if (ue >= cfg.ues.size())
                  throw py::index_error("user index out of range");
              const rate::RateModel model = rate::make_rate_model(cfg);
              std::vector<std::size_t> active(cfg.irss.size());
              for (std::size_t w = 0; w < active.size(); ++w) active[w] = w;
              const double d_ue =
                  channel::link_geometry(cfg.ues[ue].xy_m,
                                         cfg.ues[ue].height_m, {x, y},
                                         cfg.uav.altitude_m)
                      .distance_m;
              std::vector<double> d_irs;
              for (const auto& irs : cfg.irss)
                  d_irs.push_back(channel::link_geometry(irs.xy_m,
                                                         irs.height_m, {x, y},
                                                         cfg.uav.altitude_m)
                                      .distance_m);
              return rate::expected_rate(model, ue, d_ue, d_irs, active);
          },
          py::arg("scenario"), py::arg("x_m"), py::arg("y_m"),
          py::arg("ue") = 0,
          "Closed-form expected rate in bit/s with every surface assisting.");

    m.def("monte_carlo_rate",
          [](const ScenarioConfig& cfg, double x, double y, std::size_t ue,
             std::size_t samples, std::uint64_t seed) {
              if (ue >= cfg.ues.size())
                  throw py::index_error("user index out of range");
              std::vector<std::size_t> active(cfg.irss.size());
              for (std::size_t w = 0; w < active.size(); ++w) active[w] = w;
              const channel::McRate mc = channel::monte_carlo_rate(
                  cfg, {x, y}, ue, active, samples,
                  seed ? seed : cfg.seed, 0);
              return py::make_tuple(mc.rate_bps, mc.stderr_bps);
          },
          py::arg("scenario"), py::arg("x_m"), py::arg("y_m"),
          py::arg("ue") = 0, py::arg("samples") = 10000, py::arg("seed") = 0,
          "Sampled rate and its standard error; seed 0 uses the scenario "
          "seed.");

    m.def("optimize",
          [](const ScenarioConfig& cfg, const std::string& variant,
             int max_iters, double tol, double margin_bits) {
              return solution_to_dict(
                  run_plan(cfg, variant, max_iters, tol, margin_bits));
          },
          py::arg("scenario"), py::arg("variant"), py::arg("max_iters") = 60,
          py::arg("tol") = 1e-3, py::arg("margin_bits") = -1.0,
          "Plan a trajectory and schedule; variant is one of sisu, "
          "mimu-general, mimu-matching, no-irs or heuristic. Returns a dict "
          "with energies, delivered bits, the objective trace and the "
          "trajectory arrays.");

    py::register_exception<ScenarioError>(m, "ScenarioError");
    py::register_exception<SolveError>(m, "SolveError");
}

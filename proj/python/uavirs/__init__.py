"""Energy-minimal trajectory, speed and link scheduling planner for a
rotary-wing platform serving ground users via reflecting surfaces.

The heavy lifting lives in the compiled extension; this package re-exports
its surface. Scenarios are JSON documents (see ``load_scenario`` /
``Scenario.to_json``) and planners return plain dicts.
"""

from ._core import (
    Scenario,
    ScenarioError,
    SolveError,
    default_scenario,
    energy_efficient_speed,
    expected_rate,
    flight_power,
    load_scenario,
    monte_carlo_rate,
    optimize,
    parse_scenario,
)

__all__ = [
    "Scenario",
    "ScenarioError",
    "SolveError",
    "default_scenario",
    "energy_efficient_speed",
    "expected_rate",
    "flight_power",
    "load_scenario",
    "monte_carlo_rate",
    "optimize",
    "parse_scenario",
]

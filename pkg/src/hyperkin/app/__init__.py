"""Scenario catalog, grid runner, reports and the command-line interface."""

from .report import build_report, emit_report
from .runner import GridResult, RunOptions, run_grid
from .scenario_io import ScenarioError, load_scenario
from .scenarios import GridSpec, Scenario, builtin_scenarios, random_trig_motion, scenario_by_name

__all__ = [
    "GridResult", "GridSpec", "RunOptions", "Scenario", "ScenarioError", "build_report", "builtin_scenarios",
    "emit_report", "load_scenario", "random_trig_motion", "run_grid", "scenario_by_name",
]

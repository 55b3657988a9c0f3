"""Command-line application: configuration, scenarios, runs and sweeps."""

from .runner import convergence_harness, list_scenarios, run_scenario

__all__ = ["convergence_harness", "list_scenarios", "run_scenario"]

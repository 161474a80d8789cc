"""Experiment configuration, CSV drivers, self-checks and the CLI."""
from bayesnr.harness.config import ExperimentConfig, load, loads
from bayesnr.harness.runs import run_curve, run_mc, run_sweep, run_thresholds
from bayesnr.harness.validate import run_validate

__all__ = ["ExperimentConfig", "load", "loads", "run_curve", "run_sweep", "run_mc", "run_thresholds", "run_validate"]

"""Deterministic simulator of a DAG ledger over reliable broadcast, with a
coordinated reordering adversary and an order-fairness auditor."""

from .config import ConfigError, SimConfig, SweepSpec, load_config, load_sweep
from .sim import InvariantError, RunResult, run, summarize

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "SimConfig", "SweepSpec", "load_config", "load_sweep",
    "InvariantError", "RunResult", "run", "summarize", "__version__",
]

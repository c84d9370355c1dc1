"""Trust-based fuzzy congestion control for wireless multimedia sensor networks."""
from .config import (ConfigError, ExperimentSpec, Protocol, ScenarioConfig, Variant, parse_experiment,
                     parse_scenario)
from .experiment import run_experiment
from .netsim import BehaviorProfile, MetricsTimeline, init_scenario, run

__version__ = "0.1.0"

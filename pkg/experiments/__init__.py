from .graph import create_experiment_graph, run_experiment
from .specs import EXPERIMENT_IDS, ExperimentSpec, GridPoint, default_spec, field_length_for_density

__all__ = [
    "ExperimentSpec",
    "GridPoint",
    "EXPERIMENT_IDS",
    "default_spec",
    "field_length_for_density",
    "create_experiment_graph",
    "run_experiment",
]

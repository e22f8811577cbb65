from .generators import PRESETS, GeneratorConfig, generate_mixture_data, preset_generator, true_posterior
from .experiment import ExperimentConfig, ExperimentResult, SweepConfig, run_experiment

__all__ = [
    "PRESETS",
    "GeneratorConfig",
    "generate_mixture_data",
    "preset_generator",
    "true_posterior",
    "ExperimentConfig",
    "ExperimentResult",
    "SweepConfig",
    "run_experiment",
]

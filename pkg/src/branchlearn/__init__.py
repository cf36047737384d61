"""Spike-pattern classification with nonlinear dendrites and structural plasticity."""

__version__ = "0.1.0"

from .model import (Connectome, ModelKind, NonlinearityConfig, b, b_leak,
                    branch_activation, classify, g_heaviside, g_margin,
                    neuron_activation, random_connectome)
from .patterns import (BinaryPattern, SpikePattern, TaskSpec, generate_random_task,
                       rf_encode, to_rate_spikes, to_single_spikes)
from .learning import LearnConfig, TrainTrace, fitness_epoch, mae, \
    replacement_step, train
from .capacity import linear_capacity, nonlinear_capacity

__all__ = [
    "__version__",
    "BinaryPattern", "SpikePattern", "TaskSpec", "generate_random_task",
    "rf_encode", "to_rate_spikes", "to_single_spikes",
    "Connectome", "ModelKind", "NonlinearityConfig", "b", "b_leak",
    "branch_activation", "classify", "g_heaviside", "g_margin",
    "neuron_activation", "random_connectome",
    "LearnConfig", "TrainTrace", "fitness_epoch", "mae", "replacement_step",
    "train",
    "linear_capacity", "nonlinear_capacity",
]

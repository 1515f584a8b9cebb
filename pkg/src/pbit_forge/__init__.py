"""Memristor-crossbar / stochastic-MTJ Ising machine simulator."""
from .annealer import AnnealSchedule, IsingMachine, MachineConfig, run_annealing
from .ising import IsingModel, SpinDomain, SpinState, energy, exact_boltzmann
from .mapping import map_coloring, map_maxcut, to_crossbar
from .oracle import exhaustive_ground_state

__all__ = [
    "AnnealSchedule",
    "IsingMachine",
    "IsingModel",
    "MachineConfig",
    "SpinDomain",
    "SpinState",
    "energy",
    "exact_boltzmann",
    "exhaustive_ground_state",
    "map_coloring",
    "map_maxcut",
    "run_annealing",
    "to_crossbar",
]
__version__ = "0.1.0"

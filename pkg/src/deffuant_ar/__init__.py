"""Deffuant opinion dynamics with attraction and repulsion on a 1-d lattice.

Event-driven lattice simulation with gap trackers, numerical checks of the
divergence argument, and a mean-field density integrator.
"""
from .model import (
    CANONICAL,
    Boundary,
    Branch,
    InteractionOutcome,
    ModelParams,
    OpinionLattice,
    ParameterError,
    gap,
    initial_config,
    interact,
    validate_params,
)
from .events import Event, EventStream, count_interactions, next_event
from .trackers import TrackerState, divergence_stats, init_trackers, on_event
from .simulation import LatticeSimulation
from . import analysis, meanfield

__version__ = "0.1.0"

__all__ = [
    "CANONICAL", "Boundary", "Branch", "InteractionOutcome", "ModelParams", "OpinionLattice",
    "ParameterError", "gap", "initial_config", "interact", "validate_params",
    "Event", "EventStream", "count_interactions", "next_event",
    "TrackerState", "divergence_stats", "init_trackers", "on_event",
    "LatticeSimulation", "analysis", "meanfield",
]

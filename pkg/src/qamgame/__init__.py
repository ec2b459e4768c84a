"""Energy-efficient, delay-constrained link adaptation for M-QAM uplinks.

The package models a single packet link (``phy``), finds the SIR that
maximizes bits per joule (``optimizer``), maps an average-delay bound onto
a minimum SIR through an M/G/1 ARQ queue (``queueing``) and assembles the
users' best responses into a Nash equilibrium (``game``).
"""

from .errors import (ConfigError, DelayBoundError, DomainError, FitError, InfeasibleError,
                     InfeasibleTargetError, QamGameError, QosInfeasibleError, SolverError,
                     UnstableQueueError)
from .game import (EquilibriumReport, NetworkScene, Strategy, UserSpec, best_response,
                   best_response_interval, nash_equilibrium, verify_equilibrium)
from .optimizer import OptimumPoint, gamma_star, invert_efficiency
from .phy import (GainParams, ModScheme, PacketConfig, TcmConfig, default_tcm_config,
                  efficiency, efficiency_derivative, fit_coding_gain, q_tail, q_tail_inv)
from .queueing import LinkRate, TrafficQos, avg_delay, eta_threshold, simulate_queue

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DelayBoundError", "DomainError", "FitError", "InfeasibleError",
    "InfeasibleTargetError", "QamGameError", "QosInfeasibleError", "SolverError",
    "UnstableQueueError", "EquilibriumReport", "NetworkScene", "Strategy", "UserSpec",
    "best_response", "best_response_interval", "nash_equilibrium", "verify_equilibrium",
    "OptimumPoint", "gamma_star", "invert_efficiency", "GainParams", "ModScheme",
    "PacketConfig", "TcmConfig", "default_tcm_config", "efficiency", "efficiency_derivative",
    "fit_coding_gain", "q_tail", "q_tail_inv", "LinkRate", "TrafficQos", "avg_delay",
    "eta_threshold", "simulate_queue",
]

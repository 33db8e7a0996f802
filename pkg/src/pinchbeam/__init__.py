"""Pinching-antenna downlink simulator and joint beamforming optimizers."""

from .baseline import UlaScenario, solve_conventional, ula_channel
from .channel import (
    EffectiveChannel,
    FeasibleSet,
    PinchingLayout,
    Scenario,
    distance,
    effective_channel,
    inwaveguide_vector,
    received_sinr,
)
from .coupledmode import (
    AmplitudeLadder,
    CouplingConfig,
    full_radiation_length,
    integrate_modes,
    make_equal_ladder,
    make_proportional_ladder,
    mode_amplitudes,
    power_split,
)
from .harness import (
    ChannelErrorModel,
    ExperimentConfig,
    drop_users,
    run_sweep,
)
from .penalty import PenaltyReport, PenaltyState, run_penalty
from .txbf import PowerMinResult, solve_powermin
from .zfopt import ZfSolution, optimal_powers, sweep_positions, zf_matrix, zf_objective

__all__ = [
    "AmplitudeLadder",
    "ChannelErrorModel",
    "CouplingConfig",
    "EffectiveChannel",
    "ExperimentConfig",
    "FeasibleSet",
    "PenaltyReport",
    "PenaltyState",
    "PinchingLayout",
    "PowerMinResult",
    "Scenario",
    "UlaScenario",
    "ZfSolution",
    "distance",
    "drop_users",
    "effective_channel",
    "full_radiation_length",
    "integrate_modes",
    "inwaveguide_vector",
    "make_equal_ladder",
    "make_proportional_ladder",
    "mode_amplitudes",
    "optimal_powers",
    "power_split",
    "received_sinr",
    "run_penalty",
    "run_sweep",
    "solve_conventional",
    "solve_powermin",
    "sweep_positions",
    "ula_channel",
    "zf_matrix",
    "zf_objective",
]

__version__ = "0.1.0"

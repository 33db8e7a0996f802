"""Coupled-mode model of the waveguide / pinching-antenna power exchange.

A pinched dielectric element acts as an open-ended directional coupler: the
guided mode A(x) and the coupled mode B(x) trade power along the contact
region at a rate set by the coupling coefficient kappa, detuned by the
mismatch delta_beta between the two propagation constants.  The closed-form
amplitudes and a fixed-step RK4 integrator of the underlying ODE system are
both provided so each can check the other.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleLadderError


@dataclass(frozen=True)
class CouplingConfig:
    """Physical parameters of a single coupler.

    kappa   -- mode coupling coefficient, rad/m
    length  -- coupling length L, m
    beta_g  -- waveguide propagation constant, rad/m
    beta_p  -- pinching-antenna propagation constant, rad/m
    """

    kappa: float
    length: float = 0.0
    beta_g: float = 440.0
    beta_p: float = 440.0

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.length < 0:
            raise ValueError(f"length must be non-negative, got {self.length}")
        if self.beta_g <= 0 or self.beta_p <= 0:
            raise ValueError("propagation constants must be positive")

    @property
    def delta_beta(self):
        return self.beta_p - self.beta_g

    @property
    def phi(self):
        """Effective exchange rate sqrt(kappa^2 + delta_beta^2 / 4)."""
        return math.hypot(self.kappa, self.delta_beta / 2.0)


def mode_amplitudes(cfg, x):
    """Closed-form mode amplitudes (A, B) after propagating a distance x.

    A(x) = (cos(phi x) + j (db / 2 phi) sin(phi x)) exp(-j db x / 2)
    B(x) = -j (kappa / phi) sin(phi x) exp(+j db x / 2)

    with db = beta_p - beta_g.  |A|^2 + |B|^2 = 1 for all x.
    """
    if x < 0:
        raise ValueError(f"propagation distance must be non-negative, got {x}")
    db = cfg.delta_beta
    phi = cfg.phi
    s, c = math.sin(phi * x), math.cos(phi * x)
    half_twist = cmath.exp(-0.5j * db * x)
    a = (c + 0.5j * (db / phi) * s) * half_twist
    b = -1j * (cfg.kappa / phi) * s / half_twist
    return a, b


def integrate_modes(cfg, x, step=None):
    """Fixed-step RK4 integration of the coupled amplitude ODEs.

    dA/dx = -j kappa B exp(-j db x),  dB/dx = -j kappa A exp(+j db x)
    from A(0) = 1, B(0) = 0.  Serves as the independent numerical check of
    :func:`mode_amplitudes`.  The default step resolves the fastest
    oscillation with 1000 points per cycle.
    """
    if x < 0:
        raise ValueError(f"propagation distance must be non-negative, got {x}")
    if step is None:
        step = 1e-3 / cfg.phi
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    if x == 0.0:
        return 1.0 + 0.0j, 0.0 + 0.0j

    n = max(1, int(math.ceil(x / step)))
    dt = x / n
    kappa = cfg.kappa
    db = cfg.delta_beta

    def deriv(t, a, b):
        twist = cmath.exp(1j * db * t)
        return -1j * kappa * b / twist, -1j * kappa * a * twist

    a, b = 1.0 + 0.0j, 0.0 + 0.0j
    t = 0.0
    for i in range(n):
        k1a, k1b = deriv(t, a, b)
        k2a, k2b = deriv(t + dt / 2, a + dt / 2 * k1a, b + dt / 2 * k1b)
        k3a, k3b = deriv(t + dt / 2, a + dt / 2 * k2a, b + dt / 2 * k2b)
        k4a, k4b = deriv(t + dt, a + dt * k3a, b + dt * k3b)
        a += dt / 6 * (k1a + 2 * k2a + 2 * k3a + k4a)
        b += dt / 6 * (k1b + 2 * k2b + 2 * k3b + k4b)
        t = (i + 1) * dt
    return a, b


def power_split(cfg, x):
    """Fraction of power left in the guide vs. moved into the antenna at x.

    Returns (p_guide, p_pinch) with p_pinch = (kappa/phi)^2 sin^2(phi x).
    """
    if x < 0:
        raise ValueError(f"propagation distance must be non-negative, got {x}")
    ratio = (cfg.kappa / cfg.phi) ** 2
    p_pinch = ratio * math.sin(cfg.phi * x) ** 2
    return 1.0 - p_pinch, p_pinch


def full_radiation_length(kappa):
    """Coupling length pi/(2 kappa) that moves all power into the antenna
    when the propagation constants are matched."""
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    return math.pi / (2.0 * kappa)


@dataclass(frozen=True)
class AmplitudeLadder:
    """Radiation amplitudes alpha_1..alpha_M of the antennas on one guide.

    alphas[m] is the fraction of the *input* signal amplitude radiated by
    antenna m; deltas[m] = sin(kappa L_m) is the per-antenna coupling ratio
    applied to whatever power is still in the guide when the wave arrives.
    """

    alphas: np.ndarray
    deltas: np.ndarray
    model_kind: str  # "equal" | "proportional"

    def __post_init__(self):
        alphas = np.asarray(self.alphas, dtype=float)
        deltas = np.asarray(self.deltas, dtype=float)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "deltas", deltas)
        if alphas.ndim != 1 or alphas.shape != deltas.shape or alphas.size < 1:
            raise ValueError("alphas and deltas must be 1-D and equal length")
        if np.any(alphas <= 0) or np.any(alphas >= 1 + 1e-12):
            raise ValueError("each alpha must lie in (0, 1]")
        if np.any(deltas <= 0) or np.any(deltas > 1 + 1e-12):
            raise ValueError("each delta must lie in (0, 1]")
        if float(np.sum(alphas**2)) > 1 + 1e-9:
            raise ValueError("total radiated fraction exceeds unity")

    def __len__(self):
        return self.alphas.size

    @property
    def total_radiated(self):
        return float(np.sum(self.alphas**2))

    def implied_lengths(self, kappa):
        """Coupling lengths L_m = arcsin(delta_m)/kappa realizing the ladder."""
        if kappa <= 0:
            raise ValueError(f"kappa must be positive, got {kappa}")
        return np.arcsin(np.clip(self.deltas, 0.0, 1.0)) / kappa


def make_equal_ladder(n_antennas, delta_eq):
    """Ladder in which every antenna radiates the same fraction delta_eq of
    the input power; antenna lengths differ so that later antennas couple a
    growing share of the dwindling remainder."""
    if n_antennas < 1:
        raise ValueError("need at least one antenna")
    if delta_eq <= 0:
        raise ValueError(f"delta_eq must be positive, got {delta_eq}")
    if delta_eq > 1.0 / n_antennas + 1e-15:
        raise InfeasibleLadderError(
            f"delta_eq={delta_eq} > 1/M={1.0 / n_antennas}: the last antenna "
            "would need to couple more than the remaining power"
        )
    m = np.arange(n_antennas)
    deltas = np.sqrt(np.minimum(delta_eq / (1.0 - m * delta_eq), 1.0))
    alphas = np.full(n_antennas, math.sqrt(delta_eq))
    return AmplitudeLadder(alphas=alphas, deltas=deltas, model_kind="equal")


def make_proportional_ladder(n_antennas, total_radiated):
    """Ladder of identically manufactured antennas, each coupling the same
    ratio delta of the power still in the guide.

    delta solves 1 - (1 - delta^2)^M = total_radiated in closed form, so
    sum(alpha_m^2) equals total_radiated exactly.
    """
    if n_antennas < 1:
        raise ValueError("need at least one antenna")
    if not 0.0 < total_radiated < 1.0:
        raise ValueError(
            f"total_radiated must lie in (0, 1), got {total_radiated}"
        )
    delta_sq = 1.0 - (1.0 - total_radiated) ** (1.0 / n_antennas)
    delta = math.sqrt(delta_sq)
    m = np.arange(n_antennas)
    alphas = delta * (1.0 - delta_sq) ** (m / 2.0)
    deltas = np.full(n_antennas, delta)
    return AmplitudeLadder(alphas=alphas, deltas=deltas, model_kind="proportional")

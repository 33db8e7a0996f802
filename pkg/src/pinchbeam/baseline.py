"""Conventional fixed-antenna MIMO reference: a half-wavelength ULA at the
wall, one antenna per RF chain, reusing the exact power-min solver."""

from dataclasses import dataclass

import numpy as np

from .channel import MIN_DISTANCE, distance
from .errors import DegenerateGeometryError
from .txbf import solve_powermin


@dataclass(frozen=True)
class UlaScenario:
    """Half-wavelength uniform linear array anchored at ``base``.

    ``axis`` selects the aperture direction: 'x' runs the array down the
    room (parallel to the waveguides), 'y' runs it along the wall so the
    service area sits broadside.
    """

    users: np.ndarray          # (K, 3)
    wavelength: float
    noise_powers: np.ndarray
    sinr_targets: np.ndarray
    n_antennas: int
    base: tuple = (0.0, 0.0, 3.0)
    axis: str = "x"

    def __post_init__(self):
        object.__setattr__(self, "users", np.asarray(self.users, float))
        object.__setattr__(self, "noise_powers", np.asarray(self.noise_powers, float))
        object.__setattr__(self, "sinr_targets", np.asarray(self.sinr_targets, float))
        if self.n_antennas < self.users.shape[0]:
            raise ValueError("need at least as many antennas as users")
        if self.axis not in ("x", "y"):
            raise ValueError(f"axis must be 'x' or 'y', got {self.axis!r}")

    @property
    def spacing(self):
        return self.wavelength / 2.0

    @property
    def antenna_positions(self):
        """(N, 3) positions (n - 1) * lambda / 2 along ``axis`` from base."""
        n = np.arange(self.n_antennas)
        pos = np.tile(np.asarray(self.base, float), (self.n_antennas, 1))
        pos[:, 0 if self.axis == "x" else 1] += n * self.spacing
        return pos

    @property
    def eta(self):
        return self.wavelength / (4.0 * np.pi)

    @property
    def beta0(self):
        return 2.0 * np.pi / self.wavelength


def ula_channel(ula):
    """(N, K) channel; column k drives user k with received amplitude
    conj(entry), so |entry| = eta / r and received power |h_k^H w|^2."""
    n, k = ula.n_antennas, ula.users.shape[0]
    h = np.zeros((n, k), dtype=complex)
    pos = ula.antenna_positions
    for ant in range(n):
        r = distance(pos[ant], ula.users[:, 1], ula.users[:, 2],
                     ula.users[:, 0])
        # distance() treats its first argument as the user; the metric is
        # symmetric so roles can be swapped to vectorize over users
        if np.min(r) < MIN_DISTANCE:
            raise DegenerateGeometryError("user on top of an array element")
        h[ant, :] = (ula.eta / r) * np.exp(1j * ula.beta0 * r)
    return h


def solve_conventional(ula, tol=1e-10, max_iters=500):
    """Exact SINR-constrained power minimization on the ULA channel."""
    return solve_powermin(ula_channel(ula), ula.sinr_targets,
                          ula.noise_powers, tol=tol, max_iters=max_iters)

"""Geometry, feasible sets, and effective-channel synthesis.

The downlink couples N waveguides (each carrying M pinching antennas) to K
ground users.  Everything the optimizers need is collapsed into the N x K
effective matrix ``psi`` with entries psi[n, k] = g(x_n)^H h_k(x_n), plus its
per-antenna split ``phis`` where psi = sum_m phis[m] and

    phis[m][n, k] = (eta * alpha_m / r) * exp(j * (beta0 * r + beta_g * x))

with r the antenna-to-user distance.  The received-signal coefficient of
user k from waveguide n is conj(psi[n, k]).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .coupledmode import AmplitudeLadder
from .errors import DegenerateGeometryError

MIN_DISTANCE = 1e-6  # m, antennas may not sit on a user
GRID_EPS = 1e-9      # m, float slack for spacing / interval comparisons


@dataclass(frozen=True)
class FeasibleSet:
    """Positions an antenna may occupy along its waveguide.

    Continuous: the interval [0, x_max].  Discrete: the uniform grid
    {i * x_max / (q_points - 1), i = 0..q_points-1}, endpoints included.
    """

    kind: str  # "continuous" | "discrete"
    x_max: float
    q_points: int | None = None

    def __post_init__(self):
        if self.kind not in ("continuous", "discrete"):
            raise ValueError(f"unknown feasible-set kind {self.kind!r}")
        if self.x_max <= 0:
            raise ValueError("x_max must be positive")
        if self.kind == "discrete":
            if self.q_points is None or self.q_points < 2:
                raise ValueError("discrete set needs q_points >= 2")

    def grid_point(self, i):
        """Canonical value of grid point i; all construction and validation
        must go through this one expression so comparisons stay exact."""
        return i * self.x_max / (self.q_points - 1)

    def grid(self):
        return np.arange(self.q_points) * self.x_max / (self.q_points - 1)

    def contains(self, x):
        if self.kind == "continuous":
            return -GRID_EPS <= x <= self.x_max + GRID_EPS
        i = round(x * (self.q_points - 1) / self.x_max)
        if i < 0 or i >= self.q_points:
            return False
        return self.grid_point(i) == x

    def snap(self, x):
        """Nearest canonical point (discrete) or clipped value (continuous)."""
        if self.kind == "continuous":
            return min(max(x, 0.0), self.x_max)
        i = round(x * (self.q_points - 1) / self.x_max)
        i = min(max(i, 0), self.q_points - 1)
        return self.grid_point(i)


@dataclass(frozen=True)
class Scenario:
    """Immutable description of one downlink instance.

    waveguide_y/waveguide_z give the line of each waveguide (parallel to the
    x-axis); users are (x, y, z) ground positions.  sinr_targets are linear.
    """

    waveguide_y: np.ndarray
    waveguide_z: np.ndarray
    users: np.ndarray
    wavelength: float
    n_g: float
    noise_powers: np.ndarray
    sinr_targets: np.ndarray
    ladder: AmplitudeLadder
    feasible: FeasibleSet
    min_spacing: float

    def __post_init__(self):
        object.__setattr__(self, "waveguide_y", np.asarray(self.waveguide_y, float))
        object.__setattr__(self, "waveguide_z", np.asarray(self.waveguide_z, float))
        object.__setattr__(self, "users", np.asarray(self.users, float))
        object.__setattr__(self, "noise_powers", np.asarray(self.noise_powers, float))
        object.__setattr__(self, "sinr_targets", np.asarray(self.sinr_targets, float))
        n, k = self.n_waveguides, self.n_users
        if self.users.ndim != 2 or self.users.shape[1] != 3:
            raise ValueError("users must be a (K, 3) array")
        if self.waveguide_z.shape != (n,):
            raise ValueError("waveguide_y and waveguide_z must match")
        if not (n >= k >= 1):
            raise ValueError(f"need N >= K >= 1, got N={n}, K={k}")
        if self.wavelength <= 0 or self.n_g <= 0 or self.min_spacing < 0:
            raise ValueError("wavelength, n_g must be positive; spacing >= 0")
        if self.noise_powers.shape != (k,) or np.any(self.noise_powers <= 0):
            raise ValueError("noise_powers must be K positive values")
        if self.sinr_targets.shape != (k,) or np.any(self.sinr_targets <= 0):
            raise ValueError("sinr_targets must be K positive values")

    @property
    def n_waveguides(self):
        return self.waveguide_y.size

    @property
    def n_users(self):
        return self.users.shape[0]

    @property
    def n_antennas(self):
        return len(self.ladder)

    @property
    def beta0(self):
        return 2.0 * math.pi / self.wavelength

    @property
    def beta_g(self):
        return self.n_g * self.beta0

    @property
    def eta(self):
        return self.wavelength / (4.0 * math.pi)


@dataclass(frozen=True)
class PinchingLayout:
    """Antenna x-positions, one column per waveguide, rows ascending."""

    x: np.ndarray  # (M, N)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        x.flags.writeable = False
        object.__setattr__(self, "x", x)
        if x.ndim != 2:
            raise ValueError("layout must be an (M, N) matrix")

    def validate(self, scenario):
        """Raise ValueError unless every position is feasible and spaced."""
        m, n = self.x.shape
        if (m, n) != (scenario.n_antennas, scenario.n_waveguides):
            raise ValueError(
                f"layout shape {self.x.shape} does not match scenario "
                f"({scenario.n_antennas}, {scenario.n_waveguides})"
            )
        for j in range(n):
            col = self.x[:, j]
            for v in col:
                if not scenario.feasible.contains(v):
                    raise ValueError(f"position {v!r} outside the feasible set")
            gaps = np.diff(col)
            if np.any(gaps < scenario.min_spacing - GRID_EPS):
                raise ValueError(
                    f"waveguide {j}: spacing below {scenario.min_spacing} m"
                )

    @classmethod
    def uniform(cls, scenario):
        """Evenly spread starting layout (m + 1/2) * x_max / M per guide,
        snapped to the grid for discrete activation."""
        m = scenario.n_antennas
        xmax = scenario.feasible.x_max
        base = (np.arange(m) + 0.5) * xmax / m
        col = np.array([scenario.feasible.snap(v) for v in base])
        return cls(x=np.tile(col[:, None], (1, scenario.n_waveguides)))


def distance(user, waveguide_y, waveguide_z, x_pos):
    """Euclidean distance from a user to an antenna at x_pos on the guide
    running along {y = waveguide_y, z = waveguide_z}.  Vectorized in x_pos."""
    ux, uy, uz = user[0], user[1], user[2]
    omega = (waveguide_y - uy) ** 2 + (waveguide_z - uz) ** 2
    return np.sqrt((np.asarray(x_pos) - ux) ** 2 + omega)


def inwaveguide_vector(x_col, alphas, beta_g):
    """In-guide response alpha_m * exp(-j beta_g x_m) for one waveguide."""
    x_col = np.asarray(x_col, dtype=float)
    return np.asarray(alphas) * np.exp(-1j * beta_g * x_col)


def antenna_response(scenario, wg, ant, x_pos):
    """Column(s) of phi entries added by antenna ``ant`` on waveguide ``wg``
    sitting at x_pos: shape (K,) for scalar x_pos, (K, C) for a vector."""
    scalar = np.ndim(x_pos) == 0
    x_arr = np.atleast_1d(np.asarray(x_pos, dtype=float))
    users = scenario.users
    wy, wz = scenario.waveguide_y[wg], scenario.waveguide_z[wg]
    alpha = scenario.ladder.alphas[ant]
    omega = (wy - users[:, 1]) ** 2 + (wz - users[:, 2]) ** 2
    r = np.sqrt((x_arr[None, :] - users[:, 0][:, None]) ** 2 + omega[:, None])
    if np.min(r) < MIN_DISTANCE:
        raise DegenerateGeometryError(
            f"user within {MIN_DISTANCE} m of an antenna on waveguide {wg}"
        )
    phase = scenario.beta0 * r + scenario.beta_g * x_arr[None, :]
    out = (scenario.eta * alpha / r) * np.exp(1j * phase)
    return out[:, 0] if scalar else out


@dataclass(frozen=True)
class EffectiveChannel:
    """psi = sum_m phis[m]; column k of psi drives user k's receive signal."""

    psi: np.ndarray            # (N, K)
    phis: list = field(default_factory=list)  # M arrays of shape (N, K)


def freespace_vector(scenario, user_index, x_col, wg):
    """Conjugate-convention free-space vector between one user and all
    antennas of one waveguide: entries eta * exp(+j beta0 r) / r."""
    user = scenario.users[user_index]
    r = distance(user, scenario.waveguide_y[wg], scenario.waveguide_z[wg], x_col)
    if np.min(r) < MIN_DISTANCE:
        raise DegenerateGeometryError(
            f"user {user_index} within {MIN_DISTANCE} m of waveguide {wg}"
        )
    return scenario.eta * np.exp(1j * scenario.beta0 * r) / r


def effective_channel(scenario, layout):
    """Build the per-antenna split and the stacked effective channel.

    The result is cross-checked against the independent g^H h construction;
    a mismatch indicates an internal inconsistency and raises RuntimeError.
    """
    n, k, m = scenario.n_waveguides, scenario.n_users, scenario.n_antennas
    phis = [np.zeros((n, k), dtype=complex) for _ in range(m)]
    for wg in range(n):
        for ant in range(m):
            phis[ant][wg, :] = antenna_response(scenario, wg, ant, layout.x[ant, wg])
    psi = np.sum(phis, axis=0)

    check = np.zeros_like(psi)
    for wg in range(n):
        g = inwaveguide_vector(layout.x[:, wg], scenario.ladder.alphas, scenario.beta_g)
        for user in range(k):
            h = freespace_vector(scenario, user, layout.x[:, wg], wg)
            check[wg, user] = np.vdot(g, h)
    # relative Frobenius: single entries may cancel deeply, the stack not
    if np.linalg.norm(psi - check) > 1e-10 * max(np.linalg.norm(psi), 1e-300):
        raise RuntimeError("effective-channel constructions disagree")
    return EffectiveChannel(psi=psi, phis=phis)


def received_sinr(psi, w, noise_powers):
    """Per-user SINR for beamforming matrix w on effective channel psi.

    SINR_k = |u_k^H w_k|^2 / (sum_{i != k} |u_k^H w_i|^2 + sigma_k^2) with
    u_k the k-th column of psi.
    """
    cross = np.abs(psi.conj().T @ w) ** 2  # [k, i] = |u_k^H w_i|^2
    desired = np.diag(cross)
    interference = cross.sum(axis=1) - desired
    return desired / (interference + np.asarray(noise_powers, float))


def neighbor_interval(x_col, ant, scenario):
    """Feasible interval for one antenna with its neighbors pinned."""
    m = x_col.size
    lower = x_col[ant - 1] + scenario.min_spacing if ant > 0 else 0.0
    upper = (x_col[ant + 1] - scenario.min_spacing
             if ant < m - 1 else scenario.feasible.x_max)
    return lower, upper


def candidate_positions(feasible, lower, upper, search_grid=None):
    """Ascending candidate positions inside [lower, upper].

    For a continuous set the caller supplies the global ``search_grid``
    (uniform over [0, x_max]); for a discrete set the feasible grid itself is
    used.  Returns an empty array when the interval contains no candidate.
    """
    grid = feasible.grid() if feasible.kind == "discrete" else search_grid
    lo = np.searchsorted(grid, lower - GRID_EPS, side="left")
    hi = np.searchsorted(grid, upper + GRID_EPS, side="right")
    return grid[lo:hi]

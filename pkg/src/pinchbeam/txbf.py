"""SINR-constrained transmit power minimization on a fixed channel.

Solves  min_W sum_k ||w_k||^2  s.t.  SINR_k >= gamma_k  for K users served
from N front-ends, via the dual uplink fixed point: with noise-normalized
channels ut_k = u_k / sigma_k, the dual powers satisfy

    q_k = gamma_k / (ut_k^H (I + sum_{i != k} q_i ut_i ut_i^H)^{-1} ut_k).

One shared solve against the full matrix T(q) = I + sum_i q_i ut_i ut_i^H
yields every leave-one-out quadratic form through the rank-one removal
identity a_k = s_k / (1 - q_k s_k) with s_k = ut_k^H T^{-1} ut_k, so each
iteration costs a single N x N factorization.  The optimal beam directions
are T(q)^{-1} ut_k (MMSE directions), and the downlink powers follow from
forcing every SINR constraint active.  The iteration is a standard
interference function with geometric convergence on feasible instances; no
external solver is needed and the result is exact for this problem class.
"""

from dataclasses import dataclass

import numpy as np

from .channel import received_sinr
from .errors import InfeasibleInstanceError

MAX_CONDITION = 1e12


@dataclass
class PowerMinResult:
    w: np.ndarray              # (N, K) beamforming matrix
    total_power: float         # sum_k ||w_k||^2, W
    achieved_sinrs: np.ndarray
    iterations: int
    converged: bool
    dual_powers: np.ndarray    # uplink powers q, noise-normalized


def solve_powermin(channels, gammas, noise_powers, tol=1e-10, max_iters=500):
    """Minimize total transmit power subject to per-user SINR floors.

    channels: (N, K) complex, column k is user k's effective channel u_k.
    gammas / noise_powers: K linear SINR targets and noise powers sigma_k^2.
    """
    u = np.asarray(channels, dtype=complex)
    if u.ndim != 2:
        raise ValueError("channels must be an (N, K) matrix")
    n, k = u.shape
    gammas = np.asarray(gammas, dtype=float)
    noise = np.asarray(noise_powers, dtype=float)
    if k > n:
        raise InfeasibleInstanceError(f"more users ({k}) than front-ends ({n})")
    norms = np.linalg.norm(u, axis=0)
    if np.any(norms == 0):
        raise InfeasibleInstanceError("a user has a zero channel")
    if np.any(gammas <= 0) or np.any(noise <= 0):
        raise ValueError("gammas and noise powers must be positive")

    ut = u / np.sqrt(noise)[None, :]
    gram = ut.conj().T @ ut
    if np.linalg.cond(gram) > MAX_CONDITION:
        raise InfeasibleInstanceError("channel Gram matrix is rank deficient")

    q = gammas / (np.linalg.norm(ut, axis=0) ** 2)  # matched-filter start
    eye = np.eye(n, dtype=complex)
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        t = eye + (ut * q[None, :]) @ ut.conj().T
        s = np.linalg.solve(t, ut)
        quad = np.real(np.sum(ut.conj() * s, axis=0))
        # leave-one-out form via rank-one removal: a_k = s_k / (1 - q_k s_k)
        removed = np.maximum(1.0 - q * quad, 1e-300)
        q_new = gammas * removed / quad
        if not np.all(np.isfinite(q_new)) or np.max(q_new) > 1e30:
            raise InfeasibleInstanceError("dual powers diverged")
        delta = np.max(np.abs(q_new - q) / np.maximum(q, 1e-300))
        q = q_new
        if delta < tol:
            converged = True
            break

    t = eye + (ut * q[None, :]) @ ut.conj().T
    directions = np.linalg.solve(t, ut)
    directions /= np.linalg.norm(directions, axis=0)[None, :]

    # Downlink powers making every constraint active: F p = sigma^2 with
    # F[k,k] = |u_k^H wh_k|^2 / gamma_k and F[k,i] = -|u_k^H wh_i|^2.
    cross = np.abs(u.conj().T @ directions) ** 2
    f = -cross
    f[np.diag_indices(k)] = np.diag(cross) / gammas
    p = np.linalg.solve(f, noise)
    if np.any(p <= 0) or not np.all(np.isfinite(p)):
        raise InfeasibleInstanceError("downlink power system has no positive solution")

    w = directions * np.sqrt(p)[None, :]
    return PowerMinResult(
        w=w,
        total_power=float(np.sum(p)),
        achieved_sinrs=received_sinr(u, w, noise),
        iterations=iterations,
        converged=converged,
        dual_powers=q,
    )

"""Penalty-based alternating optimization of transmit weights and positions.

The coupling between the beamformer and the antenna-position-dependent
channel is broken with an auxiliary channel matrix U and per-antenna parts
U_m, tied to the physical channel by quadratic penalties:

    minimize  P + (1/rho) ||U - sum_m U_m||_F^2
                + (1/rho) sum_m ||U_m - Phi_m(X)||_F^2
    s.t.      per-user SINR(V, U, P) >= gamma,  ||V||_F = 1,
              X feasible and spaced.

The inner loop block-descends over V, (U, P), {U_m}, X; the outer loop
shrinks rho so the penalties force U back onto the channel manifold.  Each
block solves its subproblem exactly, so the penalized objective is
non-increasing across every update.  A final polish re-solves the exact
power minimization on the true channel of the final layout so the reported
solution is always feasible.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    PinchingLayout,
    antenna_response,
    candidate_positions,
    effective_channel,
    neighbor_interval,
)
from .errors import ScaStallError
from .txbf import solve_powermin
from .zfopt import _quadratic_refine

P_FLOOR = 1e-12          # W, lower end of the power line search
P_CEIL_FACTOR = 1e4      # upper end, times the incumbent power
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class PenaltyState:
    v: np.ndarray            # (N, K), Frobenius norm 1
    u: np.ndarray            # (N, K) auxiliary channel
    u_parts: list            # M arrays (N, K)
    layout: PinchingLayout
    phis: list               # M arrays (N, K), current Phi_m(X)
    p: float                 # current transmit power, W
    rho: float               # penalty factor


@dataclass
class PenaltyReport:
    w: np.ndarray
    x: PinchingLayout
    total_power: float
    achieved_sinrs: np.ndarray
    violation: float
    inner_iterations: int
    outer_iterations: int
    converged: bool
    trace: list = field(default_factory=list)  # (outer, inner, power_w, violation)
    objective_trace: list = field(default_factory=list)  # (outer, inner, stage, value)


def penalty_terms(state):
    mismatch = state.u - np.sum(state.u_parts, axis=0)
    fit = sum(np.sum(np.abs(um - phi) ** 2)
              for um, phi in zip(state.u_parts, state.phis))
    return float(np.sum(np.abs(mismatch) ** 2)) + float(fit)


def penalized_objective(state):
    return state.p + penalty_terms(state) / state.rho


def constraint_violation(state):
    """Largest entrywise residual of the two penalty equalities."""
    gap = np.max(np.abs(state.u - np.sum(state.u_parts, axis=0)))
    for um, phi in zip(state.u_parts, state.phis):
        gap = max(gap, float(np.max(np.abs(um - phi))))
    return float(gap)


def update_v(state, scenario):
    """Exact beamformer step: power-min on the auxiliary channel, then
    normalize to Frobenius norm one."""
    res = solve_powermin(state.u, scenario.sinr_targets, scenario.noise_powers)
    state.v = res.w / np.linalg.norm(res.w)
    state.p = res.total_power
    return state


def _solve_user(ct, bt, vt, lam, beta, gamma, sigma2_over_p, gamma_scale):
    """Distance-minimizing channel column under one convexified SINR cut.

    Everything lives in the eigenbasis of Q = sum_{i != k} v_i v_i^H with
    eigenvalues ``lam``: u(mu) = (ct + mu bt) / (1 + mu lam), and mu >= 0 is
    bisected until the constraint is active (or mu = 0 if slack).  Returns
    (u_in_eigenbasis, squared_distance).
    """

    def g_of(mu):
        ut = (ct + mu * bt) / (1.0 + mu * lam)
        interf = float(np.sum(lam * np.abs(ut) ** 2).real)
        lin = np.vdot(vt, ut)
        val = (interf + sigma2_over_p + gamma_scale
               - (2.0 / gamma) * (np.conj(beta) * lin).real)
        return val, ut

    g0, u0 = g_of(0.0)
    if g0 <= 0.0:
        return u0, 0.0
    mu_hi = 1.0
    g_hi, u_hi = g_of(mu_hi)
    doublings = 0
    while g_hi > 0.0:
        mu_hi *= 4.0
        g_hi, u_hi = g_of(mu_hi)
        doublings += 1
        if doublings > 400:
            raise ScaStallError("constraint cannot be activated at any multiplier")
    mu_lo = 0.0
    for _ in range(90):
        mid = 0.5 * (mu_lo + mu_hi)
        g_mid, u_mid = g_of(mid)
        if g_mid > 0.0:
            mu_lo = mid
        else:
            mu_hi, g_hi, u_hi = mid, g_mid, u_mid
    dist = float(np.sum(np.abs(u_hi - ct) ** 2))
    return u_hi, dist


def update_u(state, scenario, p_tol=1e-6):
    """Joint exact step in (U, P) of the penalized problem.

    For fixed P the problem decouples per user into a projection onto one
    convex quadratic cut, solved by a Lagrange-multiplier bisection; the
    scalar P is then minimized by golden section on a log-spaced bracket.
    The incumbent power is always evaluated so the step can never increase
    the penalized objective.
    """
    n, k = state.u.shape
    gammas = scenario.sinr_targets
    noise = scenario.noise_powers
    targets = np.sum(state.u_parts, axis=0)
    anchors = state.u.copy()

    per_user = []
    for user in range(k):
        v_k = state.v[:, user]
        beta = np.vdot(v_k, anchors[:, user])
        if abs(beta) <= 1e-12 * np.linalg.norm(anchors[:, user]):
            # lost alignment between beam and anchor: restart the expansion
            # point from the physical channel column
            anchors[:, user] = np.sum(state.phis, axis=0)[:, user]
            beta = np.vdot(v_k, anchors[:, user])
            if abs(beta) <= 1e-300:
                raise ScaStallError(
                    f"user {user}: beam orthogonal to every usable anchor")
        others = np.delete(np.arange(k), user)
        v_others = state.v[:, others]
        q_mat = v_others @ v_others.conj().T
        lam, evecs = np.linalg.eigh(q_mat)
        lam = np.clip(lam, 0.0, None)
        b_vec = (beta / gammas[user]) * v_k
        per_user.append({
            "lam": lam,
            "ct": evecs.conj().T @ targets[:, user],
            "bt": evecs.conj().T @ b_vec,
            "vt": evecs.conj().T @ v_k,
            "evecs": evecs,
            "beta": beta,
            "gamma": float(gammas[user]),
            "gamma_scale": float(np.abs(beta) ** 2 / gammas[user]),
        })

    def eval_power(p_val):
        total = 0.0
        cols = []
        for user, info in enumerate(per_user):
            ut, dist = _solve_user(
                info["ct"], info["bt"], info["vt"], info["lam"], info["beta"],
                info["gamma"], float(noise[user]) / p_val, info["gamma_scale"])
            total += dist
            cols.append(info["evecs"] @ ut)
        return p_val + total / state.rho, cols

    p_inc = max(state.p, P_FLOOR)
    lo = math.log(P_FLOOR)
    hi = math.log(P_CEIL_FACTOR * p_inc)
    best_val, best_cols = eval_power(p_inc)
    best_p = p_inc

    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, cols_c = eval_power(math.exp(c))
    fd, cols_d = eval_power(math.exp(d))
    for _ in range(200):
        if fc < fd:
            b, d, fd, cols_d = d, c, fc, cols_c
            c = b - GOLDEN * (b - a)
            fc, cols_c = eval_power(math.exp(c))
        else:
            a, c, fc, cols_c = c, d, fd, cols_d
            d = a + GOLDEN * (b - a)
            fd, cols_d = eval_power(math.exp(d))
        if (b - a) < math.log1p(p_tol):
            break
    for val, point, cols in ((fc, c, cols_c), (fd, d, cols_d)):
        if val < best_val:
            best_val, best_p, best_cols = val, math.exp(point), cols

    state.u = np.stack(best_cols, axis=1)
    state.p = best_p
    return state


def update_u_parts(state):
    """Closed-form stationary point of the quadratic fit over the parts:
    U_m = Phi_m + (U - sum_i Phi_i) / (M + 1)."""
    m = len(state.u_parts)
    correction = (state.u - np.sum(state.phis, axis=0)) / (m + 1)
    state.u_parts = [phi + correction for phi in state.phis]
    return state


def update_x(state, scenario, grid_points=100_000, tol=1e-3, max_sweeps=20,
             refine=True):
    """Element-wise layout fit: per coordinate, a one-dimensional search of

        f(x) = sum_k |U_m[n, k] - phi entry(x)|^2

    over the neighbor-bounded feasible slice; the incumbent is always a
    candidate so the fit objective never increases."""
    x = np.array(state.layout.x)
    n, m = scenario.n_waveguides, scenario.n_antennas
    search_grid = None
    if scenario.feasible.kind == "continuous":
        search_grid = np.linspace(0.0, scenario.feasible.x_max, grid_points)

    def coord_fit(wg, ant, pos):
        ent = antenna_response(scenario, wg, ant, np.atleast_1d(pos))
        resid = state.u_parts[ant][wg, :][:, None] - ent
        return np.sum(np.abs(resid) ** 2, axis=0), ent

    fit = np.empty((m, n))
    for wg in range(n):
        for ant in range(m):
            fit[ant, wg] = coord_fit(wg, ant, x[ant, wg])[0][0]
    total = float(fit.sum())

    for _ in range(max_sweeps):
        prev_total = total
        for wg in range(n):
            for ant in range(m):
                lower, upper = neighbor_interval(x[:, wg], ant, scenario)
                cands = candidate_positions(scenario.feasible, lower, upper,
                                            search_grid)
                if cands.size == 0:
                    warnings.warn(
                        f"empty search set for waveguide {wg}, antenna {ant}; "
                        "keeping current position", RuntimeWarning)
                    continue
                scores, ents = coord_fit(wg, ant, cands)
                best = int(np.argmin(scores))
                best_x, best_f = float(cands[best]), float(scores[best])
                best_ent = ents[:, best]
                if refine and scenario.feasible.kind == "continuous" \
                        and 0 < best < cands.size - 1:
                    vertex = _quadratic_refine(
                        cands[best - 1:best + 2], scores[best - 1:best + 2],
                        maximize=False)
                    if vertex is not None and lower <= vertex <= upper:
                        v_f, v_ent = coord_fit(wg, ant, vertex)
                        if float(v_f[0]) < best_f:
                            best_x, best_f = float(vertex), float(v_f[0])
                            best_ent = v_ent[:, 0]
                inc_f = fit[ant, wg]
                if best_f < inc_f or (best_f == inc_f and best_x < x[ant, wg]):
                    x[ant, wg] = best_x
                    state.phis[ant][wg, :] = best_ent
                    fit[ant, wg] = best_f
        total = float(fit.sum())
        if (prev_total - total) < tol * max(prev_total, 1e-300):
            break

    state.layout = PinchingLayout(x=x)
    return state


def run_penalty(scenario, init_x, rho0=10.0, shrink=0.1, inner_tol=1e-3,
                violation_tol=1e-3, max_inner=50, max_outer=8,
                grid_points=100_000, refine=True):
    """Double-loop penalty optimization starting from the given layout.

    Inner loop: V -> (U, P) -> {U_m} -> X block updates until the penalized
    objective's fractional decrease falls below ``inner_tol``.  Outer loop:
    rho <- shrink * rho until the constraint violation drops below
    ``violation_tol``.  Ends with an exact power-min polish on the true
    channel of the final layout.
    """
    if not 0.0 < shrink < 1.0:
        raise ValueError("shrink factor must lie in (0, 1)")
    if rho0 <= 0:
        raise ValueError("rho0 must be positive")
    init_x.validate(scenario)

    eff = effective_channel(scenario, init_x)
    state = PenaltyState(
        v=np.zeros_like(eff.psi),
        u=eff.psi.copy(),
        u_parts=[p.copy() for p in eff.phis],
        layout=init_x,
        phis=[p.copy() for p in eff.phis],
        p=1.0,
        rho=rho0,
    )
    state = update_v(state, scenario)

    trace = []
    objective_trace = []
    total_inner = 0
    violation = math.inf
    converged = False
    outer = 0
    for outer in range(1, max_outer + 1):
        prev_obj = penalized_objective(state)
        for inner in range(1, max_inner + 1):
            total_inner += 1
            objective_trace.append((outer, inner, "start", prev_obj))
            state = update_v(state, scenario)
            objective_trace.append((outer, inner, "v", penalized_objective(state)))
            state = update_u(state, scenario)
            objective_trace.append((outer, inner, "u", penalized_objective(state)))
            state = update_u_parts(state)
            objective_trace.append((outer, inner, "u_parts", penalized_objective(state)))
            state = update_x(state, scenario, grid_points=grid_points,
                             refine=refine)
            obj = penalized_objective(state)
            objective_trace.append((outer, inner, "x", obj))
            trace.append((outer, inner, state.p, constraint_violation(state)))
            if (prev_obj - obj) < inner_tol * max(abs(prev_obj), 1e-300):
                prev_obj = obj
                break
            prev_obj = obj
        violation = constraint_violation(state)
        if violation < violation_tol:
            converged = True
            break
        state.rho *= shrink

    psi = effective_channel(scenario, state.layout).psi
    polish = solve_powermin(psi, scenario.sinr_targets, scenario.noise_powers)
    return PenaltyReport(
        w=polish.w,
        x=state.layout,
        total_power=polish.total_power,
        achieved_sinrs=polish.achieved_sinrs,
        violation=violation,
        inner_iterations=total_inner,
        outer_iterations=outer,
        converged=converged and polish.converged,
        trace=trace,
        objective_trace=objective_trace,
    )

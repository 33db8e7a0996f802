import numpy as np
import pytest

from pinchbeam.channel import PinchingLayout, effective_channel, received_sinr
from pinchbeam.errors import SingularChannelError
from pinchbeam.harness import ExperimentConfig, build_scenario, drop_users
from pinchbeam.txbf import solve_powermin
from pinchbeam.zfopt import (
    optimal_powers,
    sweep_positions,
    zf_matrix,
    zf_objective,
)
from tests.test_channel import small_scenario


def random_psi(rng, n, k, scale=1e-4):
    return scale * (rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k)))


class TestOptimalPowers:
    def test_paper_point(self):
        p = optimal_powers([100.0], [1e-11])
        assert p[0] == pytest.approx(1e-9, rel=1e-15)

    def test_unit(self):
        assert optimal_powers([1.0], [1.0])[0] == 1.0

    def test_linearity(self):
        assert optimal_powers([4.0], [0.3])[0] == 2 * optimal_powers([2.0], [0.3])[0]

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            optimal_powers([0.0], [1.0])


class TestZfObjective:
    def test_identity_channel(self):
        p = np.array([1.0, 2.0, 3.0])
        assert zf_objective(np.eye(3, dtype=complex), p) == pytest.approx(6.0)

    def test_scaled_identity(self):
        p = np.array([1.0, 2.0])
        assert zf_objective(4.0 * np.eye(2, dtype=complex), p) == \
            pytest.approx(3.0 / 16.0)

    def test_matches_precoder_norm(self):
        rng = np.random.default_rng(0)
        psi = random_psi(rng, 4, 3)
        p = np.array([1e-9, 2e-9, 5e-10])
        w = zf_matrix(psi, p)
        assert zf_objective(psi, p) == pytest.approx(
            float(np.sum(np.abs(w) ** 2)), rel=1e-10)

    def test_singular_channel(self):
        psi = np.ones((4, 2), dtype=complex)  # identical columns
        with pytest.raises(SingularChannelError):
            zf_objective(psi, np.ones(2))


class TestZfMatrix:
    def test_identity_channel(self):
        p = np.array([4.0, 9.0])
        w = zf_matrix(np.eye(2, dtype=complex), p)
        assert np.allclose(w, np.diag([2.0, 3.0]))

    def test_exact_sinrs(self):
        rng = np.random.default_rng(1)
        psi = random_psi(rng, 5, 4)
        gammas = np.array([100.0, 50.0, 10.0, 100.0])
        noise = np.full(4, 1e-11)
        w = zf_matrix(psi, optimal_powers(gammas, noise))
        sinrs = received_sinr(psi, w, noise)
        assert np.max(np.abs(sinrs - gammas) / gammas) < 1e-9

    def test_interference_nulled(self):
        rng = np.random.default_rng(2)
        psi = random_psi(rng, 5, 3)
        w = zf_matrix(psi, np.full(3, 1e-9))
        cross = psi.conj().T @ w
        off = cross - np.diag(np.diag(cross))
        assert np.max(np.abs(off)) <= 1e-10 * np.linalg.norm(w)


class TestShermanMorrison:
    def test_rank_one_update_identity(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            n, k = 6, 4
            psih = random_psi(rng, k, n, scale=1.0)  # psi^H, K x N
            for col in range(n):
                a = psih[:, col]
                b = np.delete(psih, col, axis=1)
                bbh = b @ b.conj().T
                c = np.linalg.inv(bbh)
                full = np.linalg.inv(bbh + np.outer(a, a.conj()))
                ca = c @ a
                update = c - np.outer(ca, ca.conj()) / (1 + (a.conj() @ ca).real)
                assert np.linalg.norm(update - full) <= 1e-9 * np.linalg.norm(full)


def paper_scenario(drop=0, **overrides):
    cfg = ExperimentConfig(**overrides)
    users = drop_users(cfg, cfg.seed, drop)
    return build_scenario(cfg, users)


class TestSweepPositions:
    def test_objective_non_increasing(self):
        sc = paper_scenario()
        sol = sweep_positions(sc, grid_points=3000)
        values = [v for _, v in sol.trace]
        assert all(b <= a * (1 + 1e-12) for a, b in zip(values, values[1:]))

    def test_rank_one_matches_direct(self):
        sc = paper_scenario()
        sol = sweep_positions(sc, grid_points=3000)
        assert sol.update_residual < 1e-9

    def test_solution_feasible_and_exact(self):
        sc = paper_scenario(activation="discrete")
        sol = sweep_positions(sc)
        sol.x.validate(sc)
        psi = effective_channel(sc, sol.x).psi
        sinrs = received_sinr(psi, sol.w, sc.noise_powers)
        assert np.max(np.abs(sinrs - sc.sinr_targets) / sc.sinr_targets) < 1e-9

    def test_single_antenna_exhaustive_oracle(self):
        # one waveguide, one antenna, one user on a discrete grid: the sweep
        # must find exactly the grid point an exhaustive scan finds
        sc = small_scenario([[20.4, 1.0, 0.0]], n_antennas=1, n_waveguides=1,
                            delta_eq=1.0, kind="discrete", q_points=501)
        sol = sweep_positions(sc)
        grid = sc.feasible.grid()
        best = None
        for x in grid:
            layout = PinchingLayout(x=np.array([[x]]))
            obj = zf_objective(effective_channel(sc, layout).psi,
                               sol.powers)
            if best is None or obj < best[0] - 0 or (obj == best[0] and x < best[1]):
                if best is None or obj < best[0]:
                    best = (obj, x)
        assert sol.x.x[0, 0] == best[1]
        assert sol.total_power == pytest.approx(best[0], rel=1e-12)

    def test_equal_users_fallback_square(self):
        # N == K forces the direct-inversion path
        users = [[18.0, -6.0, 0.0], [33.0, 6.0, 0.0]]
        sc = small_scenario(users, n_antennas=2, n_waveguides=2)
        sol = sweep_positions(sc, grid_points=2000)
        assert sol.used_fallback
        psi = effective_channel(sc, sol.x).psi
        sinrs = received_sinr(psi, sol.w, sc.noise_powers)
        assert np.max(np.abs(sinrs - sc.sinr_targets) / sc.sinr_targets) < 1e-9

    def test_power_dominates_exact_solver(self):
        sc = paper_scenario()
        sol = sweep_positions(sc, grid_points=3000)
        psi = effective_channel(sc, sol.x).psi
        exact = solve_powermin(psi, sc.sinr_targets, sc.noise_powers)
        assert sol.total_power >= exact.total_power * (1 - 1e-9)

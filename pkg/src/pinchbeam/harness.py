"""Experiment runner: configs, seeded user drops, sweeps, CSV emission.

All randomness flows from one integer seed through counter-based generators
keyed by (seed, drop_index, purpose), so every row of every sweep is
reproducible without global RNG state.  Powers are averaged over drops in
linear watts and reported in dBm.
"""

import configparser
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .baseline import UlaScenario, solve_conventional, ula_channel
from .channel import (
    FeasibleSet,
    PinchingLayout,
    Scenario,
    effective_channel,
    inwaveguide_vector,
    received_sinr,
)
from .coupledmode import make_equal_ladder, make_proportional_ladder
from .errors import ConfigError, PinchbeamError
from .penalty import run_penalty
from .zfopt import sweep_positions

SPEED_OF_LIGHT = 299_792_458.0

SWEEP_KINDS = (
    "power_vs_sinr",
    "power_vs_distance",
    "power_vs_antennas",
    "power_vs_discrete",
    "convergence_trace",
    "sinr_vs_channel_error",
)
ALGORITHMS = ("penalty", "zf", "conventional")

CSV_HEADER = ("sweep_value,drop,algorithm,power_model,activation,"
              "total_power_dbm,mean_sinr_db,converged,runtime_ms")
TRACE_HEADER = "outer,inner,power_w,violation"

# purpose keys for the per-drop RNG streams
_PURPOSE_USERS = 1
_PURPOSE_CHANNEL_ERROR = 1000  # + index of the sweep value


def watts_to_dbm(watts):
    return 10.0 * math.log10(watts) + 30.0


def dbm_to_watts(dbm):
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def linear_to_db(linear):
    return 10.0 * math.log10(linear)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: geometry defaults, a sweep, and run controls."""

    # geometry / RF
    n_waveguides: int = 5
    antennas_per_waveguide: int = 6
    n_users: int = 4
    d0_m: float = 15.0            # offset from the wall to the service area
    dx_m: float = 30.0            # service-area depth along x
    waveguide_height_m: float = 3.0
    waveguide_spacing_m: float = 6.0
    x_max_m: float = 50.0
    min_spacing_m: float = 0.1
    frequency_hz: float = 15e9
    refractive_index: float = 1.4
    noise_dbm: float = -80.0
    sinr_target_db: float = 20.0
    total_radiated: float = 0.9
    power_model: str = "equal"          # equal | proportional
    activation: str = "continuous"      # continuous | discrete
    positions_per_meter: float = 10.0   # discrete activation density
    # sweep
    sweep_kind: str = "power_vs_sinr"
    sweep_values: tuple = (10.0, 15.0, 20.0, 25.0, 30.0)
    algorithms: tuple = ("zf", "conventional")
    n_drops: int = 20
    # run controls
    seed: int = 1
    grid_points: int = 100_000
    timing: bool = False
    profile: str = "desk"               # desk | paper

    def validated(self):
        if self.sweep_kind not in SWEEP_KINDS:
            raise ConfigError(f"unknown sweep kind {self.sweep_kind!r}")
        for algo in self.algorithms:
            if algo not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {algo!r}")
        if not self.algorithms:
            raise ConfigError("no algorithms selected")
        if self.power_model not in ("equal", "proportional"):
            raise ConfigError(f"unknown power model {self.power_model!r}")
        if self.activation not in ("continuous", "discrete"):
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.n_drops < 1:
            raise ConfigError("n_drops must be at least 1")
        if not self.sweep_values:
            raise ConfigError("sweep grid must be nonempty")
        if list(self.sweep_values) != sorted(self.sweep_values):
            raise ConfigError("sweep grid must be sorted ascending")
        if self.sweep_kind == "power_vs_antennas":
            for v in self.sweep_values:
                if int(v) % self.n_waveguides != 0:
                    raise ConfigError(
                        f"total antenna count {v} not divisible by "
                        f"{self.n_waveguides} waveguides")
        if self.profile not in ("desk", "paper"):
            raise ConfigError(f"unknown profile {self.profile!r}")
        if self.n_users > self.n_waveguides:
            raise ConfigError("need at least as many waveguides as users")
        return self

    @property
    def wavelength(self):
        return SPEED_OF_LIGHT / self.frequency_hz

    @property
    def waveguide_y(self):
        n = self.n_waveguides
        return (np.arange(n) - (n - 1) / 2.0) * self.waveguide_spacing_m

    def service_rectangle(self):
        """((x_lo, x_hi), (y_lo, y_hi)) of the user drop area."""
        half = (self.n_waveguides - 1) * self.waveguide_spacing_m / 2.0
        return (self.d0_m, self.d0_m + self.dx_m), (-half, half)


def apply_profile(config):
    """Resolve the profile into concrete drop / grid settings."""
    if config.profile == "paper":
        return replace(config, n_drops=max(config.n_drops, 100),
                       grid_points=max(config.grid_points, 1_000_000))
    return config


def rng_for(seed, drop_index, purpose):
    """Counter-based generator for one (seed, drop, purpose) stream."""
    key = np.random.SeedSequence([int(seed), int(drop_index), int(purpose)])
    return np.random.Generator(np.random.Philox(key))


def drop_users(config, seed, drop_index):
    """K i.i.d. uniform user positions on the service rectangle, z = 0."""
    (x_lo, x_hi), (y_lo, y_hi) = config.service_rectangle()
    rng = rng_for(seed, drop_index, _PURPOSE_USERS)
    k = config.n_users
    xs = rng.uniform(x_lo, x_hi, size=k)
    ys = rng.uniform(y_lo, y_hi, size=k)
    return np.column_stack([xs, ys, np.zeros(k)])


def build_ladder(config, n_antennas=None):
    m = n_antennas if n_antennas is not None else config.antennas_per_waveguide
    if config.power_model == "equal":
        return make_equal_ladder(m, config.total_radiated / m)
    return make_proportional_ladder(m, config.total_radiated)


def build_scenario(config, users, n_antennas=None, x_max=None,
                   sinr_target_db=None, positions_per_meter=None):
    """Assemble the Scenario for one drop, with optional sweep overrides."""
    xmax = x_max if x_max is not None else config.x_max_m
    ppm = (positions_per_meter if positions_per_meter is not None
           else config.positions_per_meter)
    if config.activation == "discrete":
        feasible = FeasibleSet(kind="discrete", x_max=xmax,
                               q_points=int(round(ppm * xmax)) + 1)
    else:
        feasible = FeasibleSet(kind="continuous", x_max=xmax)
    gamma_db = (sinr_target_db if sinr_target_db is not None
                else config.sinr_target_db)
    k = config.n_users
    n = config.n_waveguides
    return Scenario(
        waveguide_y=config.waveguide_y,
        waveguide_z=np.full(n, config.waveguide_height_m),
        users=users,
        wavelength=config.wavelength,
        n_g=config.refractive_index,
        noise_powers=np.full(k, dbm_to_watts(config.noise_dbm)),
        sinr_targets=np.full(k, db_to_linear(gamma_db)),
        ladder=build_ladder(config, n_antennas),
        feasible=feasible,
        min_spacing=config.min_spacing_m,
    )


def build_ula(config, users, sinr_target_db=None):
    # the aperture runs along the wall (y), broadside to the service area;
    # end-fire geometry otherwise makes same-angle users inseparable
    gamma_db = (sinr_target_db if sinr_target_db is not None
                else config.sinr_target_db)
    k = config.n_users
    return UlaScenario(
        users=users,
        wavelength=config.wavelength,
        noise_powers=np.full(k, dbm_to_watts(config.noise_dbm)),
        sinr_targets=np.full(k, db_to_linear(gamma_db)),
        n_antennas=config.n_waveguides,
        axis="y",
    )


@dataclass(frozen=True)
class ChannelErrorModel:
    """Norm-bounded additive error on the free-space channel vectors."""

    epsilon_est: float

    def draw(self, rng, dimension):
        """Error of exact norm epsilon_est, uniform direction on the
        complex sphere of the given dimension."""
        if self.epsilon_est == 0.0:
            return np.zeros(dimension, dtype=complex)
        raw = rng.standard_normal(dimension) + 1j * rng.standard_normal(dimension)
        return self.epsilon_est * raw / np.linalg.norm(raw)


def perturbed_psi(scenario, layout, delta):
    """Effective channel when user k's free-space vector gains delta[k]
    ((K, N, M) complex); the in-guide response is known exactly."""
    psi = effective_channel(scenario, layout).psi.copy()
    for wg in range(scenario.n_waveguides):
        g = inwaveguide_vector(layout.x[:, wg], scenario.ladder.alphas,
                               scenario.beta_g)
        psi[wg, :] += delta[:, wg, :] @ g.conj()
    return psi


@dataclass
class AlgoOutcome:
    power_w: float
    sinrs: np.ndarray
    converged: bool
    layout: PinchingLayout | None = None
    w: np.ndarray | None = None
    scenario: Scenario | None = None
    trace: list | None = None


def _run_zf(scenario, grid_points):
    sol = sweep_positions(scenario, grid_points=grid_points)
    psi = effective_channel(scenario, sol.x).psi
    sinrs = received_sinr(psi, sol.w, scenario.noise_powers)
    return AlgoOutcome(power_w=sol.total_power, sinrs=sinrs,
                       converged=sol.converged, layout=sol.x, w=sol.w,
                       scenario=scenario)


def _run_penalty(scenario, grid_points):
    init = sweep_positions(scenario, grid_points=grid_points)
    report = run_penalty(scenario, init.x, grid_points=grid_points)
    return AlgoOutcome(power_w=report.total_power, sinrs=report.achieved_sinrs,
                       converged=report.converged, layout=report.x, w=report.w,
                       scenario=scenario, trace=report.trace)


def _run_conventional(config, users, sinr_target_db):
    ula = build_ula(config, users, sinr_target_db)
    res = solve_conventional(ula)
    return AlgoOutcome(power_w=res.total_power, sinrs=res.achieved_sinrs,
                       converged=res.converged, w=res.w), ula


def _scenario_for_value(config, users, value):
    kind = config.sweep_kind
    if kind == "power_vs_sinr":
        return build_scenario(config, users, sinr_target_db=value)
    if kind == "power_vs_distance":
        # keep a 5 m deployment margin past the service area, as in the
        # default geometry (x_max 50 = 15 + 30 + 5)
        return build_scenario(config, users, x_max=value + config.dx_m + 5.0)
    if kind == "power_vs_antennas":
        return build_scenario(config, users,
                              n_antennas=int(value) // config.n_waveguides)
    if kind == "power_vs_discrete":
        return build_scenario(config, users, positions_per_meter=value)
    return build_scenario(config, users)


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)
    trace_rows: list = field(default_factory=list)
    failures: int = 0


def run_sweep(config):
    """Run the configured sweep; one row per (value, drop, algorithm) plus a
    linear-mean summary row per (value, algorithm)."""
    config = apply_profile(config.validated())
    result = SweepResult()
    kind = config.sweep_kind
    error_sweep = kind == "sinr_vs_channel_error"

    for value_index, value in enumerate(config.sweep_values):
        collected = {algo: [] for algo in config.algorithms}
        for drop in range(config.n_drops):
            if kind == "power_vs_distance":
                drop_cfg = replace(config, d0_m=value)
            else:
                drop_cfg = config
            users = drop_users(drop_cfg, config.seed, drop)
            gamma_db = value if kind == "power_vs_sinr" else None
            if kind == "power_vs_discrete":
                drop_cfg = replace(drop_cfg, activation="discrete")
            cache = {}
            for algo in config.algorithms:
                start = time.perf_counter()
                try:
                    outcome = _dispatch(drop_cfg, users, value, algo, cache,
                                        gamma_db)
                    if error_sweep:
                        outcome = _evaluate_with_error(
                            drop_cfg, outcome, algo, value, value_index, drop)
                except PinchbeamError:
                    outcome = AlgoOutcome(power_w=math.nan,
                                          sinrs=np.array([math.nan]),
                                          converged=False)
                    result.failures += 1
                runtime_ms = (int(round((time.perf_counter() - start) * 1e3))
                              if config.timing else 0)
                if outcome.trace is not None and drop == 0 and value_index == 0:
                    result.trace_rows.extend(outcome.trace)
                mean_sinr = float(np.mean(outcome.sinrs))
                row = {
                    "sweep_value": value,
                    "drop": drop,
                    "algorithm": algo,
                    "power_model": config.power_model,
                    "activation": drop_cfg.activation,
                    "total_power_dbm": (watts_to_dbm(outcome.power_w)
                                        if outcome.power_w > 0 else math.nan),
                    "mean_sinr_db": (linear_to_db(mean_sinr)
                                     if mean_sinr > 0 else math.nan),
                    "converged": outcome.converged,
                    "runtime_ms": runtime_ms,
                    "power_w": outcome.power_w,
                    "mean_sinr_linear": mean_sinr,
                }
                result.rows.append(row)
                collected[algo].append(row)
        for algo in config.algorithms:
            rows = collected[algo]
            finite = [r for r in rows if math.isfinite(r["power_w"])]
            mean_w = (float(np.mean([r["power_w"] for r in finite]))
                      if finite else math.nan)
            mean_sinr = (float(np.mean([r["mean_sinr_linear"] for r in finite]))
                         if finite else math.nan)
            result.rows.append({
                "sweep_value": value,
                "drop": "mean",
                "algorithm": algo,
                "power_model": config.power_model,
                "activation": (drop_cfg.activation if kind == "power_vs_discrete"
                               else config.activation),
                "total_power_dbm": (watts_to_dbm(mean_w)
                                    if mean_w and mean_w > 0 else math.nan),
                "mean_sinr_db": (linear_to_db(mean_sinr)
                                 if mean_sinr and mean_sinr > 0 else math.nan),
                "converged": all(r["converged"] for r in rows),
                "runtime_ms": 0 if not config.timing else int(round(
                    np.mean([r["runtime_ms"] for r in rows]))),
                "power_w": mean_w,
                "mean_sinr_linear": mean_sinr,
            })
    return result


def _dispatch(config, users, value, algo, cache, gamma_db):
    """Run one algorithm on one drop, reusing the ZF stage for penalty."""
    if algo == "conventional":
        outcome, ula = _run_conventional(config, users, gamma_db)
        cache["ula"] = ula
        return outcome
    scenario = _scenario_for_value(config, users, value)
    if algo == "zf":
        if "zf" not in cache:
            cache["zf"] = _run_zf(scenario, config.grid_points)
        return cache["zf"]
    if algo == "penalty":
        if "zf" in cache:
            init = cache["zf"].layout
            report = run_penalty(scenario, init, grid_points=config.grid_points)
            return AlgoOutcome(power_w=report.total_power,
                               sinrs=report.achieved_sinrs,
                               converged=report.converged, layout=report.x,
                               w=report.w, scenario=scenario,
                               trace=report.trace)
        return _run_penalty(scenario, config.grid_points)
    raise ConfigError(f"unknown algorithm {algo!r}")


def _evaluate_with_error(config, outcome, algo, epsilon, value_index, drop):
    """Re-score a designed solution on a perturbed free-space channel."""
    model = ChannelErrorModel(epsilon_est=float(epsilon))
    rng = rng_for(config.seed, drop, _PURPOSE_CHANNEL_ERROR + value_index)
    k = config.n_users
    if algo == "conventional":
        ula = build_ula(config, _users_of(outcome, config, drop))
        h = ula_channel(ula)
        delta = np.stack([model.draw(rng, ula.n_antennas) for _ in range(k)],
                         axis=1)
        sinrs = received_sinr(h + delta, outcome.w, ula.noise_powers)
    else:
        scenario, layout = outcome.scenario, outcome.layout
        n, m = scenario.n_waveguides, scenario.n_antennas
        delta = np.stack([model.draw(rng, n * m).reshape(n, m)
                          for _ in range(k)], axis=0)
        psi = perturbed_psi(scenario, layout, delta)
        sinrs = received_sinr(psi, outcome.w, scenario.noise_powers)
    return AlgoOutcome(power_w=outcome.power_w, sinrs=sinrs,
                       converged=outcome.converged, layout=outcome.layout,
                       w=outcome.w, scenario=outcome.scenario)


def _users_of(outcome, config, drop):
    if outcome.scenario is not None:
        return outcome.scenario.users
    return drop_users(config, config.seed, drop)


def format_rows(rows):
    """Render rows under the fixed CSV contract, header included."""
    out = [CSV_HEADER]
    for row in rows:
        out.append(",".join([
            _fmt_number(row["sweep_value"]),
            str(row["drop"]),
            row["algorithm"],
            row["power_model"],
            row["activation"],
            _fmt_number(row["total_power_dbm"]),
            _fmt_number(row["mean_sinr_db"]),
            "true" if row["converged"] else "false",
            str(row["runtime_ms"]),
        ]))
    return "\n".join(out) + "\n"


def format_trace(trace_rows):
    out = [TRACE_HEADER]
    for outer, inner, power_w, violation in trace_rows:
        out.append(f"{outer},{inner},{_fmt_number(power_w)},"
                   f"{_fmt_number(violation)}")
    return "\n".join(out) + "\n"


def _fmt_number(value):
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    return f"{value:.10g}"


def write_outputs(result, out_path):
    with open(out_path, "w") as fh:
        fh.write(format_rows(result.rows))
    if result.trace_rows:
        with open(f"{out_path}.trace.csv", "w") as fh:
            fh.write(format_trace(result.trace_rows))


# ---------------------------------------------------------------------------
# configuration files (INI sections: [scenario], [sweep], [run])

_SCENARIO_KEYS = {
    "n_waveguides": int, "antennas_per_waveguide": int, "n_users": int,
    "d0_m": float, "dx_m": float, "waveguide_height_m": float,
    "waveguide_spacing_m": float, "x_max_m": float, "min_spacing_m": float,
    "frequency_hz": float, "refractive_index": float, "noise_dbm": float,
    "sinr_target_db": float, "total_radiated": float, "power_model": str,
    "activation": str, "positions_per_meter": float,
}
_SWEEP_KEYS = {"kind": str, "values": "floats", "algorithms": "names",
               "n_drops": int}
_RUN_KEYS = {"seed": int, "grid_points": int, "timing": "bool",
             "profile": str}


def parse_config(text):
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    kwargs = {}

    def take(section, keys, rename=None):
        if not parser.has_section(section):
            return
        for key, value in parser.items(section):
            if key not in keys:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            kind = keys[key]
            name = (rename or {}).get(key, key)
            try:
                if kind == "floats":
                    kwargs[name] = tuple(
                        float(v) for v in value.replace(",", " ").split())
                elif kind == "names":
                    kwargs[name] = tuple(
                        v for v in value.replace(",", " ").split())
                elif kind == "bool":
                    kwargs[name] = value.strip().lower() in ("1", "true",
                                                             "yes", "on")
                else:
                    kwargs[name] = kind(value)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {value!r}") from exc

    take("scenario", _SCENARIO_KEYS)
    take("sweep", _SWEEP_KEYS, rename={"kind": "sweep_kind",
                                       "values": "sweep_values"})
    take("run", _RUN_KEYS)
    try:
        return ExperimentConfig(**kwargs).validated()
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())


BUILTIN_CONFIGS = {
    "paper_defaults": ExperimentConfig(
        sweep_kind="power_vs_sinr", sweep_values=(20.0,),
        algorithms=("zf", "conventional")),
    "power_vs_sinr": ExperimentConfig(
        sweep_kind="power_vs_sinr",
        sweep_values=(10.0, 15.0, 20.0, 25.0, 30.0)),
    "power_vs_distance": ExperimentConfig(
        sweep_kind="power_vs_distance",
        sweep_values=(15.0, 25.0, 35.0, 45.0)),
    "power_vs_antennas": ExperimentConfig(
        sweep_kind="power_vs_antennas",
        sweep_values=(10.0, 20.0, 30.0, 40.0, 50.0), algorithms=("zf",)),
    "power_vs_discrete": ExperimentConfig(
        sweep_kind="power_vs_discrete",
        sweep_values=(10.0, 50.0, 100.0, 300.0), activation="discrete",
        algorithms=("zf",)),
    "convergence_trace": ExperimentConfig(
        sweep_kind="convergence_trace", sweep_values=(20.0,),
        algorithms=("penalty",), n_drops=1),
    "sinr_vs_channel_error": ExperimentConfig(
        sweep_kind="sinr_vs_channel_error",
        sweep_values=(0.0, 5e-6, 1e-5, 2e-5, 5e-5),
        algorithms=("zf", "conventional")),
}

"""Render experiment CSVs into the standard comparison figures.

Input files must match the emitting harness's column contract exactly; any
drift is rejected with the offending column named rather than guessed
around.  All aggregation (linear-watt averaging over drops) happens
upstream: the mean series here comes straight from the `drop == "mean"`
rows and the shaded band is the per-drop min / max in the plotted unit.
"""

import csv
import math
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

RESULT_HEADER = ["sweep_value", "drop", "algorithm", "power_model",
                 "activation", "total_power_dbm", "mean_sinr_db",
                 "converged", "runtime_ms"]
TRACE_HEADER = ["outer", "inner", "power_w", "violation"]

FIGURE_KINDS = {
    "power_vs_sinr": {
        "xlabel": "minimum SINR (dB)",
        "ylabel": "transmit power (dBm)",
        "ycol": "total_power_dbm",
    },
    "power_vs_distance": {
        "xlabel": "service-area offset (m)",
        "ylabel": "transmit power (dBm)",
        "ycol": "total_power_dbm",
    },
    "power_vs_antennas": {
        "xlabel": "total pinching antennas",
        "ylabel": "transmit power (dBm)",
        "ycol": "total_power_dbm",
    },
    "power_vs_discrete": {
        "xlabel": "activation positions per meter",
        "ylabel": "transmit power (dBm)",
        "ycol": "total_power_dbm",
        "logx": True,
    },
    "sinr_vs_channel_error": {
        "xlabel": "channel error bound",
        "ylabel": "achieved SINR (dB)",
        "ycol": "mean_sinr_db",
    },
    "convergence_trace": {},  # dedicated dual-axis layout
}

# deterministic styling shared by every figure
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#17becf", "#7f7f7f"]
DPI = 120


class SchemaError(ValueError):
    """CSV header does not match the harness contract."""


class NoDataError(ValueError):
    """Nothing to plot after filtering."""


@dataclass(frozen=True)
class FigureSpec:
    csv_paths: tuple
    kind: str
    out_path: str
    title: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "csv_paths", tuple(self.csv_paths))
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected "
                             f"one of {sorted(FIGURE_KINDS)}")
        if not self.csv_paths:
            raise ValueError("at least one CSV path is required")


def check_header(found, expected, path):
    for pos, want in enumerate(expected):
        got = found[pos] if pos < len(found) else None
        if got != want:
            raise SchemaError(
                f"{path}: expected column {want!r} at position {pos + 1}, "
                f"found {got!r}")
    if len(found) > len(expected):
        raise SchemaError(
            f"{path}: unexpected extra column {found[len(expected)]!r}")


def read_result_rows(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        check_header(header, RESULT_HEADER, path)
        return [dict(zip(RESULT_HEADER, row)) for row in reader]


def read_trace_rows(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        check_header(header, TRACE_HEADER, path)
        return [dict(zip(TRACE_HEADER, row)) for row in reader]


def series_key(row, multi_file, label):
    key = (row["algorithm"], row["power_model"], row["activation"])
    return (label,) + key if multi_file else key


def series_label(key):
    return " / ".join(str(part) for part in key)


def render(spec):
    """Write the figure for ``spec`` and return the matplotlib Figure."""
    if spec.kind == "convergence_trace":
        fig = _render_convergence(spec)
    else:
        fig = _render_sweep(spec)
    fig.savefig(spec.out_path, dpi=DPI, metadata={"Software": None})
    plt.close(fig)
    return fig


def _render_sweep(spec):
    style = FIGURE_KINDS[spec.kind]
    multi_file = len(spec.csv_paths) > 1
    means = {}
    bands = {}
    for path in spec.csv_paths:
        label = _stem(path)
        for row in read_result_rows(path):
            value = float(row["sweep_value"])
            y = float(row[style["ycol"]])
            if math.isnan(y):
                continue
            key = series_key(row, multi_file, label)
            if row["drop"] == "mean":
                means.setdefault(key, {})[value] = y
            else:
                bands.setdefault(key, {}).setdefault(value, []).append(y)
    if not means:
        raise NoDataError(
            f"no plottable rows for kind {spec.kind!r} in {spec.csv_paths}")

    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for color, key in zip(_cycle(len(means)), sorted(means)):
        xs = sorted(means[key])
        ys = [means[key][x] for x in xs]
        ax.plot(xs, ys, marker="o", color=color, label=series_label(key))
        spread = bands.get(key, {})
        if all(x in spread for x in xs):
            lo = [min(spread[x]) for x in xs]
            hi = [max(spread[x]) for x in xs]
            ax.fill_between(xs, lo, hi, color=color, alpha=0.15, linewidth=0)
    if style.get("logx"):
        ax.set_xscale("log")
    ax.set_xlabel(style["xlabel"])
    ax.set_ylabel(style["ylabel"])
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    if spec.title:
        ax.set_title(spec.title)
    fig.tight_layout()
    return fig


def _render_convergence(spec):
    rows = []
    for path in spec.csv_paths:
        rows.extend(read_trace_rows(path))
    if not rows:
        raise NoDataError(f"no trace rows in {spec.csv_paths}")

    power_dbm = [10 * math.log10(float(r["power_w"])) + 30 for r in rows]
    violation = [float(r["violation"]) for r in rows]
    outer = [int(r["outer"]) for r in rows]
    steps = list(range(1, len(rows) + 1))

    fig, ax_power = plt.subplots(figsize=(6.0, 4.2))
    ax_power.plot(steps, power_dbm, color=PALETTE[0], marker="o",
                  label="transmit power")
    ax_power.set_xlabel("inner iteration (cumulative)")
    ax_power.set_ylabel("transmit power (dBm)", color=PALETTE[0])
    ax_power.tick_params(axis="y", labelcolor=PALETTE[0])
    ax_power.grid(True, alpha=0.3)

    ax_viol = ax_power.twinx()
    ax_viol.semilogy(steps, violation, color=PALETTE[1], marker="s",
                     label="constraint violation")
    ax_viol.set_ylabel("constraint violation", color=PALETTE[1])
    ax_viol.tick_params(axis="y", labelcolor=PALETTE[1])

    # mark the stage boundaries where the penalty factor shrinks
    for i in range(1, len(outer)):
        if outer[i] != outer[i - 1]:
            ax_power.axvline(i + 0.5, color="0.6", linestyle=":",
                             linewidth=0.8)
    if spec.title:
        ax_power.set_title(spec.title)
    fig.tight_layout()
    return fig


def _stem(path):
    name = str(path).rsplit("/", 1)[-1]
    return name[:-4] if name.endswith(".csv") else name


def _cycle(n):
    return [PALETTE[i % len(PALETTE)] for i in range(n)]

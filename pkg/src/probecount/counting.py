"""Sliding-window device counting from burst rates, with its error bound."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .bursts import Burst
from .ingest import PrfEvent
from .intervals import IntervalModel

DEFAULT_WINDOW_SIZE = 180.0
DEFAULT_STEP = 180.0
# A longer window suits venues where occupants stay for extended periods.
LONG_DWELL_WINDOW_SIZE = 900.0


@dataclass(frozen=True)
class Window:
    start: float
    size: float

    def __post_init__(self) -> None:
        if not self.size > 0:
            raise ValueError("window size must be positive")

    @property
    def end(self) -> float:
        return self.start + self.size

    def contains(self, t: float) -> bool:
        return self.start <= t < self.end


@dataclass(frozen=True)
class WindowEstimate:
    """Per-window output of the counting model.

    ``n_hat`` is burst_count * tau_mean / size: the ratio of the window's
    aggregated probing rate to the mean per-device rate.  ``var_lower_bound``
    is burst_count * tau_std^2 / size^2, and ``nrmse_estimate`` is
    tau_std / (tau_mean * sqrt(burst_count)), or None for an empty window.
    """

    window: Window
    burst_count: int
    rate: float
    n_hat: float
    var_lower_bound: float
    nrmse_estimate: float | None

    def __post_init__(self) -> None:
        if self.burst_count < 0:
            raise ValueError("burst count cannot be negative")


def _check_model(model: IntervalModel) -> None:
    if model.sample_count == 0:
        raise ValueError("unfitted interval model")
    if not model.tau_mean > 0:
        raise ValueError("interval model has non-positive tau_mean")


def _estimate(window: Window, burst_count: int, model: IntervalModel) -> WindowEstimate:
    w = window.size
    rate = burst_count / w
    n_hat = burst_count * model.tau_mean / w
    var_lower_bound = burst_count * model.tau_std**2 / w**2
    if burst_count > 0:
        nrmse = model.tau_std / (model.tau_mean * math.sqrt(burst_count))
    else:
        nrmse = None
    return WindowEstimate(window, burst_count, rate, n_hat, var_lower_bound, nrmse)


def count_window(bursts: Iterable[Burst], window: Window, model: IntervalModel) -> WindowEstimate:
    """Estimate the window-averaged device count from bursts in one window.

    Bursts are counted by probing-instant membership in [start, start+size).
    """
    _check_model(model)
    burst_count = sum(1 for b in bursts if window.contains(b.probing_instant))
    return _estimate(window, burst_count, model)


def sliding_windows(
    bursts: Sequence[Burst],
    size: float = DEFAULT_WINDOW_SIZE,
    step: float = DEFAULT_STEP,
    model: IntervalModel | None = None,
    *,
    start: float | None = None,
) -> list[WindowEstimate]:
    """Estimates for windows at start, start+step, ... covering the burst span.

    ``start`` defaults to the first probing instant.
    """
    if size <= 0 or step <= 0:
        raise ValueError("window size and step must be positive")
    if model is None:
        raise ValueError("an interval model is required")
    _check_model(model)
    instants = np.array([b.probing_instant for b in bursts], dtype=float)
    if instants.size and np.any(np.diff(instants) < 0):
        raise ValueError("bursts not sorted by probing instant")
    if instants.size == 0:
        return []
    t0 = float(instants[0]) if start is None else start
    t_last = float(instants[-1])
    estimates = []
    i = 0
    while True:
        w_start = t0 + i * step
        if w_start > t_last:
            break
        lo = int(np.searchsorted(instants, w_start, side="left"))
        hi = int(np.searchsorted(instants, w_start + size, side="left"))
        estimates.append(_estimate(Window(w_start, size), hi - lo, model))
        i += 1
    return estimates


def mac_count_baseline(events: Iterable[PrfEvent], window: Window) -> int:
    """Distinct MAC addresses heard in the window (randomization-blind)."""
    return len({e.mac for e in events if window.contains(e.timestamp)})


def mac_count_series(
    events: Sequence[PrfEvent],
    size: float = DEFAULT_WINDOW_SIZE,
    step: float = DEFAULT_STEP,
    *,
    start: float | None = None,
) -> list[tuple[Window, int]]:
    """MAC-counting baseline over the same window grid as sliding_windows."""
    if size <= 0 or step <= 0:
        raise ValueError("window size and step must be positive")
    if not events:
        return []
    t0 = events[0].timestamp if start is None else start
    t_last = events[-1].timestamp
    out = []
    i = 0
    while True:
        w_start = t0 + i * step
        if w_start > t_last:
            break
        window = Window(w_start, size)
        out.append((window, mac_count_baseline(events, window)))
        i += 1
    return out


def format_series(estimates: Iterable[WindowEstimate]) -> str:
    """One line per window: start size burst_count rate n_hat var_bound nrmse."""
    lines = ["# start w B R n_hat var_lower_bound nrmse\n"]
    for e in estimates:
        nrmse = "nan" if e.nrmse_estimate is None else f"{e.nrmse_estimate:.6f}"
        lines.append(
            f"{e.window.start:.6f} {e.window.size:.6f} {e.burst_count} "
            f"{e.rate:.6f} {e.n_hat:.6f} {e.var_lower_bound:.6f} {nrmse}\n"
        )
    return "".join(lines)


def parse_series(text: str) -> list[WindowEstimate]:
    estimates = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 7:
            raise ValueError(f"line {lineno}: expected 7 fields, got {len(fields)}")
        nrmse = float(fields[6])
        estimates.append(
            WindowEstimate(
                window=Window(float(fields[0]), float(fields[1])),
                burst_count=int(fields[2]),
                rate=float(fields[3]),
                n_hat=float(fields[4]),
                var_lower_bound=float(fields[5]),
                nrmse_estimate=None if math.isnan(nrmse) else nrmse,
            )
        )
    return estimates

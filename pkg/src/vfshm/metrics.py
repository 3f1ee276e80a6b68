"""RMSD and cross-correlation damage indices, whole-band and windowed."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FrequencyResponse
from .errors import ConfigError, DegenerateBaselineError, DegenerateSeriesError, GridMismatchError, VfshmError

MODES = ("real", "magnitude", "complex")


def _check_grids(z_k, z_b):
    if z_k.grid != z_b.grid:
        raise GridMismatchError("measurement and baseline are sampled on different grids")


def _component(z: FrequencyResponse, mode: str):
    if mode == "real":
        return z.values.real
    if mode == "magnitude":
        return np.abs(z.values)
    if mode == "complex":
        return z.values
    raise ConfigError(f"unknown comparison mode {mode!r}; expected one of {MODES}")


def _rmsd(x, y, normalization):
    den = np.abs(y) ** 2
    if np.any(den == 0):
        raise DegenerateBaselineError("baseline has zero entries; RMSD is undefined")
    num = np.abs(x - y) ** 2
    if normalization == "pointwise":
        return float(np.sqrt(np.sum(num / den)))
    if normalization == "aggregate":
        return float(np.sqrt(np.sum(num) / np.sum(den)))
    raise ConfigError(f"unknown RMSD normalization {normalization!r}")


def rmsd(z_k: FrequencyResponse, z_baseline: FrequencyResponse, mode="real", normalization="pointwise") -> float:
    """Root-mean-square deviation of ``z_k`` from the baseline.

    ``normalization="pointwise"`` divides every squared deviation by the
    squared baseline value at the same frequency before summing;
    ``"aggregate"`` divides the summed deviations by the summed baseline.
    Not symmetric in its arguments.
    """
    _check_grids(z_k, z_baseline)
    return _rmsd(_component(z_k, mode), _component(z_baseline, mode), normalization)


def _xcorr(x, y):
    if x.size < 2:
        raise DegenerateSeriesError("cross-correlation needs at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    # rescale so tiny (e.g. subnormal) series do not underflow when squared
    sx, sy = np.max(np.abs(dx)), np.max(np.abs(dy))
    if sx == 0 or sy == 0:
        raise DegenerateSeriesError("constant series has no correlation")
    dx, dy = dx / sx, dy / sy
    nx = np.sqrt(np.sum(np.abs(dx) ** 2))
    ny = np.sqrt(np.sum(np.abs(dy) ** 2))
    if nx == 0 or ny == 0:
        raise DegenerateSeriesError("constant series has no correlation")
    rho = abs(np.sum(dx * np.conj(dy))) / (nx * ny)
    return float(min(max(1.0 - rho, 0.0), 1.0))


def xcorr_metric(z_k: FrequencyResponse, z_baseline: FrequencyResponse, mode="real") -> float:
    """``1 - |pearson(z_k, z_baseline)|``, in [0, 1]; blind to scale and offset."""
    _check_grids(z_k, z_baseline)
    return _xcorr(_component(z_k, mode), _component(z_baseline, mode))


@dataclass(frozen=True)
class WindowEntry:
    center_frequency: float
    value: float
    window_span: tuple
    partial: bool = False
    error: str = ""


@dataclass(frozen=True)
class WindowedMetricSeries:
    entries: tuple
    which: str = "rmsd"

    @property
    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.entries])

    @property
    def centers(self) -> np.ndarray:
        return np.array([e.center_frequency for e in self.entries])


def windowed_metric(
    z_k: FrequencyResponse,
    z_baseline: FrequencyResponse,
    window_width: float,
    which="rmsd",
    mode="real",
    normalization="pointwise",
) -> WindowedMetricSeries:
    """Split the band into consecutive ``window_width`` Hz windows from ``f_min`` and score each.

    Windows are half-open ``[f_lo, f_lo + width)``; the last one also takes
    ``f_max``. A trailing remainder narrower than ``window_width`` is kept with
    its true span and ``partial=True``. A window whose metric is undefined
    gets ``value=nan`` and an ``error`` message instead of aborting the series.
    """
    _check_grids(z_k, z_baseline)
    if not window_width > 0:
        raise ConfigError("window width must be > 0")
    f = z_k.frequencies
    f_min, f_max = f[0], f[-1]
    if f_max - f_min < window_width * (1 - 1e-12):
        raise ConfigError("band is narrower than one window")
    if which not in ("rmsd", "xcorr"):
        raise ConfigError(f"unknown metric {which!r}")
    x_all = _component(z_k, mode)
    y_all = _component(z_baseline, mode)

    n_full = int(np.floor((f_max - f_min) / window_width * (1 + 1e-12)))
    edges = [f_min + i * window_width for i in range(n_full + 1)]
    if f_max - edges[-1] > 1e-9 * window_width:
        edges.append(f_max)
    entries = []
    for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        last = i == len(edges) - 2
        mask = (f >= lo) & ((f <= hi) if last else (f < hi))
        partial = (hi - lo) < window_width * (1 - 1e-9)
        try:
            if not mask.any():
                raise DegenerateSeriesError("window contains no samples")
            x, y = x_all[mask], y_all[mask]
            value = _rmsd(x, y, normalization) if which == "rmsd" else _xcorr(x, y)
            err = ""
        except VfshmError as exc:
            value, err = float("nan"), str(exc)
        entries.append(WindowEntry(0.5 * (lo + hi), value, (float(lo), float(hi)), partial, err))
    return WindowedMetricSeries(tuple(entries), which)

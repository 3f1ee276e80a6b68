"""Domain types and the pole-residue evaluator.

Poles are kept in rad/s throughout; the Laplace variable on the measurement
grid is ``s = 2j*pi*f``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, EvaluationOverflowError, UnstablePoleError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing, positive sample frequencies in Hz."""

    frequencies: np.ndarray

    def __post_init__(self):
        f = _frozen(self.frequencies, float)
        if f.ndim != 1 or f.size < 2:
            raise DataError("frequency grid needs at least 2 points")
        if not np.all(np.isfinite(f)) or np.any(f <= 0):
            raise DataError("frequencies must be finite and > 0")
        bad = np.flatnonzero(np.diff(f) <= 0)
        if bad.size:
            raise DataError(f"frequencies not strictly increasing at index {bad[0] + 1}")
        object.__setattr__(self, "frequencies", f)

    def __len__(self):
        return self.frequencies.size

    def __eq__(self, other):
        return isinstance(other, FrequencyGrid) and np.array_equal(self.frequencies, other.frequencies)

    __hash__ = None

    @property
    def s(self) -> np.ndarray:
        return 1j * TWO_PI * self.frequencies

    @property
    def f_min(self) -> float:
        return float(self.frequencies[0])

    @property
    def f_max(self) -> float:
        return float(self.frequencies[-1])

    @classmethod
    def linspace(cls, f_lo, f_hi, n) -> "FrequencyGrid":
        return cls(np.linspace(f_lo, f_hi, n))


@dataclass(frozen=True)
class FrequencyResponse:
    """Complex samples of a transfer function or impedance on a grid."""

    grid: FrequencyGrid
    values: np.ndarray

    def __post_init__(self):
        if not isinstance(self.grid, FrequencyGrid):
            object.__setattr__(self, "grid", FrequencyGrid(self.grid))
        v = _frozen(self.values, complex)
        if v.shape != (len(self.grid),):
            raise DataError(f"expected {len(self.grid)} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DataError("response contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def frequencies(self) -> np.ndarray:
        return self.grid.frequencies

    def __len__(self):
        return len(self.grid)

    def __eq__(self, other):
        return (
            isinstance(other, FrequencyResponse)
            and self.grid == other.grid
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def restrict(self, f_lo=None, f_hi=None) -> "FrequencyResponse":
        f = self.frequencies
        mask = np.ones(f.size, bool)
        if f_lo is not None:
            mask &= f >= f_lo
        if f_hi is not None:
            mask &= f <= f_hi
        if mask.sum() < 2:
            raise DataError(f"band [{f_lo}, {f_hi}] leaves fewer than 2 points")
        return FrequencyResponse(FrequencyGrid(f[mask]), self.values[mask])

    def conj(self) -> "FrequencyResponse":
        return FrequencyResponse(self.grid, np.conj(self.values))


def canonical_order(poles, residues=None, rtol=1e-9):
    """Sort poles as real ones first, then ``(p, conj(p))`` pairs by imaginary part.

    Raises DataError if a complex pole has no conjugate partner. Residues are
    reordered alongside; the partner's residue is taken as given.
    """
    poles = np.asarray(poles, complex).ravel()
    if residues is None:
        res = np.zeros_like(poles)
    else:
        res = np.asarray(residues, complex).ravel()
        if res.shape != poles.shape:
            raise DataError("poles and residues differ in length")
    scale = np.maximum(np.abs(poles), 1e-300)
    is_real = np.abs(poles.imag) <= rtol * scale
    real_idx = np.flatnonzero(is_real)
    real_idx = real_idx[np.argsort(poles[real_idx].real, kind="stable")]
    upper = np.flatnonzero(~is_real & (poles.imag > 0))
    lower = list(np.flatnonzero(~is_real & (poles.imag < 0)))
    if len(upper) != len(lower):
        raise DataError("poles are not closed under complex conjugation")
    upper = upper[np.argsort(poles[upper].imag, kind="stable")]
    order = list(real_idx)
    for i in upper:
        target = np.conj(poles[i])
        dist = [abs(poles[j] - target) for j in lower]
        k = int(np.argmin(dist))
        if dist[k] > rtol * max(abs(target), 1e-300) * 10 + 1e-300:
            raise DataError(f"pole {poles[i]} has no conjugate partner")
        order += [i, lower.pop(k)]
    out_p = poles[order].copy()
    out_p[: len(real_idx)] = out_p[: len(real_idx)].real
    out_r = res[order]
    if residues is None:
        return out_p
    return out_p, out_r


@dataclass(frozen=True)
class RationalModel:
    """``sum(c/(s - a)) + d + s*h`` with stable, conjugate-closed poles (rad/s)."""

    poles: np.ndarray
    residues: np.ndarray
    d: float = 0.0
    h: float = 0.0
    includes_d: bool = True
    includes_h: bool = True

    def __post_init__(self):
        p = np.asarray(self.poles, complex).ravel()
        r = np.asarray(self.residues, complex).ravel()
        if p.shape != r.shape:
            raise DataError("poles and residues differ in length")
        if np.any(p.real >= 0):
            raise UnstablePoleError("rational model poles must have negative real part")
        if p.size:
            p, r = canonical_order(p, r)
            n_real = int(np.sum(p.imag == 0))
            pairs_r = r[n_real:]
            if not np.allclose(pairs_r[1::2], np.conj(pairs_r[0::2]), rtol=1e-9, atol=1e-300):
                raise DataError("residues of conjugate poles must be conjugate")
        object.__setattr__(self, "poles", _frozen(p, complex))
        object.__setattr__(self, "residues", _frozen(r, complex))
        object.__setattr__(self, "d", float(self.d) if self.includes_d else 0.0)
        object.__setattr__(self, "h", float(self.h) if self.includes_h else 0.0)

    @property
    def order(self) -> int:
        return self.poles.size

    def __eq__(self, other):
        return (
            isinstance(other, RationalModel)
            and np.array_equal(self.poles, other.poles)
            and np.array_equal(self.residues, other.residues)
            and (self.d, self.h, self.includes_d, self.includes_h)
            == (other.d, other.h, other.includes_d, other.includes_h)
        )

    __hash__ = None

    def to_dict(self) -> dict:
        return {
            "poles": [[float(p.real), float(p.imag)] for p in self.poles],
            "residues": [[float(c.real), float(c.imag)] for c in self.residues],
            "d": self.d,
            "h": self.h,
            "includes_d": self.includes_d,
            "includes_h": self.includes_h,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RationalModel":
        return cls(
            poles=[complex(*p) for p in data["poles"]],
            residues=[complex(*c) for c in data["residues"]],
            d=data.get("d", 0.0),
            h=data.get("h", 0.0),
            includes_d=data.get("includes_d", True),
            includes_h=data.get("includes_h", True),
        )


@dataclass(frozen=True)
class Mode:
    frequency: float  # Hz
    damping_ratio: float
    pole: complex  # rad/s, positive imaginary part


@dataclass(frozen=True)
class ModalParameters:
    modes: tuple = ()
    overdamped: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "overdamped", tuple(self.overdamped))
        for m in self.modes:
            if not m.frequency > 0 or not 0 <= m.damping_ratio < 1:
                raise DataError(f"invalid mode {m}")

    def __len__(self):
        return len(self.modes)

    def __iter__(self):
        return iter(self.modes)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([m.frequency for m in self.modes])

    @property
    def damping_ratios(self) -> np.ndarray:
        return np.array([m.damping_ratio for m in self.modes])

    @classmethod
    def from_table(cls, frequencies, damping_ratios) -> "ModalParameters":
        """Build modes from tabulated (Hz, zeta) rows, e.g. published results."""
        modes = []
        for f, z in zip(frequencies, damping_ratios):
            w = TWO_PI * f
            modes.append(Mode(float(f), float(z), complex(-z * w, w * np.sqrt(1 - z * z))))
        return cls(sorted(modes, key=lambda m: m.frequency))


def evaluate_model(model: RationalModel, grid: FrequencyGrid) -> FrequencyResponse:
    """Evaluate the pole-residue form on ``grid``."""
    s = grid.s
    with np.errstate(all="ignore"):
        terms = model.residues[None, :] / (s[:, None] - model.poles[None, :])
        values = terms.sum(axis=1) + model.d + s * model.h
    if not np.all(np.isfinite(values)):
        raise EvaluationOverflowError("model evaluation produced non-finite values")
    return FrequencyResponse(grid, values)


def poles_to_modal(poles) -> ModalParameters:
    """Convert stable poles (rad/s) to natural frequency (Hz) and damping ratio.

    One mode per conjugate pair, represented by the pole with positive
    imaginary part. Real poles carry no oscillation; they are collected in
    ``overdamped`` instead of ``modes``.
    """
    poles = np.asarray(poles, complex).ravel()
    if np.any(poles.real >= 0):
        bad = poles[poles.real >= 0][0]
        raise UnstablePoleError(f"pole {bad} is not strictly stable")
    modes, overdamped = [], []
    for p in poles:
        if p.imag > 0:
            mag = abs(p)
            modes.append(Mode(mag / TWO_PI, -p.real / mag, complex(p)))
        elif p.imag == 0:
            overdamped.append(complex(p))
    if overdamped:
        logger.info("%d real pole(s) reported as overdamped", len(overdamped))
    modes.sort(key=lambda m: m.frequency)
    return ModalParameters(tuple(modes), tuple(overdamped))

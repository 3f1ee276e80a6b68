"""Linearised rational-polynomial (LSCF-style) fit, kept as a comparison baseline.

``H(s) ~ alpha(s) / beta(s)`` with monomial numerator and denominator of
degree ``N`` in the normalised variable ``s / scale``, ``scale = 2*pi*f_max``.
The denominator is pinned monic (``b_N = 1``) and the linearised error
``H*beta - alpha`` is minimised in one least-squares solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TWO_PI, FrequencyGrid, FrequencyResponse
from .errors import ConfigError, DataError, IllConditionedError, NumericFailureError

RCOND = 1e-15
# a rank-deficient solve is accepted only if the minimum-norm fit matches the data this closely
CANCEL_RTOL = 1e-8


@dataclass(frozen=True)
class PolynomialModel:
    numerator_coeffs: np.ndarray  # a_0 .. a_N, ascending powers of s/scale
    denominator_coeffs: np.ndarray  # b_0 .. b_N, b_N == 1
    frequency_scale: float  # rad/s

    def __post_init__(self):
        a = np.asarray(self.numerator_coeffs, float)
        b = np.asarray(self.denominator_coeffs, float)
        if a.shape != b.shape or a.ndim != 1 or a.size < 2:
            raise DataError("numerator and denominator must both have N + 1 >= 2 coefficients")
        if b[-1] == 0:
            raise DataError("leading denominator coefficient must be nonzero")
        object.__setattr__(self, "numerator_coeffs", a)
        object.__setattr__(self, "denominator_coeffs", b)

    @property
    def order(self) -> int:
        return self.denominator_coeffs.size - 1

    def evaluate(self, grid: FrequencyGrid) -> FrequencyResponse:
        x = grid.s / self.frequency_scale
        num = np.polyval(self.numerator_coeffs[::-1], x)
        den = np.polyval(self.denominator_coeffs[::-1], x)
        with np.errstate(all="ignore"):
            values = num / den
        if not np.all(np.isfinite(values)):
            raise NumericFailureError("polynomial model has a pole on the grid")
        return FrequencyResponse(grid, values)

    def to_dict(self) -> dict:
        return {
            "numerator_coeffs": self.numerator_coeffs.tolist(),
            "denominator_coeffs": self.denominator_coeffs.tolist(),
            "frequency_scale": self.frequency_scale,
        }


def lscf_fit(H: FrequencyResponse, order: int):
    """Return ``(PolynomialModel, condition_estimate)``.

    Raises IllConditionedError when the monomial design matrix is numerically
    singular and the minimum-norm solution does not reproduce the data, the
    expected outcome for high orders over wide bands. A singular system that
    still fits (surplus order, exact pole/zero cancellation) is accepted.
    """
    if int(order) != order or order < 1:
        raise ConfigError("order must be a positive integer")
    n_unknown = 2 * order + 1
    if n_unknown > 2 * len(H):
        raise DataError(f"order {order} not identifiable from {len(H)} samples")
    scale = TWO_PI * H.grid.f_max
    x = H.grid.s / scale
    V = x[:, None] ** np.arange(order + 1)[None, :]
    # alpha(x) - H * (b_0 + ... + b_{N-1} x^{N-1}) = H * x^N
    A = np.hstack([V, -H.values[:, None] * V[:, :order]])
    rhs = H.values * V[:, order]
    Ar = np.vstack([A.real, A.imag])
    br = np.concatenate([rhs.real, rhs.imag])
    if not np.all(np.isfinite(Ar)):
        raise NumericFailureError("design matrix contains non-finite entries")
    try:
        sol, _, rank, sv = np.linalg.lstsq(Ar, br, rcond=RCOND)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericFailureError(str(exc)) from exc
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    a = sol[: order + 1]
    b = np.append(sol[order + 1 :], 1.0)
    model = PolynomialModel(a, b, scale)
    if rank < Ar.shape[1] and not _reproduces(model, H):
        raise IllConditionedError(f"LSCF design matrix is rank deficient ({rank} < {Ar.shape[1]})", cond)
    return model, cond


def _reproduces(model, H, rtol=CANCEL_RTOL):
    """True when a rank-deficient solution still fits ``H``: an exact pole/zero cancellation."""
    try:
        fit = model.evaluate(H.grid).values
    except NumericFailureError:
        return False
    scale = np.sqrt(np.mean(np.abs(H.values) ** 2))
    return bool(np.sqrt(np.mean(np.abs(fit - H.values) ** 2)) <= rtol * max(scale, np.finfo(float).tiny))


def polynomial_poles(model: PolynomialModel) -> np.ndarray:
    """Roots of the denominator in rad/s (companion-matrix eigenvalues), unstable ones kept."""
    b = model.denominator_coeffs
    nz = np.flatnonzero(b)
    if nz.size == 0:
        raise DataError("denominator is identically zero")
    b = b[: nz[-1] + 1]
    n = b.size - 1
    if n == 0:
        return np.array([], complex)
    comp = np.zeros((n, n))
    comp[0, :] = -b[-2::-1] / b[-1]
    comp[1:, :-1] = np.eye(n - 1)
    try:
        roots = np.linalg.eigvals(comp)
    except np.linalg.LinAlgError as exc:
        raise NumericFailureError(str(exc)) from exc
    roots = roots * model.frequency_scale
    return roots[np.lexsort((roots.real, np.abs(roots.imag)))]

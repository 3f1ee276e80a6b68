"""Vector Fitting: iterative pole relocation followed by residue identification.

The least-squares problems are solved as real systems. A complex pair
``(p, conj(p))`` contributes the two real basis functions

    1/(s - p) + 1/(s - conj(p))      and      1j/(s - p) - 1j/(s - conj(p))

whose real coefficients ``(x1, x2)`` give the residue ``x1 + 1j*x2`` of ``p``
and its conjugate for ``conj(p)``. Residues therefore come out conjugate
without any post-processing.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import TWO_PI, FrequencyGrid, FrequencyResponse, RationalModel, canonical_order, evaluate_model
from .errors import ConfigError, DataError, IllConditionedError, NumericFailureError

logger = logging.getLogger(__name__)

# Singular values below this fraction of the largest are treated as zero.
RCOND = 1e-14
# Relative RMS of sigma below which the relocation step is considered degenerate.
SIGMA_FLOOR = 1e-8
MAX_RESTARTS = 3


class OddOrderWarning(UserWarning):
    """An odd model order forces one real starting pole."""


@dataclass(frozen=True)
class VfOptions:
    order: int
    max_iterations: int = 10
    convergence_tol: float = 1e-10
    enforce_stability: bool = True
    include_d: bool = True
    include_h: bool = True
    weights: Optional[np.ndarray] = None
    seed: int = 42

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise ConfigError("order must be a positive integer")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ConfigError("max_iterations must be a positive integer")
        if not self.convergence_tol >= 0:
            raise ConfigError("convergence_tol must be >= 0")
        if self.weights is not None:
            w = np.asarray(self.weights, float).ravel()
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise ConfigError("weights must be finite and > 0")
            w.setflags(write=False)
            object.__setattr__(self, "weights", w)

    def weights_for(self, n):
        if self.weights is None:
            return np.ones(n)
        if self.weights.size != n:
            raise ConfigError(f"weights have length {self.weights.size}, grid has {n}")
        return self.weights


@dataclass
class VfDiagnostics:
    iterations_run: int = 0
    rms_error_history: list = field(default_factory=list)
    poles_flipped_per_iteration: list = field(default_factory=list)
    final_rms_error: float = float("nan")
    system_condition_estimate: float = float("nan")
    converged: bool = False
    restarts: int = 0
    odd_order: bool = False
    seed: int = 42

    def to_dict(self) -> dict:
        return {
            "iterations_run": self.iterations_run,
            "rms_error_history": [float(x) for x in self.rms_error_history],
            "poles_flipped_per_iteration": [int(x) for x in self.poles_flipped_per_iteration],
            "final_rms_error": float(self.final_rms_error),
            "system_condition_estimate": float(self.system_condition_estimate),
            "converged": self.converged,
            "restarts": self.restarts,
            "odd_order": self.odd_order,
            "seed": self.seed,
        }


def initial_poles(grid: FrequencyGrid, order: int, real_ratio: float = 0.01) -> np.ndarray:
    """Complex starting poles spread linearly over the band.

    ``order // 2`` pairs ``-real_ratio*beta +/- 1j*beta`` with ``beta = 2*pi*f``;
    a single pair sits at the band midpoint, otherwise both band edges are
    included. An odd order adds one real pole at ``-2*pi*f_min`` and warns.
    """
    if order < 1:
        raise ConfigError("order must be >= 1")
    n_pairs = order // 2
    if n_pairs == 1:
        f = np.array([0.5 * (grid.f_min + grid.f_max)])
    else:
        f = np.linspace(grid.f_min, grid.f_max, n_pairs)
    beta = TWO_PI * f
    poles = []
    if order % 2:
        warnings.warn(f"odd order {order}: adding a real starting pole", OddOrderWarning, stacklevel=2)
        poles.append(-TWO_PI * grid.f_min + 0j)
    for b in beta:
        p = complex(-real_ratio * b, b)
        poles += [p, p.conjugate()]
    return np.array(poles, complex)


def _layout(poles):
    """Return canonically ordered poles and a kind code per entry.

    0 = real pole, 1 = first (positive-imaginary) member of a pair, 2 = its conjugate.
    """
    poles = canonical_order(poles)
    kind = np.zeros(poles.size, int)
    n_real = int(np.sum(poles.imag == 0))
    kind[n_real::2] = 1
    kind[n_real + 1 :: 2] = 2
    return poles, kind


def _basis(s, poles, kind):
    """Real-parameterised partial-fraction columns, shape (M, N), complex valued."""
    phi = np.empty((s.size, poles.size), complex)
    for i, (p, k) in enumerate(zip(poles, kind)):
        if k == 0:
            phi[:, i] = 1.0 / (s - p.real)
        elif k == 1:
            a = 1.0 / (s - p)
            b = 1.0 / (s - np.conj(p))
            phi[:, i] = a + b
            phi[:, i + 1] = 1j * a - 1j * b
    return phi


def _residues_from_x(x, poles, kind):
    res = np.empty(poles.size, complex)
    for i, k in enumerate(kind):
        if k == 0:
            res[i] = x[i]
        elif k == 1:
            res[i] = x[i] + 1j * x[i + 1]
            res[i + 1] = x[i] - 1j * x[i + 1]
    return res


def _solve_real(a_cplx, b_cplx, w, checked_cols=None):
    """Weighted complex least squares solved as a stacked real system with unit-norm columns.

    Returns ``(x, condition_estimate, rank)``; the minimum-norm solution is
    used when the system is rank deficient. IllConditionedError is raised
    when the leading ``checked_cols`` columns (default: all) are not of full
    numerical rank.
    """
    a = a_cplx * w[:, None]
    b = b_cplx * w
    A = np.vstack([a.real, a.imag])
    rhs = np.concatenate([b.real, b.imag])
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(rhs))):
        raise NumericFailureError("least-squares system contains non-finite entries")
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        raise IllConditionedError("least-squares system has an all-zero column", float("inf"))
    A = A / norms
    try:
        x, _, rank, sv = np.linalg.lstsq(A, rhs, rcond=RCOND)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericFailureError(f"least-squares solve failed: {exc}") from exc
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    if checked_cols is None or checked_cols >= A.shape[1]:
        checked_cols, sub_rank, sub_sv = A.shape[1], rank, sv
    else:
        sub_sv = np.linalg.svd(A[:, :checked_cols], compute_uv=False)
        sub_rank = int(np.sum(sub_sv > RCOND * sub_sv[0]))
    if sub_rank < checked_cols:
        sub_cond = float(sub_sv[0] / sub_sv[-1]) if sub_sv[-1] > 0 else float("inf")
        raise IllConditionedError(f"least-squares system is rank deficient ({sub_rank} < {checked_cols})", sub_cond)
    return x / norms, cond, rank


def _sigma_zeros(poles, kind, sigma_x):
    n = poles.size
    lam = np.zeros((n, n))
    bvec = np.zeros(n)
    for i, k in enumerate(kind):
        if k == 0:
            lam[i, i] = poles[i].real
            bvec[i] = 1.0
        elif k == 1:
            a, b = poles[i].real, poles[i].imag
            lam[i : i + 2, i : i + 2] = [[a, b], [-b, a]]
            bvec[i] = 2.0
    try:
        return np.linalg.eigvals(lam - np.outer(bvec, sigma_x))
    except np.linalg.LinAlgError as exc:
        raise NumericFailureError(f"eigenvalue solve failed: {exc}") from exc


def _stabilize(zeros):
    """Flip right-half-plane zeros into the left half plane; return (poles, n_flipped)."""
    zeros = np.array(zeros, complex)
    unstable = zeros.real > 0
    zeros[unstable] = -zeros[unstable].real + 1j * zeros[unstable].imag
    on_axis = zeros.real == 0
    # a pole exactly on the imaginary axis gets a token amount of damping
    zeros[on_axis] = -1e-12 * np.maximum(np.abs(zeros[on_axis]), 1.0) + 1j * zeros[on_axis].imag
    return zeros, int(np.sum(unstable | on_axis))


def _relocate(H, poles, opts, w):
    poles, kind = _layout(poles)
    s = H.grid.s
    phi = _basis(s, poles, kind)
    cols = [phi]
    if opts.include_d:
        cols.append(np.ones((s.size, 1), complex))
    if opts.include_h:
        cols.append(s[:, None])
    n_direct = sum(c.shape[1] for c in cols)
    cols.append(-H.values[:, None] * phi)
    # Surplus poles on (nearly) exactly rational data leave sigma undetermined
    # up to a common factor; the minimum-norm solution handles that case, so
    # only the direct partial-fraction block has to be of full rank.
    x, cond, _ = _solve_real(np.hstack(cols), H.values, w, checked_cols=n_direct)
    sigma_x = x[-poles.size :]
    sigma = 1.0 + phi @ sigma_x
    degenerate = np.sqrt(np.mean(np.abs(sigma) ** 2)) < SIGMA_FLOOR
    zeros = _sigma_zeros(poles, kind, sigma_x)
    return zeros, cond, degenerate


def relocate_poles(H: FrequencyResponse, poles, opts: VfOptions) -> np.ndarray:
    """One pole-relocation step: zeros of the fitted sigma become the new poles."""
    w = opts.weights_for(len(H))
    zeros, _, _ = _relocate(H, poles, opts, w)
    if opts.enforce_stability:
        zeros, _ = _stabilize(zeros)
    return canonical_order(zeros)


def _fit_residues(H, poles, opts, w):
    poles, kind = _layout(poles)
    s = H.grid.s
    cols = [_basis(s, poles, kind)]
    if opts.include_d:
        cols.append(np.ones((s.size, 1), complex))
    if opts.include_h:
        cols.append(s[:, None])
    x, cond, _ = _solve_real(np.hstack(cols), H.values, w)
    n = poles.size
    residues = _residues_from_x(x[:n], poles, kind)
    d = x[n] if opts.include_d else 0.0
    h = x[n + int(opts.include_d)] if opts.include_h else 0.0
    model = RationalModel(poles, residues, d, h, opts.include_d, opts.include_h)
    return model, cond


def fit_residues(H: FrequencyResponse, poles, opts: VfOptions) -> RationalModel:
    """Residues, ``d`` and ``h`` for fixed poles (linear least squares)."""
    model, _ = _fit_residues(H, poles, opts, opts.weights_for(len(H)))
    return model


def weighted_rms(H: FrequencyResponse, model: RationalModel, weights=None) -> float:
    err = np.abs(H.values - evaluate_model(model, H.grid).values)
    w = np.ones(err.size) if weights is None else np.asarray(weights, float)
    return float(np.sqrt(np.sum((w * err) ** 2) / np.sum(w**2)))


def _randomized_start(grid, order, rng):
    poles = initial_poles(grid, order) if order % 2 == 0 else _odd_start(grid, order)
    out = poles.copy()
    for i, p in enumerate(poles):
        if p.imag > 0:
            ratio = rng.uniform(0.005, 0.02)
            out[i] = complex(-ratio * p.imag, p.imag)
            out[i + 1] = np.conj(out[i])
    return out


def _odd_start(grid, order):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OddOrderWarning)
        return initial_poles(grid, order)


def vector_fit(H: FrequencyResponse, opts: VfOptions):
    """Fit a stable rational model of order ``opts.order`` to ``H``.

    Returns ``(model, diagnostics)``. The iterate with the lowest weighted RMS
    error is returned; hitting ``max_iterations`` without meeting
    ``convergence_tol`` only clears ``diagnostics.converged``.
    """
    if opts.order >= 2 * len(H):
        raise DataError(f"order {opts.order} not identifiable from {len(H)} samples")
    w = opts.weights_for(len(H))
    diag = VfDiagnostics(seed=opts.seed, odd_order=bool(opts.order % 2))
    if opts.order % 2:
        warnings.warn(f"odd order {opts.order}: adding a real starting pole", OddOrderWarning, stacklevel=2)
    poles = _odd_start(H.grid, opts.order)
    rng = np.random.default_rng(opts.seed)
    h_rms = float(np.sqrt(np.sum((w * np.abs(H.values)) ** 2) / np.sum(w**2)))

    best_model, best_rms = None, np.inf
    prev_rms = None
    while diag.iterations_run < opts.max_iterations:
        zeros, cond, degenerate = _relocate(H, poles, opts, w)
        if degenerate and diag.restarts < MAX_RESTARTS:
            diag.restarts += 1
            logger.warning("sigma collapsed to zero; restarting with randomized poles (seed %d)", opts.seed)
            poles = _randomized_start(H.grid, opts.order, rng)
            continue
        flipped = 0
        if opts.enforce_stability:
            zeros, flipped = _stabilize(zeros)
        if np.any(zeros.real >= 0):
            # stability not enforced: residues cannot be fitted as a RationalModel
            raise NumericFailureError("relocated poles are unstable and enforce_stability is off")
        poles = canonical_order(zeros)
        model, cond_res = _fit_residues(H, poles, opts, w)
        rms = weighted_rms(H, model, w)
        diag.iterations_run += 1
        diag.rms_error_history.append(rms)
        diag.poles_flipped_per_iteration.append(flipped)
        diag.system_condition_estimate = cond
        if rms < best_rms:
            best_model, best_rms = model, rms
        if rms <= 1e-14 * h_rms:
            diag.converged = True
            break
        if prev_rms is not None and abs(prev_rms - rms) <= opts.convergence_tol * max(prev_rms, 1e-300):
            diag.converged = True
            break
        prev_rms = rms

    if best_model is None:
        raise NumericFailureError("no usable iterate: sigma stayed degenerate after restarts")
    diag.final_rms_error = best_rms
    return best_model, diag

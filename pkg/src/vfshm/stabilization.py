"""Order sweep and pole clustering (stabilization diagram)."""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import TWO_PI, FrequencyResponse, ModalParameters, RationalModel, poles_to_modal
from .errors import ConfigError, SweepFailedError, VfshmError
from .vectfit import VfOptions, vector_fit

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SweepConfig:
    n_min: int = 6
    n_max: int = 16
    n_step: int = 2
    freq_tol: float = 0.001
    damp_tol: float = 0.05
    min_persistence: int = 3
    in_band_only: bool = True
    spurious_gamma: float = 0.01
    workers: int = 1

    def __post_init__(self):
        if self.n_min < 2 or self.n_step < 1 or self.n_max < self.n_min:
            raise ConfigError("need 2 <= n_min <= n_max and n_step >= 1")
        if self.freq_tol <= 0 or self.damp_tol <= 0:
            raise ConfigError("tolerances must be > 0")
        if self.min_persistence < 1:
            raise ConfigError("min_persistence must be >= 1")
        if self.n_max < self.n_min + (self.min_persistence - 1) * self.n_step:
            warnings.warn("order range is too short for any cluster to reach min_persistence", stacklevel=2)

    @property
    def orders(self):
        return list(range(self.n_min, self.n_max + 1, self.n_step))


@dataclass
class Cluster:
    members: list = field(default_factory=list)  # (order, pole)
    stable: bool = False

    @property
    def representative_pole(self) -> complex:
        return self.members[-1][1]

    @property
    def orders(self):
        return [n for n, _ in self.members]


@dataclass
class StabilizationResult:
    clusters: list
    per_order_models: list  # (order, RationalModel, final_rms_error)
    failures: list = field(default_factory=list)  # (order, message)

    @property
    def stable_clusters(self):
        return [c for c in self.clusters if c.stable]

    def diagram_rows(self):
        """Rows ``(order, frequency_hz, damping, stable)`` for every oscillatory pole, sorted."""
        stable_keys = {(n, p) for c in self.clusters if c.stable for n, p in c.members}
        rows = []
        for n, model, _ in self.per_order_models:
            for m in poles_to_modal(model.poles).modes:
                rows.append((n, m.frequency, m.damping_ratio, int((n, m.pole) in stable_keys)))
        rows.sort()
        return rows


def band_energy_norms(model: RationalModel, f_lo: float, f_hi: float):
    """Band-limited L2 norm of each oscillatory pole's partial-fraction term.

    Returns ``(poles, norms)`` for the positive-imaginary poles, with
    ``norms`` relative to their mean. Uses the closed form
    ``|r|^2/a * [atan((w2 - b)/a) - atan((w1 - b)/a)]`` for ``p = -a + 1j*b``
    so sharply peaked terms are not at the mercy of grid sampling.
    """
    w1, w2 = TWO_PI * f_lo, TWO_PI * f_hi
    poles, norms = [], []
    for p, r in zip(model.poles, model.residues):
        if p.imag <= 0:
            continue
        a, b = -p.real, p.imag
        energy = abs(r) ** 2 / a * (np.arctan((w2 - b) / a) - np.arctan((w1 - b) / a))
        poles.append(p)
        norms.append(np.sqrt(energy))
    norms = np.array(norms)
    if norms.size and norms.mean() > 0:
        norms = norms / norms.mean()
    return poles, norms


def _fs(pole):
    mag = abs(pole)
    return mag / TWO_PI, -pole.real / mag


def _fits_cluster(cluster, pole, cfg):
    f_new, z_new = _fs(pole)
    freqs = [_fs(p)[0] for _, p in cluster.members] + [f_new]
    if (max(freqs) - min(freqs)) / f_new > cfg.freq_tol:
        return False
    for _, p in cluster.members:
        if abs(_fs(p)[1] - z_new) > cfg.damp_tol * z_new:
            return False
    return True


def _chain(order_poles, cfg):
    """Greedy chaining of poles across consecutive orders."""
    open_clusters = []
    done = []
    prev_order = None
    for order, poles in order_poles:
        contiguous = prev_order is not None
        candidates = []
        if contiguous:
            for ci, cl in enumerate(open_clusters):
                f_last, z_last = _fs(cl.representative_pole)
                for pi, p in enumerate(poles):
                    f, z = _fs(p)
                    df = abs(f - f_last) / f
                    if df <= cfg.freq_tol and _fits_cluster(cl, p, cfg):
                        candidates.append((df, abs(z - z_last), ci, pi))
        candidates.sort()
        used_c, used_p = set(), set()
        for _, _, ci, pi in candidates:
            if ci in used_c or pi in used_p:
                continue
            used_c.add(ci)
            used_p.add(pi)
            open_clusters[ci].members.append((order, poles[pi]))
        # clusters not extended at this order are closed
        still_open = []
        for ci, cl in enumerate(open_clusters):
            (still_open if ci in used_c else done).append(cl)
        for pi, p in enumerate(poles):
            if pi not in used_p:
                still_open.append(Cluster([(order, p)]))
        open_clusters = still_open
        prev_order = order
    done += open_clusters
    for cl in done:
        cl.stable = len(cl.members) >= cfg.min_persistence
    done.sort(key=lambda c: (_fs(c.representative_pole)[0], c.orders[0]))
    return done


def _fit_one(H, n, base_opts):
    opts = replace(base_opts, order=n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return vector_fit(H, opts)


def order_sweep(H: FrequencyResponse, cfg: SweepConfig, base_opts: VfOptions | None = None) -> StabilizationResult:
    """Fit every order in the sweep and cluster poles that persist across orders.

    A failed order is logged and left out; it breaks the chains running
    through it. Raises SweepFailedError only if every order fails.
    """
    base_opts = base_opts or VfOptions(order=cfg.n_min)
    orders = cfg.orders

    def run(n):
        try:
            return n, _fit_one(H, n, base_opts), None
        except VfshmError as exc:
            return n, None, str(exc)

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            outcomes = list(pool.map(run, orders))
    else:
        outcomes = [run(n) for n in orders]

    per_order, failures, order_poles = [], [], []
    f_lo, f_hi = H.grid.f_min, H.grid.f_max
    for n, fitted, err in outcomes:
        if fitted is None:
            logger.warning("order %d failed: %s", n, err)
            failures.append((n, err))
            order_poles.append((n, None))
            continue
        model, diag = fitted
        per_order.append((n, model, diag.final_rms_error))
        cand, rel = band_energy_norms(model, f_lo, f_hi)
        poles = [p for p, e in zip(cand, rel) if e >= cfg.spurious_gamma]
        if cfg.in_band_only:
            poles = [p for p in poles if f_lo <= abs(p) / TWO_PI <= f_hi]
        order_poles.append((n, poles))
    if not per_order:
        raise SweepFailedError(f"all {len(orders)} orders failed; first error: {failures[0][1]}")

    # a failed order splits the sweep into independent segments
    clusters, segment = [], []
    for n, poles in order_poles + [(None, None)]:
        if poles is None:
            clusters += _chain(segment, cfg)
            segment = []
        else:
            segment.append((n, poles))
    clusters.sort(key=lambda c: (_fs(c.representative_pole)[0], c.orders[0]))
    return StabilizationResult(clusters, per_order, failures)


def stable_modal_set(result: StabilizationResult, freq_tol: float = 0.001) -> ModalParameters:
    """Modes of the stable cluster representatives, ascending, duplicates within ``freq_tol`` merged."""
    reps = [c.representative_pole for c in result.clusters if c.stable]
    modal = poles_to_modal(np.array(reps, complex)) if reps else ModalParameters()
    kept = []
    for m in modal.modes:
        if kept and (m.frequency - kept[-1].frequency) / m.frequency <= freq_tol:
            continue
        kept.append(m)
    return ModalParameters(tuple(kept))

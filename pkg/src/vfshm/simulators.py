"""Synthetic ground truth: a grounded spring-mass-damper chain and the coupled
piezoelectric impedance of a bonded wafer."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .core import TWO_PI, FrequencyGrid, FrequencyResponse, RationalModel, canonical_order
from .errors import ConfigError, NumericFailureError, SingularAtFrequencyError


@dataclass(frozen=True)
class MdofSystem:
    """Chain of ``n`` masses joined by ``n + 1`` springs/dampers.

    Element ``i`` connects mass ``i - 1`` to mass ``i`` (zero-based); elements
    ``0`` and ``n`` tie the end masses to ground. ``force_dof`` and
    ``response_dof`` are zero-based mass indices.
    """

    masses: tuple
    stiffnesses: tuple
    damping_coeffs: tuple
    force_dof: int = 0
    response_dof: int = 0

    def __post_init__(self):
        m = tuple(float(x) for x in self.masses)
        k = tuple(float(x) for x in self.stiffnesses)
        c = tuple(float(x) for x in self.damping_coeffs)
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "stiffnesses", k)
        object.__setattr__(self, "damping_coeffs", c)
        n = len(m)
        if n < 1 or len(k) != n + 1 or len(c) != n + 1:
            raise ConfigError("chain needs n masses and n + 1 springs and dampers")
        if min(m) <= 0 or min(k) <= 0 or min(c) < 0:
            raise ConfigError("masses and stiffnesses must be > 0, damping >= 0")
        for dof in (self.force_dof, self.response_dof):
            if not 0 <= dof < n:
                raise ConfigError(f"dof index {dof} out of range for {n} masses")

    @property
    def n_dof(self) -> int:
        return len(self.masses)

    def matrices(self):
        """Return ``(M, C, K)``."""
        n = self.n_dof
        K = np.zeros((n, n))
        C = np.zeros((n, n))
        for i in range(n + 1):
            for mat, v in ((K, self.stiffnesses[i]), (C, self.damping_coeffs[i])):
                if i > 0:
                    mat[i - 1, i - 1] += v
                if i < n:
                    mat[i, i] += v
                if 0 < i < n:
                    mat[i - 1, i] -= v
                    mat[i, i - 1] -= v
        return np.diag(self.masses), C, K


def benchmark_system(n=5, mass=0.1, stiffness=200e3, damping=0.05) -> MdofSystem:
    """The uniform five-mass benchmark chain, driven and measured at the first mass."""
    return MdofSystem((mass,) * n, (stiffness,) * (n + 1), (damping,) * (n + 1), 0, 0)


def apply_damage(sys: MdofSystem, edits: Sequence) -> MdofSystem:
    """Scale element stiffness/damping; ``edits`` holds ``(element, k_factor, c_factor)``."""
    k = list(sys.stiffnesses)
    c = list(sys.damping_coeffs)
    for idx, kf, cf in edits:
        if not 0 <= idx < len(k):
            raise ConfigError(f"element index {idx} out of range 0..{len(k) - 1}")
        if kf <= 0 or cf <= 0:
            raise ConfigError("damage factors must be > 0")
        k[idx] *= kf
        c[idx] *= cf
    return replace(sys, stiffnesses=tuple(k), damping_coeffs=tuple(c))


def mdof_frf(sys: MdofSystem, grid: FrequencyGrid) -> FrequencyResponse:
    """Receptance ``x_r / F_f`` on the grid."""
    M, C, K = sys.matrices()
    out = np.empty(len(grid), complex)
    for i, f in enumerate(grid.frequencies):
        w = TWO_PI * f
        Z = K - w * w * M + 1j * w * C
        try:
            col = np.linalg.solve(Z, np.eye(sys.n_dof)[:, sys.force_dof])
        except np.linalg.LinAlgError:
            raise SingularAtFrequencyError(float(f)) from None
        if not np.all(np.isfinite(col)) or np.linalg.cond(Z) > 1e15:
            raise SingularAtFrequencyError(float(f))
        out[i] = col[sys.response_dof]
    return FrequencyResponse(grid, out)


def _state_matrix(sys):
    M, C, K = sys.matrices()
    n = sys.n_dof
    Minv = np.diag(1.0 / np.diag(M))
    return np.block([[np.zeros((n, n)), np.eye(n)], [-Minv @ K, -Minv @ C]])


def mdof_poles(sys: MdofSystem) -> np.ndarray:
    """Eigenvalues (rad/s) of the first-order form, conjugate closed, sorted by ``|Im|``."""
    try:
        lam = np.linalg.eigvals(_state_matrix(sys))
    except np.linalg.LinAlgError as exc:
        raise NumericFailureError(str(exc)) from exc
    upper = lam[lam.imag > 0]
    real = lam[lam.imag == 0]
    upper = upper[np.argsort(upper.imag)]
    out = list(np.sort(real.real).astype(complex))
    for p in upper:
        out += [p, np.conj(p)]
    return np.array(out)


def mdof_model(sys: MdofSystem) -> RationalModel:
    """Exact pole-residue expansion of :func:`mdof_frf` from the state-space eigenproblem."""
    A = _state_matrix(sys)
    n = sys.n_dof
    lam, V = np.linalg.eig(A)
    B = np.zeros(2 * n)
    B[n + sys.force_dof] = 1.0 / sys.masses[sys.force_dof]
    Cout = np.zeros(2 * n)
    Cout[sys.response_dof] = 1.0
    res = (Cout @ V) * np.linalg.solve(V, B)
    poles, res = canonical_order(lam, res)
    # enforce exact conjugate symmetry on the residues
    n_real = int(np.sum(poles.imag == 0))
    res[n_real + 1 :: 2] = np.conj(res[n_real::2])
    res[:n_real] = res[:n_real].real
    return RationalModel(poles, res, 0.0, 0.0)


@dataclass(frozen=True)
class PztParams:
    """Wafer geometry (m) and material constants.

    Losses follow the ``exp(+i w t)`` convention: ``Im(s11E) <= 0`` and
    ``Im(eps33) <= 0``.
    """

    b: float
    h: float
    l: float
    d13: float
    s11E: complex
    eps33: complex
    rho: float

    def __post_init__(self):
        if min(self.b, self.h, self.l) <= 0 or self.rho <= 0:
            raise ConfigError("geometry and density must be > 0")
        if complex(self.s11E).imag > 0 or complex(self.eps33).imag > 0:
            raise ConfigError("lossy constants need Im(s11E) <= 0 and Im(eps33) <= 0")


# PZT-5A wafer, 20 x 20 x 0.2 mm, 1% mechanical and 1.5% dielectric loss
PZT5A = PztParams(
    b=0.02,
    h=0.0002,
    l=0.02,
    d13=-171e-12,
    s11E=16.4e-12 * (1 - 0.01j),
    eps33=1.53e-8 * (1 - 0.015j),
    rho=7750.0,
)


def _tan_ratio(kl):
    """tan(kl)/kl with the removable singularity at 0."""
    kl = np.asarray(kl, complex)
    small = np.abs(kl) < 1e-8
    out = np.empty_like(kl)
    out[small] = 1.0 + kl[small] ** 2 / 3.0
    out[~small] = np.tan(kl[~small]) / kl[~small]
    return out


def emi_coupled_impedance(pzt: PztParams, z_structure: Callable, grid: FrequencyGrid):
    """Electrical impedance of a wafer bonded to a structure with mechanical impedance ``z_structure(w)``.

    Returns ``(response, flagged)`` where ``flagged`` is a boolean array
    marking points within 1e-9 of a tangent pole (``kl`` near an odd multiple
    of pi/2); the value there is whatever the formula yields.
    """
    w = TWO_PI * grid.frequencies
    s11 = complex(pzt.s11E)
    eps = complex(pzt.eps33)
    k = w * np.sqrt(pzt.rho * s11 + 0j)
    k = np.where(k.real < 0, -k, k)
    kl = k * pzt.l
    tr = _tan_ratio(kl)
    z_pzt = -1j * pzt.b * pzt.h * pzt.l / (s11 * w * tr)
    z_st = np.asarray(z_structure(w), complex) * np.ones_like(w)
    ratio = z_pzt / (z_pzt + z_st)
    admittance = 1j * w * (pzt.b * pzt.l / pzt.h) * (pzt.d13**2 / s11 * (tr * ratio - 1) + eps)
    z = 1.0 / admittance
    half = (kl / (np.pi / 2)).real
    nearest_odd = 2 * np.round((half - 1) / 2) + 1
    flagged = np.abs(kl - nearest_odd * np.pi / 2) < 1e-9
    return FrequencyResponse(grid, z), flagged


def mdof_mechanical_impedance(sys: MdofSystem) -> Callable:
    """Drive-point mechanical impedance ``F / v`` of the chain, as a function of ``w``."""
    M, C, K = sys.matrices()
    e = np.eye(sys.n_dof)[:, sys.force_dof]

    def z_of(w):
        out = []
        for wi in np.atleast_1d(w):
            rec = np.linalg.solve(K - wi * wi * M + 1j * wi * C, e)[sys.force_dof]
            out.append(1.0 / (1j * wi * rec))
        return np.array(out)

    return z_of

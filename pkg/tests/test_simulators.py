import dataclasses

import mpmath
import numpy as np
import pytest

from conftest import BENCHMARK_DAMAGE
from vfshm import (
    PZT5A,
    ConfigError,
    FrequencyGrid,
    MdofSystem,
    apply_damage,
    emi_coupled_impedance,
    evaluate_model,
    mdof_frf,
    mdof_mechanical_impedance,
    mdof_model,
    mdof_poles,
    benchmark_system,
    poles_to_modal,
)

PUBLISHED_FREQ = [116.51, 225.08, 318.31, 389.85, 434.82]
PUBLISHED_REAL = [-0.011, -0.040, -0.080, -0.119, -0.148]  # Hz-scaled


class TestMdof:
    def test_static_compliance_single_dof(self):
        k = (2 * np.pi * 10) ** 2
        # one mass, one grounded spring: the second element is made negligible
        sys1 = MdofSystem((1.0,), (k, 1e-12), (0.0, 0.0))
        H = mdof_frf(sys1, FrequencyGrid([1e-4, 2e-4]))
        assert H.values[0] == pytest.approx(1 / k, rel=1e-9)

    def test_published_frequencies(self):
        f = poles_to_modal(mdof_poles(benchmark_system())).frequencies
        np.testing.assert_allclose(f, PUBLISHED_FREQ, atol=0.005)

    def test_published_real_parts(self):
        p = mdof_poles(benchmark_system())
        up = p[p.imag > 0] / (2 * np.pi)
        np.testing.assert_allclose(up.real, PUBLISHED_REAL, atol=5e-4)

    def test_resonance_peaks(self, baseline_frf):
        mag = np.abs(baseline_frf.values)
        peaks = [i for i in range(1, mag.size - 1) if mag[i] > mag[i - 1] and mag[i] > mag[i + 1]]
        f = baseline_frf.frequencies[peaks]
        # grid spacing is 0.175 Hz
        np.testing.assert_allclose(f, PUBLISHED_FREQ, atol=0.2)

    def test_reciprocity(self, benchmark_grid):
        a = mdof_frf(dataclasses.replace(benchmark_system(), force_dof=0, response_dof=4), benchmark_grid)
        b = mdof_frf(dataclasses.replace(benchmark_system(), force_dof=4, response_dof=0), benchmark_grid)
        np.testing.assert_allclose(a.values, b.values, rtol=1e-12)

    def test_undamped_poles_imaginary(self):
        sys0 = MdofSystem((0.1,) * 5, (200e3,) * 6, (0.0,) * 6)
        assert np.max(np.abs(mdof_poles(sys0).real)) < 1e-9 * np.max(np.abs(mdof_poles(sys0)))

    def test_conjugate_closed(self):
        p = mdof_poles(benchmark_system())
        np.testing.assert_array_equal(p[1::2], np.conj(p[0::2]))

    def test_partial_fraction_identity(self, benchmark_grid):
        for system in (benchmark_system(), apply_damage(benchmark_system(), BENCHMARK_DAMAGE)):
            direct = mdof_frf(system, benchmark_grid).values
            expanded = evaluate_model(mdof_model(system), benchmark_grid).values
            np.testing.assert_allclose(expanded, direct, rtol=1e-8)

    def test_unit_damage_is_identity(self):
        s = benchmark_system()
        assert apply_damage(s, [(i, 1.0, 1.0) for i in range(6)]) == s

    def test_more_damage_lowers_first_mode(self):
        f = lambda kf: poles_to_modal(mdof_poles(apply_damage(benchmark_system(), [(1, kf, 1.0)]))).frequencies[0]
        assert f(0.5) < f(0.75) < f(1.0)

    @pytest.mark.parametrize("edit", [(6, 1.0, 1.0), (0, 0.0, 1.0), (0, 1.0, -1.0)])
    def test_invalid_damage(self, edit):
        with pytest.raises(ConfigError):
            apply_damage(benchmark_system(), [edit])

    def test_invalid_system(self):
        with pytest.raises(ConfigError):
            MdofSystem((1.0,), (1.0,), (0.0, 0.0))


def mp_impedance(pzt, z_st, f, dps=40):
    """Step-by-step evaluation of the coupled impedance in extended precision."""
    mpmath.mp.dps = dps
    w = 2 * mpmath.pi * mpmath.mpf(f)
    b, h, l, rho = (mpmath.mpf(x) for x in (pzt.b, pzt.h, pzt.l, pzt.rho))
    d13 = mpmath.mpf(pzt.d13)
    s11 = mpmath.mpc(pzt.s11E.real, pzt.s11E.imag)
    eps = mpmath.mpc(pzt.eps33.real, pzt.eps33.imag)
    k = w * mpmath.sqrt(rho * s11)
    if mpmath.re(k) < 0:
        k = -k
    kl = k * l
    tan_ratio = mpmath.tan(kl) / kl
    z_pzt = -1j * b * h * l / (s11 * w * tan_ratio)
    z_st = mpmath.mpc(z_st.real, z_st.imag)
    bracket = d13**2 / s11 * (tan_ratio * z_pzt / (z_pzt + z_st) - 1) + eps
    return complex(1 / (1j * w * (b * l / h) * bracket))


class TestEmi:
    grid = FrequencyGrid.linspace(30e3, 100e3, 701)

    def test_capacitive_limit(self):
        pzt = dataclasses.replace(PZT5A, d13=0.0)
        Z, _ = emi_coupled_impedance(pzt, lambda w: 1e3 * np.ones_like(w), self.grid)
        w = 2 * np.pi * self.grid.frequencies
        cap = 1 / (1j * w * (pzt.b * pzt.l / pzt.h) * pzt.eps33)
        np.testing.assert_allclose(Z.values, cap, rtol=1e-12)

    def test_blocked_limit(self):
        Z, _ = emi_coupled_impedance(PZT5A, lambda w: 1e18 * np.ones_like(w), self.grid)
        w = 2 * np.pi * self.grid.frequencies
        p = PZT5A
        blocked = 1 / (1j * w * (p.b * p.l / p.h) * (p.eps33 - p.d13**2 / p.s11E))
        np.testing.assert_allclose(Z.values, blocked, rtol=1e-9)

    @pytest.mark.parametrize("f", [30e3, 55.5e3, 99e3])
    def test_extended_precision_oracle(self, f):
        z_st = complex(3.0, -40.0)
        Z, _ = emi_coupled_impedance(PZT5A, lambda w: z_st * np.ones_like(w), FrequencyGrid([f, f * 1.01]))
        assert Z.values[0] == pytest.approx(mp_impedance(PZT5A, z_st, f), rel=1e-12)

    def test_capacitive_dominance_with_chain(self):
        Z, flagged = emi_coupled_impedance(PZT5A, mdof_mechanical_impedance(benchmark_system()), self.grid)
        assert np.all(Z.values.imag < 0)
        assert not flagged.any()

    def test_invalid_params(self):
        with pytest.raises(ConfigError):
            dataclasses.replace(PZT5A, h=0.0)
        with pytest.raises(ConfigError):
            dataclasses.replace(PZT5A, eps33=1e-8 * (1 + 0.01j))

import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vfshm import ConfigError, DamageReport, ModalParameters, assess, control_thresholds, match_modes, render_report

UNDAMAGED_F = [116.51, 225.08, 318.31, 389.85, 434.82]
UNDAMAGED_Z = [9.15e-5, 1.77e-4, 2.50e-4, 3.06e-4, 3.42e-4]
DAMAGED_F = [94.91, 218.18, 308.39, 367.19, 426.69]
DAMAGED_Z = [1.66e-4, 1.92e-4, 2.87e-4, 3.59e-4, 3.50e-4]

FIELD_BASE = ModalParameters.from_table([57147.79, 58689.25, 59954.65], [3.441e-4, 5.012e-4, 2.939e-4])
FIELD_CONTROL = ModalParameters.from_table([57142.68, 58683.88, 59949.48], [3.462e-4, 5.029e-4, 2.933e-4])
FIELD_DEFECT = ModalParameters.from_table([57191.10, 58743.30, 59991.04], [4.258e-4, 5.692e-4, 3.692e-4])


def table(freqs, zeta=None):
    return ModalParameters.from_table(freqs, zeta if zeta is not None else [0.01] * len(freqs))


def brute_force_pairs(fb, fi, tol):
    """Largest set of within-tolerance pairs, then smallest summed relative distance."""
    best = None
    idx_b = range(len(fb))
    for k in range(min(len(fb), len(fi)), -1, -1):
        for rows in itertools.combinations(idx_b, k):
            for cols in itertools.permutations(range(len(fi)), k):
                d = [abs(fi[c] - fb[r]) / fb[r] * 100 for r, c in zip(rows, cols)]
                if all(x <= tol for x in d):
                    cand = (sum(d), sorted(zip(rows, cols)))
                    best = cand if best is None or cand[0] < best[0] else best
        if best is not None:
            return best[1]
    return []


class TestMatchModes:
    def test_identical(self):
        m = match_modes(table(UNDAMAGED_F, UNDAMAGED_Z), table(UNDAMAGED_F, UNDAMAGED_Z))
        assert all(x.matched and x.delta_freq_pct == 0 and x.delta_damp_pct == 0 for x in m)

    def test_two_pairs(self):
        m = match_modes(table([100, 200]), table([99, 201]), 5.0)
        assert [(x.baseline_mode[0], x.investigative_mode[0]) for x in m] == [(100, 99), (200, 201)]
        assert m[0].delta_freq_pct == pytest.approx(-1.0)
        assert m[1].delta_freq_pct == pytest.approx(0.5)

    def test_mode_split(self):
        m = match_modes(table([79.2]), table([78.9, 79.4]), 1.0)
        matched = [x for x in m if x.matched]
        assert len(matched) == 1 and matched[0].investigative_mode[0] == 79.4
        lone = [x for x in m if not x.matched]
        assert len(lone) == 1 and lone[0].unmatched_side == "investigative"
        assert lone[0].delta_freq_pct is None

    def test_out_of_tolerance_left_unmatched(self):
        m = match_modes(table([100]), table([150]), 10.0)
        assert {x.unmatched_side for x in m} == {"baseline", "investigative"}

    @given(
        st.lists(st.floats(10, 1000), min_size=1, max_size=4, unique=True),
        st.lists(st.floats(10, 1000), min_size=1, max_size=4, unique=True),
        st.floats(0.5, 50),
    )
    def test_agrees_with_brute_force(self, fb, fi, tol):
        fb, fi = sorted(fb), sorted(fi)
        got = match_modes(table(fb), table(fi), tol)
        pairs = {(x.baseline_mode[0], x.investigative_mode[0]) for x in got if x.matched}
        ref = brute_force_pairs(fb, fi, tol)
        assert len(pairs) == len(ref)
        cost = lambda ps: sum(abs(i - b) / b for b, i in ps)
        assert cost(pairs) <= cost({(fb[r], fi[c]) for r, c in ref}) + 1e-12

    def test_bad_tolerance(self):
        with pytest.raises(ConfigError):
            match_modes(table([1]), table([1]), 0.0)


class TestAssess:
    def test_published_undamaged_vs_damaged(self):
        r = assess(table(UNDAMAGED_F, UNDAMAGED_Z), table(DAMAGED_F, DAMAGED_Z), thresholds=(0.5, 10.0))
        assert r.classification == "damaged"
        assert len(r.matched) == 5
        assert all(m.delta_freq_pct < 0 for m in r.matches)
        assert r.matches[0].delta_freq_pct == pytest.approx(100 * (94.91 - 116.51) / 116.51)
        assert r.matches[0].delta_freq_pct == pytest.approx(-18.54, abs=0.005)
        assert r.direction_hint == "softening"
        assert "0.5%" in r.rule

    def test_identical_undamaged(self):
        r = assess(table(UNDAMAGED_F, UNDAMAGED_Z), table(UNDAMAGED_F, UNDAMAGED_Z))
        assert r.classification == "undamaged"
        assert r.mean_delta_freq_pct == 0 and r.mean_delta_damp_pct == 0
        assert r.direction_hint == "none"

    def test_field_stiffening(self):
        r = assess(FIELD_BASE, FIELD_DEFECT, thresholds=(0.05, 5.0))
        assert r.classification == "damaged"
        assert r.direction_hint == "stiffening"
        np.testing.assert_allclose([m.delta_freq_pct for m in r.matches], [0.0758, 0.0921, 0.0608], atol=5e-4)
        np.testing.assert_allclose([m.delta_damp_pct for m in r.matches], [23.74, 13.57, 25.62], atol=0.01)

    def test_control_thresholds(self):
        (f_th, d_th), band = control_thresholds(FIELD_BASE, FIELD_CONTROL)
        drift_f = max(abs(c - b) / b * 100 for b, c in zip(FIELD_BASE.frequencies, FIELD_CONTROL.frequencies))
        drift_d = max(abs(c - b) / b * 100 for b, c in zip(FIELD_BASE.damping_ratios, FIELD_CONTROL.damping_ratios))
        assert f_th == pytest.approx(3 * drift_f) and d_th == pytest.approx(3 * drift_d)
        r = assess(FIELD_BASE, FIELD_DEFECT, control=FIELD_CONTROL)
        assert r.classification == "damaged" and r.control_band == band
        assert assess(FIELD_BASE, FIELD_CONTROL, control=FIELD_CONTROL).classification == "undamaged"

    def test_zero_drift_control_floored(self):
        (f_th, d_th), _ = control_thresholds(FIELD_BASE, FIELD_BASE)
        assert f_th > 0 and d_th > 0

    def test_unmatched_means_damaged(self):
        r = assess(table([100, 200]), table([100]))
        assert r.classification == "damaged"
        assert any("unmatched" in n for n in r.notes)

    def test_mixed_direction(self):
        assert assess(table([100, 200]), table([99, 201]), (0.1, 10)).direction_hint == "mixed"

    def test_roundoff_shift_is_not_a_direction(self):
        r = assess(table([100, 200]), table([98, 200 * (1 + 1e-15)]))
        assert r.direction_hint == "softening"

    def test_caveat_on_mass_vs_stiffness(self):
        r = assess(table(UNDAMAGED_F, UNDAMAGED_Z), table(DAMAGED_F, DAMAGED_Z))
        assert any("mass" in n for n in r.notes)

    def test_bad_thresholds(self):
        with pytest.raises(ConfigError):
            assess(table([1]), table([1]), (0.0, 1.0))

    def test_report_roundtrip_and_render(self):
        r = assess(table(UNDAMAGED_F, UNDAMAGED_Z), table(DAMAGED_F[:4], DAMAGED_Z[:4]), metrics_in={"rmsd": 1.5, "xcorr": 0.2})
        back = DamageReport.from_dict(r.to_dict())
        assert back.to_dict() == r.to_dict()
        text = render_report(back)
        assert "DAMAGED" in text and "xcorr" in text and "-18.5" in text

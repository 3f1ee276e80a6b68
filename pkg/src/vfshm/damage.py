"""Baseline vs investigative comparison of modal sets."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import ModalParameters
from .errors import ConfigError

DEFAULT_THRESHOLDS = (0.1, 10.0)  # percent: frequency, damping
# Wide enough for the large shifts of real damage; splits still surface because pairing is one-to-one.
DEFAULT_MATCH_TOL_PCT = 20.0
# Frequency shifts below this (percent) are roundoff and count as unchanged for the direction hint.
DIRECTION_DEADBAND_PCT = 1e-6
CONTROL_FACTOR = 3.0
# Floor for thresholds derived from a control measurement with zero drift, percent.
CONTROL_FLOOR = 1e-6

DIRECTION_NOTES = {
    "softening": "Modal frequencies decreased: consistent with a loss of stiffness or an added mass; "
    "the two cannot be told apart from frequencies alone.",
    "stiffening": "Modal frequencies increased: consistent with a gain in stiffness or a loss of mass.",
    "mixed": "Modal frequencies moved in both directions; no global stiffness/mass trend.",
    "none": "No matched mode changed frequency.",
}


@dataclass(frozen=True)
class ModeMatch:
    baseline_mode: Optional[tuple]  # (frequency Hz, damping ratio)
    investigative_mode: Optional[tuple]
    delta_freq_pct: Optional[float] = None
    delta_damp_pct: Optional[float] = None

    @property
    def matched(self) -> bool:
        return self.baseline_mode is not None and self.investigative_mode is not None

    @property
    def unmatched_side(self) -> Optional[str]:
        if self.matched:
            return None
        return "investigative" if self.baseline_mode is None else "baseline"


def _pct(new, old):
    return 100.0 * (new - old) / old


def match_modes(base: ModalParameters, inv: ModalParameters, match_tol_pct: float = DEFAULT_MATCH_TOL_PCT) -> list:
    """One-to-one pairing minimising the summed relative frequency distance.

    Pairs further apart than ``match_tol_pct`` are never formed; leftovers on
    either side come back as unmatched entries (e.g. a split mode). Output is
    sorted by the frequency of whichever side is present.
    """
    if match_tol_pct <= 0:
        raise ConfigError("match tolerance must be > 0")
    fb = base.frequencies
    fi = inv.frequencies
    pairs = []
    if fb.size and fi.size:
        dist = np.abs(fi[None, :] - fb[:, None]) / fb[:, None] * 100.0
        allowed = dist <= match_tol_pct
        # a flat penalty above the total of all allowed costs makes the solver
        # maximise the number of allowed pairs first; disallowed ones are dropped below
        big = 1.0 + dist[allowed].sum() if allowed.any() else 1.0
        cost = np.where(allowed, dist, big)
        rows, cols = linear_sum_assignment(cost)
        pairs = [(r, c) for r, c in zip(rows, cols) if allowed[r, c]]
    used_b = {r for r, _ in pairs}
    used_i = {c for _, c in pairs}
    out = []
    for r, c in pairs:
        b, i = base.modes[r], inv.modes[c]
        out.append(
            ModeMatch(
                (b.frequency, b.damping_ratio),
                (i.frequency, i.damping_ratio),
                _pct(i.frequency, b.frequency),
                _pct(i.damping_ratio, b.damping_ratio) if b.damping_ratio > 0 else 0.0,
            )
        )
    for r, b in enumerate(base.modes):
        if r not in used_b:
            out.append(ModeMatch((b.frequency, b.damping_ratio), None))
    for c, i in enumerate(inv.modes):
        if c not in used_i:
            out.append(ModeMatch(None, (i.frequency, i.damping_ratio)))
    out.sort(key=lambda m: (m.baseline_mode or m.investigative_mode)[0])
    return out


@dataclass
class DamageReport:
    matches: list
    classification: str
    mean_delta_freq_pct: float
    mean_delta_damp_pct: float
    direction_hint: str
    thresholds: tuple
    rule: str
    metric_values: Optional[dict] = None
    control_band: Optional[dict] = None
    notes: list = field(default_factory=list)

    @property
    def matched(self):
        return [m for m in self.matches if m.matched]

    @property
    def unmatched(self):
        return [m for m in self.matches if not m.matched]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["matches"] = [
            {
                "baseline_mode": list(m.baseline_mode) if m.baseline_mode else None,
                "investigative_mode": list(m.investigative_mode) if m.investigative_mode else None,
                "delta_freq_pct": m.delta_freq_pct,
                "delta_damp_pct": m.delta_damp_pct,
                "unmatched": m.unmatched_side,
            }
            for m in self.matches
        ]
        d["thresholds"] = {"freq_pct": self.thresholds[0], "damp_pct": self.thresholds[1]}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DamageReport":
        matches = [
            ModeMatch(
                tuple(m["baseline_mode"]) if m["baseline_mode"] else None,
                tuple(m["investigative_mode"]) if m["investigative_mode"] else None,
                m["delta_freq_pct"],
                m["delta_damp_pct"],
            )
            for m in d["matches"]
        ]
        th = d["thresholds"]
        return cls(
            matches=matches,
            classification=d["classification"],
            mean_delta_freq_pct=d["mean_delta_freq_pct"],
            mean_delta_damp_pct=d["mean_delta_damp_pct"],
            direction_hint=d["direction_hint"],
            thresholds=(th["freq_pct"], th["damp_pct"]),
            rule=d["rule"],
            metric_values=d.get("metric_values"),
            control_band=d.get("control_band"),
            notes=list(d.get("notes", [])),
        )


def control_thresholds(base: ModalParameters, control: ModalParameters, match_tol_pct=DEFAULT_MATCH_TOL_PCT, factor=CONTROL_FACTOR):
    """Thresholds at ``factor`` times the largest drift seen in a repeat (control) measurement."""
    matched = [m for m in match_modes(base, control, match_tol_pct) if m.matched]
    if not matched:
        raise ConfigError("control measurement shares no modes with the baseline")
    f_drift = max(abs(m.delta_freq_pct) for m in matched)
    d_drift = max(abs(m.delta_damp_pct) for m in matched)
    band = {"max_freq_drift_pct": f_drift, "max_damp_drift_pct": d_drift, "factor": factor}
    return (max(factor * f_drift, CONTROL_FLOOR), max(factor * d_drift, CONTROL_FLOOR)), band


def assess(
    base: ModalParameters,
    inv: ModalParameters,
    thresholds=DEFAULT_THRESHOLDS,
    metrics_in: Optional[dict] = None,
    control: Optional[ModalParameters] = None,
    match_tol_pct: float = DEFAULT_MATCH_TOL_PCT,
) -> DamageReport:
    """Classify the investigative state against the baseline.

    Damaged iff any matched mode moves by more than its threshold (percent,
    frequency and damping separately) or any mode is left unmatched. When a
    control modal set is given, the thresholds come from
    :func:`control_thresholds` instead of ``thresholds``.
    """
    control_band = None
    if control is not None:
        thresholds, control_band = control_thresholds(base, control, match_tol_pct)
    f_th, d_th = thresholds
    if f_th <= 0 or d_th <= 0:
        raise ConfigError("thresholds must be > 0")
    matches = match_modes(base, inv, match_tol_pct)
    matched = [m for m in matches if m.matched]
    n_unmatched = len(matches) - len(matched)
    df = np.array([m.delta_freq_pct for m in matched])
    dd = np.array([m.delta_damp_pct for m in matched])
    exceeded = bool(np.any(np.abs(df) > f_th) or np.any(np.abs(dd) > d_th))
    classification = "damaged" if exceeded or n_unmatched > 0 else "undamaged"
    moved = df[np.abs(df) > DIRECTION_DEADBAND_PCT]
    if not moved.size:
        hint = "none"
    elif np.all(moved < 0):
        hint = "softening"
    elif np.all(moved > 0):
        hint = "stiffening"
    else:
        hint = "mixed"
    rule = (
        f"damaged if any |delta_freq| > {f_th:g}% or any |delta_damp| > {d_th:g}% "
        f"or any unmatched mode (match tolerance {match_tol_pct:g}%)"
    )
    notes = [DIRECTION_NOTES[hint]]
    if n_unmatched:
        notes.append(f"{n_unmatched} unmatched mode(s): possible mode split, new or vanished resonance.")
    return DamageReport(
        matches=matches,
        classification=classification,
        mean_delta_freq_pct=float(df.mean()) if df.size else 0.0,
        mean_delta_damp_pct=float(dd.mean()) if dd.size else 0.0,
        direction_hint=hint,
        thresholds=(float(f_th), float(d_th)),
        rule=rule,
        metric_values=metrics_in,
        control_band=control_band,
        notes=notes,
    )


def render_report(report: DamageReport) -> str:
    lines = [
        f"Classification: {report.classification.upper()}",
        f"Rule: {report.rule}",
        f"Direction: {report.direction_hint}",
        f"Mean frequency shift: {report.mean_delta_freq_pct:+.4f} %",
        f"Mean damping shift:   {report.mean_delta_damp_pct:+.4f} %",
        "",
        f"{'base f [Hz]':>14} {'base zeta':>11} {'inv f [Hz]':>14} {'inv zeta':>11} {'df [%]':>9} {'dz [%]':>9}",
    ]
    for m in report.matches:
        bf, bz = m.baseline_mode or (None, None)
        if_, iz = m.investigative_mode or (None, None)
        lines.append(
            f"{_fmt(bf, '14.4f')} {_fmt(bz, '11.3e')} {_fmt(if_, '14.4f')} {_fmt(iz, '11.3e')} "
            f"{_fmt(m.delta_freq_pct, '+9.3f')} {_fmt(m.delta_damp_pct, '+9.2f')}"
        )
    if report.metric_values:
        lines.append("")
        for k, v in report.metric_values.items():
            lines.append(f"{k}: {v:.6g}")
    if report.control_band:
        cb = report.control_band
        lines.append("")
        lines.append(
            f"Thresholds from control: {cb['factor']:g} x drift "
            f"(freq {cb['max_freq_drift_pct']:.4f} %, damping {cb['max_damp_drift_pct']:.4f} %)"
        )
    lines.append("")
    lines += report.notes
    return "\n".join(lines) + "\n"


def _fmt(v, spec):
    width = int(spec.lstrip("+").split(".")[0])
    return format(v, spec) if v is not None else "-".rjust(width)

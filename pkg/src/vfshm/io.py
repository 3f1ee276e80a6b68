"""CSV/JSON interchange and minimal SVG plots.

Every writer has a matching reader so emitted files can be fed back in.
Floats are written with 17 significant digits, enough for an exact
round trip of IEEE doubles.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .core import FrequencyGrid, FrequencyResponse
from .errors import DataError, ParseError
from .metrics import WindowedMetricSeries, WindowEntry

MEASUREMENT_HEADER = ("frequency_hz", "re_z", "im_z")
STABILIZATION_HEADER = ("order", "frequency_hz", "damping", "stable")
WINDOW_HEADER = ("center_hz", "value", "f_lo", "f_hi", "partial")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _parse_float(text, line):
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"cannot parse {text!r} as a number", line) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite value {text!r}", line)
    return v


def _read_rows(path, header):
    """Yield ``(line_number, fields)`` for data rows; return metadata dict via list."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    meta = {}
    rows = []
    seen_header = False
    with path.open(newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if ":" in body:
                    k, v = body.split(":", 1)
                    meta[k.strip()] = v.strip()
                elif "=" in body:
                    k, v = body.split("=", 1)
                    meta[k.strip()] = v.strip()
                continue
            fields = next(csv.reader([line]))
            fields = [f.strip() for f in fields]
            if not seen_header and fields and fields[0] == header[0]:
                if tuple(fields) != tuple(header):
                    raise ParseError(f"expected header {','.join(header)}", lineno)
                seen_header = True
                continue
            if len(fields) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(fields)}", lineno)
            rows.append((lineno, fields))
    return rows, meta


def load_measurement(path, band=None) -> FrequencyResponse:
    """Read a ``frequency_hz,re_z,im_z`` CSV, optionally restricted to ``band = (f_lo, f_hi)``."""
    rows, meta = _read_rows(path, MEASUREMENT_HEADER)
    f, z = [], []
    for lineno, (a, b, c) in rows:
        fv = _parse_float(a, lineno)
        if f and fv == f[-1]:
            raise ParseError(f"duplicate frequency {a}", lineno)
        if f and fv < f[-1]:
            raise ParseError(f"frequency {a} is lower than the previous row", lineno)
        if fv <= 0:
            raise ParseError("frequency must be > 0", lineno)
        f.append(fv)
        z.append(complex(_parse_float(b, lineno), _parse_float(c, lineno)))
    if len(f) < 2:
        raise DataError(f"{path}: need at least 2 data rows, found {len(f)}")
    H = FrequencyResponse(FrequencyGrid(np.array(f)), np.array(z))
    if band is not None:
        lo, hi = band
        if lo is not None and hi is not None and (hi < f[0] or lo > f[-1]):
            raise DataError(f"band {lo}:{hi} lies outside the measured range {f[0]}:{f[-1]}")
        H = H.restrict(lo, hi)
    return H


def read_metadata(path) -> dict:
    return _read_rows(path, MEASUREMENT_HEADER)[1]


def save_measurement(path, H: FrequencyResponse, metadata=None):
    path = Path(path)
    with path.open("w", newline="") as fh:
        for k, v in (metadata or {}).items():
            fh.write(f"# {k}: {v}\n")
        fh.write(",".join(MEASUREMENT_HEADER) + "\n")
        for f, z in zip(H.frequencies, H.values):
            fh.write(f"{fmt(f)},{fmt(z.real)},{fmt(z.imag)}\n")


def save_poles(path, poles, metadata=None):
    """Pole sidecar: ``re,im`` rows in rad/s."""
    with Path(path).open("w", newline="") as fh:
        for k, v in (metadata or {}).items():
            fh.write(f"# {k}: {v}\n")
        fh.write("re,im\n")
        for p in poles:
            fh.write(f"{fmt(p.real)},{fmt(p.imag)}\n")


def load_poles(path) -> np.ndarray:
    rows, _ = _read_rows(path, ("re", "im"))
    return np.array([complex(_parse_float(a, n), _parse_float(b, n)) for n, (a, b) in rows])


def save_stabilization(path, rows):
    with Path(path).open("w", newline="") as fh:
        fh.write(",".join(STABILIZATION_HEADER) + "\n")
        for n, f, z, st in rows:
            fh.write(f"{int(n)},{fmt(f)},{fmt(z)},{int(st)}\n")


def load_stabilization(path):
    rows, _ = _read_rows(path, STABILIZATION_HEADER)
    out = []
    for lineno, (n, f, z, st) in rows:
        if st not in ("0", "1"):
            raise ParseError("stable flag must be 0 or 1", lineno)
        out.append((int(_parse_float(n, lineno)), _parse_float(f, lineno), _parse_float(z, lineno), int(st)))
    return out


def save_windowed(path, series: WindowedMetricSeries):
    with Path(path).open("w", newline="") as fh:
        fh.write(",".join(WINDOW_HEADER) + "\n")
        for e in series.entries:
            lo, hi = e.window_span
            fh.write(f"{fmt(e.center_frequency)},{fmt(e.value)},{fmt(lo)},{fmt(hi)},{int(e.partial)}\n")


def load_windowed(path, which="rmsd") -> WindowedMetricSeries:
    rows, _ = _read_rows(path, WINDOW_HEADER)
    entries = []
    for lineno, (c, v, lo, hi, partial) in rows:
        value = float(v) if v.lower() == "nan" else _parse_float(v, lineno)
        entries.append(
            WindowEntry(
                _parse_float(c, lineno),
                value,
                (_parse_float(lo, lineno), _parse_float(hi, lineno)),
                partial == "1",
                "" if math.isfinite(value) else "undefined",
            )
        )
    return WindowedMetricSeries(tuple(entries), which)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path, data):
    Path(path).write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def read_json(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None


# --- SVG -------------------------------------------------------------------

_W, _H, _PAD = 640, 400, 50


def _axes(x0, x1, y0, y1, xlabel, ylabel, title):
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" font-family="sans-serif" font-size="11">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="18" text-anchor="middle" font-size="13">{title}</text>',
        f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<text x="{_W / 2}" y="{_H - 12}" text-anchor="middle">{xlabel}</text>',
        f'<text x="14" y="{_H / 2}" text-anchor="middle" transform="rotate(-90 14 {_H / 2})">{ylabel}</text>',
        f'<text x="{_PAD}" y="{_H - _PAD + 14}" text-anchor="middle">{x0:.6g}</text>',
        f'<text x="{_W - _PAD}" y="{_H - _PAD + 14}" text-anchor="middle">{x1:.6g}</text>',
        f'<text x="{_PAD - 4}" y="{_H - _PAD}" text-anchor="end">{y0:.6g}</text>',
        f'<text x="{_PAD - 4}" y="{_PAD + 4}" text-anchor="end">{y1:.6g}</text>',
    ]
    return parts


def _scale(v, lo, hi, a, b):
    return a if hi == lo else a + (v - lo) / (hi - lo) * (b - a)


def stabilization_svg(rows, f_lo, f_hi) -> str:
    orders = [r[0] for r in rows] or [0, 1]
    o0, o1 = min(orders), max(orders)
    if o0 == o1:
        o0, o1 = o0 - 1, o1 + 1
    parts = _axes(f_lo, f_hi, o0, o1, "frequency [Hz]", "model order", "Stabilization diagram")
    for n, f, _, st in rows:
        if not f_lo <= f <= f_hi:
            continue
        x = _scale(f, f_lo, f_hi, _PAD, _W - _PAD)
        y = _scale(n, o0, o1, _H - _PAD, _PAD)
        if st:
            parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="black"/>')
        else:
            parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="none" stroke="grey"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def windowed_svg(series: WindowedMetricSeries) -> str:
    if not series.entries:
        return "\n".join(_axes(0, 1, 0, 1, "frequency [Hz]", series.which, "Windowed metric") + ["</svg>"]) + "\n"
    lo = series.entries[0].window_span[0]
    hi = series.entries[-1].window_span[1]
    vals = [e.value for e in series.entries if math.isfinite(e.value)]
    vmax = max(vals) if vals and max(vals) > 0 else 1.0
    parts = _axes(lo, hi, 0, vmax, "frequency [Hz]", series.which, f"Windowed {series.which}")
    for e in series.entries:
        if not math.isfinite(e.value):
            continue
        x0 = _scale(e.window_span[0], lo, hi, _PAD, _W - _PAD)
        x1 = _scale(e.window_span[1], lo, hi, _PAD, _W - _PAD)
        y = _scale(e.value, 0, vmax, _H - _PAD, _PAD)
        parts.append(
            f'<rect x="{x0:.2f}" y="{y:.2f}" width="{max(x1 - x0 - 1, 0.5):.2f}" '
            f'height="{_H - _PAD - y:.2f}" fill="steelblue"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"

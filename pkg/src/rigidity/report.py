"""Structured verification records with JSON, CSV and SVG emission.

A report collects named checks, each comparing a measured number against an
expected one under an explicit tolerance and comparison mode.  Serialization
is deterministic (stable ordering, 17-significant-digit floats): two runs
with the same configuration produce byte-identical JSON except for the wall
time line.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .jsonutil import dump_json, fmt_float

__all__ = [
    "CheckRecord",
    "Report",
    "fit_order",
    "write_series_csv",
    "polyline_svg",
]


def fit_order(errors) -> float:
    """Mean decay order per grid halving: least-squares slope of log2(error).

    Accepts the error sequence at successively halved spacings; returns the
    fitted order (positive when errors shrink).
    """
    errors = np.asarray(errors, dtype=float)
    if errors.size < 2:
        raise ValueError("need at least two levels to fit an order")
    if np.any(errors <= 0):
        # exact reproduction at some level: below measurable resolution
        return np.inf
    levels = np.arange(errors.size)
    slope = np.polyfit(levels, np.log2(errors), 1)[0]
    return float(-slope)


@dataclass(frozen=True)
class CheckRecord:
    """One verification line: measured vs expected at a tolerance.

    ``mode`` is 'abs' (|measured - expected| <= tolerance), 'le'
    (measured <= expected + tolerance) or 'ge' (measured >= expected -
    tolerance).  ``expected_source`` says where the expected number comes
    from ('closed-form', 'independent-oracle', 'exact-identity',
    'threshold').
    """

    name: str
    measured: float
    expected: float
    tolerance: float
    mode: str = "abs"
    expected_source: str = "closed-form"
    passed: bool = field(default=None)

    def __post_init__(self):
        if self.mode not in ("abs", "le", "ge"):
            raise ValueError(f"unknown comparison mode {self.mode!r}")
        ok = self.evaluate()
        if self.passed is None:
            object.__setattr__(self, "passed", ok)
        elif self.passed != ok:
            raise ValueError(f"{self.name}: stored pass flag contradicts the comparison")

    def evaluate(self) -> bool:
        m, e, tol = self.measured, self.expected, self.tolerance
        if self.mode == "abs":
            return bool(abs(m - e) <= tol)
        if self.mode == "le":
            return bool(m <= e + tol)
        return bool(m >= e - tol)

    def to_dict(self):
        return {
            "name": self.name,
            "measured": float(self.measured),
            "expected": float(self.expected),
            "tolerance": float(self.tolerance),
            "mode": self.mode,
            "expected_source": self.expected_source,
            "passed": bool(self.passed),
        }


@dataclass(frozen=True)
class Report:
    command: str
    settings: dict
    records: tuple
    wall_time_s: float

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.records)

    @property
    def settings_hash(self) -> str:
        canon = dump_json({k: self.settings[k] for k in sorted(self.settings)})
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def to_json(self) -> str:
        body = {
            "command": self.command,
            "settings": {k: self.settings[k] for k in sorted(self.settings)},
            "settings_hash": self.settings_hash,
            "checks": [r.to_dict() for r in self.records],
            "passed": self.all_passed,
            "wall_time_s": float(self.wall_time_s),
        }
        return dump_json(body) + "\n"

    def summary_lines(self):
        for r in self.records:
            status = "PASS" if r.passed else "FAIL"
            yield (f"[{status}] {r.name}: measured={r.measured:.9g} "
                   f"expected({r.mode})={r.expected:.9g} tol={r.tolerance:.3g} "
                   f"[{r.expected_source}]")


def write_series_csv(path, columns, rows):
    """Plain CSV with 17-significant-digit floats."""
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            cells = [fmt_float(v) if isinstance(v, (float, np.floating)) else str(v)
                     for v in row]
            fh.write(",".join(cells) + "\n")


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def polyline_svg(path, title, series, xlabel="", ylabel="", logx=False, logy=True,
                 width=640, height=440):
    """Minimal polyline plot: series is a list of (label, xs, ys).

    Log axes drop nonpositive entries of the offending coordinate.  No
    external plotting dependency; output is a standalone SVG file.
    """
    margin = 64
    cleaned = []
    for label, xs, ys in series:
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        keep = np.isfinite(xs) & np.isfinite(ys)
        if logx:
            keep &= xs > 0
        if logy:
            keep &= ys > 0
        if np.any(keep):
            cleaned.append((label, xs[keep], ys[keep]))
    if not cleaned:
        cleaned = [("empty", np.array([1.0]), np.array([1.0]))]

    def tx(x):
        return np.log10(x) if logx else x

    def ty(y):
        return np.log10(y) if logy else y

    all_x = np.concatenate([tx(xs) for _, xs, _ in cleaned])
    all_y = np.concatenate([ty(ys) for _, _, ys in cleaned])
    x0, x1 = float(all_x.min()), float(all_x.max())
    y0, y1 = float(all_y.min()), float(all_y.max())
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def px(x):
        return margin + (tx(x) - x0) / (x1 - x0) * (width - 2 * margin)

    def py(y):
        return height - margin - (ty(y) - y0) / (y1 - y0) * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="black"/>',
    ]
    if xlabel:
        parts.append(f'<text x="{width / 2:.0f}" y="{height - 16}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="12">{xlabel}</text>')
    if ylabel:
        parts.append(f'<text x="18" y="{height / 2:.0f}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="12" '
                     f'transform="rotate(-90 18 {height / 2:.0f})">{ylabel}</text>')
    # corner tick labels
    fmt = "{:.3g}".format
    parts.append(f'<text x="{margin}" y="{height - margin + 16}" font-family="sans-serif" '
                 f'font-size="10">{fmt(10**x0 if logx else x0)}</text>')
    parts.append(f'<text x="{width - margin}" y="{height - margin + 16}" text-anchor="end" '
                 f'font-family="sans-serif" font-size="10">{fmt(10**x1 if logx else x1)}</text>')
    parts.append(f'<text x="{margin - 6}" y="{height - margin}" text-anchor="end" '
                 f'font-family="sans-serif" font-size="10">{fmt(10**y0 if logy else y0)}</text>')
    parts.append(f'<text x="{margin - 6}" y="{margin + 4}" text-anchor="end" '
                 f'font-family="sans-serif" font-size="10">{fmt(10**y1 if logy else y1)}</text>')
    for idx, (label, xs, ys) in enumerate(cleaned):
        color = _PALETTE[idx % len(_PALETTE)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.6"/>')
        ly = margin + 16 * idx
        parts.append(f'<line x1="{width - margin - 110}" y1="{ly}" '
                     f'x2="{width - margin - 86}" y2="{ly}" stroke="{color}" '
                     f'stroke-width="1.6"/>')
        parts.append(f'<text x="{width - margin - 80}" y="{ly + 4}" '
                     f'font-family="sans-serif" font-size="11">{label}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")

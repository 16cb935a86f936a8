"""CSV tables, mode-comparison reports and SVG coherence plots."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ParseError, ValidationError
from .fitting import FitResult
from .gksl import CoherenceProfile
from .rates import EnsembleRates, RateTable

TIE_TOLERANCE_MS = 1e-6


def fmt(x: float) -> str:
    return f"{x:.15g}"


def _write(path: str | Path, header: Sequence[str], rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


# -- coherence profiles -------------------------------------------------------


def write_profile(profile: CoherenceProfile, path: str | Path) -> None:
    _write(path, ["t_ms", "L"], ((fmt(t), fmt(v)) for t, v in zip(profile.t_ms, profile.values)))


def read_profile(path: str | Path) -> CoherenceProfile:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["t_ms", "L"]:
            raise ParseError(f"{path}: expected header 't_ms,L', got {header}")
        try:
            rows = [(float(a), float(b)) for a, b in reader]
        except ValueError as exc:
            raise ParseError(f"{path}: {exc}") from None
    if not rows:
        raise ParseError(f"{path}: no data rows")
    arr = np.array(rows)
    return CoherenceProfile(arr[:, 0], arr[:, 1], Path(path).stem)


# -- rate tables -----------------------------------------------------------------

RATE_HEADER = ["geometry", "i", "j", "J_rad_s", "kappa_rad_s", "delta_rad_s", "T_rad_s"]
SIGMA_HEADER = ["i", "j", "sigma_rad_s", "flagged"]


def write_rate_table(table: RateTable, path: str | Path) -> None:
    _write(
        path,
        RATE_HEADER,
        (
            (table.label, p.i, p.j, fmt(p.J), fmt(p.kappa), fmt(p.delta), fmt(p.rate_T))
            for p in table.pairs
        ),
    )


def write_ensemble_rates(rates: EnsembleRates, rates_path: str | Path, sigma_path: str | Path) -> None:
    rows = []
    for g, label in enumerate(rates.labels):
        for k, (i, j) in enumerate(rates.pairs):
            rows.append(
                (
                    label,
                    i,
                    j,
                    fmt(rates.J[g, k]),
                    fmt(rates.kappa[g, k]),
                    fmt(rates.delta[g, k]),
                    fmt(rates.rates[g, k]),
                )
            )
    _write(rates_path, RATE_HEADER, rows)
    _write(
        sigma_path,
        SIGMA_HEADER,
        (
            (i, j, fmt(rates.sigma[k]), int(rates.flagged[k]))
            for k, (i, j) in enumerate(rates.pairs)
        ),
    )


def write_fit(result: FitResult, path: str | Path, name: str = "") -> None:
    _write(
        path,
        ["name", "T2_ms", "beta", "rmse", "converged"],
        [(name, fmt(result.T2_ms), fmt(result.beta), fmt(result.rmse), int(result.converged))],
    )


# -- mode comparison ----------------------------------------------------------


@dataclass(frozen=True)
class ComparisonRow:
    name: str
    ab_initio: FitResult
    zero: FitResult

    @property
    def ratio(self) -> float:
        return self.ab_initio.T2_ms / self.zero.T2_ms


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[ComparisonRow, ...]
    ordering_ab_initio: tuple[tuple[str, ...], ...]
    ordering_zero: tuple[tuple[str, ...], ...]

    @staticmethod
    def rank(ordering, name: str) -> int:
        for k, group in enumerate(ordering):
            if name in group:
                return k
        raise KeyError(name)


def coherence_ordering(results: Mapping[str, FitResult], tol: float = TIE_TOLERANCE_MS):
    """Names grouped longest-lived first; T2 values within ``tol`` ms share a group."""
    items = sorted(results.items(), key=lambda kv: (-kv[1].T2_ms, kv[0]))
    groups: list[list[str]] = []
    anchor = None
    for name, res in items:
        if anchor is not None and anchor - res.T2_ms <= tol:
            groups[-1].append(name)
        else:
            groups.append([name])
            anchor = res.T2_ms
    return tuple(tuple(sorted(g)) for g in groups)


def compare_modes(
    results_ab_initio: Mapping[str, FitResult],
    results_zero: Mapping[str, FitResult],
) -> ComparisonReport:
    if set(results_ab_initio) != set(results_zero):
        raise ValidationError(
            f"name mismatch between modes: {sorted(set(results_ab_initio) ^ set(results_zero))}"
        )
    rows = tuple(
        ComparisonRow(name, results_ab_initio[name], results_zero[name]) for name in results_ab_initio
    )
    return ComparisonReport(
        rows, coherence_ordering(results_ab_initio), coherence_ordering(results_zero)
    )


REPORT_HEADER = ["name", "T2_ms_abinitio", "beta_abinitio", "T2_ms_zero", "beta_zero", "ratio"]


def write_report(report: ComparisonReport, path: str | Path) -> None:
    _write(
        path,
        REPORT_HEADER,
        (
            (
                r.name,
                fmt(r.ab_initio.T2_ms),
                fmt(r.ab_initio.beta),
                fmt(r.zero.T2_ms),
                fmt(r.zero.beta),
                fmt(r.ratio),
            )
            for r in report.rows
        ),
    )


def format_ordering(ordering) -> str:
    return " > ".join("=".join(g) if len(g) > 1 else g[0] for g in ordering)


# -- SVG --------------------------------------------------------------------------

_PALETTE = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
]
_DASHES = ["", "6,3", "2,2", "8,3,2,3"]


def render_svg(profiles: Sequence[CoherenceProfile], title: str = "") -> str:
    """Standalone SVG with one polyline per profile, in input order."""
    if not profiles:
        raise ValidationError("no profiles to plot")
    t = profiles[0].t_ms
    for p in profiles:
        if not np.array_equal(p.t_ms, t):
            raise ValidationError("all profiles must share one time grid")
    width, height = 640, 420
    left, right, top, bottom = 70, 170, 40, 55
    pw, ph = width - left - right, height - top - bottom
    t0, t1 = float(t[0]), float(t[-1])
    y_hi = max(1.0, max(float(np.max(p.values)) for p in profiles))
    y_lo = min(0.0, min(float(np.min(p.values)) for p in profiles))
    span_t = (t1 - t0) or 1.0

    def sx(v):
        return left + (v - t0) / span_t * pw

    def sy(v):
        return top + (y_hi - v) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{left + pw / 2:.2f}" y="22" text-anchor="middle" font-size="14">{_esc(title)}</text>')
    out.append(
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>'
    )
    for k in range(6):
        tv = t0 + span_t * k / 5
        x = sx(tv)
        out.append(f'<line x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{top + ph + 19}" text-anchor="middle">{tv:.4g}</text>')
        yv = y_lo + (y_hi - y_lo) * k / 5
        y = sy(yv)
        out.append(f'<line x1="{left - 5}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end">{yv:.3g}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 12}" text-anchor="middle">t (ms)</text>')
    out.append(
        f'<text x="18" y="{top + ph / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {top + ph / 2:.2f})">L(t)</text>'
    )
    for k, p in enumerate(profiles):
        color = _PALETTE[k % len(_PALETTE)]
        dash = _DASHES[(k // len(_PALETTE)) % len(_DASHES)]
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(p.t_ms, p.values))
        out.append(
            f'<polyline class="profile" fill="none" stroke="{color}" stroke-width="1.5"{dash_attr} points="{pts}"/>'
        )
        ly = top + 14 + 18 * k
        lx = left + pw + 12
        out.append(
            f'<line class="legend" x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" stroke-width="1.5"{dash_attr}/>'
        )
        out.append(f'<text x="{lx + 30}" y="{ly + 4}">{_esc(p.label or f"profile {k}")}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def emit_svg(profiles: Sequence[CoherenceProfile], path: str | Path, title: str = "") -> None:
    Path(path).write_text(render_svg(profiles, title), encoding="utf-8")

"""Per-level sweep reports, trend fits and their CSV/JSON emission.

A sweep never produces a limit value.  It tabulates a quantity over nested
levels and fits three trend models (constant, ``c1 - c2 log n``,
``c1 n^-alpha``) so that convergence and divergence can be read off.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

CSV_HEADER = "level,dim,value,norm,dist_prev"


@dataclass(frozen=True)
class SweepRow:
    level: int
    dim: int
    value: float
    norm: float
    dist_prev: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "dim": self.dim,
            "value": self.value,
            "norm": self.norm,
            "dist_prev": self.dist_prev,
        }


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _r2(values, pred) -> tuple:
    sse = float(np.sum((values - pred) ** 2))
    sst = float(np.sum((values - values.mean()) ** 2))
    r2 = 1.0 - sse / sst if sst > 0 else (1.0 if sse == 0 else 0.0)
    return sse, r2


def fit_trends(levels, values) -> dict:
    """Least-squares fits of the three trend models; best by residual."""
    n = np.asarray(levels, dtype=float)
    v = np.asarray(values, dtype=float)
    fits = []
    if v.size == 0:
        return {"kind": "none", "params": {}, "r2": None, "sse": None, "candidates": []}
    sse, r2 = _r2(v, np.full_like(v, v.mean()))
    fits.append({"kind": "constant", "params": {"c": float(v.mean())}, "sse": sse, "r2": r2})
    if v.size >= 2 and np.ptp(n) > 0:
        A = np.column_stack([np.ones_like(n), -np.log(n)])
        (c1, c2), *_ = np.linalg.lstsq(A, v, rcond=None)
        sse, r2 = _r2(v, A @ [c1, c2])
        fits.append({"kind": "log", "params": {"c1": float(c1), "c2": float(c2)}, "sse": sse, "r2": r2})
        if np.all(v > 0) or np.all(v < 0):
            sign = float(np.sign(v[0]))
            B = np.column_stack([np.ones_like(n), -np.log(n)])
            (la, alpha), *_ = np.linalg.lstsq(B, np.log(np.abs(v)), rcond=None)
            c1p = sign * math.exp(la)
            sse, r2 = _r2(v, c1p * n ** (-alpha))
            fits.append({"kind": "power", "params": {"c1": c1p, "alpha": float(alpha)}, "sse": sse, "r2": r2})
    best = min(fits, key=lambda f: (f["sse"], len(f["params"])))
    return {**best, "candidates": fits}


def distance_verdict(distances, dist_tol=1e-3, contraction=0.9) -> str:
    """Classify successive-level distances.

    ``cauchy_like``: strictly shrinking and the last below `dist_tol`;
    ``diverging``: no step contracts by at least `contraction`;
    ``oscillating``: anything else.
    """
    d = [x for x in distances if x is not None]
    if not d:
        return "cauchy_like"
    ratios = [b / a if a > 0 else (0.0 if b == 0 else math.inf) for a, b in zip(d, d[1:])]
    if d[-1] < dist_tol and all(r < 1 for r in ratios):
        return "cauchy_like"
    if all(r >= contraction for r in ratios):
        return "diverging"
    return "oscillating"


@dataclass
class SweepReport:
    rows: list
    trend: dict = field(default_factory=dict)
    verdict: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = sorted(self.rows, key=lambda r: r.level)
        if self.rows and self.rows[0].dist_prev is not None:
            first = self.rows[0]
            self.rows[0] = SweepRow(first.level, first.dim, first.value, first.norm, None)

    @classmethod
    def build(cls, rows, verdict=None, dist_tol=1e-3, **meta) -> "SweepReport":
        rows = sorted(rows, key=lambda r: r.level)
        trend = fit_trends([r.level for r in rows], [r.value for r in rows])
        if verdict is None:
            verdict = distance_verdict([r.dist_prev for r in rows[1:]], dist_tol)
        return cls(rows, trend, verdict, meta)

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "trend": self.trend,
            "verdict": self.verdict,
            "meta": self.meta,
        }

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        for r in self.rows:
            lines.append(",".join(_fmt(x) for x in (r.level, r.dim, r.value, r.norm, r.dist_prev)))
        return "\n".join(lines) + "\n"


def dumps_json(obj) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def emit_report(report: SweepReport, out_dir, fmt: str = "both", stem: str = "sweep") -> list:
    """Write ``<stem>.csv`` and/or ``<stem>.json``; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt in ("csv", "both"):
        p = out / f"{stem}.csv"
        p.write_text(report.to_csv(), newline="\n")
        written.append(p)
    if fmt in ("json", "both"):
        p = out / f"{stem}.json"
        p.write_text(dumps_json(report.to_dict()), newline="\n")
        written.append(p)
    return written

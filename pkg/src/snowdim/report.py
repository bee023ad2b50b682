"""Distortion reports: exhaustive pair measurements against a reference.

A report is built from parallel arrays of pair data (indices, source
distance, image distance) plus the reference transform the ratios are
measured against. Ratios are image / reference(source). Reports serialize
to a per-pair CSV and a JSON summary.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

QUANTS = (0.01, 0.25, 0.50, 0.75, 0.99)


@dataclass
class DistortionReport:
    reference: str                     # identity | G_r | L_r | T_r | d^alpha
    pair_count: int
    ratio_min: float
    ratio_max: float
    ratio_mean: float
    quantiles: dict
    window: tuple | None               # (lo, hi) source-distance window
    violations: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)
    pairs_i: np.ndarray | None = None
    pairs_j: np.ndarray | None = None
    source_dist: np.ndarray | None = None
    image_dist: np.ndarray | None = None
    in_window: np.ndarray | None = None

    @property
    def passed(self) -> bool:
        return len(self.violations) == 0

    def dumps_csv(self) -> str:
        return dumps_csv(self)

    def dumps_json(self) -> str:
        return dumps_json(self)


def from_pairs(reference: str, pairs_i, pairs_j, source_dist, image_dist,
               ref_dist=None, window: tuple | None = None,
               bounds: tuple | None = None) -> DistortionReport:
    """Assemble a report. ``ref_dist`` defaults to ``source_dist``
    (reference "identity"). When ``window`` is given, ratio statistics run
    over in-window pairs only; ``bounds = (lo, hi)`` records a violation
    for every in-window pair whose ratio leaves [lo, hi]."""
    pairs_i = np.asarray(pairs_i)
    pairs_j = np.asarray(pairs_j)
    source_dist = np.asarray(source_dist, dtype=np.float64)
    image_dist = np.asarray(image_dist, dtype=np.float64)
    ref = source_dist if ref_dist is None else np.asarray(ref_dist, dtype=np.float64)
    if window is None:
        inw = np.ones(len(source_dist), dtype=bool)
    else:
        inw = (source_dist >= window[0]) & (source_dist <= window[1])
    live = inw & (ref > 0)
    ratio = np.full(len(source_dist), np.nan)
    ratio[ref > 0] = image_dist[ref > 0] / ref[ref > 0]
    violations = []
    if bounds is not None and live.any():
        lo, hi = bounds
        bad = live & ((ratio < lo) | (ratio > hi))
        for idx in np.flatnonzero(bad):
            violations.append({
                "i": int(pairs_i[idx]), "j": int(pairs_j[idx]),
                "source_dist": float(source_dist[idx]),
                "image_dist": float(image_dist[idx]),
                "ratio": float(ratio[idx]),
                "bounds": [float(lo), float(hi)],
            })
    if live.any():
        r = ratio[live]
        qs = {f"q{int(q * 100):02d}": float(np.quantile(r, q)) for q in QUANTS}
        rep = DistortionReport(reference, int(live.sum()), float(r.min()),
                               float(r.max()), float(r.mean()), qs, window,
                               violations)
    else:
        rep = DistortionReport(reference, 0, float("nan"), float("nan"),
                               float("nan"), {}, window, violations)
    rep.pairs_i, rep.pairs_j = pairs_i, pairs_j
    rep.source_dist, rep.image_dist = source_dist, image_dist
    rep.in_window = inw
    return rep


def dumps_csv(rep: DistortionReport) -> str:
    """Per-pair rows: pair_i, pair_j, source_dist, image_dist, ratio,
    window_flag. The ratio column is image_dist / source_dist so a row is
    self-contained; summary ratios against the reference live in the JSON."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["pair_i", "pair_j", "source_dist", "image_dist", "ratio",
                "window_flag"])
    n = 0 if rep.pairs_i is None else len(rep.pairs_i)
    for t in range(n):
        src = float(rep.source_dist[t])
        img = float(rep.image_dist[t])
        ratio = img / src if src > 0 else float("nan")
        w.writerow([int(rep.pairs_i[t]), int(rep.pairs_j[t]),
                    f"{src:.17g}", f"{img:.17g}", f"{ratio:.17g}",
                    int(bool(rep.in_window[t]))])
    return buf.getvalue()


def dumps_json(rep: DistortionReport) -> str:
    doc = {
        "reference": rep.reference,
        "pair_count": rep.pair_count,
        "ratio_min": rep.ratio_min,
        "ratio_max": rep.ratio_max,
        "ratio_mean": rep.ratio_mean,
        "quantiles": rep.quantiles,
        "window": list(rep.window) if rep.window else None,
        "violations": rep.violations,
        "extras": rep.extras,
        "passed": rep.passed,
    }
    return json.dumps(_jsonable(doc), sort_keys=True, separators=(",", ":"),
                      allow_nan=False)


def _jsonable(obj):
    """Strict-JSON form: numpy scalars unwrapped, non-finite floats -> null."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if isinstance(obj, (bool, int, float, str)) or obj is None:
        return obj
    return str(obj)

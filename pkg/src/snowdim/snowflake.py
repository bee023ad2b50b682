"""Snowflake embedding: the metric d^alpha with a 1 + O(eps) distortion band.

Scales r_i = (1+eps)^i over a bounded index window I are embedded
independently at one shared per-scale delta, every map is divided by
(1+eps)^{i(1-alpha)}, the scales are grouped round-robin by i mod p with the
maps in each group summed coordinate-wise, the p groups are direct-summed,
and the result is divided by sqrt(M) (Euclidean; the l1 analog divides by
the matching linear sum and l-infinity needs no normalizer, but there every
scale keeps its own block since the norm combines by max). The band of
image distance / d^alpha then has width 1 + O(eps). Its location is a
computable constant of (eps, alpha, p) alone, exposed as ``band_center`` so
consumers that need unit calibration (distance labels) can rescale; the
guarantee itself is on the width.

The audit measures every pair against d^alpha and the per-scale bucket
diagnostics: write B_i for the per-scale image distance divided by
(1+eps)^{i(1-alpha)} and anchor the size-p window
A = {i*-q+1, ..., i*+p-q}, q = ceil(log_{1+eps}(1/eps)) + 2, at the pair's
dominant scale (1+eps)^{i*} <= d <= (1+eps)^{i*+1}. The guarantees hold for
any size-p interval, but the anchor matters for the per-scale tail check: a
window centered at i* puts its bottom edge ~p/2 below i*, where the
same-residue mate at i+p still carries mass ~d/(1+eps)^{(i+p)(1-alpha)},
exceeding the eps * (1+eps)^{i(1-alpha)} budget by up to 1/eps. Keeping only
q scales below i* leaves the bottom mate mass below the budget with an
order-of-magnitude margin. For every in-window i the same-residue
out-of-window mass must stay below eps * (1+eps)^{i(1-alpha)} * 1.1, and
B_{i*} must stay above 0.45 * (1+eps)^{i*(1-alpha)} whenever the pair is
padded at its dominant scale (same cluster, both pad-balls uncut, in every
partition).
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass

import numpy as np

from . import report as report_mod
from .errors import BadParams, EmptyInput
from .points import (PointSet, _pairwise, estimate_doubling, norm_label,
                     norm_tag, require_normalized)
from .single_scale import (EPS_PAD, SingleScaleEmbedding, SingleScaleParams,
                           build_single_scale, theory_dimension)

#: offset added to the scale index when deriving per-scale seeds, so the
#: seed entropy stays nonnegative for any sane index window
SCALE_SALT = 1 << 20
#: slack factor allowed on the geometric-tail bound eps * (1+eps)^{i(1-alpha)}
TAIL_SLACK = 1.1
#: lower bound on the dominant term, in units of (1+eps)^{i*(1-alpha)}
DOMINANT_FLOOR = 0.45


def scale_count(alpha: float, eps: float) -> int:
    """Number of round-robin groups p = ceil((3/(1-alpha)) * ceil(log_{1+eps}(1/eps)))."""
    j = math.ceil(math.log(1.0 / eps) / math.log1p(eps))
    # guard the ceil against float noise when 3j/(1-alpha) is an integer
    return math.ceil(3.0 * j / (1.0 - alpha) - 1e-9)


def _b_range(p: int) -> np.ndarray:
    # the p integers b with -p/2 < b <= p/2
    return np.arange(p // 2 - p + 1, p // 2 + 1, dtype=np.int64)


def compute_M(eps: float, p: int, norm: float = 2.0) -> float:
    """Normalizer for the grouped scale sum, by direct summation in
    extended precision, smallest terms first.

    Euclidean: sum over b of ((1+eps)^b * G((1+eps)^-b))^2 with
    G(t) = sqrt(1 - exp(-t^2)); l1 mirrors it linearly with
    L(t) = 1 - exp(-t); l-infinity combines by max, whose analog
    max_b min(1, (1+eps)^b) is exactly 1.
    """
    if p < 1:
        raise BadParams(f"p must be a positive integer, got {p}")
    norm = norm_tag(norm)
    b = _b_range(p).astype(np.longdouble)
    e1 = np.longdouble(1.0 + eps)
    if norm == np.inf:
        return float(np.minimum(e1 ** b, 1.0).max())
    if norm == 2.0:
        terms = e1 ** (2 * b) * (-np.expm1(-(e1 ** (-2 * b))))
    else:
        terms = e1 ** b * (-np.expm1(-(e1 ** (-b))))
    return float(np.sort(terms).sum())


def band_center(eps: float, p: int, alpha: float, norm: float = 2.0) -> float:
    """Predicted location of image distance / d^alpha, a constant of the
    parameters only.

    For a pair at distance (1+eps)^u the in-window per-scale terms are
    B_{u+b} ~ (1+eps)^{(u+b)alpha} * G((1+eps)^{-b}), so the squared image
    distance is ~ d^{2alpha} times T = sum_b (1+eps)^{2 b alpha} G(...)^2,
    and after the 1/sqrt(M) normalization the ratio sits near sqrt(T/M).
    The same computation with the l1 transform gives T1/M1; the l-infinity
    max analog is exactly 1.
    """
    norm = norm_tag(norm)
    m_val = compute_M(eps, p, norm)
    b = _b_range(p).astype(np.longdouble)
    e1 = np.longdouble(1.0 + eps)
    if norm == np.inf:
        t = np.where(b >= 0, e1 ** (-b * (1.0 - alpha)), e1 ** (b * alpha))
        return float(t.max() / m_val)
    if norm == 2.0:
        t = e1 ** (2 * b * alpha) * (-np.expm1(-(e1 ** (-2 * b))))
        return math.sqrt(float(np.sort(t).sum()) / m_val)
    t = e1 ** (b * alpha) * (-np.expm1(-(e1 ** (-b))))
    return float(np.sort(t).sum()) / m_val


@dataclass
class SnowflakePlan:
    """Derived build parameters for one (alpha, eps, norm) configuration."""

    alpha: float
    eps: float
    p: int
    delta: float
    i_lo: int
    i_hi: int
    M: float
    center: float
    norm: float = 2.0

    @property
    def scale_indices(self) -> range:
        return range(self.i_lo, self.i_hi + 1)


def scale_plan(s: PointSet, alpha: float, eps: float,
               norm: float = 2.0) -> SnowflakePlan:
    """Fix p, the per-scale delta, and the scale window
    I = {i : eps^5 <= (1+eps)^i <= eps^-5 * diam}."""
    require_normalized(s, "scale_plan")
    if s.n < 2:
        raise EmptyInput("snowflake plan needs at least two points")
    if not 0 < alpha < 1:
        raise BadParams(f"alpha must lie in (0, 1), got {alpha}")
    if not 0 < eps < 0.25:
        raise BadParams(f"eps must lie in (0, 1/4), got {eps}")
    norm = norm_tag(norm)
    p = scale_count(alpha, eps)
    delta = (1.0 + eps) ** (-p * (1.0 - alpha))
    # p rounding keeps delta near eps^3; far outside means alpha/eps are
    # too extreme for the single-scale preconditions downstream
    if not eps ** 4 <= delta <= eps ** 2:
        raise BadParams(
            f"per-scale delta {delta:.3g} outside [eps^4, eps^2] "
            f"for alpha={alpha}, eps={eps}")
    lg = math.log1p(eps)
    i_lo = math.ceil(5.0 * math.log(eps) / lg)
    i_hi = math.floor(math.log(s.diameter() / eps ** 5) / lg)
    return SnowflakePlan(alpha, eps, p, delta, i_lo, i_hi,
                         compute_M(eps, p, norm),
                         band_center(eps, p, alpha, norm), norm)


def _scale_seed(seed: int, i: int) -> int:
    ss = np.random.SeedSequence(entropy=(int(seed), SCALE_SALT + int(i)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class ScaleEntry:
    """One built scale: its weighted coordinate block and audit hooks."""

    i: int
    r: float
    seed: int
    group: int                       # i mod p
    offset: int                      # column offset of the group block
    k: int                           # per-scale concrete coordinate count
    coords: np.ndarray               # (n, k) images times (1+eps)^{-i(1-alpha)}
    dom_pairs: np.ndarray | None     # (n, n) bool: padded in every partition


@dataclass
class SnowflakeEmbedding:
    plan: SnowflakePlan
    source: PointSet
    seed: int
    dim_hat: float
    scales: list[ScaleEntry]
    k: int                           # concrete coordinate count
    theory_k: int                    # p * theory_k_scale
    theory_k_scale: int
    coords: np.ndarray               # (n, k) final images, all scaling in

    @property
    def n(self) -> int:
        return self.source.n

    def image_distance_matrix(self) -> np.ndarray:
        return _pairwise(self.coords, self.plan.norm)


def _dominant_pair_mask(e: SingleScaleEmbedding) -> np.ndarray:
    """Pairs that are same-cluster with both pad-balls uncut in every
    partition of the scale's decomposition, mapped to source indices.
    Points outside the decomposed ground set are never counted as padded."""
    dec = e.decomposition
    gn = dec.n
    ok = np.ones((gn, gn), dtype=bool)
    for t, part in enumerate(dec.partitions):
        lab = part.labels
        pad = dec.padded[t]
        ok &= (lab[:, None] == lab[None, :]) & (pad[:, None] & pad[None, :])
        if not ok.any():
            break
    out = np.zeros((e.n, e.n), dtype=bool)
    out[np.ix_(e.ground, e.ground)] = ok
    return out


def build_snowflake(s: PointSet, alpha: float, eps: float, seed: int = 0,
                    norm: float = 2.0,
                    dim_hat: float | None = None) -> SnowflakeEmbedding:
    """Assemble the embedding; see the module docstring for the pipeline.

    The doubling estimate is taken once and shared by every scale, so the
    reported theory dimension depends only on the parameters and that
    estimate (pass ``dim_hat`` to pin it). Per-scale seeds derive from
    (seed, i), so any scale can be rebuilt independently.
    """
    plan = scale_plan(s, alpha, eps, norm)
    if dim_hat is None:
        dim_hat = estimate_doubling(s).dim_hat
    lg = math.log1p(eps)
    # dominant-pair masks are only consulted at scales that can anchor a
    # pair: 0 <= i* <= log_{1+eps} diam
    istar_top = math.floor(math.log(s.diameter()) / lg) + 1
    entries: list[ScaleEntry] = []
    for i in plan.scale_indices:
        sp = SingleScaleParams(r=(1.0 + eps) ** i, eps=eps, delta=plan.delta,
                               norm=norm, seed=_scale_seed(seed, i),
                               rescale_c=0.0, dim_hat=dim_hat)
        try:
            e_i = build_single_scale(s, sp)
        except Exception as err:
            err.args = (f"scale i={i} (r={sp.r:.6g}): {err}",)
            raise
        w = (1.0 + eps) ** (-i * (1.0 - alpha))
        dom = None
        if 0 <= i <= istar_top and e_i.k:
            dom = _dominant_pair_mask(e_i)
        entries.append(ScaleEntry(i, sp.r, sp.seed, i % plan.p, 0, e_i.k,
                                  e_i.coords * w, dom))

    # group layout: one shared block per residue class (maps in a class are
    # summed, zero-padded to the widest), except l-infinity where the max
    # combination keeps every scale in its own block
    if plan.norm == np.inf:
        widths = {t: max(e.k, 0) for t, e in enumerate(entries)}
        key_of = dict(enumerate(entries))
        keys = [t for t, e in enumerate(entries)]
    else:
        widths = {}
        for e in entries:
            widths[e.group] = max(widths.get(e.group, 0), e.k)
        keys = sorted(widths)
    offsets = {}
    col = 0
    for key in keys:
        offsets[key] = col
        col += widths[key]
    coords = np.zeros((s.n, col))
    for t, e in enumerate(entries):
        key = t if plan.norm == np.inf else e.group
        e.offset = offsets[key]
        if e.k:
            coords[:, e.offset:e.offset + e.k] += e.coords
    if plan.norm == 2.0:
        coords /= math.sqrt(plan.M)
    elif plan.norm == 1.0:
        coords /= plan.M
    theory_k_scale = theory_dimension(eps, plan.delta, EPS_PAD, dim_hat, plan.norm)
    return SnowflakeEmbedding(plan, s, seed, dim_hat, entries, col,
                              plan.p * theory_k_scale, theory_k_scale, coords)


def evaluate(e: SnowflakeEmbedding, index: int) -> np.ndarray:
    e.source.check_index(index)
    return e.coords[index].copy()


# ---------------------------------------------------------------------------
# audit


def distortion_audit(e: SnowflakeEmbedding) -> report_mod.DistortionReport:
    """Exhaustive pair ratios against d^alpha plus the per-scale bucket
    diagnostics (geometric tails and the dominant-term floor). Tail or
    dominant breaches are appended to the violations list with a ``check``
    tag, so ``passed`` covers all three properties."""
    plan = e.plan
    s = e.source
    eps, alpha, p = plan.eps, plan.alpha, plan.p
    dmat = s.distance_matrix()
    iu, ju = np.triu_indices(s.n, k=1)
    src = dmat[iu, ju]
    img = e.image_distance_matrix()[iu, ju]
    target = src ** alpha
    bounds = None
    if plan.norm == 2.0:
        # envelope around the predicted center; the acceptance statement
        # is on the band width, which zero violations here imply
        bounds = (plan.center * (1.0 - 2.0 * eps) / (1.0 + eps) ** 2,
                  plan.center * (1.0 + 4.0 * eps) ** 2)
    rep = report_mod.from_pairs("d^alpha", iu, ju, src, img,
                                ref_dist=target, window=None, bounds=bounds)

    # per-scale terms B_i = per-scale image distance / (1+eps)^{i(1-alpha)};
    # the stored blocks already carry the division
    n_pairs = len(src)
    n_scales = len(e.scales)
    b_terms = np.zeros((n_scales, n_pairs))
    for t, sc in enumerate(e.scales):
        if sc.k:
            b_terms[t] = _pairwise(sc.coords, plan.norm)[iu, ju]
    ivals = np.array([sc.i for sc in e.scales])

    lg = math.log1p(eps)
    istar = np.floor(np.log(src) / lg + 1e-9).astype(np.int64)
    istar = np.clip(istar, plan.i_lo, plan.i_hi)
    q = math.ceil(math.log(1.0 / eps) / lg) + 2
    win_lo = istar - q + 1
    win_hi = istar + p - q
    in_window = (ivals[:, None] >= win_lo) & (ivals[:, None] <= win_hi)

    # same-residue mass outside the window: mates of i sit at i + t*p and
    # are always outside an anchored window containing i
    index_of = {int(i): t for t, i in enumerate(ivals)}
    out_mass = np.zeros((n_scales, n_pairs))
    for t, i in enumerate(ivals):
        mate = int(i) - p
        while mate >= plan.i_lo:
            out_mass[t] += b_terms[index_of[mate]]
            mate -= p
        mate = int(i) + p
        while mate <= plan.i_hi:
            out_mass[t] += b_terms[index_of[mate]]
            mate += p
    tail_bound = TAIL_SLACK * eps * (1.0 + eps) ** (ivals * (1.0 - alpha))
    tail_bad = in_window & (out_mass > tail_bound[:, None])

    # dominant term at the anchor scale, for pairs padded there
    istar_idx = istar - plan.i_lo
    b_dom = b_terms[istar_idx, np.arange(n_pairs)]
    dom_bound = DOMINANT_FLOOR * (1.0 + eps) ** (istar * (1.0 - alpha))
    padded_dom = np.zeros(n_pairs, dtype=bool)
    for t in np.unique(istar_idx):
        sel = istar_idx == t
        dp = e.scales[t].dom_pairs
        if dp is not None:
            padded_dom[sel] = dp[iu[sel], ju[sel]]
    dom_bad = padded_dom & (b_dom < dom_bound)

    for t, pair in zip(*np.nonzero(tail_bad)):
        rep.violations.append({
            "check": "tail", "i": int(iu[pair]), "j": int(ju[pair]),
            "scale_i": int(ivals[t]), "mass": float(out_mass[t, pair]),
            "bound": float(tail_bound[t]),
        })
    for pair in np.flatnonzero(dom_bad):
        rep.violations.append({
            "check": "dominant", "i": int(iu[pair]), "j": int(ju[pair]),
            "scale_i": int(istar[pair]), "term": float(b_dom[pair]),
            "bound": float(dom_bound[pair]),
        })

    with np.errstate(invalid="ignore", divide="ignore"):
        tail_ratio = np.where(in_window, out_mass / tail_bound[:, None], 0.0)
        dom_ratio = b_dom / ((1.0 + eps) ** (istar * (1.0 - alpha)))
    rep.extras.update({
        "alpha": alpha,
        "p": p,
        "delta": plan.delta,
        "M": plan.M,
        "center": plan.center,
        "band_width": rep.ratio_max / rep.ratio_min,
        "band_limit": 1.0 + 16.0 * eps,
        "max_tail_ratio": float(tail_ratio.max()) if tail_ratio.size else 0.0,
        "tail_bound_slack": TAIL_SLACK,
        "padded_dominant_pairs": int(padded_dom.sum()),
        "min_dominant_ratio":
            float(dom_ratio[padded_dom].min()) if padded_dom.any() else None,
        "dominant_floor": DOMINANT_FLOOR,
        "theory_k": e.theory_k,
        "theory_k_scale": e.theory_k_scale,
        "concrete_k": e.k,
        "scale_count": n_scales,
    })
    return rep


# ---------------------------------------------------------------------------
# serialization: same envelope as the single-scale dump plus a scale manifest


def dumps(e: SnowflakeEmbedding) -> bytes:
    """Embedding dump: 4-byte header length, JSON header (with the scale
    manifest), then the (n, k) coordinate block as little-endian float64."""
    plan = e.plan
    header = {
        "kind": "snowflake",
        "n": e.n,
        "k": e.k,
        "theory_k": e.theory_k,
        "theory_k_scale": e.theory_k_scale,
        "norm": norm_label(plan.norm),
        "alpha": plan.alpha,
        "eps": plan.eps,
        "p": plan.p,
        "delta": plan.delta,
        "M": plan.M,
        "center": plan.center,
        "seed": e.seed,
        "dim_hat": e.dim_hat,
        "i_lo": plan.i_lo,
        "i_hi": plan.i_hi,
        "scale_k": [int(sc.k) for sc in e.scales],
        "layout": "rows are points in input order; float64 little-endian",
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    body = np.ascontiguousarray(e.coords, dtype="<f8").tobytes()
    return struct.pack("<I", len(blob)) + blob + body

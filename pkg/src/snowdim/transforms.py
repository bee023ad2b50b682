"""Distance transforms and their exact realizations.

Three bounded concave transforms, one per host norm:

* Gaussian  G_r(t) = r * sqrt(1 - exp(-t^2/r^2))   (Euclidean targets)
* Laplace   L_r(t) = r * (1 - exp(-t/r))           (l1 targets)
* threshold T_r(t) = min(t, r)                     (l-infinity targets)

All keep small distances nearly intact and saturate near r. The identity
L_r(t) = r * G(sqrt(t/r))^2 ties the first two together.

Realizations turn a transformed distance matrix back into coordinates:
Gram-based MDS for Euclidean inputs, a cut-measure LP for l1, and
per-landmark threshold coordinates for l-infinity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import BadParams, ClusterTooLarge, Infeasible, NotEuclidean

#: relative eigenvalue tolerance for declaring a Gram matrix non-Euclidean
EIG_RTOL = 1e-8
#: keep Gram eigenvalues above this fraction of lambda_max; sits above
#: eigh rounding noise but keeps the long low-energy tail that transformed
#: metrics of nearly collinear sets carry
EIG_KEEP_RTOL = 1e-13
#: cut decomposition enumerates 2^(n-1)-1 cuts; refuse beyond this
MAX_CUT_POINTS = 14


def _check_r(r: float) -> float:
    if not r > 0:
        raise BadParams(f"transform scale r must be positive, got {r}")
    return float(r)


def gaussian_transform(t, r: float = 1.0):
    """G_r(t) = r * sqrt(1 - exp(-t^2 / r^2)), elementwise."""
    r = _check_r(r)
    t = np.asarray(t, dtype=np.float64)
    out = r * np.sqrt(-np.expm1(-np.square(t / r)))
    return out if out.ndim else float(out)


def laplace_transform(t, r: float = 1.0):
    """L_r(t) = r * (1 - exp(-t / r)), elementwise."""
    r = _check_r(r)
    t = np.asarray(t, dtype=np.float64)
    out = r * -np.expm1(-t / r)
    return out if out.ndim else float(out)


def threshold_transform(t, r: float):
    """T_r(t) = min(t, r), elementwise."""
    r = _check_r(r)
    t = np.asarray(t, dtype=np.float64)
    out = np.minimum(t, r)
    return out if out.ndim else float(out)


def euclidean_realization(dmat: np.ndarray, rtol: float = EIG_RTOL) -> np.ndarray:
    """Exact coordinates for a Euclidean distance matrix.

    Classical Gram reconstruction: B = -1/2 J D^2 J, eigendecompose, keep
    eigenvalues above EIG_KEEP_RTOL * lambda_max. Mildly negative
    eigenvalues (>= -rtol * lambda_max) are treated as rounding noise and
    clamped to zero; anything lower raises NotEuclidean. Returns an (n, k)
    array with k = rank(B); a single point realizes as shape (1, 0).
    """
    dmat = np.asarray(dmat, dtype=np.float64)
    n = dmat.shape[0]
    if dmat.shape != (n, n):
        raise BadParams(f"distance matrix must be square, got {dmat.shape}")
    if n == 1:
        return np.zeros((1, 0))
    d2 = np.square(dmat)
    d2 = 0.5 * (d2 + d2.T)
    b = d2 - d2.mean(axis=0) - d2.mean(axis=1)[:, None] + d2.mean()
    b *= -0.5
    vals, vecs = np.linalg.eigh(b)
    lam_max = max(float(vals[-1]), 0.0)
    floor = -rtol * lam_max
    if vals[0] < floor:
        raise NotEuclidean(
            f"most negative Gram eigenvalue {vals[0]:.6g} below "
            f"tolerance {floor:.6g}; distances are not Euclidean")
    pos = vals > EIG_KEEP_RTOL * lam_max
    x = vecs[:, pos] * np.sqrt(vals[pos])
    return x[:, ::-1]          # leading coordinate first


@dataclass
class Cut:
    """One cut pseudometric: weight * [exactly one endpoint in members]."""

    weight: float
    members: frozenset


def cut_decomposition(dmat: np.ndarray, rtol: float = 1e-9) -> list[Cut]:
    """Write a (small) l1-embeddable metric as a weighted sum of cuts.

    Enumerates all 2^(n-1) - 1 nontrivial cuts and solves the LP
    minimizing total absolute slack; Infeasible if the best slack exceeds
    rtol * max distance, ClusterTooLarge beyond MAX_CUT_POINTS points.
    Returns only the cuts with positive weight.
    """
    dmat = np.asarray(dmat, dtype=np.float64)
    n = dmat.shape[0]
    if n > MAX_CUT_POINTS:
        raise ClusterTooLarge(
            f"cut decomposition enumerates all cuts; {n} points exceeds "
            f"the cap of {MAX_CUT_POINTS}")
    if n < 2:
        return []
    iu, ju = np.triu_indices(n, k=1)
    target = dmat[iu, ju]
    # cuts as subsets of {1..n-1} unioned with nothing; pin point 0 out
    cuts = []
    for size in range(1, n):
        for comb in itertools.combinations(range(1, n), size):
            cuts.append(frozenset(comb))
    a = np.zeros((len(target), len(cuts)))
    for c, members in enumerate(cuts):
        inside = np.fromiter((i in members for i in range(n)), dtype=bool)
        a[:, c] = inside[iu] ^ inside[ju]
    npairs, ncuts = a.shape
    # vars: [gamma (ncuts), s+ (npairs), s- (npairs)], min sum(s+ + s-)
    eye = np.eye(npairs)
    a_eq = np.hstack([a, eye, -eye])
    cost = np.concatenate([np.zeros(ncuts), np.ones(2 * npairs)])
    res = linprog(cost, A_eq=a_eq, b_eq=target, bounds=(0, None),
                  method="highs")
    if not res.success:
        raise Infeasible(f"cut LP failed: {res.message}")
    slack = float(res.fun)
    scale = float(target.max()) if len(target) else 1.0
    if slack > rtol * max(scale, 1.0) * npairs:
        raise Infeasible(
            f"metric is not l1-embeddable within tolerance: "
            f"residual slack {slack:.3g}")
    gamma = res.x[:ncuts]
    keep = gamma > rtol * max(gamma.max(), 1.0)
    return [Cut(float(gamma[c]), cuts[c]) for c in np.flatnonzero(keep)]


def merge_cuts(cut_lists: list[list[Cut]]) -> list[Cut]:
    """Combine cut lists over a shared index space, summing weights of
    identical cuts. Grouping is exact: weights add in float64 and equal
    cuts compare by set equality, so the merged metric matches the
    concatenation bit-for-bit up to addition order."""
    acc: dict[frozenset, float] = {}
    for cuts in cut_lists:
        for cut in cuts:
            acc[cut.members] = acc.get(cut.members, 0.0) + cut.weight
    return [Cut(w, m) for m, w in sorted(acc.items(), key=lambda kv: sorted(kv[0]))
            if w > 0.0]


def cut_coordinates(cuts: list[Cut], n: int) -> np.ndarray:
    """Realize a cut list as l1 coordinates: one coordinate per cut, value
    weight * [i in members]. Pairwise l1 distances equal the cut metric."""
    x = np.zeros((n, max(len(cuts), 1)) if cuts else (n, 0))
    for c, cut in enumerate(cuts):
        idx = [i for i in cut.members if i < n]
        x[idx, c] = cut.weight
    return x


def cut_metric(cuts: list[Cut], n: int) -> np.ndarray:
    """Pairwise distances of the weighted cut sum (brute force)."""
    d = np.zeros((n, n))
    for cut in cuts:
        inside = np.zeros(n, dtype=bool)
        inside[[i for i in cut.members if i < n]] = True
        sep = inside[:, None] ^ inside[None, :]
        d += cut.weight * sep
    return d


def frechet_coordinates(dists_to_landmarks: np.ndarray, r: float) -> np.ndarray:
    """Threshold Frechet coordinates for the l-infinity path.

    Column w of the output is T_r(d(x, landmark_w)); each column is
    1-Lipschitz in x, and for a landmark within range of x the column
    recovers the distance to it up to the threshold.
    """
    r = _check_r(r)
    return np.minimum(np.asarray(dists_to_landmarks, dtype=np.float64), r)

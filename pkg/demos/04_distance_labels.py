"""
Distance labels: pairwise estimates from per-point byte strings
===============================================================

dls_build quantizes snowflake coordinates into short integer labels.
Any two labels alone reconstruct the snowflaked distance d^alpha (and
from it the original d) up to the band distortion plus a quantization
term that the header's step size q pins down. No access to the point
set is needed at query time.
"""

import numpy as np

from snowdim import build_snowflake, dls_build, dls_query, dumps_labels, \
    generate, loads_labels, measured_label_bits, normalize, \
    quantization_slack, theory_label_bits

s = normalize(generate("grid", side=8))
eps = 0.1
e = build_snowflake(s, alpha=0.5, eps=eps, seed=0)
ls = dls_build(e, eps)
h = ls.header
print(f"labels: n={ls.n} k={h.k} step q={h.q:.3e} alpha={h.alpha}")

# serialized size, against the k*log2(aspect/(eps/2k)) yardstick
blob = dumps_labels(ls)
bits = measured_label_bits(ls)
d = s.distance_matrix()
iu, ju = np.triu_indices(s.n, k=1)
aspect = d[iu, ju].max() / d[iu, ju].min()
print(f"serialized {len(blob)} bytes, {bits} measured bits/label, "
      f"reference {theory_label_bits(h.k, aspect, eps):.0f}")

# round-trip through bytes, then query pairs far apart in the grid
back = loads_labels(blob)
for i, j in ((0, 63), (0, 1), (7, 56)):
    snow, orig = dls_query(back.label(i), back.label(j))
    true = d[i, j]
    slack = quantization_slack(h, true ** 0.5)
    print(f"pair ({i:2d},{j:2d}): d={true:7.4f} estimate={orig:7.4f} "
        f"rel err {abs(orig - true) / true:.2%} "
        f"(snowflaked {snow:.4f} vs {true ** 0.5:.4f}, slack {slack:.1%})")

# worst pair over the whole set
worst = 0.0
for i in range(s.n):
    for j in range(i + 1, s.n):
        _, orig = dls_query(back.label(i), back.label(j))
        worst = max(worst, abs(orig - d[i, j]) / d[i, j])
print(f"worst relative error over all {s.n * (s.n - 1) // 2} pairs: "
      f"{worst:.2%}")

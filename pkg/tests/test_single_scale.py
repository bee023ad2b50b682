import math

import numpy as np
import pytest

from snowdim.errors import BadParams, IndexOutOfRange
from snowdim.points import PointSet, generate, greedy_net, normalize
from snowdim.single_scale import (SingleScaleParams, _embed_cluster_l1,
                                  _embed_cluster_l2, _embed_cluster_linf,
                                  build_single_scale, contract_audit, dumps,
                                  evaluate, loads_coords, theory_dimension)
from snowdim.transforms import laplace_transform, threshold_transform

G_1 = 0.7950600976206501          # G_1(1) = sqrt(1 - e^-1)
L_1 = 0.6321205588285577          # L_1(1) = 1 - e^-1


def line_pair():
    return normalize(PointSet(np.array([[0.0], [1.0]])))


# --- frozen two-point oracles: the whole pipeline collapses to one cluster,
# --- weight 1, no projection, so the image distance is transform(1)/(1+C*eps)


def test_two_point_l2_oracle():
    e = build_single_scale(line_pair(), SingleScaleParams(1.0, 0.1, 0.1, seed=4))
    d = np.linalg.norm(e.coords[0] - e.coords[1])
    assert abs(d - G_1 / 5.0) < 1e-12


def test_two_point_l1_oracle():
    s = normalize(PointSet(np.array([[0.0], [1.0]]), norm=1.0))
    e = build_single_scale(s, SingleScaleParams(1.0, 0.1, 0.1, norm=1.0, seed=4))
    d = np.abs(e.coords[0] - e.coords[1]).sum()
    assert abs(d - L_1 / 5.0) < 1e-12


def test_two_point_linf_oracle():
    s = normalize(PointSet(np.array([[0.0], [1.0]]), norm=np.inf))
    e = build_single_scale(s, SingleScaleParams(1.0, 0.2, 0.01, norm=np.inf, seed=4))
    d = np.abs(e.coords[0] - e.coords[1]).max()
    assert abs(d - 1.0 / 1.2) < 1e-12          # T_1(1)/(1+2*sqrt(0.01))


# --- contracts on a full build


def test_grid_contracts():
    s = normalize(generate("grid", side=8, dims=2))
    p = SingleScaleParams(1.0, 0.1, 0.1, seed=3)
    e = build_single_scale(s, p)
    rep = contract_audit(e)
    ex = rep.extras
    assert ex["max_lipschitz"] <= 1.0 + 1e-9
    assert ex["max_image_norm"] <= 1.0 * (1 + 0.01) * (1 + 1e-9)
    assert rep.passed
    assert rep.ratio_min >= 1.0 / (1.0 + 45 * 0.1)
    assert rep.ratio_max <= 1.0 + 1e-9
    # every net pair here (net = whole set), single perfectly padded cluster
    assert np.isclose(rep.ratio_min, 0.2, atol=1e-12)
    assert np.isclose(rep.ratio_max, 0.2, atol=1e-12)


def test_grid_cluster_invariants():
    s = normalize(generate("grid", side=8, dims=2))
    e = build_single_scale(s, SingleScaleParams(1.0, 0.1, 0.1, seed=3))
    ex = contract_audit(e).extras
    assert ex["max_cluster_image_norm"] <= 1.0 + 1e-9
    assert ex["same_cluster_excess"] <= 1e-9
    assert ex["transform_vs_source_excess"] <= 1e-9
    assert ex["smoothing_excess"] <= 1e-12
    assert ex["product_rule_max"] <= 1.1 + 1e-9


def test_ultrametric_multi_cluster():
    s = normalize(generate("ultrametric", depth=7, base=2.0))
    e = build_single_scale(s, SingleScaleParams(1.0, 0.1, 0.1, seed=3))
    rep = contract_audit(e)
    assert rep.passed
    assert rep.extras["max_lipschitz"] <= 1.0 + 1e-9
    assert rep.extras["smoothing_excess"] <= 1e-12
    # tree balls are unions of subtrees: padding never fails
    assert e.decomposition.padded_fraction.min() == 1.0


# --- extension path (net coarser than the set)


def test_extension_on_coarse_net():
    s = normalize(generate("grid", side=8, dims=2))
    p = SingleScaleParams(200.0, 0.1, 0.1, seed=7)
    e = build_single_scale(s, p)
    assert e.net.size < s.n
    assert e.extension is not None
    ex = contract_audit(e).extras
    assert ex["max_lipschitz"] <= e.lip_net * (1 + 2e-6)
    assert e.extension.max_violation <= 0.1 * 1e-6 * e.lip_net * 1.0


# --- l1 specifics


def test_l1_merged_cuts_isometric_on_net():
    rng = np.random.default_rng(5)
    s = normalize(PointSet(rng.uniform(0, 10, (10, 2)), norm=1.0))
    p = SingleScaleParams(1.0, 0.1, 0.1, norm=1.0, seed=2)
    e = build_single_scale(s, p)
    net_mask = np.zeros(s.n, dtype=bool)
    net_mask[e.net.members] = True
    gdmat = s.distance_matrix()
    checked = 0
    for entry in e.clusters:
        cm = entry.map
        mem = cm.members
        net_loc = np.flatnonzero(net_mask[e.ground[mem]])
        for a in range(len(net_loc)):
            for b in range(a + 1, len(net_loc)):
                x, y = mem[net_loc[a]], mem[net_loc[b]]
                raw = np.abs(cm.coords[net_loc[a]] - cm.coords[net_loc[b]]).sum()
                want = laplace_transform(gdmat[e.ground[x], e.ground[y]], 1.0)
                assert abs(raw - want) <= 1e-9
                checked += 1
    assert checked > 10


def test_l1_all_pairs_one_lipschitz():
    rng = np.random.default_rng(5)
    s = normalize(PointSet(rng.uniform(0, 10, (10, 2)), norm=1.0))
    e = build_single_scale(s, SingleScaleParams(1.0, 0.1, 0.1, norm=1.0, seed=2))
    ex = contract_audit(e).extras
    assert ex["max_lipschitz"] <= 1.0 + 1e-9
    assert ex["same_cluster_excess"] <= 1e-9


# --- l-infinity specifics


def test_linf_exact_frechet():
    rng = np.random.default_rng(7)
    s = normalize(PointSet(rng.uniform(0, 40, (60, 3)), norm=np.inf))
    p = SingleScaleParams(20.0, 0.2, 0.01, norm=np.inf, seed=2)
    e = build_single_scale(s, p)
    rep = contract_audit(e)
    assert rep.passed
    assert rep.extras["max_lipschitz"] <= 1.0 + 1e-12
    # net = whole set here, so every pair is a net pair: the raw map is an
    # exact isometry onto T_r and the final one is exactly that / (1+2*sqrt(d))
    dmat = s.distance_matrix()
    img = e.image_distance_matrix()
    iu, ju = np.triu_indices(s.n, k=1)
    want = threshold_transform(dmat[iu, ju], 20.0) / 1.2
    assert np.max(np.abs(img[iu, ju] - want)) <= 1e-12


def test_linf_requires_small_delta():
    with pytest.raises(BadParams):
        SingleScaleParams(1.0, 0.2, 0.2, norm=np.inf)


def test_linf_multi_cluster_path():
    # two short segments far apart: every carve radius covers a whole
    # segment but never bridges the gap, so each partition is exactly the
    # two segments -- multi-cluster, perfectly padded, deterministic
    pts = np.concatenate([np.arange(20.0), 10000.0 + np.arange(20.0)])
    s = normalize(PointSet(pts[:, None], norm=np.inf))
    p = SingleScaleParams(0.04, 0.2, 0.01, norm=np.inf, seed=5)
    e = build_single_scale(s, p)
    assert all(part.size == 2 for part in e.decomposition.partitions)
    assert len(e.clusters) == 2
    assert e.decomposition.padded_fraction.min() == 1.0
    ex = contract_audit(e).extras
    assert ex["max_lipschitz"] <= 1.0 + 1e-9
    assert ex["max_image_norm"] <= 0.04 * (1 + 0.2 * 0.01) * (1 + 1e-9)


# --- degenerate cluster helpers


def test_singleton_and_empty_net_clusters():
    p = SingleScaleParams(1.0, 0.1, 0.1, norm=1.0, seed=0)
    one = np.zeros((1, 1))
    assert _embed_cluster_l1(one, np.array([], dtype=np.intp), p).k == 0
    assert _embed_cluster_l1(one, np.array([0]), p).k == 0
    assert _embed_cluster_linf(one, np.array([], dtype=np.intp), p).k == 0
    cm = _embed_cluster_l2(one, p, seed=1)
    assert cm.k == 0


# --- parameters, determinism, serialization


def test_param_validation():
    with pytest.raises(BadParams):
        SingleScaleParams(0.0, 0.1, 0.1)
    with pytest.raises(BadParams):
        SingleScaleParams(1.0, 0.25, 0.1)
    with pytest.raises(BadParams):
        SingleScaleParams(1.0, 0.1, 0.3)
    with pytest.raises(BadParams):
        SingleScaleParams(1.0, 0.1, 0.1, eps_pad=1.5)


def test_unnormalized_input_rejected():
    s = PointSet(np.array([[0.0], [0.25]]))
    with pytest.raises(BadParams):
        build_single_scale(s, SingleScaleParams(1.0, 0.1, 0.1))


def test_evaluate_and_index_check():
    s = line_pair()
    e = build_single_scale(s, SingleScaleParams(1.0, 0.1, 0.1, seed=1))
    assert np.array_equal(evaluate(e, 0), e.coords[0])
    with pytest.raises(IndexOutOfRange):
        evaluate(e, 2)


def test_dump_roundtrip_and_determinism():
    s = normalize(generate("grid", side=5, dims=2))
    p = dict(r=1.0, eps=0.1, delta=0.1, seed=9)
    e1 = build_single_scale(s, SingleScaleParams(**p))
    e2 = build_single_scale(s, SingleScaleParams(**p))
    b1, b2 = dumps(e1), dumps(e2)
    assert b1 == b2
    header, coords = loads_coords(b1)
    assert header["n"] == s.n and header["k"] == e1.k
    assert header["norm"] == "2"
    assert np.array_equal(coords, e1.coords)
    # different seed still identical here: a single padded cluster has no
    # sampling or projection randomness left
    e3 = build_single_scale(s, SingleScaleParams(r=1.0, eps=0.1, delta=0.1, seed=10))
    assert np.allclose(e3.coords, e1.coords)


def test_audit_report_serializes():
    s = normalize(generate("grid", side=5, dims=2))
    e = build_single_scale(s, SingleScaleParams(1.0, 0.1, 0.1, seed=9))
    rep = contract_audit(e)
    blob = rep.dumps_json()
    assert '"passed":true' in blob
    assert rep.dumps_csv().startswith("pair_i,pair_j,")


def test_theory_dimension_independent_of_n():
    k1 = theory_dimension(0.1, 0.1, 0.36, 3.0, 2.0)
    k2 = theory_dimension(0.1, 0.1, 0.36, 3.0, 2.0)
    assert k1 == k2 > 0
    s_small = normalize(generate("grid", side=5, dims=2))
    s_big = normalize(generate("grid", side=7, dims=2))
    e_small = build_single_scale(s_small, SingleScaleParams(1.0, 0.1, 0.1, seed=1, dim_hat=2.0))
    e_big = build_single_scale(s_big, SingleScaleParams(1.0, 0.1, 0.1, seed=1, dim_hat=2.0))
    assert e_small.theory_k == e_big.theory_k

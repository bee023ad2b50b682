import json

import numpy as np
import pytest

from snowdim import report


def toy_report(**kw):
    # 4 pairs, reference distances=source, images chosen by hand
    pi = np.array([0, 0, 0, 1])
    pj = np.array([1, 2, 3, 2])
    src = np.array([1.0, 2.0, 4.0, 8.0])
    img = np.array([0.5, 2.0, 2.0, 12.0])
    return report.from_pairs("id", pi, pj, src, img, **kw)


def test_stats_frozen():
    rep = toy_report()
    assert rep.pair_count == 4
    assert rep.ratio_min == 0.5
    assert rep.ratio_max == 1.5
    assert np.isclose(rep.ratio_mean, (0.5 + 1.0 + 0.5 + 1.5) / 4)
    assert rep.quantiles["q50"] == pytest.approx(np.quantile([0.5, 1, 0.5, 1.5], 0.5))
    assert rep.passed   # no bounds -> no violations


def test_window_restricts_stats():
    rep = toy_report(window=(1.5, 5.0))       # keeps the pairs at 2.0 and 4.0
    assert rep.pair_count == 2
    assert rep.ratio_min == 0.5
    assert rep.ratio_max == 1.0
    assert list(rep.in_window) == [False, True, True, False]


def test_violations_and_bounds():
    rep = toy_report(window=(0.5, 10.0), bounds=(0.6, 1.2))
    bad = {(v["i"], v["j"]) for v in rep.violations}
    assert bad == {(0, 1), (0, 3), (1, 2)}    # 0.5, 0.5 and 1.5 all outside
    assert not rep.passed


def test_csv_golden():
    rep = toy_report(window=(1.5, 5.0))
    lines = rep.dumps_csv().strip().split("\n")
    assert lines[0] == "pair_i,pair_j,source_dist,image_dist,ratio,window_flag"
    assert lines[1].split(",") == ["0", "1", "1", "0.5", "0.5", "0"]
    assert lines[2].split(",") == ["0", "2", "2", "2", "1", "1"]
    assert len(lines) == 5


def test_json_summary_round_trip():
    rep = toy_report(window=(1.5, 5.0), bounds=(0.9, 1.1))
    blob = rep.dumps_json()
    data = json.loads(blob)
    assert data["reference"] == "id"
    assert data["pair_count"] == 2
    assert data["ratio_min"] == 0.5
    assert len(data["violations"]) == 1
    # byte determinism
    assert blob == toy_report(window=(1.5, 5.0), bounds=(0.9, 1.1)).dumps_json()


def test_ref_dist_separate_from_source():
    pi, pj = np.array([0]), np.array([1])
    src = np.array([3.0])
    img = np.array([1.0])
    rep = report.from_pairs("G", pi, pj, src, img, ref_dist=np.array([2.0]))
    assert rep.ratio_min == 0.5               # uses ref, not source

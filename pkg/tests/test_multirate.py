import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mrpart.frame_io import synth_frame, pad_to_ctu_grid
from mrpart.multirate import (
    SkipDecision,
    SkipGuide,
    encode_representation,
    run_ladder,
    skip_decision,
    skip_rule_violations,
)
from mrpart.partition import CuGeom, PartitionConstraints, SplitType, legal_splits, rdo_search
from mrpart.size_map import SizeMap
from mrpart.toy_codec import qp_params

from conftest import noise_frame

S = SplitType
SMALL16 = PartitionConstraints.small16()
SMALL = PartitionConstraints(ctu_size=32, min_qt_size=8, max_mtt_depth=2, max_bt_size=32, max_tt_size=32)
ALL = (S.NS, S.QT, S.HBT, S.VBT, S.HTT, S.VTT)


def uniform_guide(ctu, side, cols=1, rows=1, mode="scalar", h=None):
    g = ctu // 4
    maps = {
        (cx, cy): SizeMap(cx, cy, ctu, np.full((g, g), side), np.full((g, g), h or side))
        for cy in range(rows)
        for cx in range(cols)
    }
    return SkipGuide(maps, ctu, cols, rows, mode)


def test_skip_truth_table():
    guide = uniform_guide(128, 32)
    assert skip_decision(CuGeom(0, 0, 64, 64), ALL, guide) is SkipDecision.EXCLUDE_NS
    assert skip_decision(CuGeom(0, 0, 32, 32), ALL, guide) is SkipDecision.EVALUATE_NS
    assert skip_decision(CuGeom(0, 0, 64, 16), (S.NS, S.VBT), guide) is SkipDecision.EXCLUDE_NS
    assert skip_decision(CuGeom(0, 0, 4, 4), (S.NS,), uniform_guide(128, 4)) is SkipDecision.EVALUATE_NS
    # Bypass holds even when the CU is larger than every map entry.
    assert skip_decision(CuGeom(0, 0, 8, 8), (S.NS,), uniform_guide(128, 4)) is SkipDecision.EVALUATE_NS


def test_skip_uses_region_max():
    g = 16 // 4
    w = np.full((g, g), 4)
    w[3, 3] = 16
    guide = SkipGuide({(0, 0): SizeMap(0, 0, 16, w, w.copy())}, 16, 1, 1)
    assert skip_decision(CuGeom(0, 0, 16, 16), ALL, guide) is SkipDecision.EVALUATE_NS
    assert skip_decision(CuGeom(0, 0, 8, 8), ALL, guide) is SkipDecision.EXCLUDE_NS


def test_per_dimension_mode():
    guide = uniform_guide(32, 32, mode="per_dimension", h=8)
    assert skip_decision(CuGeom(0, 0, 32, 8), ALL, guide) is SkipDecision.EVALUATE_NS
    assert skip_decision(CuGeom(0, 0, 16, 16), ALL, guide) is SkipDecision.EXCLUDE_NS
    assert skip_decision(CuGeom(0, 0, 16, 16), ALL, guide.with_mode("scalar")) is SkipDecision.EVALUATE_NS


def test_skip_outside_guide():
    with pytest.raises(ValueError):
        skip_decision(CuGeom(32, 0, 16, 16), ALL, uniform_guide(32, 32))


def test_guide_grid_checks():
    with pytest.raises(ValueError):
        SkipGuide({}, 16, 1, 1)
    with pytest.raises(ValueError):
        uniform_guide(16, 8).with_mode("diagonal")
    f = noise_frame(16, 16, 1)
    with pytest.raises(ValueError, match="CTU"):
        rdo_search(f, (0, 0), 27, SMALL16, uniform_guide(32, 8))
    with pytest.raises(ValueError):
        rdo_search(noise_frame(32, 16, 1), (0, 0), 27, SMALL16, uniform_guide(16, 8))


def test_guided_root_ns_skipped():
    f = noise_frame(16, 16, 11)
    guide = uniform_guide(16, 8)
    tree, stats = rdo_search(f, (0, 0), 27, SMALL16, guide)
    assert tree.split is not S.NS
    assert stats.ns_skipped_by_guide >= 1
    # Every excluded node is one the truth table excludes, and vice versa.
    _, base = rdo_search(f, (0, 0), 27, SMALL16)
    assert stats.nodes_visited == base.nodes_visited
    assert stats.ns_evaluations + stats.ns_skipped_by_guide == base.ns_evaluations


def test_guide_bound_is_sound_for_excluded_counts():
    f = noise_frame(16, 16, 12)
    guide = uniform_guide(16, 8)
    from mrpart.partition import _Search

    s = _Search(f.samples, qp_params(27), SMALL16, guide)
    s.solve(CuGeom(0, 0, 16, 16))
    expected = sum(
        1
        for g in s.memo
        if len(legal_splits(g, SMALL16)) > 1 and max(g.width, g.height) > 8
    )
    assert s.stats.ns_skipped_by_guide == expected


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10**6), side=st.sampled_from([4, 8, 16, 32]), qp=st.sampled_from([22, 27, 32]))
def test_guided_is_restriction(seed, side, qp):
    f = noise_frame(32, 32, seed)
    lam = qp_params(qp).lam
    free, _ = rdo_search(f, (0, 0), qp, SMALL)
    guided, st_ = rdo_search(f, (0, 0), qp, SMALL, uniform_guide(32, side))
    assert guided.cost(lam) >= free.cost(lam)
    guide = uniform_guide(32, side)
    for lf in guided.leaves():
        legal = legal_splits(lf.geom, SMALL)
        assert len(legal) == 1 or max(lf.geom.width, lf.geom.height) <= side


def test_flat_frame_encode():
    f = synth_frame("flat", 64, 64)
    r = encode_representation(f, 32, SMALL)
    assert r.psnr_db == float("inf")
    assert all(t.split is S.NS for t in r.trees.values())
    assert len(r.trees) == 4


def test_encode_requires_padding():
    with pytest.raises(ValueError):
        encode_representation(synth_frame("flat", 40, 32), 32, SMALL)


def test_encode_psnr_on_origin_only():
    f = pad_to_ctu_grid(synth_frame("noise", 40, 30, 3), 32)
    r = encode_representation(f, 27, SMALL)
    direct = np.mean((f.origin.astype(float) - r.reconstruction.origin.astype(float)) ** 2)
    assert r.psnr_db == pytest.approx(10 * np.log10(255**2 / direct))


@pytest.mark.parametrize("seed", [1, 2])
def test_self_guide_is_identity(seed):
    f = synth_frame("fineleaves", 64, 64, seed)
    ref = encode_representation(f, 27, SMALL)
    again = encode_representation(f, 27, SMALL, SkipGuide.from_trees(ref.trees))
    assert {k: t.code() for k, t in again.trees.items()} == {k: t.code() for k, t in ref.trees.items()}
    assert again.cost() == ref.cost()


def test_guided_fewer_evaluations_256():
    c = PartitionConstraints()
    f = synth_frame("noise", 256, 256, 27)
    ref = encode_representation(f, 37, c)
    guide = SkipGuide.from_trees(ref.trees)
    base = encode_representation(f, 27, c)
    fast = encode_representation(f, 27, c, guide)
    assert fast.stats.ns_evaluations < base.stats.ns_evaluations
    assert fast.cost() >= base.cost()
    assert skip_rule_violations(fast, guide, c) == []


def test_workers_do_not_change_results():
    f = synth_frame("leaves", 64, 64, 4)
    a = encode_representation(f, 32, SMALL, workers=1)
    b = encode_representation(f, 32, SMALL, workers=2)
    assert a.tree_codes() == b.tree_codes()
    assert (a.rate_bits, a.psnr_db, a.stats.ns_evaluations) == (b.rate_bits, b.psnr_db, b.stats.ns_evaluations)


def test_ladder_flat():
    rep = run_ladder([synth_frame("flat", 64, 64)], constraints=SMALL)
    fr = rep.frames[0]
    assert all(t.split is S.NS for e in [fr.reference, *fr.baseline.values(), *fr.fast.values()] for t in e.trees.values())
    assert all(e.stats.ns_skipped_by_guide == 0 for e in fr.fast.values())
    assert rep.reduction.mean_ns_reduction == 0.0
    assert rep.bd_psnr["skipped"] == ["frame0"]


def test_ladder_structure():
    f = synth_frame("fineleaves", 64, 64, 3)
    rep = run_ladder([f], qps=(37, 22, 27, 32), constraints=SMALL, names=["x"])
    assert rep.qps == (22, 27, 32, 37) and rep.dependent_qps == (22, 27, 32)
    fr = rep.frames[0]
    assert fr.reference.stats.ns_skipped_by_guide == 0 and not fr.reference.guided
    assert sorted(fr.baseline) == sorted(fr.fast) == [22, 27, 32]
    records = rep.records()
    assert [(r["arm"], r["qp"]) for r in records] == [
        ("reference", 37), ("baseline", 22), ("fast", 22), ("baseline", 27), ("fast", 27), ("baseline", 32), ("fast", 32)
    ]
    standalone = encode_representation(f, 37, SMALL)
    assert standalone.tree_codes() == fr.reference.tree_codes()
    assert standalone.stats.ns_evaluations == fr.reference.stats.ns_evaluations


def test_ladder_errors():
    with pytest.raises(ValueError):
        run_ladder([], constraints=SMALL)
    with pytest.raises(ValueError):
        run_ladder([synth_frame("flat", 32, 32)], qps=(22, 27), ref_qp=37, constraints=SMALL)

"""Reference-guided multi-rate encoding.

The reference representation (highest QP by default) is encoded with the
full search. Its leaf CU sizes, stored as size maps, then gate NS
evaluation in the dependent representations: a CU whose width or height
exceeds the largest size recorded in its footprint is not coded as a whole
and is only searched through its splits.
"""

from __future__ import annotations

import enum
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .analytics import (
    RdCurve,
    ReductionSummary,
    SimilarityReport,
    bd_delta,
    psnr,
    reduction_report,
    similarity_stats,
)
from .frame_io import LumaFrame
from .partition import (
    CuGeom,
    PartitionConstraints,
    PartitionTree,
    RdStats,
    SplitType,
    legal_splits,
    rdo_search,
    reconstruct_into,
)
from .size_map import SizeMap, extract_size_map, max_dims_in_region, max_size_in_region
from .toy_codec import qp_params

GUIDE_MODES = ("scalar", "per_dimension")


class SkipDecision(enum.Enum):
    EVALUATE_NS = "evaluate"
    EXCLUDE_NS = "exclude"


@dataclass(frozen=True)
class SkipGuide:
    """Reference size maps for every CTU of a frame, keyed by CTU grid index."""

    maps: Mapping[tuple[int, int], SizeMap]
    ctu_size: int
    cols: int
    rows: int
    mode: str = "scalar"

    def __post_init__(self) -> None:
        if self.mode not in GUIDE_MODES:
            raise ValueError(f"guide mode must be one of {GUIDE_MODES}, got {self.mode!r}")
        want = {(cx, cy) for cy in range(self.rows) for cx in range(self.cols)}
        if set(self.maps) != want:
            raise ValueError("guide needs exactly one size map per CTU of the frame")
        for m in self.maps.values():
            if m.ctu_size != self.ctu_size:
                raise ValueError(f"size map for CTU {m.ctu_x},{m.ctu_y} has ctu_size {m.ctu_size}")

    @classmethod
    def from_trees(cls, trees: Mapping[tuple[int, int], PartitionTree], mode: str = "scalar") -> "SkipGuide":
        maps = {}
        for key, tree in trees.items():
            m = extract_size_map(tree)
            if (m.ctu_x, m.ctu_y) != key:
                raise ValueError(f"tree keyed {key} is rooted at CTU {(m.ctu_x, m.ctu_y)}")
            maps[key] = m
        if not maps:
            raise ValueError("no trees given")
        size = next(iter(maps.values())).ctu_size
        cols = max(k[0] for k in maps) + 1
        rows = max(k[1] for k in maps) + 1
        return cls(maps, size, cols, rows, mode)

    def with_mode(self, mode: str) -> "SkipGuide":
        return SkipGuide(self.maps, self.ctu_size, self.cols, self.rows, mode)

    def map_for(self, geom: CuGeom) -> SizeMap:
        n = self.ctu_size
        key = (geom.x // n, geom.y // n)
        m = self.maps.get(key)
        if m is None:
            raise ValueError(f"CU {geom} lies outside the guide's {self.cols}x{self.rows} CTU grid")
        return m

    def check_compatible(self, frame: LumaFrame, constraints: PartitionConstraints) -> None:
        if constraints.ctu_size != self.ctu_size:
            raise ValueError(f"guide built for {self.ctu_size}-pixel CTUs, search uses {constraints.ctu_size}")
        if frame.width != self.cols * self.ctu_size or frame.height != self.rows * self.ctu_size:
            raise ValueError(
                f"guide covers {self.cols}x{self.rows} CTUs, frame is {frame.width}x{frame.height}"
            )

    def excludes_ns(self, geom: CuGeom, legal: Sequence[SplitType]) -> bool:
        return skip_decision(geom, legal, self) is SkipDecision.EXCLUDE_NS


def skip_decision(geom: CuGeom, legal: Sequence[SplitType], guide: SkipGuide) -> SkipDecision:
    m = guide.map_for(geom)
    if len(legal) == 1:
        # NS is the only option; the rule does not apply.
        return SkipDecision.EVALUATE_NS
    if guide.mode == "scalar":
        max_sz = max_size_in_region(m, geom)
        ok = geom.width <= max_sz and geom.height <= max_sz
    else:
        max_w, max_h = max_dims_in_region(m, geom)
        ok = geom.width <= max_w and geom.height <= max_h
    return SkipDecision.EVALUATE_NS if ok else SkipDecision.EXCLUDE_NS


@dataclass(eq=False)
class EncodeResult:
    qp: int
    trees: dict[tuple[int, int], PartitionTree]
    stats: RdStats
    rate_bits: float
    psnr_db: float
    reconstruction: LumaFrame
    guided: bool = False

    def cost(self) -> float:
        lam = qp_params(self.qp).lam
        return sum(t.cost(lam) for t in self.trees.values())

    def tree_codes(self) -> dict[str, str]:
        """Compact per-CTU preorder split strings, e.g. ``"1000"`` for one QT into four leaves."""
        return {f"{cx},{cy}": "".join(map(str, t.code())) for (cx, cy), t in sorted(self.trees.items())}


def _ctu_task(args):
    frame, origin, qp, constraints, guide = args
    return rdo_search(frame, origin, qp, constraints, guide)


def default_workers() -> int:
    return os.cpu_count() or 1


def encode_representation(
    frame: LumaFrame,
    qp: int,
    constraints: PartitionConstraints,
    guide: Optional[SkipGuide] = None,
    workers: int = 1,
) -> EncodeResult:
    """Search every CTU of a padded frame and assemble rate, PSNR and stats."""
    n = constraints.ctu_size
    if frame.width % n or frame.height % n:
        raise ValueError(f"frame {frame.width}x{frame.height} is not padded to {n}-pixel CTUs")
    if guide is not None:
        guide.check_compatible(frame, constraints)
    params = qp_params(qp)
    keys = [(cx, cy) for cy in range(frame.height // n) for cx in range(frame.width // n)]
    tasks = [(frame, (cx * n, cy * n), params, constraints, guide) for cx, cy in keys]
    t0 = time.perf_counter()
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_ctu_task, tasks))
    else:
        results = [_ctu_task(t) for t in tasks]
    elapsed = time.perf_counter() - t0
    trees = {k: r[0] for k, r in zip(keys, results)}
    stats = RdStats.merged([r[1] for r in results])
    stats.wall_time = elapsed
    canvas = np.zeros((frame.height, frame.width), dtype=np.uint8)
    for t in trees.values():
        reconstruct_into(t, canvas)
    recon = LumaFrame(canvas, frame.origin_width, frame.origin_height)
    return EncodeResult(
        qp, trees, stats, float(stats.total_rate_bits), psnr(frame, recon), recon, guide is not None
    )


def skip_rule_violations(result: EncodeResult, guide: SkipGuide, constraints: PartitionConstraints) -> list[CuGeom]:
    """NS leaves of a guided encoding that the guide should have excluded."""
    bad = []
    for tree in result.trees.values():
        for lf in tree.leaves():
            g = lf.geom
            if len(legal_splits(g, constraints)) == 1:
                continue
            if skip_decision(g, legal_splits(g, constraints), guide) is SkipDecision.EXCLUDE_NS:
                bad.append(g)
    return bad


@dataclass(eq=False)
class FrameLadder:
    name: str
    frame: LumaFrame
    reference: EncodeResult
    guide: SkipGuide
    baseline: dict[int, EncodeResult]
    fast: dict[int, EncodeResult]

    def curve(self, arm: str) -> list[tuple[float, float]]:
        """(rate, psnr) points of one arm, the reference standing in at ref_qp."""
        encs = dict(self.baseline if arm == "baseline" else self.fast)
        encs[self.reference.qp] = self.reference
        return [(e.rate_bits, e.psnr_db) for _, e in sorted(encs.items())]


@dataclass(eq=False)
class LadderReport:
    ref_qp: int
    qps: tuple[int, ...]
    mode: str
    constraints: PartitionConstraints
    frames: list[FrameLadder]
    reduction: ReductionSummary
    similarity: dict[int, SimilarityReport]
    bd_psnr: dict = field(default_factory=dict)

    @property
    def dependent_qps(self) -> tuple[int, ...]:
        return tuple(q for q in self.qps if q != self.ref_qp)

    def records(self) -> list[dict]:
        """One record per (representation, arm), aggregated over frames."""
        out = []
        arms = [("reference", self.ref_qp)] + [
            (arm, q) for q in self.dependent_qps for arm in ("baseline", "fast")
        ]
        for arm, q in arms:
            encs = [
                f.reference if arm == "reference" else (f.baseline[q] if arm == "baseline" else f.fast[q])
                for f in self.frames
            ]
            st = RdStats.merged([e.stats for e in encs])
            out.append(
                {
                    "qp": q,
                    "arm": arm,
                    "rate_bits": float(sum(e.rate_bits for e in encs)),
                    "psnr_db": [e.psnr_db for e in encs],
                    "ns_evaluations": st.ns_evaluations,
                    "nodes_visited": st.nodes_visited,
                    "ns_skipped_by_guide": st.ns_skipped_by_guide,
                    "wall_time_s": st.wall_time,
                }
            )
        return out


def run_ladder(
    frames: Sequence[LumaFrame],
    qps: Sequence[int] = (22, 27, 32, 37),
    ref_qp: int = 37,
    constraints: Optional[PartitionConstraints] = None,
    mode: str = "scalar",
    workers: int = 1,
    names: Optional[Sequence[str]] = None,
) -> LadderReport:
    """Encode the reference unguided, then every dependent QP with and without the guide."""
    if not frames:
        raise ValueError("run_ladder needs at least one frame")
    qps = tuple(sorted(set(qps)))
    if ref_qp not in qps:
        raise ValueError(f"ref_qp {ref_qp} is not among the ladder QPs {qps}")
    if mode not in GUIDE_MODES:
        raise ValueError(f"guide mode must be one of {GUIDE_MODES}, got {mode!r}")
    constraints = constraints or PartitionConstraints()
    names = list(names) if names is not None else [f"frame{i}" for i in range(len(frames))]
    deps = [q for q in qps if q != ref_qp]
    ladders = []
    for name, frame in zip(names, frames):
        ref = encode_representation(frame, ref_qp, constraints, workers=workers)
        # Barrier: the guide exists only once the reference is complete.
        guide = SkipGuide.from_trees(ref.trees, mode)
        base = {q: encode_representation(frame, q, constraints, workers=workers) for q in deps}
        fast = {q: encode_representation(frame, q, constraints, guide, workers=workers) for q in deps}
        ladders.append(FrameLadder(name, frame, ref, guide, base, fast))

    reduction = reduction_report(
        {q: RdStats.merged([f.baseline[q].stats for f in ladders]) for q in deps},
        {q: RdStats.merged([f.fast[q].stats for f in ladders]) for q in deps},
        reference=RdStats.merged([f.reference.stats for f in ladders]),
    )
    similarity = {
        q: SimilarityReport.combine([similarity_stats(f.guide, f.baseline[q].trees, q) for f in ladders])
        for q in deps
    }
    bd = corpus_bd_psnr(ladders) if len(qps) >= 4 else {}
    return LadderReport(ref_qp, qps, mode, constraints, ladders, reduction, similarity, bd)


def corpus_bd_psnr(ladders: Sequence[FrameLadder]) -> dict:
    """Per-frame BD-PSNR of the fast arm against the baseline arm, plus the mean.

    Frames whose curves are degenerate (infinite PSNR or repeated rates, e.g.
    flat content) have no BD value and are listed separately.
    """
    per_frame: dict[str, float] = {}
    skipped: list[str] = []
    for f in ladders:
        try:
            anchor = RdCurve(f.curve("baseline"))
            test = RdCurve(f.curve("fast"))
            per_frame[f.name] = bd_delta(anchor, test, "bd_quality")
        except ValueError:
            skipped.append(f.name)
    mean = float(np.mean(list(per_frame.values()))) if per_frame else None
    return {"mean": mean, "per_frame": per_frame, "skipped": skipped}

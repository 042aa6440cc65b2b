"""Quality metrics, CU-size similarity, Bjontegaard deltas and work reductions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping, Optional, Sequence

import numpy as np

from .frame_io import LumaFrame
from .partition import PartitionTree, RdStats

if TYPE_CHECKING:
    from .multirate import SkipGuide


def psnr(orig: LumaFrame, recon: LumaFrame) -> float:
    """PSNR in dB over the pre-padding region; ``math.inf`` for identical content."""
    if (orig.origin_width, orig.origin_height) != (recon.origin_width, recon.origin_height):
        raise ValueError("frames differ in origin dimensions")
    a = orig.origin.astype(np.float64)
    b = recon.origin.astype(np.float64)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)


# ---- CU size similarity ----------------------------------------------------

@dataclass
class SimilarityReport:
    """Dependent leaves whose width and height are both smaller, equal or
    larger than the co-located reference entry. Mixed cases count only in
    ``total``."""

    dep_qp: int
    smaller: float = 0.0
    equal: float = 0.0
    larger: float = 0.0
    total: float = 0.0

    def _pct(self, v: float) -> float:
        return 100.0 * v / self.total if self.total else 0.0

    @property
    def pct_smaller(self) -> float:
        return self._pct(self.smaller)

    @property
    def pct_equal(self) -> float:
        return self._pct(self.equal)

    @property
    def pct_larger(self) -> float:
        return self._pct(self.larger)

    @classmethod
    def combine(cls, parts: Sequence["SimilarityReport"]) -> "SimilarityReport":
        if not parts:
            raise ValueError("nothing to combine")
        qp = parts[0].dep_qp
        return cls(
            qp,
            sum(p.smaller for p in parts),
            sum(p.equal for p in parts),
            sum(p.larger for p in parts),
            sum(p.total for p in parts),
        )

    def to_dict(self) -> dict:
        return {
            "dep_qp": self.dep_qp,
            "pct_smaller": self.pct_smaller,
            "pct_equal": self.pct_equal,
            "pct_larger": self.pct_larger,
            "leaves": self.total,
        }


def similarity_stats(
    ref_maps: "SkipGuide",
    dep_trees: Mapping[tuple[int, int], PartitionTree],
    dep_qp: int,
    area_weighted: bool = False,
) -> SimilarityReport:
    """Compare dependent leaves against the reference entry at each leaf's top-left 4x4 block.

    Each leaf counts once, or by its area when ``area_weighted`` is set.
    """
    if set(dep_trees) != set(ref_maps.maps):
        raise ValueError("dependent trees and reference maps cover different CTU grids")
    rep = SimilarityReport(dep_qp)
    for key, tree in dep_trees.items():
        m = ref_maps.maps[key]
        if tree.geom.width != m.ctu_size:
            raise ValueError(f"CTU {key}: tree size {tree.geom.width} != map size {m.ctu_size}")
        ox, oy = m.origin
        for lf in tree.leaves():
            g = lf.geom
            rw, rh = m.entry((g.x - ox) // m.granularity, (g.y - oy) // m.granularity)
            wt = float(g.area) if area_weighted else 1.0
            rep.total += wt
            if g.width < rw and g.height < rh:
                rep.smaller += wt
            elif g.width == rw and g.height == rh:
                rep.equal += wt
            elif g.width > rw and g.height > rh:
                rep.larger += wt
    return rep


# ---- Bjontegaard delta -----------------------------------------------------

@dataclass(frozen=True)
class RdCurve:
    """At least four (rate, quality) points; stored sorted by rate."""

    points: tuple[tuple[float, float], ...]

    def __init__(self, points: Sequence[tuple[float, float]]):
        pts = sorted((float(r), float(q)) for r, q in points)
        if len(pts) < 4:
            raise ValueError(f"an RD curve needs at least 4 points, got {len(pts)}")
        rates = [r for r, _ in pts]
        if rates[0] <= 0:
            raise ValueError("rates must be strictly positive")
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise ValueError("rates must be distinct")
        if not all(math.isfinite(q) for _, q in pts):
            raise ValueError("qualities must be finite")
        object.__setattr__(self, "points", tuple(pts))

    @property
    def log_rates(self) -> np.ndarray:
        return np.log10([r for r, _ in self.points])

    @property
    def qualities(self) -> np.ndarray:
        return np.array([q for _, q in self.points])


def _avg_poly(x: np.ndarray, y: np.ndarray, lo: float, hi: float) -> float:
    p = np.polyint(np.polyfit(x, y, 3))
    return (np.polyval(p, hi) - np.polyval(p, lo)) / (hi - lo)


def bd_delta(anchor: RdCurve, test: RdCurve, mode: str = "bd_quality") -> float:
    """Bjontegaard delta of ``test`` against ``anchor``.

    ``bd_quality`` is the mean quality gain in dB at equal rate; ``bd_rate``
    is the mean rate change in percent at equal quality (negative = savings).
    """
    la, lt = anchor.log_rates, test.log_rates
    qa, qt = anchor.qualities, test.qualities
    if mode == "bd_quality":
        lo, hi = max(la.min(), lt.min()), min(la.max(), lt.max())
        if hi <= lo:
            raise ValueError("RD curves do not overlap in rate")
        return float(_avg_poly(lt, qt, lo, hi) - _avg_poly(la, qa, lo, hi))
    if mode == "bd_rate":
        lo, hi = max(qa.min(), qt.min()), min(qa.max(), qt.max())
        if hi <= lo:
            raise ValueError("RD curves do not overlap in quality")
        diff = _avg_poly(qt, lt, lo, hi) - _avg_poly(qa, la, lo, hi)
        return float((10.0**diff - 1.0) * 100.0)
    raise ValueError(f"unknown BD mode {mode!r}")


# ---- work reduction ---------------------------------------------------------

@dataclass
class ReductionSummary:
    per_qp: dict[int, dict[str, float]]
    mean_ns_reduction: float
    mean_time_reduction: float
    mean_sample_reduction: float
    latency_ns_reduction: float
    latency_time_reduction: float
    latency_ns_reduction_with_reference: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "per_qp": {str(q): v for q, v in sorted(self.per_qp.items())},
            "mean_ns_reduction": self.mean_ns_reduction,
            "mean_time_reduction": self.mean_time_reduction,
            "mean_sample_reduction": self.mean_sample_reduction,
            "latency_ns_reduction": self.latency_ns_reduction,
            "latency_time_reduction": self.latency_time_reduction,
            "latency_ns_reduction_with_reference": self.latency_ns_reduction_with_reference,
        }


def _reduction(base: float, fast: float) -> float:
    return 1.0 - fast / base if base else 0.0


def reduction_report(
    baseline: Mapping[int, RdStats],
    fast: Mapping[int, RdStats],
    reference: Optional[RdStats] = None,
) -> ReductionSummary:
    """Fractional savings of the fast arm per QP and for the slowest representation.

    The latency figures compare the largest per-representation work of each
    arm. When ``reference`` is given, a second latency figure counts the
    reference encoding in both arms.
    """
    if set(baseline) != set(fast) or not baseline:
        raise ValueError("baseline and fast must cover the same non-empty QP set")
    per_qp = {}
    for q in sorted(baseline):
        b, f = baseline[q], fast[q]
        if b.ns_evaluations == 0:
            raise ValueError(f"baseline for QP {q} has zero NS evaluations")
        per_qp[q] = {
            "ns_evaluations_baseline": b.ns_evaluations,
            "ns_evaluations_fast": f.ns_evaluations,
            "ns_reduction": _reduction(b.ns_evaluations, f.ns_evaluations),
            "sample_reduction": _reduction(b.ns_samples, f.ns_samples),
            "time_reduction": _reduction(b.wall_time, f.wall_time),
        }
    base_max = max(s.ns_evaluations for s in baseline.values())
    fast_max = max(s.ns_evaluations for s in fast.values())
    with_ref = None
    if reference is not None:
        with_ref = _reduction(
            max(base_max, reference.ns_evaluations), max(fast_max, reference.ns_evaluations)
        )
    return ReductionSummary(
        per_qp,
        float(np.mean([v["ns_reduction"] for v in per_qp.values()])),
        float(np.mean([v["time_reduction"] for v in per_qp.values()])),
        float(np.mean([v["sample_reduction"] for v in per_qp.values()])),
        _reduction(base_max, fast_max),
        _reduction(
            max(s.wall_time for s in baseline.values()), max(s.wall_time for s in fast.values())
        ),
        with_ref,
    )

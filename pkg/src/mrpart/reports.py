"""JSON and CSV forms of encodings and ladder reports."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional

from .analytics import RdCurve
from .multirate import EncodeResult, LadderReport
from .partition import PartitionConstraints, RdStats

RD_COLUMNS = ("frame", "qp", "rate_bits", "psnr_db", "ns_evaluations", "nodes_visited", "wall_time_s")


def jsonable(obj: Any) -> Any:
    """Plain JSON types; non-finite floats become the strings "inf"/"-inf"/"nan"."""
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, Mapping):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return jsonable(dataclasses.asdict(obj))
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n"


def config_hash(config: Mapping[str, Any]) -> str:
    canon = json.dumps(jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def stats_dict(st: RdStats) -> dict:
    d = dataclasses.asdict(st)
    d["wall_time_s"] = d.pop("wall_time")
    return d


def encode_summary(result: EncodeResult) -> dict:
    return {
        "qp": result.qp,
        "guided": result.guided,
        "rate_bits": result.rate_bits,
        "psnr_db": result.psnr_db,
        "stats": stats_dict(result.stats),
        "trees": result.tree_codes(),
    }


def ladder_document(report: LadderReport, config: Optional[Mapping[str, Any]] = None) -> dict:
    frames = []
    for f in report.frames:
        frames.append(
            {
                "name": f.name,
                "width": f.frame.origin_width,
                "height": f.frame.origin_height,
                "reference": encode_summary(f.reference),
                "baseline": {str(q): encode_summary(e) for q, e in sorted(f.baseline.items())},
                "fast": {str(q): encode_summary(e) for q, e in sorted(f.fast.items())},
            }
        )
    doc = {
        "ref_qp": report.ref_qp,
        "qps": list(report.qps),
        "guide_mode": report.mode,
        "constraints": dataclasses.asdict(report.constraints),
        "representations": report.records(),
        "frames": frames,
        "reduction": report.reduction.to_dict(),
        "similarity": {str(q): s.to_dict() for q, s in sorted(report.similarity.items())},
        "bd_psnr": report.bd_psnr,
    }
    if config is not None:
        doc["config"] = dict(config)
        doc["config_hash"] = config_hash(config)
        doc["seed"] = config.get("seed")
    return doc


def rd_rows(report: LadderReport, arm: str) -> list[dict]:
    """RD points of one arm; the reference row stands in at ``ref_qp`` for both arms."""
    rows = []
    for f in report.frames:
        encs = dict(f.baseline if arm == "baseline" else f.fast)
        encs[report.ref_qp] = f.reference
        for q, e in sorted(encs.items()):
            rows.append(
                {
                    "frame": f.name,
                    "qp": q,
                    "rate_bits": e.rate_bits,
                    "psnr_db": e.psnr_db,
                    "ns_evaluations": e.stats.ns_evaluations,
                    "nodes_visited": e.stats.nodes_visited,
                    "wall_time_s": e.stats.wall_time,
                }
            )
    return rows


def write_csv(path: Path, rows: Iterable[Mapping[str, Any]], columns=RD_COLUMNS) -> None:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: jsonable(r[k]) for k in columns})
    Path(path).write_text(buf.getvalue())


def read_rd_curve(path: str | Path, frame: Optional[str] = None) -> RdCurve:
    """Read ``rate_bits`` plus ``quality_db`` (or ``psnr_db``) columns into a curve.

    Files with a ``frame`` column need ``frame`` when they hold several frames.
    """
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no RD points")
    cols = rows[0].keys()
    qcol = "quality_db" if "quality_db" in cols else "psnr_db" if "psnr_db" in cols else None
    if "rate_bits" not in cols or qcol is None:
        raise ValueError(f"{path}: needs rate_bits and quality_db (or psnr_db) columns")
    if "frame" in cols:
        names = sorted({r["frame"] for r in rows})
        if frame is None:
            if len(names) > 1:
                raise ValueError(f"{path}: holds frames {names}; pick one with --frame")
        else:
            rows = [r for r in rows if r["frame"] == frame]
            if not rows:
                raise ValueError(f"{path}: no rows for frame {frame!r}")
    try:
        return RdCurve([(float(r["rate_bits"]), float(r[qcol])) for r in rows])
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{path}: {exc}") from None


def strip_timing(obj: Any) -> Any:
    """Drop every field whose key mentions time, recursively."""
    if isinstance(obj, Mapping):
        return {k: strip_timing(v) for k, v in obj.items() if "time" not in str(k)}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def constraints_from_dict(d: Mapping[str, Any]) -> PartitionConstraints:
    fields = {f.name for f in dataclasses.fields(PartitionConstraints)}
    unknown = set(d) - fields
    if unknown:
        raise ValueError(f"unknown constraint fields {sorted(unknown)}")
    return PartitionConstraints(**d)

"""Command-line entry point: ``mrpart {encode,ladder,bd,stats,synth}``.

Any long option can also be set through an ``MRPART_`` environment variable
(``--ref-qp`` -> ``MRPART_REF_QP``); explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .analytics import bd_delta
from .corpus import desk_corpus
from .frame_io import SYNTH_KINDS, LumaFrame, load_frame, pad_to_ctu_grid, save_pgm, synth_frame
from .multirate import default_workers, encode_representation, run_ladder
from .partition import PartitionConstraints, format_tree
from .reports import (
    config_hash,
    constraints_from_dict,
    dumps,
    encode_summary,
    ladder_document,
    rd_rows,
    read_rd_curve,
    write_csv,
)
from .size_map import deserialize, extract_size_map, serialize

ENV_PREFIX = "MRPART_"


class CliError(Exception):
    pass


def _qp_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_frame_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", action="append", default=[], help="PGM or raw8 file; repeatable")
    p.add_argument("--format", choices=["pgm", "raw8"], default="pgm")
    p.add_argument("--synth", action="append", default=[], choices=SYNTH_KINDS, help="synthetic frame kind; repeatable")
    p.add_argument("--width", type=int, default=256, help="raw8 and synthetic width")
    p.add_argument("--height", type=int, default=256, help="raw8 and synthetic height")
    p.add_argument("--seed", type=int, default=0)


def _add_encoder_args(p: argparse.ArgumentParser) -> None:
    d = PartitionConstraints()
    p.add_argument("--ctu", type=int, default=d.ctu_size, choices=[16, 32, 64, 128])
    p.add_argument("--min-qt", type=int, default=d.min_qt_size)
    p.add_argument("--max-mtt-depth", type=int, default=d.max_mtt_depth)
    p.add_argument("--max-bt", type=int, default=d.max_bt_size)
    p.add_argument("--max-tt", type=int, default=d.max_tt_size)
    p.add_argument("--qt-disabled-below", type=int, default=None)
    p.add_argument("--workers", type=int, default=default_workers())
    p.add_argument("--out-dir", type=Path, default=Path("out"))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mrpart", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="single unguided encode of one frame")
    _add_frame_args(enc)
    _add_encoder_args(enc)
    enc.add_argument("--qp", type=int, default=37)

    lad = sub.add_parser("ladder", help="reference plus guided and unguided dependent encodes")
    _add_frame_args(lad)
    _add_encoder_args(lad)
    lad.add_argument("--corpus", choices=["desk"], default=None, help="add the fixed desk corpus")
    lad.add_argument("--qps", type=_qp_list, default=[22, 27, 32, 37])
    lad.add_argument("--ref-qp", type=int, default=37)
    lad.add_argument("--guide-mode", choices=["scalar", "per-dim"], default="scalar")
    lad.add_argument("--config", type=Path, default=None, help="JSON file whose keys override flag defaults")

    bd = sub.add_parser("bd", help="Bjontegaard delta between two RD-curve CSV files")
    bd.add_argument("anchor_csv", type=Path)
    bd.add_argument("test_csv", type=Path)
    bd.add_argument("--mode", choices=["bd_quality", "bd_rate"], default="bd_quality")
    bd.add_argument("--frame", default=None, help="frame name, for CSVs holding several frames")

    stt = sub.add_parser("stats", help="summarize a report JSON or dump an SZMP size map as CSV")
    stt.add_argument("path", type=Path)

    syn = sub.add_parser("synth", help="write a synthetic frame as PGM")
    syn.add_argument("kind", choices=SYNTH_KINDS)
    syn.add_argument("--width", type=int, default=256)
    syn.add_argument("--height", type=int, default=256)
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("-o", "--output", type=Path, required=True)
    return ap


def _apply_env_defaults(ap: argparse.ArgumentParser, environ) -> None:
    for action in ap._actions:
        if isinstance(action, argparse._SubParsersAction):
            for p in action.choices.values():
                _apply_env_defaults(p, environ)
            continue
        if not action.option_strings or action.dest in ("help",):
            continue
        key = ENV_PREFIX + action.dest.upper()
        if key not in environ:
            continue
        raw = environ[key]
        if isinstance(action, argparse._AppendAction):
            action.default = [v for v in raw.split(",") if v]
        elif action.type is not None:
            action.default = action.type(raw)
        else:
            action.default = raw


def _gather_frames(args) -> list[tuple[str, LumaFrame]]:
    frames = []
    for path in args.input:
        if args.format == "raw8":
            frames.append((Path(path).name, load_frame(path, "raw8", args.width, args.height)))
        else:
            frames.append((Path(path).name, load_frame(path, "pgm")))
    for kind in args.synth:
        frames.append((f"{kind}-{args.seed}", synth_frame(kind, args.width, args.height, args.seed)))
    if getattr(args, "corpus", None) == "desk":
        frames.extend(desk_corpus())
    if not frames:
        raise CliError("no input frames: give --input, --synth or --corpus")
    return frames


def _constraints(args) -> PartitionConstraints:
    return PartitionConstraints(
        ctu_size=args.ctu,
        min_qt_size=args.min_qt,
        max_mtt_depth=args.max_mtt_depth,
        max_bt_size=args.max_bt,
        max_tt_size=args.max_tt,
        qt_disabled_below=args.qt_disabled_below,
    )


def _run_config(args, constraints: PartitionConstraints, **extra) -> dict:
    cfg = {
        "inputs": [str(p) for p in args.input],
        "format": args.format,
        "synth": list(args.synth),
        "width": args.width,
        "height": args.height,
        "seed": args.seed,
        "constraints": constraints,
    }
    cfg.update(extra)
    return cfg


def cmd_encode(args) -> int:
    frames = _gather_frames(args)
    if len(frames) != 1:
        raise CliError(f"encode takes exactly one frame, got {len(frames)}")
    name, frame = frames[0]
    c = _constraints(args)
    frame = pad_to_ctu_grid(frame, c.ctu_size)
    result = encode_representation(frame, args.qp, c, workers=args.workers)
    out: Path = args.out_dir
    (out / "maps").mkdir(parents=True, exist_ok=True)
    cfg = _run_config(args, c, qp=args.qp)
    with open(out / "trees.txt", "w") as fh:
        for (cx, cy), tree in sorted(result.trees.items()):
            fh.write(f"# ctu {cx} {cy}\n")
            fh.write(format_tree(tree))
    for (cx, cy), tree in sorted(result.trees.items()):
        (out / "maps" / f"ctu_{cx}_{cy}.szmp").write_bytes(serialize(extract_size_map(tree)))
    row = {
        "frame": name,
        "qp": args.qp,
        "rate_bits": result.rate_bits,
        "psnr_db": result.psnr_db,
        "ns_evaluations": result.stats.ns_evaluations,
        "nodes_visited": result.stats.nodes_visited,
        "wall_time_s": result.stats.wall_time,
    }
    write_csv(out / "rd.csv", [row])
    doc = {"config": cfg, "config_hash": config_hash(cfg), "seed": args.seed, "frame": name}
    doc.update(encode_summary(result))
    (out / "stats.json").write_text(dumps(doc))
    print(f"{name}: qp {args.qp} rate {result.rate_bits:.0f} bits psnr {result.psnr_db:.4f} dB -> {out}")
    return 0


def _load_ladder_config(args, parser: argparse.ArgumentParser) -> None:
    if args.config is None:
        return
    cfg = json.loads(args.config.read_text())
    if not isinstance(cfg, dict):
        raise CliError(f"{args.config}: config must be a JSON object")
    # Values from the file replace the defaults but not explicit flags.
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise CliError(f"{args.config}: unknown key {key!r}")
        if dest == "qps" and isinstance(value, str):
            value = _qp_list(value)
        if dest == "out_dir":
            value = Path(value)
        flag_given = any(a in args._argv for a in _flags_for(parser, dest))
        if not flag_given:
            setattr(args, dest, value)


def _flags_for(parser: argparse.ArgumentParser, dest: str) -> list[str]:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for p in action.choices.values():
                found = _flags_for(p, dest)
                if found:
                    return found
        elif action.dest == dest:
            return list(action.option_strings)
    return []


def cmd_ladder(args, parser: argparse.ArgumentParser) -> int:
    _load_ladder_config(args, parser)
    frames = _gather_frames(args)
    c = _constraints(args)
    if args.ref_qp not in args.qps:
        raise CliError(f"--ref-qp {args.ref_qp} must be one of --qps {args.qps}")
    mode = "per_dimension" if args.guide_mode in ("per-dim", "per_dimension") else "scalar"
    padded = [pad_to_ctu_grid(f, c.ctu_size) for _, f in frames]
    names = [n for n, _ in frames]
    report = run_ladder(padded, args.qps, args.ref_qp, c, mode, workers=args.workers, names=names)
    cfg = _run_config(
        args, c, corpus=args.corpus, qps=sorted(args.qps), ref_qp=args.ref_qp, guide_mode=mode
    )
    doc = ladder_document(report, cfg)
    out: Path = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / "ladder.json").write_text(dumps(doc))
    write_csv(out / "rd_baseline.csv", rd_rows(report, "baseline"))
    write_csv(out / "rd_fast.csv", rd_rows(report, "fast"))
    stamp = {"config_hash": doc["config_hash"], "seed": args.seed}
    (out / "similarity.json").write_text(dumps({**stamp, "ref_qp": args.ref_qp, "similarity": doc["similarity"]}))
    (out / "reduction.json").write_text(dumps({**stamp, "reduction": doc["reduction"], "bd_psnr": doc["bd_psnr"]}))
    red = report.reduction
    bd_mean = doc["bd_psnr"].get("mean")
    bd_text = "n/a" if bd_mean is None else f"{bd_mean:.4f} dB"
    print(
        f"{len(frames)} frame(s): NS-evaluation reduction {100 * red.mean_ns_reduction:.2f}% "
        f"(latency {100 * red.latency_ns_reduction:.2f}%), "
        f"BD-PSNR {bd_text} -> {out}"
    )
    return 0


def cmd_bd(args) -> int:
    anchor = read_rd_curve(args.anchor_csv, args.frame)
    test = read_rd_curve(args.test_csv, args.frame)
    print(f"{bd_delta(anchor, test, args.mode):.4f}")
    return 0


def cmd_stats(args) -> int:
    path: Path = args.path
    if path.suffix == ".szmp":
        sys.stdout.write(deserialize(path.read_bytes()).to_csv())
        return 0
    doc = json.loads(path.read_text())
    if "representations" in doc:
        print(f"config {doc.get('config_hash')} seed {doc.get('seed')} ref_qp {doc['ref_qp']}")
        print(f"{'qp':>4} {'arm':<9} {'rate_bits':>12} {'ns_evals':>10} {'skipped':>9}")
        for r in doc["representations"]:
            print(f"{r['qp']:>4} {r['arm']:<9} {r['rate_bits']:>12.0f} {r['ns_evaluations']:>10} {r['ns_skipped_by_guide']:>9}")
        red = doc["reduction"]
        print(f"mean NS reduction {100 * red['mean_ns_reduction']:.2f}%  latency {100 * red['latency_ns_reduction']:.2f}%")
        for q, s in doc["similarity"].items():
            print(f"qp {q}: smaller {s['pct_smaller']:.1f}%  equal {s['pct_equal']:.1f}%  larger {s['pct_larger']:.1f}%")
    elif "stats" in doc:
        st = doc["stats"]
        print(f"qp {doc['qp']} rate {doc['rate_bits']:.0f} bits psnr {doc['psnr_db']}")
        for k in ("ns_evaluations", "nodes_visited", "ns_skipped_by_guide", "wall_time_s"):
            print(f"{k} {st[k]}")
    else:
        raise CliError(f"{path}: not a ladder or encode report")
    return 0


def cmd_synth(args) -> int:
    save_pgm(synth_frame(args.kind, args.width, args.height, args.seed), args.output)
    return 0


def main(argv: Optional[Sequence[str]] = None, environ=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    _apply_env_defaults(parser, os.environ if environ is None else environ)
    args = parser.parse_args(argv)
    args._argv = argv
    try:
        if args.command == "encode":
            return cmd_encode(args)
        if args.command == "ladder":
            return cmd_ladder(args, parser)
        if args.command == "bd":
            return cmd_bd(args)
        if args.command == "stats":
            return cmd_stats(args)
        return cmd_synth(args)
    except (CliError, OSError, ValueError) as exc:
        print(f"mrpart: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

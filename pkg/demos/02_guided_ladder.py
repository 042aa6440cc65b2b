"""Encode a small ladder: QP 37 reference, then QPs 22/27/32 with and without the guide.

    python3 demos/02_guided_ladder.py            # three corpus frames, about a minute
    python3 demos/02_guided_ladder.py --full     # the whole 12-frame desk corpus
"""

import argparse

from mrpart.corpus import desk_corpus
from mrpart.multirate import default_workers, run_ladder

ap = argparse.ArgumentParser()
ap.add_argument("--full", action="store_true")
args = ap.parse_args()

named = desk_corpus()
if not args.full:
    named = [named[i] for i in (2, 4, 7)]  # one smooth, one edge, one texture frame
print("frames:", ", ".join(n for n, _ in named))

report = run_ladder([f for _, f in named], names=[n for n, _ in named], workers=default_workers())

print("\nper representation (summed over frames)")
for rec in report.records():
    print(f"  QP {rec['qp']:2d} {rec['arm']:<9} NS evaluations {rec['ns_evaluations']:7d}"
          f"  skipped by guide {rec['ns_skipped_by_guide']:6d}")

red = report.reduction
print(f"\nmean NS-evaluation reduction {100 * red.mean_ns_reduction:.1f}%, "
      f"latency proxy {100 * red.latency_ns_reduction:.1f}%")

# How do dependent CUs compare with the co-located reference CU?
print("\nCU size relative to the QP-37 reference (mixed shapes make up the rest)")
for q, s in sorted(report.similarity.items()):
    print(f"  QP {q}: smaller {s.pct_smaller:5.1f}%  equal {s.pct_equal:5.1f}%  larger {s.pct_larger:5.1f}%")

bd = report.bd_psnr
if bd["mean"] is not None:
    print(f"\nBD-PSNR of guided vs unguided: {bd['mean']:.4f} dB")

"""Bjontegaard deltas on hand-made RD curves.

    python3 demos/03_bd_metrics.py
"""

from mrpart.analytics import RdCurve, bd_delta

anchor = RdCurve([(120.0, 31.2), (260.0, 34.9), (515.0, 37.1), (1010.0, 38.4)])

cases = {
    "same curve": anchor,
    "+1 dB everywhere": RdCurve([(r, q + 1.0) for r, q in anchor.points]),
    "10% more bits": RdCurve([(1.1 * r, q) for r, q in anchor.points]),
    "slightly worse": RdCurve([(130.0, 30.8), (250.0, 34.1), (540.0, 36.9), (990.0, 38.0)]),
}

print(f"{'test curve':<18} {'BD-PSNR (dB)':>13} {'BD-rate (%)':>12}")
for name, test in cases.items():
    print(f"{name:<18} {bd_delta(anchor, test, 'bd_quality'):13.4f} {bd_delta(anchor, test, 'bd_rate'):12.4f}")

"""Search one 64x64 CTU, inspect the chosen tree and its size map.

    python3 demos/01_single_ctu.py
"""

from mrpart import PartitionConstraints, format_tree, rdo_search, synth_frame
from mrpart.size_map import extract_size_map, serialize
from mrpart.toy_codec import qp_params

frame = synth_frame("leaves", 64, 64, seed=21)
constraints = PartitionConstraints()

for qp in (22, 37):
    tree, stats = rdo_search(frame, (0, 0), qp, constraints)
    leaves = list(tree.leaves())
    print(f"QP {qp}: J = {tree.cost(qp_params(qp).lam):.1f}, {len(leaves)} CUs, "
          f"{stats.ns_evaluations} NS evaluations over {stats.nodes_visited} candidate CUs")

# Coarse QPs favour large CUs; the QP-37 tree is the one a ladder would share.
lines = format_tree(tree).splitlines()
print(f"\nfirst lines of the QP-37 tree ({len(lines)} nodes; split x y w h qt_depth mtt_depth):")
print("\n".join(lines[:12]))

sm = extract_size_map(tree)
print(f"\nsize map: {sm.grid}x{sm.grid} entries, {len(serialize(sm))} bytes serialized")
print("CU widths at 4x4 granularity (top rows):")
for row in sm.widths[:4]:
    print(" ".join(f"{v:3d}" for v in row))

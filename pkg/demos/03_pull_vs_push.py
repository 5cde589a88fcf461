"""Two routes for backpropagating deltas through shared-weight convolution.

Pushing scatters every destination delta onto the source cells its kernel
touched: simple, but many writers hit the same cell. Pulling inverts the
mapping: each source cell computes the rectangle of destination cells whose
kernels cover it and gathers, so every cell has exactly one writer. Both
must produce the same numbers; pushing stays around as the slow oracle.
"""

import numpy as np

import convkit as ck
from convkit.layers import KernelBank

print("== the pulled rectangle ==")
print("29-wide source, 5-wide kernel, skip 1 -> 13 destination placements")
for i in (0, 1, 7, 14, 28):
    lo, hi = ck.pull_range(i, kernel=5, skip=1, dest_size=13)
    print(f"  source cell {i:>2} gathers from destinations {lo}..{hi}")

print("\n== equivalence on a random layer ==")
rng = np.random.default_rng(11)
table = ck.build_random_table(3, 4, in_degree=2, seed=5, kernel=(3, 3))
bank = KernelBank(table, dtype=np.float64)
bank.arena[:] = rng.uniform(-1, 1, bank.arena.shape)
delta = ck.stack_from_array(rng.uniform(-1, 1, (4, 5, 5)), dtype=np.float64)
pre = ck.stack_from_array(rng.uniform(-1, 1, (3, 12, 12)), dtype=np.float64)

pulled = ck.pull_deltas_conv(delta, bank, skip=(1, 1), pre_activations=pre)
pushed = ck.push_deltas_conv(delta, bank, skip=(1, 1), pre_activations=pre)
print(f"  max |pull - push| = {np.abs(pulled.view - pushed.view).max():.3e}")

print("\n== a single destination delta, pushed ==")
lone = ck.new_stack(4, 5, 5, dtype=np.float64)
lone[0][2, 1] = 1.0
spread = ck.push_deltas_conv(lone, bank, skip=(1, 1), src_size=(12, 12))
src = table.forward[0][0]
print(f"  source map {src} receives (3x3 kernel footprint at stride 2):")
print("\n".join("  " + "".join("#" if v else "." for v in row)
                for row in (spread.view[src] != 0.0)))

"""Layer geometry and connection tables.

A convolutional layer is described by its map count, kernel size and
skipping factors; the kernel must stay fully inside the input, moving
skip+1 pixels between placements. Partial connectivity between map layers
lives in a table: per-destination source lists, their transpose, and the
offset of every pair's weight block inside the layer's flat weight arena.
"""

import numpy as np

import convkit as ck

print("== placement arithmetic ==")
for prev, kernel, skip in ((29, 5, 1), (32, 3, 0), (9, 9, 4), (28, 5, 3)):
    out = ck.output_map_size(prev, kernel, skip)
    print(f"input {prev:>2} px, kernel {kernel}, skip {skip} -> {out} placements")

print("\n== an architecture string, resolved ==")
spec = ck.parse_architecture(
    "input 3x32x32; conv 100M k3x3 s0x0; maxpool 3x3; conv 100M k3x3 s0x0; "
    "maxpool 2x2; conv 100M k3x3 s0x0; maxpool 2x2; fc 300N; fc 100N; output 10")
for i, layer in enumerate(spec.layers):
    print(f"  layer {i}: {layer.kind:<16} {layer.out_maps:>3} maps of "
          f"{layer.out_width}x{layer.out_height}")

print("\n== sparse random connectivity ==")
table = ck.build_random_table(6, 8, in_degree=3, seed=42, kernel=(3, 3))
for d, row in enumerate(table.forward):
    print(f"  destination {d} pulls from sources {row}")
print("  transpose (who feeds whom):")
for s, row in enumerate(table.backward):
    print(f"  source {s} feeds destinations {row}")

print("\n== weight arena layout ==")
print(f"  {table.n_pairs} connected pairs x 3x3 weights + 8 biases "
      f"= {table.arena_size} arena slots")
covered = np.zeros(table.arena_size, int)
for (d, s), off in zip(table.pairs, table.pair_offsets):
    covered[off: off + 9] += 1
covered[table.bias_offset] += 1
print(f"  every slot covered exactly once: {bool((covered == 1).all())}")

"""Anatomy of a forward pass.

One convolutional map: bias plus the sum of per-source patch dot products,
squashed by the scaled tanh. Max-pooling then keeps the strongest response
of each tile and remembers where it came from; that recorded argmax is what
routes gradients later.
"""

import numpy as np

import convkit as ck
from convkit.layers import KernelBank

rng = np.random.default_rng(3)

print("== scaled tanh ==")
for a in (-4.0, -1.0, 0.0, 1.0, 4.0):
    print(f"  act({a:+.1f}) = {ck.activation(a):+.4f}   "
          f"act'({a:+.1f}) = {ck.activation_deriv(a):.4f}")
print("  saturation: act(1e9) =", ck.activation(1e9))

print("\n== convolution with a skipping factor ==")
image = ck.stack_from_array(rng.uniform(-1, 1, (1, 6, 6)), dtype=np.float64)
table = ck.build_full_table(1, 1, (3, 3))
bank = KernelBank(table, dtype=np.float64)
bank.weight(0, 0)[:] = rng.uniform(-1, 1, (3, 3))
a, y = ck.conv_forward(image, bank, skip=(1, 1))
print(f"  6x6 input, 3x3 kernel, skip 1 -> {a.view.shape[2]}x{a.view.shape[1]} "
      f"pre-activations:")
print(np.array2string(a.view[0], precision=3))

print("\n== max pooling keeps the argmax ==")
values = np.arange(1.0, 17.0).reshape(4, 4)
print(np.array2string(values))
out, index = ck.maxpool_forward(ck.from_array(values, dtype=np.float64), (2, 2))
print("  2x2 pooled:")
print(np.array2string(out.view))
for r in range(2):
    for c in range(2):
        print(f"  output ({c},{r}) won by input {index.winner(c, r)}")

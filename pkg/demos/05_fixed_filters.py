"""The fixed image-processing layer.

Edge masks (Sobel, Scharr) and on/off-center contrast extractors built as
zero-sum differences of Gaussians. Applied ahead of the learnable stack,
they widen the input: originals first, then each filter's response per
channel, all at the original size via replicated borders.
"""

import numpy as np

import convkit as ck
from convkit.filters import bank_for_selection, make_contrast_filters

print("== on/off-center contrast pair (9x9 shown) ==")
on, off = make_contrast_filters(9, 9 / 8, 9 / 4)
print("on-center, center row:", np.array2string(on[4], precision=3))
print(f"zero sum: {on.sum():.1e}   unit norm: {np.sqrt((on**2).sum()):.6f}")
print(f"off-center == -on-center: {np.array_equal(off, -on)}")

dot = np.zeros((9, 9))
dot[4, 4] = 1.0
print(f"bright dot responses: on {float((on * dot).sum()):+.3f}  "
      f"off {float((off * dot).sum()):+.3f}")

print("\n== map counting ==")
stereo = ck.stack_from_array(np.random.default_rng(0).uniform(-1, 1, (2, 24, 24)),
                             dtype=np.float64)
out = ck.apply_image_processing(stereo, bank_for_selection(["hat21"]), ["hat21"])
print(f"stereo pair + hat21 pair -> {out.n_maps} input maps")
rgb = ck.stack_from_array(np.random.default_rng(1).uniform(-1, 1, (3, 16, 16)),
                          dtype=np.float64)
out = ck.apply_image_processing(rgb, bank_for_selection(["sobel", "scharr"]),
                                ["sobel", "scharr"])
print(f"RGB + sobel pair + scharr pair -> {out.n_maps} input maps")

print("\n== banks serialize to plain text ==")
bank = bank_for_selection(["hat9"])
bank.save_text("/tmp/filter_bank.txt")
loaded = ck.FixedFilterBank.load_text("/tmp/filter_bank.txt")
print("round trip ok:", all(np.array_equal(loaded[n], bank[n])
                            for n in bank.names()))

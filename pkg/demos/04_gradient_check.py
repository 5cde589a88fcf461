"""Verifying the analytic gradient with central finite differences.

Every weight and bias is perturbed by +-h and the loss difference quotient
compared against the backward pass. This only works in double precision:
float32 rounding is larger than the quantities being compared. Expect
relative agreement around 1e-7; parameters whose true gradient is nearly
zero are limited by the difference quotient's roundoff floor.
"""

import convkit as ck
from convkit.gradcheck import check_network

ARCH = ("input 1x16x16; conv 4M k3x3 s1x1; maxpool 2x2; "
        "conv 6M k3x3 s0x0 rand3; fc 10N; output 4")

spec = ck.parse_architecture(ARCH)
print("architecture:", ARCH)
with ck.use_precision("double"):
    report = check_network(spec, seed=15, tolerance=1e-6)
print(report.render({i: l.kind for i, l in enumerate(spec.layers)}))

print("\nand what a broken implementation would look like:")
print("(see tests/test_gradcheck.py, which injects an off-by-one into the")
print("pulled rectangle and watches the affected layer light up)")

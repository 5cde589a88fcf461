"""End-to-end online training on the bundled synthetic glyph task.

Weight update after every image, geometric learning-rate decay, the
training set doubling as validation, and per-epoch test evaluation. The
headline number is the test error at the best-validation epoch; the best
test error over all epochs is tracked alongside.
"""

import convkit as ck
from convkit.synth import make_glyph_dataset

train = make_glyph_dataset(1500, seed=11, split="train")
test = make_glyph_dataset(400, seed=11, split="test")
print(f"train {len(train)} samples, test {len(test)} samples, "
      f"{train.n_classes} classes of {train.width}x{train.height}")

ARCH = ("input 1x28x28; conv 5M k5x5 s0x0; maxpool 2x2; "
        "conv 10M k5x5 s0x0; maxpool 2x2; fc 50N; output 10")
spec = ck.parse_architecture(ARCH)
net = ck.NetworkState(spec, seed=3)
print(f"architecture: {ARCH}")
print(f"parameters: {net.count_parameters()}")

config = ck.TrainConfig(epochs=4, eta0=1e-3, eta_decay=0.95, seed=3)
record = ck.run_training(
    net, train, test, config,
    on_epoch=lambda st: print(
        f"epoch={st.epoch} lr={st.lr:.6g} train_err={st.train_err:.4f} "
        f"test_err={st.test_err:.4f} secs={st.seconds:.3f}"))

print(f"\ntest error at best validation: {record.tfbv:.2f}% "
      f"(epoch {record.best_epoch})")
print(f"best test error overall:       {record.bt:.2f}%")

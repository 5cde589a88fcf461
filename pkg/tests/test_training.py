import numpy as np
import pytest

import convkit as ck
from convkit.augment import DeformationConfig
from convkit.errors import ConfigError, DimensionError
from convkit.synth import make_glyph_dataset
from convkit.training import mnist_decay

ARCH = ("input 1x14x14; conv 3M k3x3 s0x0; maxpool 2x2; conv 6M k3x3 s0x0; "
        "maxpool 2x2; fc 12N; output 4")


def tiny_data(n=60, seed=0, split="train"):
    return make_glyph_dataset(n, n_classes=4, size=14, seed=seed, split=split,
                              dtype=np.float64)


def build(seed=0):
    return ck.NetworkState(ck.parse_architecture(ARCH), seed, dtype=np.float64)


def test_lr_schedule_basics():
    cfg = ck.TrainConfig(eta0=1e-3, eta_decay=0.95)
    assert ck.lr_at_epoch(cfg, 0) == 1e-3
    assert ck.lr_at_epoch(cfg, 1) == pytest.approx(0.00095, abs=1e-12)


def test_lr_schedule_floor():
    cfg = ck.TrainConfig(eta0=1e-3, eta_decay=0.5, eta_floor=1e-4)
    assert ck.lr_at_epoch(cfg, 50) == 1e-4


def test_lr_schedule_monotone_nonincreasing():
    cfg = ck.TrainConfig(eta0=1e-3, eta_decay=0.97, eta_floor=1e-5)
    rates = [ck.lr_at_epoch(cfg, e) for e in range(300)]
    assert all(a >= b for a, b in zip(rates, rates[1:]))


def test_mnist_decay_endpoints():
    c = mnist_decay(1e-3, 3e-5, 500)
    assert c == pytest.approx(0.03 ** (1.0 / 500.0), abs=1e-15)
    assert c == pytest.approx(0.99301, abs=5e-6)
    assert 1e-3 * c ** 500 == pytest.approx(3e-5, rel=1e-9)


def test_config_validation():
    with pytest.raises(ConfigError):
        ck.TrainConfig(eta_decay=0.0)
    with pytest.raises(ConfigError):
        ck.TrainConfig(eta_decay=1.5)
    with pytest.raises(ConfigError):
        ck.TrainConfig(eta0=1e-4, eta_floor=1e-3)


def test_targets_coding():
    t = ck.targets_for(2, 5)
    assert t[2] == 1.0
    assert (t[[0, 1, 3, 4]] == -1.0).all()


def test_zero_eta_leaves_weights_unchanged():
    net = build(1)
    data = tiny_data()
    before = [arr.copy() for _, _, arr in net.parameters()]
    cfg = ck.TrainConfig(epochs=1, eta0=0.0, eta_decay=1.0, eta_floor=0.0,
                         seed=0)
    ck.train_epoch(net, data, cfg, epoch=0)
    for (_, _, arr), saved in zip(net.parameters(), before):
        np.testing.assert_array_equal(arr, saved)


def test_single_sample_descent_over_epochs():
    net = build(2)
    data = tiny_data(1)
    cfg = ck.TrainConfig(epochs=1, eta0=1e-4, eta_decay=1.0, seed=0,
                         shuffle=False)
    losses = [ck.train_epoch(net, data, cfg, epoch=e) for e in range(10)]
    assert all(a >= b for a, b in zip(losses, losses[1:]))
    assert losses[-1] < losses[0]


def test_train_epoch_bit_deterministic():
    data = tiny_data()
    cfg = ck.TrainConfig(epochs=1, eta0=1e-3, seed=7)
    nets = [build(7), build(7)]
    for net in nets:
        ck.train_epoch(net, data, cfg, epoch=0)
    for (_, _, a), (_, _, b) in zip(nets[0].parameters(), nets[1].parameters()):
        np.testing.assert_array_equal(a, b)


def test_shuffle_changes_visit_order_but_is_seeded():
    data = tiny_data()
    cfg_a = ck.TrainConfig(epochs=1, eta0=1e-3, seed=1)
    cfg_b = ck.TrainConfig(epochs=1, eta0=1e-3, seed=2)
    net_a, net_a2, net_b = build(0), build(0), build(0)
    ck.train_epoch(net_a, data, cfg_a, 0)
    ck.train_epoch(net_a2, data, cfg_a, 0)
    ck.train_epoch(net_b, data, cfg_b, 0)
    same = [np.array_equal(x, y) for (_, _, x), (_, _, y)
            in zip(net_a.parameters(), net_a2.parameters())]
    diff = [np.array_equal(x, y) for (_, _, x), (_, _, y)
            in zip(net_a.parameters(), net_b.parameters())]
    assert all(same)
    assert not all(diff)


def test_geometry_mismatch_raises():
    net = build()
    data = make_glyph_dataset(10, n_classes=4, size=16, seed=0,
                              dtype=np.float64)
    cfg = ck.TrainConfig(epochs=1, seed=0)
    with pytest.raises(DimensionError):
        ck.train_epoch(net, data, cfg, 0)
    with pytest.raises(DimensionError):
        ck.evaluate(net, data)


def test_evaluate_constant_classifier():
    net = build(0)
    for _, _, arr in net.parameters():
        arr[:] = 0.0
    out_layer = net.layers[-1]
    out_layer.bias[2] = 0.5          # constant argmax = class 2
    data = tiny_data(40)
    expected = 100.0 * (1.0 - np.mean(data.labels == 2))
    assert ck.evaluate(net, data) == pytest.approx(expected, abs=1e-12)


def test_evaluate_same_object_for_train_and_validation():
    net = build(3)
    data = tiny_data()
    assert ck.evaluate(net, data) == ck.evaluate(net, data)


def test_untrained_net_is_at_chance_level():
    data = make_glyph_dataset(200, n_classes=10, size=14, seed=5,
                              dtype=np.float64)
    spec = ck.parse_architecture(
        "input 1x14x14; conv 4M k5x5 s0x0; maxpool 2x2; fc 10N; output 10")
    errs = [ck.evaluate(ck.NetworkState(spec, seed, dtype=np.float64), data)
            for seed in range(5)]
    assert 85.0 <= np.mean(errs) <= 95.0


def test_evaluate_ignores_deformation_config():
    """The validation/test path must bypass deformation entirely."""
    net = build(4)
    data = tiny_data()
    wild = ck.TrainConfig(epochs=1, eta0=1e-3, seed=0, deformation=
                          DeformationConfig(translate_max=0.4, rotate_max=90.0,
                                            elastic_sigma=3.0,
                                            elastic_alpha_max=30.0))
    baseline = ck.evaluate(net, data)
    ck.train_epoch(net, data, wild, 0)       # deforms only while training
    assert ck.evaluate(net, data) == ck.evaluate(net, data)
    images_copy = data.images.copy()
    np.testing.assert_array_equal(data.images, images_copy)
    assert baseline == pytest.approx(baseline)


def test_deformed_training_differs_from_undeformed():
    data = tiny_data()
    cfg_plain = ck.TrainConfig(epochs=1, eta0=1e-3, seed=0)
    cfg_deform = ck.TrainConfig(epochs=1, eta0=1e-3, seed=0, deformation=
                                DeformationConfig(translate_max=0.1))
    a, b = build(5), build(5)
    ck.train_epoch(a, data, cfg_plain, 0)
    ck.train_epoch(b, data, cfg_deform, 0)
    assert any(not np.array_equal(x, y) for (_, _, x), (_, _, y)
               in zip(a.parameters(), b.parameters()))


def test_run_record_tfbv_and_bt():
    net = build(6)
    train = tiny_data(80)
    test = tiny_data(40, seed=9, split="test")
    cfg = ck.TrainConfig(epochs=4, eta0=2e-3, seed=0)
    rec = ck.run_training(net, train, test, cfg)
    assert len(rec.epochs) == 4
    assert rec.bt <= rec.tfbv
    measured = [st.test_err for st in rec.epochs]
    assert rec.bt == min(measured)
    vals = [st.train_err for st in rec.epochs]
    best = vals.index(min(vals))
    assert rec.best_epoch == best
    assert rec.tfbv == measured[best]


def test_test_every_skips_epochs():
    net = build(6)
    train = tiny_data(30)
    test = tiny_data(20, seed=9, split="test")
    cfg = ck.TrainConfig(epochs=5, eta0=1e-3, seed=0, test_every=2)
    rec = ck.run_training(net, train, test, cfg)
    measured = [not np.isnan(st.test_err) for st in rec.epochs]
    assert measured == [True, False, True, False, True]


def test_run_experiment_statistics():
    train = tiny_data(30)
    test = tiny_data(20, seed=9, split="test")
    spec = ck.parse_architecture(ARCH)
    cfg = ck.TrainConfig(epochs=2, eta0=1e-3, seed=10)
    summary = ck.run_experiment(spec, train, test, cfg, runs=3,
                                dtype=np.float64)
    assert len(summary.runs) == 3
    assert summary.seeds == [10, 11, 12]
    tfbvs = [r.tfbv for r in summary.runs]
    assert summary.tfbv_mean == pytest.approx(np.mean(tfbvs))
    assert summary.tfbv_std == pytest.approx(np.std(tfbvs, ddof=1))


def test_run_experiment_single_run_has_no_std():
    train = tiny_data(20)
    test = tiny_data(10, seed=9, split="test")
    spec = ck.parse_architecture(ARCH)
    cfg = ck.TrainConfig(epochs=1, eta0=1e-3, seed=0)
    summary = ck.run_experiment(spec, train, test, cfg, runs=1,
                                dtype=np.float64)
    assert summary.tfbv_std is None


def test_single_precision_training_tracks_double():
    """The float32 production path is validated the same way a faster
    implementation would be: train the same net in both precisions and
    compare the results."""
    spec = ck.parse_architecture(ARCH)
    outcomes = {}
    for dtype in (np.float32, np.float64):
        data = make_glyph_dataset(120, n_classes=4, size=14, seed=2,
                                  dtype=dtype)
        cfg = ck.TrainConfig(epochs=3, eta0=2e-3, seed=0)
        net = ck.NetworkState(spec, 1, dtype=dtype)
        for epoch in range(cfg.epochs):
            ck.train_epoch(net, data, cfg, epoch)
        outcomes[np.dtype(dtype).name] = (
            [net.predict(data.images[i]) for i in range(len(data))],
            [arr.astype(np.float64) for _, _, arr in net.parameters()])
    preds32, weights32 = outcomes["float32"]
    preds64, weights64 = outcomes["float64"]
    assert preds32 == preds64
    for w32, w64 in zip(weights32, weights64):
        assert np.abs(w32 - w64).max() < 1e-5


def test_identical_seeds_give_zero_std():
    train = tiny_data(20)
    test = tiny_data(10, seed=9, split="test")
    spec = ck.parse_architecture(ARCH)
    cfg = ck.TrainConfig(epochs=1, eta0=1e-3, seed=4)
    a = ck.run_experiment(spec, train, test, cfg, runs=1, dtype=np.float64)
    b = ck.run_experiment(spec, train, test, cfg, runs=1, dtype=np.float64)
    assert a.runs[0].tfbv == b.runs[0].tfbv
    assert np.std([a.runs[0].tfbv, b.runs[0].tfbv], ddof=1) == 0.0

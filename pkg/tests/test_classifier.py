import numpy as np
import pytest

import mmsense.training as training_module
from mmsense import fileio
from mmsense.dataset import (
    bilinear_resize,
    image_from_magnitudes,
    stratified_split,
)
from mmsense.errors import ConfigError, InputError
from mmsense.net import (
    ResidualNet,
    ResidualNetConfig,
    gradient_check,
    softmax_cross_entropy,
)
from mmsense.training import evaluate, run_training, spearman, train

SMALL = ResidualNetConfig(n_blocks=1, channels=(4,), input_shape=(16, 16), seed=0)


def _separable_set(n_per_class=10, shape=(16, 16), seed=0):
    """Three texture classes (stripe orientation) that global pooling can see."""
    rng = np.random.default_rng(seed)
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w]
    patterns = [np.sin(xx * np.pi / 2), np.sin(yy * np.pi / 2),
                np.sin((xx + yy) * np.pi / 2)]
    images, labels = [], []
    for cls in range(3):
        for _ in range(n_per_class):
            img = patterns[cls] + rng.normal(0.0, 0.4, shape)
            img = (img - img.mean()) / img.std()
            images.append(img)
            labels.append(cls)
    x = np.stack(images)[:, None, :, :]
    return x, np.asarray(labels, dtype=np.intp)


# ------------------------------------------------------------------ forward

def test_fresh_net_scores_classes_equally():
    # zero-initialized head: every class gets the same logit
    net = ResidualNet(SMALL)
    x = np.random.default_rng(1).standard_normal((4, 1, 16, 16))
    logits = net.forward(x)
    np.testing.assert_array_equal(logits, 0.0)


def test_inference_is_per_sample():
    net = ResidualNet(SMALL, head_init="random")
    rng = np.random.default_rng(2)
    x = rng.standard_normal((3, 1, 16, 16))
    batch = net.forward(np.concatenate([x, x[1:2]]), train=False)
    np.testing.assert_array_equal(batch[1], batch[3])
    single = net.forward(x[1:2], train=False)
    np.testing.assert_allclose(single[0], batch[1], rtol=1e-12, atol=1e-12)


def test_forward_rejects_wrong_shape():
    net = ResidualNet(SMALL)
    with pytest.raises(InputError):
        net.forward(np.zeros((2, 1, 8, 8)))
    with pytest.raises(InputError):
        net.forward(np.zeros((2, 3, 16, 16)))


def test_config_validation():
    with pytest.raises(ConfigError):
        ResidualNetConfig(n_blocks=0, channels=())
    with pytest.raises(ConfigError):
        ResidualNetConfig(n_blocks=2, channels=(8,))
    with pytest.raises(ConfigError):
        ResidualNetConfig(n_classes=1)


def test_softmax_cross_entropy_uniform():
    logits = np.zeros((4, 3))
    loss, dlogits = softmax_cross_entropy(logits, np.array([0, 1, 2, 0]))
    assert loss == pytest.approx(np.log(3.0), rel=1e-12)
    # gradient rows sum to zero
    np.testing.assert_allclose(dlogits.sum(axis=1), 0.0, atol=1e-15)


# ------------------------------------------------------------------ gradients

def test_gradient_check_full_small_net():
    # every scalar parameter of a 1-block net against central differences
    rng = np.random.default_rng(3)
    x = rng.standard_normal((4, 1, 8, 8))
    labels = np.array([0, 1, 2, 1])
    cfg = ResidualNetConfig(n_blocks=1, channels=(3,), input_shape=(8, 8), seed=7)
    net = ResidualNet(cfg, head_init="random")
    report = gradient_check(net, x, labels)
    assert report["failures"] == []
    assert report["n_checked"] > 200
    assert report["worst_rel"] < 1e-4


def test_gradient_check_with_projection_skip():
    # widening block exercises the 1x1 projection path
    rng = np.random.default_rng(4)
    x = rng.standard_normal((3, 1, 8, 8))
    labels = np.array([0, 1, 2])
    cfg = ResidualNetConfig(n_blocks=2, channels=(2, 4), input_shape=(8, 8), seed=11)
    net = ResidualNet(cfg, head_init="random")
    report = gradient_check(net, x, labels)
    assert report["failures"] == []


# ------------------------------------------------------------------- training

def test_separable_set_reaches_full_train_accuracy():
    x, labels = _separable_set()
    net = ResidualNet(SMALL)
    train(net, x, labels, epochs=30, batch_size=10, seed=0)
    report = evaluate(net, x, labels)
    assert report.accuracy == 1.0
    assert np.trace(report.confusion) == 30


def test_loss_decreases_early():
    x, labels = _separable_set()
    net = ResidualNet(SMALL)
    report = train(net, x, labels, epochs=8, batch_size=10, seed=0)
    smooth = np.convolve(report.epoch_losses, np.ones(3) / 3, mode="valid")
    assert np.all(np.diff(smooth[:5]) <= 1e-12)


def test_zero_learning_rate_is_a_no_op():
    x, labels = _separable_set(n_per_class=4)
    net = ResidualNet(SMALL)
    before = {k: v.copy() for k, v in net.params().items()}
    train(net, x, labels, epochs=2, batch_size=4, lr=0.0, seed=0)
    for k, v in net.params().items():
        np.testing.assert_array_equal(v, before[k])


def test_minibatch_count(monkeypatch):
    # 150 samples at batch 16 -> 10 minibatches per epoch
    x = np.zeros((150, 1, 16, 16))
    labels = np.tile(np.array([0, 1, 2], dtype=np.intp), 50)
    calls = []
    real = training_module.softmax_cross_entropy
    monkeypatch.setattr(training_module, "softmax_cross_entropy",
                        lambda lg, lb: calls.append(lb.size) or real(lg, lb))
    net = ResidualNet(SMALL)
    train(net, x, labels, epochs=1, batch_size=16, seed=0)
    assert len(calls) == 10
    assert sorted(calls, reverse=True) == [16] * 9 + [6]


def test_non_finite_loss_raises():
    # a NaN anywhere in the batch surfaces as a numerics error, not silence
    x, labels = _separable_set(n_per_class=4)
    x[0, 0, 0, 0] = np.nan
    net = ResidualNet(SMALL, head_init="random")
    from mmsense.errors import NumericsError
    with pytest.raises(NumericsError):
        train(net, x, labels, epochs=1, batch_size=12, seed=0)


def test_shuffle_seed_matters():
    x, labels = _separable_set()
    n1 = ResidualNet(SMALL)
    n2 = ResidualNet(SMALL)
    train(n1, x, labels, epochs=2, batch_size=10, seed=0)
    train(n2, x, labels, epochs=2, batch_size=10, seed=1)
    assert any(np.any(a != b) for a, b in zip(n1.params().values(), n2.params().values()))


def test_label_permutation_permutes_confusion():
    # same seed, relabeled classes: the confusion matrix permutes exactly
    x, labels = _separable_set(n_per_class=8)
    cfg = SMALL
    perm = np.array([2, 0, 1])
    _, base = run_training(x, labels, cfg, n_train_per_class=4, seed=5,
                           epochs=20, batch_size=8)
    _, permuted = run_training(x, perm[labels], cfg, n_train_per_class=4, seed=5,
                               epochs=20, batch_size=8)
    np.testing.assert_array_equal(permuted.confusion[np.ix_(perm, perm)], base.confusion)


def test_evaluate_confusion_rows_are_class_counts():
    x, labels = _separable_set(n_per_class=5)
    net = ResidualNet(SMALL, head_init="random")
    report = evaluate(net, x, labels)
    np.testing.assert_array_equal(report.confusion.sum(axis=1), [5, 5, 5])


def test_state_round_trip_through_files(tmp_path):
    x, labels = _separable_set(n_per_class=4)
    net = ResidualNet(SMALL)
    train(net, x, labels, epochs=3, batch_size=4, seed=0)
    path = str(tmp_path / "params.bin")
    fileio.save_params(path, net.state())
    net2 = ResidualNet(SMALL)
    net2.load_state(fileio.load_params(path))
    a = net.forward(x, train=False)
    b = net2.forward(x, train=False)
    # float32 storage: small but nonzero round-trip error
    np.testing.assert_allclose(a, b, rtol=1e-4, atol=1e-5)
    np.testing.assert_array_equal(np.argmax(a, axis=1), np.argmax(b, axis=1))


def test_load_state_validates(tmp_path):
    net = ResidualNet(SMALL)
    state = net.state()
    state.pop("head.fc.w")
    with pytest.raises(InputError):
        net.load_state(state)


# ------------------------------------------------------------------- dataset

def test_image_standardized():
    rng = np.random.default_rng(5)
    values = rng.uniform(0.1, 5.0, (39, 101))
    img = image_from_magnitudes(values)
    assert img.shape == (32, 32)
    assert abs(img.mean()) < 1e-12
    assert abs(img.std() - 1.0) < 1e-12


def test_image_rescaling_invariance():
    rng = np.random.default_rng(6)
    values = rng.uniform(0.0, 2.0, (20, 60))
    a = image_from_magnitudes(values)
    b = image_from_magnitudes(values * 3.7e4)
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)


def test_image_rejects_degenerate_input():
    with pytest.raises(InputError):
        image_from_magnitudes(np.zeros((10, 10)))
    with pytest.raises(InputError):
        image_from_magnitudes(np.full((10, 10), 2.5))  # constant -> zero variance


def test_bilinear_resize_identity_and_corners():
    rng = np.random.default_rng(7)
    img = rng.standard_normal((9, 13))
    np.testing.assert_allclose(bilinear_resize(img, (9, 13)), img, atol=1e-12)
    out = bilinear_resize(img, (5, 7))
    assert out[0, 0] == pytest.approx(img[0, 0])
    assert out[-1, -1] == pytest.approx(img[-1, -1])


def test_stratified_split_counts_and_determinism():
    labels = np.array([0] * 10 + [1] * 10 + [2] * 10, dtype=np.intp)
    tr1, te1 = stratified_split(labels, 6, seed=3)
    tr2, te2 = stratified_split(labels, 6, seed=3)
    np.testing.assert_array_equal(tr1, tr2)
    np.testing.assert_array_equal(te1, te2)
    assert tr1.size == 18 and te1.size == 12
    assert np.intersect1d(tr1, te1).size == 0
    for cls in range(3):
        assert (labels[tr1] == cls).sum() == 6


def test_stratified_split_is_label_permutation_stable():
    # relabeling classes must not change which samples land in train
    rng = np.random.default_rng(8)
    labels = rng.integers(0, 3, 40).astype(np.intp)
    labels[:12] = np.array([0, 1, 2] * 4)  # ensure enough of each
    perm = np.array([1, 2, 0])
    tr1, te1 = stratified_split(labels, 3, seed=9)
    tr2, te2 = stratified_split(perm[labels], 3, seed=9)
    np.testing.assert_array_equal(tr1, tr2)
    np.testing.assert_array_equal(te1, te2)


def test_stratified_split_needs_test_samples():
    labels = np.array([0] * 5 + [1] * 5 + [2] * 5, dtype=np.intp)
    with pytest.raises(InputError):
        stratified_split(labels, 5, seed=0)


# ------------------------------------------------------------------- spearman

def test_spearman_perfect_and_inverse():
    t = np.array([0.25, 0.5, 1.0, 2.0])
    assert spearman(t, t**2) == pytest.approx(1.0)
    assert spearman(t, -t) == pytest.approx(-1.0)


def test_spearman_handles_ties():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    y = np.array([0.5, 0.9, 0.9, 1.0])
    val = spearman(x, y)
    assert 0.0 < val < 1.0


def test_spearman_constant_series_raises():
    from mmsense.errors import NumericsError
    with pytest.raises(NumericsError):
        spearman(np.array([1.0, 2.0, 3.0]), np.ones(3))

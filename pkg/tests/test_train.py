import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uml_lab.errors import InvalidInput
from uml_lab.neural import DenseNet, cross_entropy_loss, gradient_check, mse_loss
from uml_lab.train import (AUX_KINDS, AutoencoderConfig, SharedNetSpec, TrainConfig, _aux_count,
                           build_autoencoder, build_classifier_net, build_ssl_net, init_head_from_class_means,
                           make_classification_task, make_sequence_task, next_step_mse, train_ssl_shared_trunk,
                           train_supervised)


def _small_task(seed=0, aux="related"):
    return make_classification_task(seed, n_classes=4, shots_x=3, n_y_per_class=10, n_test_per_class=20,
                                    aux=aux)


def _same_groups(a, b, names):
    ga, gb = a.groups(), b.groups()
    return all(np.array_equal(p, q) for n in names for p, q in zip(ga[n].params(), gb[n].params()))


# --- configuration -------------------------------------------------------------

@pytest.mark.parametrize("kw", [dict(lam=-1.0), dict(batch_ratio=0.0), dict(epochs=2, curriculum_step=3),
                                dict(head_init="Ones"), dict(batch_size=0)])
def test_train_config_validation(kw):
    with pytest.raises(InvalidInput):
        TrainConfig(**kw)


@given(st.floats(0.05, 6.0), st.integers(0, 1000))
def test_aux_count_brackets_ratio(r, seed):
    k = _aux_count(TrainConfig(batch_ratio=r), np.random.default_rng(seed))
    assert int(np.floor(r)) <= k <= int(np.ceil(r))


def test_aux_count_mean_matches_fractional_ratio():
    rng = np.random.default_rng(0)
    cfg = TrainConfig(batch_ratio=0.25)
    counts = [_aux_count(cfg, rng) for _ in range(20000)]
    assert abs(np.mean(counts) - 0.25) < 0.01


def test_spec_rejects_mismatched_heads():
    rng = np.random.default_rng(0)
    a = {"X": DenseNet.init([3, 4], ["identity"], rng)}
    trunk = DenseNet.init([4, 4], ["relu"], rng)
    with pytest.raises(InvalidInput):
        SharedNetSpec(a, trunk)
    with pytest.raises(InvalidInput):
        SharedNetSpec(a, trunk, classifier=DenseNet.init([5, 2], ["identity"], rng))


# --- supervised reduction and gradient routing ----------------------------------

def test_lambda_zero_reproduces_unimodal_bitwise():
    task = _small_task()
    cfg = TrainConfig(lam=0.0, epochs=5, batch_size=4, seed=3, lr=0.01)
    joint = build_classifier_net(4, 4, 8, 4, 3)
    uni = build_classifier_net(4, None, 8, 4, 3)
    rj = train_supervised(joint, task.train_x, task.train_y, cfg, task.test_x)
    ru = train_supervised(uni, task.train_x, None, cfg, task.test_x)
    assert _same_groups(joint, uni, ["adapter_X", "trunk", "classifier"])
    assert rj.epoch_losses["X"] == ru.epoch_losses["X"]
    assert rj.metrics == ru.metrics
    assert rj.schedule == []


def test_positive_lambda_changes_the_trajectory():
    task = _small_task()
    cfg = TrainConfig(lam=1.0, epochs=3, batch_size=4, seed=3, lr=0.01)
    joint, uni = build_classifier_net(4, 4, 8, 4, 3), build_classifier_net(4, None, 8, 4, 3)
    train_supervised(joint, task.train_x, task.train_y, cfg)
    train_supervised(uni, task.train_x, None, cfg)
    assert not _same_groups(joint, uni, ["trunk"])


def test_gradient_partition_between_modalities(rng):
    model = build_classifier_net(4, 4, 8, 3, 0, trunk_activation="relu")
    x, y = rng.standard_normal((5, 4)), rng.integers(0, 3, 5)
    for mod in ("X", "Y"):
        out, caches = model.forward(mod, x)
        grads = model.backward(mod, caches, cross_entropy_loss(out, y)[1])
        other = "Y" if mod == "X" else "X"
        assert set(grads) == {f"adapter_{mod}", "trunk", "classifier"}
        assert f"adapter_{other}" not in grads
        assert any(np.any(g) for g in grads["trunk"])


def test_y_adapter_does_not_affect_x_predictions(rng):
    model = build_classifier_net(4, 4, 8, 3, 0)
    x = rng.standard_normal((6, 4))
    before = model.forward("X", x)[0]
    for p in model.adapters["Y"].params():
        p[...] = rng.standard_normal(p.shape)
    assert np.array_equal(before, model.forward("X", x)[0])


@pytest.mark.parametrize("window", [1, 3])
def test_shared_net_gradients_match_finite_differences(window, rng):
    if window == 1:
        model = build_classifier_net(3, 5, 6, 4, 1, trunk_activation="relu")
        x, y = rng.standard_normal((7, 5)), rng.integers(0, 4, 7)
        mod, loss_fn = "Y", cross_entropy_loss
    else:
        model = build_ssl_net({"X": 3, "Y": 2}, 4, window, 1)
        x = rng.standard_normal((3, 5, 3))
        y, mod, loss_fn = x, "X", next_step_mse
    names = sorted(model.groups())
    params = [p for n in names for p in model.groups()[n].params()]

    def lg():
        out, caches = model.forward(mod, x)
        loss, g = loss_fn(out, y)
        grads = model.backward(mod, caches, g)
        flat = []
        for n in names:
            gl = grads.get(n)
            flat += gl if gl is not None else [np.zeros_like(p) for p in model.groups()[n].params()]
        return loss, flat

    assert gradient_check(lg, params, 200, rng) <= 1e-5


def test_frozen_y_adapter_stays_put():
    task = _small_task()
    model = build_classifier_net(4, 4, 8, 4, 0)
    before = [p.copy() for p in model.adapters["Y"].params()]
    train_supervised(model, task.train_x, task.train_y,
                     TrainConfig(epochs=2, batch_size=4, freeze_adapter_y=True, lr=0.01))
    assert all(np.array_equal(a, b) for a, b in zip(before, model.adapters["Y"].params()))


def test_curriculum_delays_auxiliary_batches():
    task = _small_task()
    model = build_classifier_net(4, 4, 8, 4, 0)
    rep = train_supervised(model, task.train_x, task.train_y,
                           TrainConfig(epochs=4, batch_size=4, curriculum_step=2))
    per_epoch = int(np.ceil(12 / 4))
    assert rep.schedule[:2 * per_epoch] == [0] * (2 * per_epoch)
    assert all(k == 1 for k in rep.schedule[2 * per_epoch:])
    assert np.isnan(rep.epoch_losses["Y"][0]) and not np.isnan(rep.epoch_losses["Y"][-1])


def test_report_shape_and_determinism():
    task = _small_task()
    cfg = TrainConfig(epochs=3, batch_size=4, seed=11, lr=0.01)
    reps = []
    for _ in range(2):
        m = build_classifier_net(4, 4, 8, 4, 11)
        reps.append(train_supervised(m, task.train_x, task.train_y, cfg, task.test_x))
    assert reps[0].parameter_digest == reps[1].parameter_digest
    assert len(reps[0].epoch_losses["X"]) == cfg.epochs
    assert all(np.isfinite(v) for v in reps[0].metrics.values())


def test_label_space_mismatch_rejected():
    task = _small_task()
    ey, ly = task.train_y
    keep = ly != 3
    with pytest.raises(InvalidInput):
        train_supervised(build_classifier_net(4, 4, 8, 4, 0), task.train_x, (ey[keep], ly[keep]),
                         TrainConfig(epochs=1))


def test_float_labels_rejected():
    task = _small_task()
    with pytest.raises(InvalidInput):
        train_supervised(build_classifier_net(4, 4, 8, 4, 0), (task.train_x[0], task.train_x[1] * 1.0), None,
                         TrainConfig(epochs=1))


# --- head initialization ---------------------------------------------------------

def test_class_mean_init_one_sample_per_class():
    E = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    W, b = init_head_from_class_means(E, np.array([2, 0, 1]))
    assert W.tolist() == [[3.0, 4.0], [5.0, 6.0], [1.0, 2.0]]
    assert b.tolist() == [0.0, 0.0, 0.0]


def test_class_mean_init_identical_samples():
    E = np.array([[1.0, -1.0], [1.0, -1.0], [2.0, 0.5], [2.0, 0.5]])
    W, _ = init_head_from_class_means(E, np.array([0, 0, 1, 1]))
    assert W.tolist() == [[1.0, -1.0], [2.0, 0.5]]


@given(st.integers(0, 1000))
def test_class_mean_init_matches_arithmetic_mean(seed):
    rng = np.random.default_rng(seed)
    labels = np.concatenate([np.arange(4), rng.integers(0, 4, 20)])
    E = rng.standard_normal((labels.size, 3))
    W, _ = init_head_from_class_means(E, labels)
    for c in range(4):
        rows = [E[i] for i in range(labels.size) if labels[i] == c]
        assert np.allclose(W[c], sum(rows) / len(rows), atol=1e-12)


def test_class_mean_init_empty_class():
    with pytest.raises(InvalidInput):
        init_head_from_class_means(np.zeros((2, 2)), np.array([0, 2]))


def test_class_mean_head_applied_before_training():
    task = _small_task()
    model = build_classifier_net(4, 4, 8, 4, 0)
    expected, _ = init_head_from_class_means(model.representation("Y", task.train_y[0]), task.train_y[1], 4)
    train_supervised(model, task.train_x, task.train_y,
                     TrainConfig(epochs=0, head_init="ClassMeanAuxiliary"))
    assert np.array_equal(model.classifier.layers[0].W, expected.T)


def test_zero_head_init():
    task = _small_task()
    model = build_classifier_net(4, 4, 8, 4, 0)
    train_supervised(model, task.train_x, None, TrainConfig(epochs=0, head_init="Zero"))
    assert not any(p.any() for p in model.classifier.params())


# --- synthetic task generator ------------------------------------------------------

@pytest.mark.parametrize("aux", AUX_KINDS)
def test_classification_task_shapes(aux):
    t = make_classification_task(1, n_classes=5, dim_x=6, dim_y=7, shots_x=2, n_y_per_class=3,
                                 n_test_per_class=4, aux=aux)
    assert t.train_x[0].shape == (10, 6) and t.train_y[0].shape == (15, 7) and t.test_x[0].shape == (20, 6)
    assert sorted(np.bincount(t.train_y[1]).tolist()) == [3] * 5


def test_shuffled_aux_keeps_features_and_label_multiset():
    rel, shuf = _small_task(2, "related"), _small_task(2, "shuffled")
    assert np.array_equal(rel.train_y[0], shuf.train_y[0])
    assert np.array_equal(np.sort(rel.train_y[1]), np.sort(shuf.train_y[1]))
    assert not np.array_equal(rel.train_y[1], shuf.train_y[1])
    assert np.array_equal(rel.train_x[0], shuf.train_x[0])


def test_unknown_aux_kind():
    with pytest.raises(InvalidInput):
        make_classification_task(0, aux="noise")


# --- self-supervised ----------------------------------------------------------------

def test_next_step_mse_by_hand():
    pred = np.array([[[1.0], [2.0], [9.0]]])
    seq = np.array([[[0.0], [1.0], [4.0]]])
    loss, g = next_step_mse(pred, seq)
    # pairs (pred_0, seq_1) = (1, 1) and (pred_1, seq_2) = (2, 4)
    assert loss == 2.0
    assert g.ravel().tolist() == [0.0, -2.0, 0.0]


def test_constant_sequences_are_learned():
    seq = np.ones((16, 5, 2))
    model = build_ssl_net({"X": 2}, 6, 2, 0)
    rep = train_ssl_shared_trunk(model, seq, None, TrainConfig(epochs=200, batch_size=8, lr=0.01))
    assert rep.metrics["final_next_step_mse_x"] < 1e-3


def test_causal_window_ignores_future(rng):
    model = build_ssl_net({"X": 3}, 4, 3, 0)
    seq = rng.standard_normal((2, 6, 3))
    out = model.forward("X", seq)[0]
    changed = seq.copy()
    changed[:, 4:] += 10.0
    out2 = model.forward("X", changed)[0]
    assert np.array_equal(out[:, :4], out2[:, :4])
    assert not np.array_equal(out[:, 4:], out2[:, 4:])


def test_window_three_step_loss_unrolled_by_hand(rng):
    model = build_ssl_net({"X": 2}, 3, 2, 4)
    seq = rng.standard_normal((1, 3, 2))
    a, t, d = model.adapters["X"], model.trunk, model.decoders["X"]
    z = [a(seq[0, i:i + 1]) for i in range(3)]
    zero = np.zeros_like(z[0])
    preds = [d(t(np.concatenate(w, axis=1))) for w in ((zero, z[0]), (z[0], z[1]))]
    hand = np.mean([(preds[0] - seq[0, 1]) ** 2, (preds[1] - seq[0, 2]) ** 2])
    loss, _ = next_step_mse(model.forward("X", seq)[0], seq)
    assert loss == pytest.approx(float(hand), rel=1e-13)


def test_ssl_rejects_short_sequences():
    with pytest.raises(InvalidInput):
        train_ssl_shared_trunk(build_ssl_net({"X": 2}, 3, 2, 0), np.zeros((3, 1, 2)), None, TrainConfig(epochs=1))


def test_ssl_lambda_zero_reduction():
    task = make_sequence_task(0, n_x=8, n_y=16, n_test=4)
    cfg = TrainConfig(lam=0.0, epochs=3, batch_size=4)
    joint = build_ssl_net({"X": 32, "Y": 32}, 6, 4, 0)
    uni = build_ssl_net({"X": 32}, 6, 4, 0)
    train_ssl_shared_trunk(joint, task["train_x"][0], task["train_y"][0], cfg)
    train_ssl_shared_trunk(uni, task["train_x"][0], None, cfg)
    assert _same_groups(joint, uni, ["adapter_X", "trunk", "decoder_X"])


def test_representation_is_mean_pooled(rng):
    model = build_ssl_net({"X": 2}, 3, 2, 0)
    seq = rng.standard_normal((4, 5, 2))
    r = model.representation("X", seq)
    assert r.shape == (4, 3)
    per_pos = model.forward("X", seq)[1][4].reshape(4, 5, 3)
    assert np.allclose(r, per_pos.mean(axis=1))


# --- autoencoder ------------------------------------------------------------------

def test_autoencoder_architecture():
    model = build_autoencoder(50, AutoencoderConfig(), 0)
    dims = [l.W.shape for l in model.trunk.layers]
    assert dims == [(128, 128), (128, 10), (10, 128), (128, 128)]
    assert model.adapters["X"].layers[0].W.shape == (50, 128)
    assert model.decoders["Y"].layers[0].W.shape == (128, 50)
    assert [l.activation for l in model.trunk.layers] == ["relu", "identity", "identity", "identity"]
    relu = build_autoencoder(50, AutoencoderConfig(decoder_relu=True), 0)
    assert relu.trunk.layers[2].activation == "relu"


def test_autoencoder_gradients(rng):
    cfg = AutoencoderConfig(common_dim=6, hidden_dim=5, latent_dim=2)
    model = build_autoencoder(4, cfg, 0)
    x = rng.standard_normal((5, 4))
    names = sorted(model.groups())
    params = [p for n in names for p in model.groups()[n].params()]

    def lg():
        out, caches = model.forward("Y", x)
        loss, g = mse_loss(out, x)
        grads = model.backward("Y", caches, g)
        return loss, [g for n in names for g in (grads[n] if n in grads else
                                                 [np.zeros_like(p) for p in model.groups()[n].params()])]

    assert gradient_check(lg, params, 150, rng) <= 1e-5


def test_small_autoencoder_comparison_runs_deterministically():
    from uml_lab.train import train_shared_autoencoder
    cfg = AutoencoderConfig(epochs=2, batch_size=64, n_total=200, n_val=50, common_dim=16, hidden_dim=16)
    a, b = train_shared_autoencoder(cfg, 1), train_shared_autoencoder(cfg, 1)
    assert a.joint.parameter_digest == b.joint.parameter_digest
    assert a.unimodal.metrics["n_x"] == 200 and a.joint.metrics["n_x"] == 100 and a.joint.metrics["n_y"] == 100
    assert a.improvement == a.unimodal.metrics["val_mse_x"] - a.joint.metrics["val_mse_x"]

"""Fusion network: shapes, forward oracle, gradients, training loop, checkpoints."""

import numpy as np
import pytest

from tailfocal import (
    VARIANTS,
    ConfigError,
    LossSpec,
    ModelConfig,
    OptimizerConfig,
    TrainingError,
    backward,
    batch_loss,
    forward,
    init_params,
    load_model,
    param_shapes,
    predict_proba,
    save_model,
    train,
)
from tailfocal.fusion import _maxpool, _maxpool_back

TINY = dict(
    n_classes=3,
    embed_dims=(4, 4, 4, 4),
    hidden_dim=3,
    k_stages=1,
    classifier_dims=(5, 4, 3, 3),
    pool_window=2,
)


def _rand_feats(rng, config, n):
    return {m: rng.normal(size=(n, config.embed_dim(m))) for m in config.modalities}


def _naive_forward(config, params, fa, fb):
    """Test-local re-derivation of the forward pass, written longhand."""
    act = (lambda z: np.maximum(z, 0.0)) if config.activation == "relu" else np.tanh
    enhanced = {"g": "s", "t": "e"}

    def encode(f):
        pooled = []
        for m in config.modalities:
            x = f[m]
            b, d = x.shape
            pooled.append(x.reshape(b, d // config.pool_window, config.pool_window).max(axis=2))
        cur = dict(f)
        for j in range(1, config.k_stages + 1):
            new = {}
            for m in config.modalities:
                inp = cur[m]
                partner = enhanced.get(m)
                if partner is not None and partner in config.modalities:
                    inp = np.concatenate([cur[m], cur[partner]], axis=1)
                new[m] = act(inp @ params[f"{m}{j}_W"].T + params[f"{m}{j}_b"])
            cur = new
        return np.concatenate([cur[m] for m in config.modalities] + pooled, axis=1)

    x = np.concatenate([encode(fa), encode(fb)], axis=1)
    for layer in range(4):
        z = x @ params[f"cls{layer}_W"].T + params[f"cls{layer}_b"]
        x = act(z) if layer < 3 else z
    return x


class TestModelConfig:
    def test_pool_window_must_divide_widths(self):
        with pytest.raises(ConfigError):
            ModelConfig(n_classes=2, embed_dims=(6, 4, 4, 4), pool_window=4)

    def test_classifier_must_end_at_n_classes(self):
        with pytest.raises(ConfigError):
            ModelConfig(n_classes=3, classifier_dims=(8, 8, 8, 4), embed_dims=(4, 4, 4, 4))

    def test_modalities_normalize_to_canonical_order(self):
        config = ModelConfig(n_classes=2, embed_dims=(4, 4, 4, 4), modalities=("e", "t"))
        assert config.modalities == ("t", "e")

    def test_rejects_unknown_modality(self):
        with pytest.raises(ConfigError):
            ModelConfig(n_classes=2, embed_dims=(4, 4, 4, 4), modalities=("g", "x"))

    def test_rejects_zero_stages(self):
        with pytest.raises(ConfigError):
            ModelConfig(n_classes=2, embed_dims=(4, 4, 4, 4), k_stages=0)

    def test_default_classifier_ends_at_n_classes(self):
        config = ModelConfig(n_classes=7, embed_dims=(4, 4, 4, 4))
        assert config.classifier_dims == (256, 256, 128, 7)

    def test_variant_table_covers_expected_subsets(self):
        assert set(VARIANTS) == {"G", "S", "T", "E", "GS", "TE", "GSTE"}
        assert VARIANTS["GS"] == ("g", "s")
        assert VARIANTS["GSTE"] == ("g", "s", "t", "e")


class TestParamShapes:
    def test_enhanced_streams_see_partner_width(self):
        config = ModelConfig(
            n_classes=3, embed_dims=(8, 8, 8, 8), hidden_dim=4, k_stages=2,
            classifier_dims=(6, 6, 6, 3), pool_window=4,
        )
        shapes = param_shapes(config)
        assert shapes["g1_W"] == (4, 16)  # g concatenated with s
        assert shapes["s1_W"] == (4, 8)
        assert shapes["t1_W"] == (4, 16)  # t concatenated with e
        assert shapes["e1_W"] == (4, 8)
        assert shapes["g2_W"] == (4, 8)  # hidden + hidden
        assert shapes["s2_W"] == (4, 4)

    def test_classifier_input_is_twice_fused_width(self):
        config = ModelConfig(**TINY)
        shapes = param_shapes(config)
        assert config.fused_width() == 4 * 3 + 4 * 2
        assert shapes["cls0_W"] == (5, 2 * config.fused_width())
        assert shapes["cls3_W"] == (3, 3)

    def test_dropping_partner_shrinks_enhanced_input(self):
        solo = ModelConfig(
            n_classes=2, embed_dims=(8, 8, 8, 8), hidden_dim=4, k_stages=1,
            classifier_dims=(4, 4, 4, 2), pool_window=4, modalities=("g",),
        )
        assert param_shapes(solo)["g1_W"] == (4, 8)

    def test_init_matches_declared_shapes(self):
        config = ModelConfig(**TINY)
        params = init_params(config, seed=0)
        for name, shape in param_shapes(config).items():
            assert params[name].shape == shape

    def test_init_deterministic(self):
        config = ModelConfig(**TINY)
        a = init_params(config, seed=3)
        b = init_params(config, seed=3)
        assert all(np.array_equal(a[k], b[k]) for k in a)


class TestMaxPool:
    def test_values_and_indices(self):
        x = np.array([[1.0, 3.0, 2.0, 0.0]])
        pooled, idx = _maxpool(x, 2)
        np.testing.assert_array_equal(pooled, [[3.0, 2.0]])
        np.testing.assert_array_equal(idx, [[1, 0]])

    def test_gradient_routes_to_argmax_only(self):
        x = np.array([[1.0, 3.0, 2.0, 0.0]])
        _, idx = _maxpool(x, 2)
        back = _maxpool_back(np.array([[5.0, 7.0]]), idx, 4, 2)
        np.testing.assert_array_equal(back, [[0.0, 5.0, 7.0, 0.0]])

    def test_tie_routes_to_first(self):
        x = np.array([[2.0, 2.0]])
        _, idx = _maxpool(x, 2)
        assert idx[0, 0] == 0


class TestForward:
    def test_matches_naive_reimplementation(self):
        rng = np.random.default_rng(51)
        for variant in ("GSTE", "GS", "TE", "S"):
            config = ModelConfig(
                n_classes=3, embed_dims=(4, 6, 4, 6), hidden_dim=3, k_stages=2,
                classifier_dims=(5, 4, 3, 3), pool_window=2,
                modalities=VARIANTS[variant],
            )
            params = init_params(config, seed=1)
            fa = _rand_feats(rng, config, 5)
            fb = _rand_feats(rng, config, 5)
            logits, _ = forward(config, params, fa, fb)
            assert np.array_equal(logits, _naive_forward(config, params, fa, fb))

    def test_batch_equals_stacked_singles(self):
        rng = np.random.default_rng(52)
        config = ModelConfig(**TINY)
        params = init_params(config, seed=2)
        fa = _rand_feats(rng, config, 6)
        fb = _rand_feats(rng, config, 6)
        batched, _ = forward(config, params, fa, fb)
        for i in range(6):
            row, _ = forward(
                config, params,
                {m: fa[m][i : i + 1] for m in config.modalities},
                {m: fb[m][i : i + 1] for m in config.modalities},
            )
            np.testing.assert_allclose(batched[i], row[0], rtol=1e-12, atol=1e-14)

    def test_swapping_pair_changes_logits(self):
        rng = np.random.default_rng(53)
        config = ModelConfig(**TINY)
        params = init_params(config, seed=3)
        fa = _rand_feats(rng, config, 4)
        fb = _rand_feats(rng, config, 4)
        ab, _ = forward(config, params, fa, fb)
        ba, _ = forward(config, params, fb, fa)
        assert not np.allclose(ab, ba)

    def test_rejects_missing_modality(self):
        config = ModelConfig(**TINY)
        params = init_params(config, seed=0)
        feats = _rand_feats(np.random.default_rng(0), config, 2)
        broken = {m: feats[m] for m in ("g", "s", "t")}
        with pytest.raises(ConfigError):
            forward(config, params, broken, feats)

    def test_rejects_wrong_width(self):
        config = ModelConfig(**TINY)
        params = init_params(config, seed=0)
        feats = _rand_feats(np.random.default_rng(0), config, 2)
        bad = dict(feats)
        bad["g"] = np.zeros((2, 5))
        with pytest.raises(ConfigError):
            forward(config, params, bad, feats)

    def test_rejects_mismatched_batches(self):
        config = ModelConfig(**TINY)
        params = init_params(config, seed=0)
        rng = np.random.default_rng(0)
        with pytest.raises(ConfigError):
            forward(config, params, _rand_feats(rng, config, 2), _rand_feats(rng, config, 3))

    def test_predict_proba_rows_are_distributions(self):
        rng = np.random.default_rng(54)
        config = ModelConfig(**TINY)
        params = init_params(config, seed=4)
        fa = _rand_feats(rng, config, 10)
        fb = _rand_feats(rng, config, 10)
        probs = predict_proba(config, params, fa, fb, batch_size=3)
        assert probs.shape == (10, 3)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
        full = predict_proba(config, params, fa, fb)
        np.testing.assert_allclose(probs, full, rtol=1e-12)


class TestBackward:
    def _fd_param_check(self, activation, seed, rtol=1e-4):
        rng = np.random.default_rng(seed)
        config = ModelConfig(activation=activation, **TINY)
        params = init_params(config, seed=seed)
        fa = _rand_feats(rng, config, 3)
        fb = _rand_feats(rng, config, 3)
        labels = rng.integers(0, 3, size=3)
        spec = LossSpec(kind="ce")

        def loss_value():
            logits, _ = forward(config, params, fa, fb)
            return batch_loss(spec, logits, labels)[0]

        logits, cache = forward(config, params, fa, fb)
        _, grad_logits = batch_loss(spec, logits, labels)
        grads = backward(config, params, cache, grad_logits)["params"]

        h = 1e-6
        for name in sorted(params):
            flat = params[name].reshape(-1)
            fd = np.zeros_like(flat)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                up = loss_value()
                flat[i] = orig - h
                dn = loss_value()
                flat[i] = orig
                fd[i] = (up - dn) / (2.0 * h)
            an = grads[name].reshape(-1)
            scale = np.maximum(np.abs(an), np.abs(fd))
            assert np.all(np.abs(an - fd) <= np.maximum(1e-7, rtol * scale)), name

    def test_param_gradients_match_fd_tanh(self):
        for seed in (0, 1):
            self._fd_param_check("tanh", seed)

    def test_param_gradients_match_fd_relu(self):
        for seed in (2, 3):
            self._fd_param_check("relu", seed)

    def test_input_gradients_match_fd(self):
        rng = np.random.default_rng(60)
        config = ModelConfig(activation="tanh", **TINY)
        params = init_params(config, seed=6)
        fa = _rand_feats(rng, config, 2)
        fb = _rand_feats(rng, config, 2)
        labels = rng.integers(0, 3, size=2)
        spec = LossSpec(kind="ce")

        logits, cache = forward(config, params, fa, fb)
        _, grad_logits = batch_loss(spec, logits, labels)
        din = backward(config, params, cache, grad_logits)["inputs"]

        h = 1e-6
        for side, feats in (("a", fa), ("b", fb)):
            for m in config.modalities:
                flat = feats[m].reshape(-1)
                fd = np.zeros_like(flat)
                for i in range(flat.size):
                    orig = flat[i]
                    flat[i] = orig + h
                    up = batch_loss(spec, forward(config, params, fa, fb)[0], labels)[0]
                    flat[i] = orig - h
                    dn = batch_loss(spec, forward(config, params, fa, fb)[0], labels)[0]
                    flat[i] = orig
                    fd[i] = (up - dn) / (2.0 * h)
                an = din[side][m].reshape(-1)
                scale = np.maximum(np.abs(an), np.abs(fd))
                assert np.all(np.abs(an - fd) <= np.maximum(1e-7, 1e-4 * scale))


class TestTraining:
    def _toy(self, rng, config, n):
        # class-dependent constant vectors: linearly separable by construction
        protos = {m: rng.normal(size=(config.n_classes, config.embed_dim(m))) for m in config.modalities}
        labels = rng.integers(0, config.n_classes, size=n)
        fa = {m: protos[m][labels] for m in config.modalities}
        fb = {m: protos[m][(labels + 1) % config.n_classes] for m in config.modalities}
        return fa, fb, labels

    def test_zero_learning_rate_is_a_no_op(self):
        rng = np.random.default_rng(70)
        config = ModelConfig(**TINY)
        params = init_params(config, seed=7)
        before = {k: v.copy() for k, v in params.items()}
        data = self._toy(rng, config, 24)
        opt = OptimizerConfig(lr=0.0, batch_size=8, epochs=3, seed=1, patience=None)
        trace = train(config, params, data, LossSpec(kind="ce"), opt)
        assert all(np.array_equal(params[k], before[k]) for k in params)
        assert len(trace) == 3
        assert trace[0].train_loss == pytest.approx(trace[2].train_loss, rel=1e-12)

    def test_zero_epochs_returns_empty_trace(self):
        rng = np.random.default_rng(71)
        config = ModelConfig(**TINY)
        params = init_params(config, seed=8)
        data = self._toy(rng, config, 12)
        opt = OptimizerConfig(epochs=0, seed=1)
        assert train(config, params, data, LossSpec(kind="ce"), opt) == []

    def test_loss_decreases_on_separable_toy(self):
        rng = np.random.default_rng(72)
        config = ModelConfig(**TINY)
        params = init_params(config, seed=9)
        data = self._toy(rng, config, 48)
        opt = OptimizerConfig(lr=2e-2, batch_size=16, epochs=60, seed=2, patience=None)
        trace = train(config, params, data, LossSpec(kind="ce"), opt)
        assert trace[-1].train_loss < 0.5 * trace[0].train_loss

    def test_early_stopping_cuts_the_trace(self):
        rng = np.random.default_rng(73)
        config = ModelConfig(**TINY)
        params = init_params(config, seed=10)
        data = self._toy(rng, config, 32)
        opt = OptimizerConfig(lr=1e-2, batch_size=16, epochs=60, seed=3, patience=3)
        trace = train(config, params, data, LossSpec(kind="ce"), opt, val_data=data)
        assert len(trace) < 60
        assert trace[-1].val_macro_f1 is not None

    def test_training_determinism(self):
        rng = np.random.default_rng(74)
        config = ModelConfig(**TINY)
        data = self._toy(rng, config, 24)
        opt = OptimizerConfig(lr=1e-3, batch_size=8, epochs=4, seed=5, patience=None)
        p1 = init_params(config, seed=11)
        p2 = init_params(config, seed=11)
        t1 = train(config, p1, data, LossSpec(kind="ce"), opt)
        t2 = train(config, p2, data, LossSpec(kind="ce"), opt)
        assert all(np.array_equal(p1[k], p2[k]) for k in p1)
        assert [s.train_loss for s in t1] == [s.train_loss for s in t2]

    def test_non_finite_forward_raises_training_error(self):
        rng = np.random.default_rng(75)
        config = ModelConfig(**TINY)
        params = init_params(config, seed=12)
        params["g1_W"][:] = 1e308
        data = self._toy(rng, config, 8)
        opt = OptimizerConfig(lr=1e-3, batch_size=8, epochs=1, seed=0, patience=None)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(TrainingError, match="epoch 0"):
                train(config, params, data, LossSpec(kind="ce"), opt)


class TestCheckpoints:
    def test_round_trip(self, tmp_path):
        config = ModelConfig(activation="tanh", **TINY)
        params = init_params(config, seed=13)
        path = tmp_path / "model.npz"
        save_model(path, config, params)
        loaded_config, loaded_params = load_model(path)
        assert loaded_config == config
        assert sorted(loaded_params) == sorted(params)
        assert all(np.array_equal(loaded_params[k], params[k]) for k in params)

    def test_round_trip_preserves_predictions(self, tmp_path):
        rng = np.random.default_rng(76)
        config = ModelConfig(**TINY)
        params = init_params(config, seed=14)
        fa = _rand_feats(rng, config, 5)
        fb = _rand_feats(rng, config, 5)
        path = tmp_path / "model.npz"
        save_model(path, config, params)
        config2, params2 = load_model(path)
        a, _ = forward(config, params, fa, fb)
        b, _ = forward(config2, params2, fa, fb)
        assert np.array_equal(a, b)

    def test_missing_parameter_rejected(self, tmp_path):
        config = ModelConfig(**TINY)
        params = init_params(config, seed=15)
        dropped = {k: v for k, v in params.items() if k != "s1_b"}
        path = tmp_path / "model.npz"
        save_model(path, config, dropped)
        with pytest.raises(ConfigError, match="s1_b"):
            load_model(path)

    def test_wrong_shape_rejected(self, tmp_path):
        config = ModelConfig(**TINY)
        params = init_params(config, seed=16)
        params["g1_W"] = np.zeros((2, 2))
        path = tmp_path / "model.npz"
        save_model(path, config, params)
        with pytest.raises(ConfigError, match="g1_W"):
            load_model(path)

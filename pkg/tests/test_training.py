import math

import numpy as np
import pytest

from rvhate.data import EmbeddingMatrix
from rvhate.errors import (
    BadMagic,
    MissingAnchorClass,
    NonPositiveTemperature,
    TruncatedFile,
)
from rvhate.evaluation import macro_f1
from rvhate.tagging import Gazetteer
from rvhate.training import (
    MODULE_IDS,
    MODULE_MECHANISMS,
    HardNegativeQueue,
    Mechanisms,
    TrainConfig,
    compute_logit_panel,
    contrastive_loss,
    forward,
    forward_batch,
    init_head,
    load_head,
    loss_and_grads,
    predict,
    prepare_module_inputs,
    save_head,
    select_hard_negatives,
    train_module,
)

from conftest import separable_embeddings


def unit_rows(rng, shape):
    rows = rng.normal(size=shape)
    return rows / np.linalg.norm(rows, axis=-1, keepdims=True)


def brute_force_hard_negatives(entries, z, y, hard_k, rho):
    """Ranking oracle: eligibility filter, cosine sort, ties by queue index."""
    scored = []
    for i, (vec, lab, conf) in enumerate(entries):
        if not (lab != y or (lab == 0 and conf >= rho)):
            continue
        denom = np.linalg.norm(vec) * np.linalg.norm(z)
        sim = float(np.dot(vec, z) / denom) if denom > 0 else -np.inf
        scored.append((-sim, i))
    scored.sort()
    return [i for _, i in scored[:hard_k]]


class TestForward:
    def test_zero_parameters(self):
        head = init_head("M0", dim=4, hidden=3, seed=0)
        head.w_proj[:] = 0.0
        head.w_cls[:] = 0.0
        head.b_cls[:] = np.array([0.3, -0.2])
        projected, logits = forward(head, [1.0, 2.0, 3.0, 4.0])
        np.testing.assert_array_equal(projected, np.zeros(3))
        np.testing.assert_allclose(logits, [0.3, -0.2])

    def test_deterministic_across_runs(self):
        a = init_head("M0", dim=6, hidden=4, seed=42)
        b = init_head("M0", dim=6, hidden=4, seed=42)
        x = np.arange(6, dtype=np.float64)
        pa, la = forward(a, x)
        pb, lb = forward(b, x)
        np.testing.assert_array_equal(pa, pb)
        np.testing.assert_array_equal(la, lb)

    def test_init_independent_of_module_id(self):
        a = init_head("M0", dim=6, hidden=4, seed=1)
        b = init_head("M3", dim=6, hidden=4, seed=1)
        np.testing.assert_array_equal(a.w_proj, b.w_proj)
        np.testing.assert_array_equal(a.w_cls, b.w_cls)

    def test_projected_unit_norm(self):
        rng = np.random.default_rng(0)
        head = init_head("M0", dim=8, hidden=5, seed=3)
        _, projected, _ = forward_batch(head, rng.normal(size=(10, 8)))
        np.testing.assert_allclose(np.linalg.norm(projected, axis=1), 1.0, atol=1e-12)

    def test_logit_jacobian_matches_finite_differences(self):
        # architecture: pre = tanh(Wp x + bp); logits = Wc pre + bc
        rng = np.random.default_rng(1)
        head = init_head("M0", dim=5, hidden=4, seed=7)
        x = rng.normal(size=5)
        step = 1e-4

        def logits_of():
            return forward(head, x)[1]

        pre = np.tanh(head.w_proj @ x + head.b_proj)
        dpre = 1.0 - pre * pre
        for j in range(2):
            analytic = {
                "w_cls": np.zeros_like(head.w_cls),
                "b_cls": np.zeros_like(head.b_cls),
                "w_proj": np.outer(head.w_cls[j] * dpre, x),
                "b_proj": head.w_cls[j] * dpre,
            }
            analytic["w_cls"][j] = pre
            analytic["b_cls"][j] = 1.0
            for name, param in head.params().items():
                flat = param.ravel()
                aflat = analytic[name].ravel()
                for idx in range(flat.size):
                    orig = flat[idx]
                    flat[idx] = orig + step
                    up = logits_of()[j]
                    flat[idx] = orig - step
                    down = logits_of()[j]
                    flat[idx] = orig
                    fd = (up - down) / (2 * step)
                    assert fd == pytest.approx(aflat[idx], rel=1e-4, abs=1e-8)


class TestContrastiveLoss:
    def test_closed_form_case(self):
        # one anchor per class; z equals its own-label anchor, orthogonal to
        # the other; independently derived value: log(1 + exp(-1/tau))
        z = np.array([[1.0, 0.0]])
        anchors = np.array([[1.0, 0.0], [0.0, 1.0]])
        loss = contrastive_loss(z, [1], anchors, [1, 0], tau=0.3)
        assert loss == pytest.approx(math.log1p(math.exp(-1.0 / 0.3)), abs=1e-6)

    def test_zero_when_candidates_equal_positives(self):
        # single anchor, same label, no negatives: numerator == denominator
        z = np.array([[0.6, 0.8]])
        loss = contrastive_loss(z, [1], np.array([[0.1, 0.7]]), [1], tau=0.3)
        assert loss == 0.0

    def test_nonnegative_on_random_instances(self):
        rng = np.random.default_rng(2)
        for _ in range(1000):
            b = int(rng.integers(1, 5))
            a = int(rng.integers(2, 6))
            h = int(rng.integers(2, 8))
            z = unit_rows(rng, (b, h))
            zl = rng.integers(0, 2, size=b)
            anchors = unit_rows(rng, (a, h))
            alab = np.concatenate([[0, 1], rng.integers(0, 2, size=a - 2)])
            tau = float(rng.uniform(0.05, 2.0))
            negatives = None
            if rng.random() < 0.5:
                negatives = [unit_rows(rng, (int(rng.integers(0, 4)), h)) for _ in range(b)]
            assert contrastive_loss(z, zl, anchors, alab, tau, negatives) >= 0.0

    def test_sharpening_in_tau(self):
        # when a sample's positives are its nearest candidates, lowering tau
        # cannot increase its loss
        z = np.array([[1.0, 0.0]])
        anchors = np.array([[0.98, np.sqrt(1 - 0.98**2)], [0.0, 1.0]])
        taus = [1.0, 0.7, 0.5, 0.3, 0.1]
        losses = [contrastive_loss(z, [1], anchors, [1, 0], t) for t in taus]
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    def test_temperature_validation(self):
        z = np.array([[1.0, 0.0]])
        anchors = np.array([[1.0, 0.0], [0.0, 1.0]])
        with pytest.raises(NonPositiveTemperature):
            contrastive_loss(z, [1], anchors, [1, 0], tau=0.0)

    def test_missing_anchor_class(self):
        # a batch sample whose label has no anchor cannot form positives
        z = np.array([[1.0, 0.0]])
        with pytest.raises(MissingAnchorClass):
            contrastive_loss(z, [0], np.array([[1.0, 0.0]]), [1], tau=0.3)


class TestLossGradients:
    def test_all_parameter_gradients_match_finite_differences(self):
        rng = np.random.default_rng(3)
        head = init_head("M0", dim=7, hidden=5, tau=0.3, lam=0.5, seed=4)
        X = unit_rows(rng, (6, 7))
        y = np.array([0, 1, 0, 1, 1, 0])
        anchors = unit_rows(rng, (4, 5))
        alab = np.array([0, 0, 1, 1])
        negatives = [unit_rows(rng, (2, 5)) for _ in range(6)]

        _, grads, _ = loss_and_grads(head, X, y, anchors, alab, negatives)

        def value():
            return loss_and_grads(head, X, y, anchors, alab, negatives)[0]

        step = 1e-4
        for name, param in head.params().items():
            flat = param.ravel()
            gflat = grads[name].ravel()
            for idx in range(flat.size):
                orig = flat[idx]
                flat[idx] = orig + step
                up = value()
                flat[idx] = orig - step
                down = value()
                flat[idx] = orig
                fd = (up - down) / (2 * step)
                denom = max(abs(fd), abs(gflat[idx]), 1e-6)
                assert abs(fd - gflat[idx]) / denom < 1e-4

    def test_lambda_endpoints(self):
        rng = np.random.default_rng(4)
        X = unit_rows(rng, (4, 6))
        y = np.array([0, 1, 0, 1])
        anchors = unit_rows(rng, (2, 3))
        alab = np.array([0, 1])

        ce_head = init_head("M0", dim=6, hidden=3, lam=0.0, seed=9)
        total, grads, parts = loss_and_grads(ce_head, X, y, None, None)
        assert parts["contrastive"] == 0.0
        assert total == parts["ce"]

        con_head = init_head("M0", dim=6, hidden=3, lam=1.0, seed=9)
        total, grads, parts = loss_and_grads(con_head, X, y, anchors, alab)
        assert parts["ce"] == 0.0
        assert total == parts["contrastive"]
        # classifier receives no gradient from the contrastive term
        np.testing.assert_array_equal(grads["w_cls"], 0.0)
        np.testing.assert_array_equal(grads["b_cls"], 0.0)


class TestHardNegativeQueue:
    def test_capacity_bound_and_fifo_eviction(self):
        queue = HardNegativeQueue(capacity=5)
        for i in range(8):
            queue.push(np.array([float(i), 0.0]), i % 2, 0.5)
            assert len(queue) <= 5
        vectors, labels, _ = queue.snapshot()
        # after capacity+3 pushes the first 3 entries are gone
        np.testing.assert_array_equal(vectors[:, 0], [3.0, 4.0, 5.0, 6.0, 7.0])

    def test_eligibility_label_filter(self):
        queue = HardNegativeQueue(capacity=8)
        for i, lab in enumerate([1, 1, 0]):
            queue.push(np.array([1.0, float(i)]), lab, 0.0)
        selected = select_hard_negatives(queue, np.array([1.0, 0.0]), 1, 4, 0.9)
        np.testing.assert_array_equal(selected.queue_indices, [2])

    def test_confident_false_positives_eligible_for_label_zero(self):
        queue = HardNegativeQueue(capacity=8)
        queue.push(np.array([1.0, 0.0]), 0, 0.95)  # confident false positive
        queue.push(np.array([1.0, 0.1]), 0, 0.10)  # not confident
        queue.push(np.array([0.5, 0.5]), 1, 0.50)  # other label
        selected = select_hard_negatives(queue, np.array([1.0, 0.0]), 0, 4, 0.9)
        assert set(selected.queue_indices.tolist()) == {0, 2}

    def test_empty_queue(self):
        queue = HardNegativeQueue(capacity=4)
        selected = select_hard_negatives(queue, np.array([1.0, 0.0]), 1, 4, 0.9)
        assert selected.vectors.shape == (0, 2)

    def test_twenty_entry_exhaustive_top4(self):
        rng = np.random.default_rng(5)
        queue = HardNegativeQueue(capacity=32)
        entries = []
        for _ in range(20):
            vec = unit_rows(rng, (3,))
            lab = int(rng.integers(0, 2))
            conf = float(rng.random())
            entries.append((vec, lab, conf))
            queue.push(vec, lab, conf)
        z = unit_rows(rng, (3,))
        selected = select_hard_negatives(queue, z, 1, 4, 0.9)
        expected = brute_force_hard_negatives(entries, z, 1, 4, 0.9)
        np.testing.assert_array_equal(selected.queue_indices, expected)

    def test_500_randomized_trials_match_ranking_oracle(self):
        rng = np.random.default_rng(6)
        for _ in range(500):
            size = int(rng.integers(0, 24))
            queue = HardNegativeQueue(capacity=64)
            entries = []
            for _ in range(size):
                vec = unit_rows(rng, (4,))
                lab = int(rng.integers(0, 2))
                conf = float(rng.random())
                entries.append((vec, lab, conf))
                queue.push(vec, lab, conf)
            z = unit_rows(rng, (4,))
            y = int(rng.integers(0, 2))
            hard_k = int(rng.integers(1, 6))
            rho = float(rng.uniform(0.5, 1.0))
            selected = select_hard_negatives(queue, z, y, hard_k, rho)
            expected = brute_force_hard_negatives(entries, z, y, hard_k, rho)
            np.testing.assert_array_equal(selected.queue_indices, expected)


class TestTrainModule:
    def test_lambda_zero_never_touches_contrastive(self, monkeypatch):
        import rvhate.training as training_module

        def boom(*args, **kwargs):
            raise AssertionError("contrastive path must not run at lam=0")

        monkeypatch.setattr(training_module, "contrastive_loss_grad", boom)
        monkeypatch.setattr(training_module, "build_cluster_model", boom)
        ds, emb = separable_embeddings(n=120)
        cfg = TrainConfig(epochs=2, batch_size=32, k_per_class=2, lam=0.0, seed=1)
        trained = train_module("M0", ds, emb, cfg)
        assert trained.best_valid_f1 > 0.9

    def test_bit_identical_runs(self):
        ds, emb = separable_embeddings(n=160)
        cfg = TrainConfig(epochs=3, batch_size=32, k_per_class=3, seed=5)
        a = train_module("M3", ds, emb, cfg)
        b = train_module("M3", ds, emb, cfg)
        for name in a.head.params():
            assert a.head.params()[name].tobytes() == b.head.params()[name].tobytes()
        assert a.report == b.report

    def test_mechanisms_off_reproduces_m0_exactly(self):
        ds, emb = separable_embeddings(n=160)
        cfg = TrainConfig(epochs=3, batch_size=32, k_per_class=3, seed=5)
        base = train_module("M0", ds, emb, cfg)
        for module_id in ("M2", "M3"):
            stripped = train_module(module_id, ds, emb, cfg, mechanisms=Mechanisms())
            for name in base.head.params():
                assert (
                    stripped.head.params()[name].tobytes() == base.head.params()[name].tobytes()
                )

    def test_every_module_separates_synthetic_set(self):
        ds, emb = separable_embeddings(n=400)
        labels = ds.labels()
        train_idx = ds.split_indices("train")
        X = emb.vectors.astype(np.float64)

        # independent oracle: a closed-form least-squares fit separates the set
        A = np.hstack([X[train_idx], np.ones((train_idx.size, 1))])
        target = 2.0 * labels[train_idx] - 1.0
        coeffs, *_ = np.linalg.lstsq(A, target, rcond=None)
        oracle_preds = (A @ coeffs > 0).astype(int)
        assert macro_f1(oracle_preds, labels[train_idx]) >= 0.99

        cfg = TrainConfig(epochs=6, batch_size=64, k_per_class=4, seed=13)
        for module_id in MODULE_IDS:
            trained = train_module(module_id, ds, emb, cfg)
            preds = predict(trained.head, X[train_idx])
            assert macro_f1(preds, labels[train_idx]) >= 0.99, module_id

    def test_best_epoch_selected(self):
        ds, emb = separable_embeddings(n=160)
        cfg = TrainConfig(epochs=4, batch_size=32, k_per_class=3, seed=2)
        trained = train_module("M0", ds, emb, cfg)
        best = max(row.valid_macro_f1 for row in trained.report)
        assert trained.best_valid_f1 == best
        assert trained.report[trained.best_epoch - 1].valid_macro_f1 == best

    def test_single_class_train_rejected(self):
        ds, emb = separable_embeddings(n=100)
        from rvhate.data import Dataset, LabeledExample

        flat = Dataset(
            ds.name,
            [
                LabeledExample(e.id, e.text, 0, e.split)
                for e in ds.examples
            ],
        )
        with pytest.raises(MissingAnchorClass):
            train_module("M0", flat, emb, TrainConfig(epochs=1, k_per_class=2))


class TestCheckpoints:
    def test_round_trip(self, tmp_path):
        head = init_head("M2", dim=6, hidden=4, tau=0.3, lam=0.75, seed=8)
        path = tmp_path / "head.rvhd"
        save_head(head, path)
        again = load_head(path)
        assert again.module_id == "M2"
        assert again.hidden_dim == 4 and again.input_dim == 6
        for name in head.params():
            np.testing.assert_allclose(
                again.params()[name], head.params()[name].astype(np.float32), atol=0
            )
        assert again.tau == pytest.approx(0.3, abs=1e-7)
        assert again.lam == pytest.approx(0.75, abs=1e-7)

    def test_file_size_from_format(self, tmp_path):
        dim, hidden = 6, 4
        head = init_head("M0", dim=dim, hidden=hidden, seed=0)
        path = tmp_path / "head.rvhd"
        save_head(head, path)
        expected = 17 + 4 * (hidden * dim + hidden + 2 * hidden + 2 + 2)
        assert path.stat().st_size == expected

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "head.rvhd"
        path.write_bytes(b"XXXX" + b"\x00" * 13)
        with pytest.raises(BadMagic):
            load_head(path)

    def test_truncated(self, tmp_path):
        head = init_head("M0", dim=6, hidden=4, seed=0)
        path = tmp_path / "head.rvhd"
        save_head(head, path)
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(TruncatedFile):
            load_head(path)

    def test_saved_then_loaded_head_predicts_identically(self, tmp_path):
        ds, emb = separable_embeddings(n=120)
        cfg = TrainConfig(epochs=2, batch_size=32, k_per_class=2, seed=3)
        trained = train_module("M0", ds, emb, cfg)
        path = tmp_path / "m0.rvhd"
        save_head(trained.head, path)
        again = load_head(path)
        X = emb.vectors.astype(np.float64)[:20]
        panel_a = compute_logit_panel([again], X)
        panel_b = compute_logit_panel([load_head(path)], X)
        np.testing.assert_array_equal(panel_a, panel_b)


class TestPrepareModuleInputs:
    @staticmethod
    def _dataset():
        from rvhate.data import Dataset, FeaturizerConfig, LabeledExample, featurize

        examples = [
            LabeledExample("h1", "china is targeted", 1, "train"),
            LabeledExample("h2", "no entities here", 1, "train"),
            LabeledExample("n1", "pleasant morning", 0, "train"),
            LabeledExample("v1", "china again", 1, "valid"),
            LabeledExample("t1", "calm evening", 0, "test"),
        ]
        ds = Dataset("mini", examples)
        cfg = FeaturizerConfig(dim=32)
        return ds, featurize(ds, cfg), cfg

    def test_non_augmenting_modules_pass_through(self):
        ds, emb, _ = self._dataset()
        for module_id in ("M0", "M2", "M3"):
            out_ds, out_emb = prepare_module_inputs(module_id, ds, emb)
            assert out_ds is ds and out_emb is emb

    def test_featurizer_path_embeds_tagged_text(self):
        ds, emb, feat = self._dataset()
        gaz = Gazetteer({"china": "GPE"})
        out_ds, out_emb = prepare_module_inputs("M1", ds, emb, gazetteer=gaz, featurizer=feat)
        assert len(out_ds.examples) == 6
        assert out_ds.examples[-1].id == "h1#tagged"
        assert out_emb.count == 6
        # tagged copy embeds the tagged text, not the original row
        assert not np.array_equal(out_emb.vectors[-1], emb.vectors[0])

    def test_duplication_fallback_reuses_original_rows(self):
        ds, emb, _ = self._dataset()
        gaz = Gazetteer({"china": "GPE"})
        out_ds, out_emb = prepare_module_inputs("M1", ds, emb, gazetteer=gaz)
        assert out_emb.count == 6
        np.testing.assert_array_equal(out_emb.vectors[-1], emb.vectors[0])

    def test_explicit_augmented_matrix_wins(self):
        ds, emb, _ = self._dataset()
        gaz = Gazetteer({"china": "GPE"})
        override = EmbeddingMatrix(np.eye(6, 32, dtype=np.float32))
        out_ds, out_emb = prepare_module_inputs(
            "M1", ds, emb, gazetteer=gaz, augmented_embeddings=override
        )
        assert out_emb is override

    def test_mismatched_augmented_matrix_rejected(self):
        ds, emb, _ = self._dataset()
        gaz = Gazetteer({"china": "GPE"})
        from rvhate.errors import DimensionMismatch

        with pytest.raises(DimensionMismatch):
            prepare_module_inputs(
                "M1",
                ds,
                emb,
                gazetteer=gaz,
                augmented_embeddings=EmbeddingMatrix(np.eye(3, 32, dtype=np.float32)),
            )

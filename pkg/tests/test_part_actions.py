import numpy as np
import pytest

from partaction.core import Box, FeatureVector, PartKind
from partaction.part_actions import (
    PartActionModel,
    PartActionTrainConfig,
    embedded_scores,
    labels_for,
    load_part_action_model,
    part_action_accuracy,
    part_action_scores,
    predict_part_action,
    save_part_action_model,
    softmax_loss_and_grad,
    taxonomy,
    taxonomy_hash,
    train_part_action,
)

REGION = Box(0.0, 0.0, 1.0, 1.0)


def fv(values):
    return FeatureVector(np.asarray(values, dtype=np.float64), "toy", REGION)


def separable_hand_pairs():
    """Two hand classes split by the first coordinate, 10 samples each.

    Separability certificate: every class-0 sample has x0 >= 2 and every
    class-1 sample has x0 <= -2, so the hyperplane x0 = 0 separates them.
    """
    labs = labels_for(PartKind.HAND)
    pairs = []
    for i in range(10):
        pairs.append((fv([2.0 + 0.1 * i, 0.3 * i, -0.2, 0.05 * i]), labs[0]))
        pairs.append((fv([-2.0 - 0.1 * i, 0.25 * i, 0.4, -0.03 * i]), labs[1]))
    x0_class0 = [p[0].values[0] for p in pairs if p[1] == labs[0]]
    x0_class1 = [p[0].values[0] for p in pairs if p[1] == labs[1]]
    assert min(x0_class0) > 0 > max(x0_class1)
    return pairs


def zero_model(dim=4):
    return PartActionModel(
        weights={p: np.zeros((len(labels_for(p)), dim)) for p in PartKind
                 if p is not PartKind.BACKGROUND},
        biases={p: np.zeros(len(labels_for(p))) for p in PartKind
                if p is not PartKind.BACKGROUND},
        dim=dim,
        config=PartActionTrainConfig(),
    )


class TestTraining:
    def test_separable_classes_reach_full_accuracy(self):
        pairs = separable_hand_pairs()
        model = train_part_action(pairs)
        assert part_action_accuracy(model, pairs) == 1.0

    def test_single_class_always_predicted(self):
        lab = labels_for(PartKind.TORSO)[2]
        pairs = [(fv(np.linspace(-1, 1, 4) * k), lab) for k in range(1, 6)]
        model = train_part_action(pairs)
        for sample, _ in pairs:
            probs = predict_part_action(model, PartKind.TORSO, sample)
            assert int(np.argmax(probs)) == 2

    def test_bit_identical_retraining(self):
        pairs = separable_hand_pairs()
        m1 = train_part_action(pairs, seed=5)
        m2 = train_part_action(pairs, seed=5)
        for p in m1.weights:
            assert np.array_equal(m1.weights[p], m2.weights[p])
            assert np.array_equal(m1.biases[p], m2.biases[p])

    def test_loss_never_increases(self):
        pairs = separable_hand_pairs()
        cfg = PartActionTrainConfig(learning_rate=5.0, epochs=40)  # huge step
        model = train_part_action(pairs, cfg)
        x = np.stack([p[0].values for p in pairs])
        labs = labels_for(PartKind.HAND)
        y = np.array([labs.index(p[1]) for p in pairs])
        final, _, _ = softmax_loss_and_grad(
            model.weights[PartKind.HAND], model.biases[PartKind.HAND], x, y, cfg.l2
        )
        n_cls = len(labs)
        initial, _, _ = softmax_loss_and_grad(
            np.zeros((n_cls, 4)), np.zeros(n_cls), x, y, cfg.l2
        )
        assert final <= initial

    def test_inconsistent_dims_rejected(self):
        labs = labels_for(PartKind.LEG)
        pairs = [(fv([1, 2, 3]), labs[0]), (fv([1, 2]), labs[1])]
        with pytest.raises(ValueError, match="dims"):
            train_part_action(pairs)

    def test_label_not_in_taxonomy_rejected(self):
        from partaction.core import PartActionLabel

        fake = PartActionLabel(99, PartKind.HAND, "juggling")
        with pytest.raises(ValueError, match="taxonomy"):
            train_part_action([(fv([1.0]), fake)])


class TestPredict:
    def test_zero_model_uniform_over_torso(self):
        probs = predict_part_action(zero_model(), PartKind.TORSO, fv([1, 2, 3, 4]))
        assert probs.shape == (4,)
        assert np.all(probs == 0.25)

    def test_matches_hand_built_logistic_oracle(self):
        rng = np.random.default_rng(8)
        model = zero_model()
        w = rng.standard_normal((4, 4))
        b = rng.standard_normal(4)
        model.weights[PartKind.TORSO] = w
        model.biases[PartKind.TORSO] = b
        for _ in range(10):
            x = rng.standard_normal(4)
            z = w @ x + b
            oracle = np.exp(z) / np.exp(z).sum()
            got = predict_part_action(model, PartKind.TORSO, fv(x))
            np.testing.assert_allclose(got, oracle, rtol=1e-12, atol=1e-12)

    def test_sums_to_one(self):
        rng = np.random.default_rng(9)
        model = zero_model()
        model.weights[PartKind.HAND] = rng.standard_normal((14, 4)) * 30
        for _ in range(50):
            probs = predict_part_action(model, PartKind.HAND, fv(rng.standard_normal(4)))
            assert abs(probs.sum() - 1.0) <= 1e-9
            assert np.all(probs >= 0)

    def test_mass_stays_within_part(self):
        # the output vector has exactly one entry per label of the part
        model = zero_model()
        for part in (PartKind.HEAD, PartKind.HAND, PartKind.LEG):
            probs = predict_part_action(model, part, fv([0, 0, 0, 0]))
            assert probs.shape == (len(labels_for(part)),)

    def test_dim_mismatch(self):
        with pytest.raises(ValueError, match="dim"):
            predict_part_action(zero_model(4), PartKind.HEAD, fv([1.0, 2.0]))

    def test_scaling_keeps_argmax_of_bias_free_model(self):
        rng = np.random.default_rng(10)
        model = zero_model()
        model.weights[PartKind.LEG] = rng.standard_normal((6, 4))
        for _ in range(20):
            x = rng.standard_normal(4)
            a = predict_part_action(model, PartKind.LEG, fv(x))
            b = predict_part_action(model, PartKind.LEG, fv(x * 7.25))
            assert int(np.argmax(a)) == int(np.argmax(b))


class TestGradient:
    def test_matches_central_finite_differences(self):
        rng = np.random.default_rng(12)
        for _ in range(10):
            n, d, c = int(rng.integers(3, 12)), int(rng.integers(1, 8)), int(rng.integers(2, 5))
            x = rng.standard_normal((n, d))
            y = rng.integers(0, c, n)
            y[0] = 0
            w = rng.standard_normal((c, d)) * 0.5
            b = rng.standard_normal(c) * 0.5
            l2 = 0.01
            _, gw, gb = softmax_loss_and_grad(w, b, x, y, l2)
            h = 1e-6
            num_gw = np.zeros_like(w)
            for i in range(c):
                for j in range(d):
                    wp, wm = w.copy(), w.copy()
                    wp[i, j] += h
                    wm[i, j] -= h
                    lp, _, _ = softmax_loss_and_grad(wp, b, x, y, l2)
                    lm, _, _ = softmax_loss_and_grad(wm, b, x, y, l2)
                    num_gw[i, j] = (lp - lm) / (2 * h)
            num_gb = np.zeros_like(b)
            for i in range(c):
                bp, bm = b.copy(), b.copy()
                bp[i] += h
                bm[i] -= h
                lp, _, _ = softmax_loss_and_grad(w, bp, x, y, l2)
                lm, _, _ = softmax_loss_and_grad(w, bm, x, y, l2)
                num_gb[i] = (lp - lm) / (2 * h)
            scale = max(np.abs(gw).max(), np.abs(gb).max(), 1e-8)
            assert np.abs(gw - num_gw).max() / scale < 1e-5
            assert np.abs(gb - num_gb).max() / scale < 1e-5


class TestAccuracy:
    def test_perfect_model(self):
        pairs = separable_hand_pairs()
        model = train_part_action(pairs)
        assert part_action_accuracy(model, pairs) == 1.0

    def test_near_uniform_model_on_balanced_classes(self):
        # tiny random weights act like a uniform guesser; binomial gives
        # accuracy 0.25 +- 0.02 on 10k balanced 4-class samples
        rng = np.random.default_rng(14)
        model = zero_model()
        model.weights[PartKind.TORSO] = rng.standard_normal((4, 4)) * 1e-3
        labs = labels_for(PartKind.TORSO)
        eval_set = [
            (fv(rng.standard_normal(4)), labs[i % 4]) for i in range(10_000)
        ]
        acc = part_action_accuracy(model, eval_set)
        assert abs(acc - 0.25) <= 0.02

    def test_empty_eval_set(self):
        with pytest.raises(ValueError, match="empty"):
            part_action_accuracy(zero_model(), [])


class TestScores:
    def test_raw_scores_are_affine(self):
        rng = np.random.default_rng(15)
        model = zero_model()
        model.weights[PartKind.ARM] = rng.standard_normal((6, 4))
        model.biases[PartKind.ARM] = rng.standard_normal(6)
        x = rng.standard_normal(4)
        np.testing.assert_allclose(
            part_action_scores(model, PartKind.ARM, fv(x)),
            model.weights[PartKind.ARM] @ x + model.biases[PartKind.ARM],
            rtol=0, atol=0,
        )

    def test_embedded_scores_layout(self):
        model = zero_model()
        model.biases[PartKind.TORSO] = np.array([1.0, 2.0, 3.0, 4.0])
        out = embedded_scores(model, PartKind.TORSO, fv([0, 0, 0, 0]))
        assert out.shape == (40,)
        torso_idx = [lab.index for lab in labels_for(PartKind.TORSO)]
        assert np.array_equal(out[torso_idx], [1.0, 2.0, 3.0, 4.0])
        others = np.delete(out, torso_idx)
        assert np.all(others == 0.0)


class TestModelFile:
    def test_round_trip(self, tmp_path):
        pairs = separable_hand_pairs()
        lab0 = labels_for(PartKind.TORSO)[0]
        pairs += [(fv([float(i), 0, 0, 0]), lab0) for i in range(3)]
        model = train_part_action(pairs, seed=2)
        path = tmp_path / "m.bin"
        save_part_action_model(model, path)
        loaded = load_part_action_model(path)
        assert loaded.dim == model.dim
        assert loaded.config == model.config
        assert set(loaded.weights) == set(model.weights)
        for p in model.weights:
            assert np.array_equal(loaded.weights[p], model.weights[p])
            assert np.array_equal(loaded.biases[p], model.biases[p])

    def test_taxonomy_hash_mismatch_refused(self, tmp_path):
        model = train_part_action(separable_hand_pairs())
        path = tmp_path / "m.bin"
        save_part_action_model(model, path)
        data = bytearray(path.read_bytes())
        data[10] ^= 0xFF  # corrupt one hash byte
        path.write_bytes(bytes(data))
        with pytest.raises(ValueError, match="taxonomy hash"):
            load_part_action_model(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.bin"
        path.write_bytes(b"XXXX" + b"\x00" * 60)
        with pytest.raises(ValueError, match="magic"):
            load_part_action_model(path)


def test_taxonomy_hash_is_stable():
    assert taxonomy_hash() == taxonomy_hash()
    assert len(taxonomy_hash()) == 64
    assert len(taxonomy()) == 40

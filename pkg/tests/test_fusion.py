import numpy as np
import pytest

from partaction.core import BodyActionLabel, Box, FeatureVector, PartKind
from partaction.fusion import (
    FusedSample,
    FusionConfig,
    OvrLinearModel,
    assemble,
    fuse_part,
    load_ovr_model,
    load_scores_file,
    pool_hand_endpoints,
    predict_label,
    predict_scores,
    save_ovr_model,
    save_scores_file,
    train_ovr,
)

REGION = Box(0.0, 0.0, 4.0, 4.0)


def body(values):
    return FeatureVector(np.asarray(values, float), "body-net", REGION)


def part(values):
    return FeatureVector(np.asarray(values, float), "part-net", REGION)


def kkt_violation(x, y, penalty, w, b, alpha_over_c, active_tol=1e-6):
    """Max violation of the soft-margin optimality conditions.

    Checks stationarity w = C * sum alpha_i y_i x_i with alpha/C in [0, 1],
    the balance constraint, and margin consistency per alpha regime.
    """
    margins = y * (x @ w + b)
    viol = np.linalg.norm(w - penalty * ((alpha_over_c * y) @ x)) / max(
        1.0, np.linalg.norm(w)
    )
    viol = max(viol, float(-alpha_over_c.min()), float(alpha_over_c.max() - 1.0))
    viol = max(viol, abs(float((alpha_over_c * y).sum())))
    for a, m in zip(alpha_over_c, margins):
        if a <= active_tol:
            viol = max(viol, max(0.0, 1.0 - m))
        elif a >= 1.0 - active_tol:
            viol = max(viol, max(0.0, m - 1.0))
        else:
            viol = max(viol, abs(m - 1.0))
    return viol


class TestFusePart:
    def test_concatenates_in_order(self):
        out = fuse_part(body([1, 2, 3, 4]), part([5, 6, 7, 8, 9, 10]))
        assert out.dim == 10
        assert np.array_equal(out.values[:4], [1, 2, 3, 4])
        assert np.array_equal(out.values[4:], [5, 6, 7, 8, 9, 10])
        assert out.source == "fused"

    def test_zero_vectors(self):
        out = fuse_part(body(np.zeros(3)), part(np.zeros(2)))
        assert np.array_equal(out.values, np.zeros(5))

    def test_order_matters_structurally(self):
        a, b = body([1.0, 0.0]), part([0.0, 2.0])
        ab = fuse_part(a, b).values
        ba = np.concatenate([b.values, a.values])
        assert not np.array_equal(ab, ba)

    def test_source_tag_mismatch(self):
        with pytest.raises(ValueError, match="tagged"):
            fuse_part(part([1.0]), part([2.0]))
        with pytest.raises(ValueError, match="tagged"):
            fuse_part(body([1.0]), body([2.0]))


class TestPoolHandEndpoints:
    def test_identical_inputs_pass_through(self):
        v = part([1.0, 2.0, 3.0])
        out = pool_hand_endpoints(v, v)
        assert np.array_equal(out.values, v.values)

    def test_elementwise_mean(self):
        out = pool_hand_endpoints(part([0.0, 2.0]), part([2.0, 0.0]))
        assert np.array_equal(out.values, [1.0, 1.0])

    def test_dim_mismatch(self):
        with pytest.raises(ValueError, match="dims"):
            pool_hand_endpoints(part(np.ones(4)), part(np.ones(5)))


class TestAssemble:
    def cfg(self, **kw):
        base = dict(part_weight=0.5, m=2,
                    selected_parts=(PartKind.HAND, PartKind.HEAD))
        base.update(kw)
        return FusionConfig(**base)

    def test_weighted_concatenation(self):
        sample = assemble(
            "i0", BodyActionLabel(0, "a"), np.array([1.0, 1.0]),
            {PartKind.HAND: np.array([2.0, 2.0]), PartKind.HEAD: np.array([4.0, 4.0])},
            self.cfg(),
        )
        assert np.array_equal(sample.vector, [1.0, 1.0, 1.0, 1.0, 2.0, 2.0])

    def test_unit_weight_is_plain_concatenation(self):
        sample = assemble(
            "i0", BodyActionLabel(0, "a"), np.array([1.0]),
            {PartKind.HAND: np.array([2.0]), PartKind.HEAD: np.array([4.0])},
            self.cfg(part_weight=1.0),
        )
        assert np.array_equal(sample.vector, [1.0, 2.0, 4.0])

    def test_no_parts_reduces_to_bbox(self):
        sample = assemble(
            "i0", BodyActionLabel(0, "a"), np.array([3.0, 1.0]), {},
            self.cfg(m=0, selected_parts=()),
        )
        assert np.array_equal(sample.vector, [3.0, 1.0])

    def test_missing_selected_part(self):
        with pytest.raises(ValueError, match="missing feature"):
            assemble("i0", BodyActionLabel(0, "a"), np.ones(2),
                     {PartKind.HAND: np.ones(2)}, self.cfg())

    def test_weight_scales_only_part_blocks(self):
        bbox = np.array([1.0, -2.0])
        parts = {PartKind.HAND: np.array([3.0]), PartKind.HEAD: np.array([5.0])}
        s1 = assemble("i", BodyActionLabel(0, "a"), bbox, parts, self.cfg(part_weight=0.5))
        s2 = assemble("i", BodyActionLabel(0, "a"), bbox, parts, self.cfg(part_weight=1.5))
        assert np.array_equal(s1.vector[:2], s2.vector[:2])
        np.testing.assert_allclose(s2.vector[2:], 3.0 * s1.vector[2:], rtol=1e-15)

    def test_selected_count_must_match_m(self):
        with pytest.raises(ValueError, match="m=1"):
            assemble("i", BodyActionLabel(0, "a"), np.ones(2),
                     {PartKind.HAND: np.ones(2)},
                     FusionConfig(m=1, selected_parts=(PartKind.HAND, PartKind.HEAD)))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            FusionConfig(part_weight=0.0)
        with pytest.raises(ValueError):
            FusionConfig(selected_parts=(PartKind.HAND, PartKind.HAND))
        with pytest.raises(ValueError):
            FusionConfig(body_source=None, part_source=None)


def labeled_samples(rng, n_classes=3, per_class=12, dim=5, sep=6.0):
    classes = [BodyActionLabel(i, f"act{i}") for i in range(n_classes)]
    out = []
    for ci, cls in enumerate(classes):
        mu = np.zeros(dim)
        mu[ci % dim] = sep
        for i in range(per_class):
            out.append(FusedSample(f"s{ci}_{i}", mu + rng.standard_normal(dim) * 0.4, cls))
    return out


class TestTrainOvr:
    def test_one_dimensional_separable_signs(self):
        labels = [BodyActionLabel(0, "neg"), BodyActionLabel(1, "pos")]
        samples = [
            FusedSample("p1", np.array([2.0]), labels[1]),
            FusedSample("p2", np.array([2.0]), labels[1]),
            FusedSample("n1", np.array([-2.0]), labels[0]),
            FusedSample("n2", np.array([-2.0]), labels[0]),
        ]
        model = train_ovr(samples, penalty=1.0)
        # analytic max-margin solution for the "pos" classifier: w=1/2, b=0
        pos_row = model.classes.index(labels[1])
        assert abs(model.weights[pos_row, 0] - 0.5) <= 1e-5
        assert abs(model.biases[pos_row]) <= 1e-5
        for s in samples:
            scores = predict_scores(model, s.vector)
            assert predict_label(model, s.vector) == s.label
            want = 1.0 if s.label == labels[1] else -1.0
            assert np.sign(scores[pos_row]) == want

    def test_duplicated_dataset_keeps_decision_function(self):
        rng = np.random.default_rng(0)
        samples = labeled_samples(rng)
        m1 = train_ovr(samples, penalty=1.0)
        m2 = train_ovr(samples + samples, penalty=1.0)
        probe = rng.standard_normal((20, 5))
        for p in probe:
            np.testing.assert_allclose(
                predict_scores(m1, p), predict_scores(m2, p), atol=1e-4
            )

    def test_bit_identical_retraining(self):
        rng = np.random.default_rng(1)
        samples = labeled_samples(rng)
        m1 = train_ovr(samples, penalty=1.0, seed=7)
        m2 = train_ovr(samples, penalty=1.0, seed=7)
        assert np.array_equal(m1.weights, m2.weights)
        assert np.array_equal(m1.biases, m2.biases)

    def test_separable_data_full_training_accuracy(self):
        rng = np.random.default_rng(2)
        samples = labeled_samples(rng, n_classes=4, per_class=10, dim=6)
        model = train_ovr(samples, penalty=1.0)
        assert all(predict_label(model, s.vector) == s.label for s in samples)

    def test_kkt_conditions_hold(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            n_classes = int(rng.integers(2, 4))
            samples = []
            for ci in range(n_classes):
                cls = BodyActionLabel(ci, f"c{ci}")
                for i in range(int(rng.integers(2, 9))):
                    samples.append(
                        FusedSample(f"{ci}_{i}", rng.standard_normal(3), cls)
                    )
            penalty = float(rng.uniform(0.3, 2.0))
            model = train_ovr(samples, penalty=penalty)
            x = np.stack([s.vector for s in samples])
            for ci, cls in enumerate(model.classes):
                y = np.where(
                    np.array([s.label.index for s in samples]) == cls.index, 1.0, -1.0
                )
                v = kkt_violation(x, y, penalty, model.weights[ci],
                                  model.biases[ci], model.dual_coefs[ci])
                assert v <= 1e-4

    def test_single_class_rejected(self):
        cls = BodyActionLabel(0, "only")
        samples = [FusedSample("a", np.ones(2), cls), FusedSample("b", np.zeros(2), cls)]
        with pytest.raises(ValueError, match="two"):
            train_ovr(samples)

    def test_dim_inconsistency_rejected(self):
        samples = [
            FusedSample("a", np.ones(2), BodyActionLabel(0, "x")),
            FusedSample("b", np.ones(3), BodyActionLabel(1, "y")),
        ]
        with pytest.raises(ValueError, match="dims"):
            train_ovr(samples)


class TestPredict:
    def zero_model(self, n_classes=3, dim=4):
        return OvrLinearModel(
            classes=tuple(BodyActionLabel(i, f"c{i}") for i in range(n_classes)),
            weights=np.zeros((n_classes, dim)),
            biases=np.zeros(n_classes),
            penalty=1.0,
            seed=0,
            dim=dim,
        )

    def test_zero_model_scores_zero(self):
        model = self.zero_model()
        assert np.array_equal(predict_scores(model, np.ones(4)), np.zeros(3))

    def test_matches_dot_product_oracle(self):
        rng = np.random.default_rng(4)
        model = self.zero_model()
        model.weights = rng.standard_normal((3, 4))
        model.biases = rng.standard_normal(3)
        for _ in range(10):
            f = rng.standard_normal(4)
            oracle = np.array([model.weights[c] @ f + model.biases[c] for c in range(3)])
            np.testing.assert_allclose(predict_scores(model, f), oracle,
                                       rtol=1e-12, atol=1e-12)

    def test_argmax_ties_take_lowest_class_index(self):
        model = self.zero_model()
        assert predict_label(model, np.ones(4)) == model.classes[0]

    def test_linearity(self):
        rng = np.random.default_rng(5)
        model = self.zero_model()
        model.weights = rng.standard_normal((3, 4))
        model.biases = rng.standard_normal(3)
        f = rng.standard_normal(4)
        zero = predict_scores(model, np.zeros(4))
        for a in (0.0, 0.5, -2.0, 11.0):
            lhs = predict_scores(model, a * f) - zero
            rhs = a * (predict_scores(model, f) - zero)
            np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-10)

    def test_dim_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            predict_scores(self.zero_model(), np.ones(5))


class TestModelFile:
    def test_round_trip_with_config_echo(self, tmp_path):
        rng = np.random.default_rng(6)
        samples = labeled_samples(rng)
        model = train_ovr(samples, penalty=0.75, seed=3)
        cfg = FusionConfig(m=2, selected_parts=(PartKind.HAND, PartKind.HEAD))
        path = tmp_path / "model.bin"
        save_ovr_model(model, path, cfg)
        loaded, echo = load_ovr_model(path)
        assert loaded.classes == model.classes
        assert np.array_equal(loaded.weights, model.weights)
        assert np.array_equal(loaded.biases, model.biases)
        assert loaded.penalty == 0.75 and loaded.seed == 3
        assert echo == cfg

    def test_round_trip_without_config(self, tmp_path):
        rng = np.random.default_rng(7)
        model = train_ovr(labeled_samples(rng))
        path = tmp_path / "model.bin"
        save_ovr_model(model, path)
        _, echo = load_ovr_model(path)
        assert echo is None

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "model.bin"
        path.write_bytes(b"WHAT" + bytes(40))
        with pytest.raises(ValueError, match="magic"):
            load_ovr_model(path)


def test_scores_file_round_trip(tmp_path):
    classes = [BodyActionLabel(0, "walk"), BodyActionLabel(1, "run")]
    rows = [("i0", np.array([0.5, -1.25])), ("i1", np.array([1e-17, 3.0]))]
    path = tmp_path / "scores.txt"
    save_scores_file(rows, classes, path)
    names, loaded = load_scores_file(path)
    assert names == ["walk", "run"]
    assert loaded[0][0] == "i0"
    assert np.array_equal(loaded[0][1], rows[0][1])
    assert np.array_equal(loaded[1][1], rows[1][1])

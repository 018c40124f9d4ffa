import numpy as np
import pytest

from featexport.models import MODEL_REGISTRY, load_model


class TestRegistry:
    def test_known_models_have_dims(self):
        assert MODEL_REGISTRY["tiny-conv-16"][2] == 16
        assert MODEL_REGISTRY["tiny-conv-64"][2] == 64

    def test_unknown_model_rejected(self):
        with pytest.raises(ValueError, match="unknown model"):
            load_model("resnet-9000")


class TestDeterminism:
    def test_same_identifier_same_weights(self):
        a = load_model("tiny-conv-16")
        b = load_model("tiny-conv-16")
        assert np.array_equal(a.k1, b.k1)
        assert np.array_equal(a.head, b.head)

    def test_different_identifiers_differ(self):
        a = load_model("tiny-conv-16")
        b = load_model("tiny-conv-64")
        assert not np.array_equal(a.k1, b.k1)

    def test_embedding_is_repeatable(self):
        rng = np.random.default_rng(0)
        model = load_model("tiny-conv-16")
        crop = rng.random((24, 31))
        e1 = model.embed(crop)
        e2 = model.embed(crop)
        assert np.array_equal(e1, e2)


class TestEmbedding:
    def test_dim_and_norm(self):
        rng = np.random.default_rng(1)
        for name, (_, _, dim) in MODEL_REGISTRY.items():
            model = load_model(name)
            out = model.embed(rng.random((17, 23)))
            assert out.shape == (dim,)
            assert abs(np.linalg.norm(out) - 1.0) < 1e-6

    def test_values_are_float32_exact(self):
        rng = np.random.default_rng(2)
        model = load_model("tiny-conv-8")
        out = model.embed(rng.random((10, 10)))
        assert np.array_equal(out, out.astype(np.float32).astype(np.float64))

    def test_tiny_crops_still_embed(self):
        model = load_model("tiny-conv-8")
        out = model.embed(np.array([[0.5]]))
        assert out.shape == (8,)
        assert np.all(np.isfinite(out))

    def test_distinct_crops_embed_differently(self):
        rng = np.random.default_rng(3)
        model = load_model("tiny-conv-16")
        a = model.embed(rng.random((20, 20)))
        b = model.embed(rng.random((20, 20)))
        assert not np.array_equal(a, b)

    def test_bad_crop_rejected(self):
        model = load_model("tiny-conv-8")
        with pytest.raises(ValueError):
            model.embed(np.zeros((0, 4)))

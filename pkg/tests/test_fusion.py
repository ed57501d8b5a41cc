import json
from pathlib import Path

import numpy as np
import pytest

from aquasynth import fusion
from aquasynth.errors import MalformedFile, ShapeMismatch

FIXTURE = Path(__file__).parent / "data" / "fusion_params.json"


@pytest.fixture(scope="module")
def params():
    return fusion.load_parameter_fixture(FIXTURE)


def _features(seed, shape=(2, 3, 8, 8)):
    return np.random.default_rng(seed).normal(0.0, 1.0, shape)


# ----------------------------------------------------- instance_normalize


def test_instance_normalize_constant_slice_is_zero():
    x = np.full((1, 2, 4, 4), 3.7)
    assert np.array_equal(fusion.instance_normalize(x), np.zeros_like(x))


def test_instance_normalize_two_level_slice():
    # half -1, half +1 has mean 0 and std 1; divisor is 1 + epsilon
    x = np.ones((1, 1, 2, 4))
    x[0, 0, 0] = -1.0
    out = fusion.instance_normalize(x)
    expected = x / (1.0 + fusion.INSTANCE_NORM_EPSILON)
    assert np.allclose(out, expected, rtol=0, atol=1e-15)


def test_instance_normalize_statistics():
    out = fusion.instance_normalize(_features(1, (1, 3, 8, 8)))
    mean = out.mean(axis=(2, 3))
    std = out.std(axis=(2, 3))
    assert np.abs(mean).max() < 1e-6
    assert np.abs(std - 1.0).max() < 1e-3


def test_instance_normalize_near_idempotent():
    once = fusion.instance_normalize(_features(2))
    twice = fusion.instance_normalize(once)
    assert np.abs(twice - once).max() < 1e-4


def test_instance_normalize_loop_oracle():
    x = _features(3, (2, 2, 4, 4))
    out = fusion.instance_normalize(x)
    for n in range(2):
        for c in range(2):
            plane = x[n, c]
            expected = (plane - plane.mean()) / (plane.std() + 1e-5)
            assert np.allclose(out[n, c], expected, rtol=0, atol=1e-15)


def test_instance_normalize_rejects_bad_input():
    with pytest.raises(ShapeMismatch):
        fusion.instance_normalize(np.zeros((3, 4, 4)))
    bad = np.zeros((1, 1, 2, 2))
    bad[0, 0, 0, 0] = np.nan
    with pytest.raises(ShapeMismatch):
        fusion.instance_normalize(bad)


# ---------------------------------------------------------- sft_modulate


def test_sft_identity_at_zero():
    x = _features(4)
    out = fusion.sft_modulate(x, np.zeros_like(x), np.zeros_like(x))
    assert np.array_equal(out, x)


def test_sft_annihilation():
    # scale -1 cancels the features entirely; shift is all that remains
    x = _features(5)
    shift = _features(6)
    out = fusion.sft_modulate(x, np.full_like(x, -1.0), shift)
    assert np.array_equal(out, shift)


def test_sft_affine_oracle():
    x = _features(7)
    out = fusion.sft_modulate(x, np.full_like(x, 1.0), np.full_like(x, 0.5))
    assert np.allclose(out, 2.0 * x + 0.5, rtol=0, atol=1e-15)


def test_sft_shape_mismatch():
    x = _features(8)
    with pytest.raises(ShapeMismatch):
        fusion.sft_modulate(x, np.zeros((2, 3, 8, 7)), np.zeros_like(x))
    with pytest.raises(ShapeMismatch):
        fusion.sft_modulate(x, np.zeros_like(x), np.zeros((1, 3, 8, 8)))


def test_sft_after_normalization_centers_on_shift():
    x = fusion.instance_normalize(_features(9, (1, 2, 16, 16)))
    shift = np.full_like(x, 0.25)
    out = fusion.sft_modulate(x, np.full_like(x, 0.5), shift)
    # normalized features have near-zero mean, so the spatial mean of the
    # modulated output lands on the shift value
    assert np.abs(out.mean(axis=(2, 3)) - 0.25).max() < 1e-6


# --------------------------------------------- pooling and descriptors


def test_global_average_pool_manual_mean():
    x = _features(10, (2, 3, 4, 5))
    out = fusion.global_average_pool(x)
    assert out.shape == (2, 3)
    assert out[1, 2] == pytest.approx(float(x[1, 2].mean()), rel=1e-15)


def test_pooled_descriptor_matches_conv_then_pool(params):
    # dual route: a 1x1 convolution applied per pixel and pooled afterwards
    # must agree with pooling first and projecting the channel means
    proj = fusion.DenseParams(params["proj_weight"], params["proj_bias"])
    x = _features(11, (2, 6, 5, 5))
    per_pixel = np.einsum("oc,nchw->nohw", proj.weight, x) + proj.bias.reshape(
        1, -1, 1, 1
    )
    route_a = per_pixel.mean(axis=(2, 3))
    route_b = fusion.pooled_descriptor(x, proj)
    assert route_b.shape == (2, 4)
    assert np.allclose(route_a, route_b, rtol=0, atol=1e-12)


def test_dense_params_validation():
    with pytest.raises(ShapeMismatch):
        fusion.DenseParams(np.zeros((3, 4)), np.zeros(2))
    with pytest.raises(ShapeMismatch):
        fusion.DenseParams(np.zeros(3), np.zeros(3))
    layer = fusion.DenseParams(np.zeros((3, 4)), np.zeros(3))
    with pytest.raises(ShapeMismatch):
        layer(np.zeros((2, 5)))


# ------------------------------------------------------ adaptive_weights


def test_adaptive_weights_zero_params_give_half():
    fc1 = fusion.DenseParams(np.zeros((8, 12)), np.zeros(8))
    fc2 = fusion.DenseParams(np.zeros((3, 8)), np.zeros(3))
    descs = [np.ones((2, 4)) for _ in range(3)]
    out = fusion.adaptive_weights(descs, fc1, fc2)
    assert out.shape == (2, 3)
    assert np.array_equal(out, np.full((2, 3), 0.5))


def test_adaptive_weights_matches_manual_oracle(params):
    fc1 = fusion.DenseParams(params["fc1_weight"], params["fc1_bias"])
    fc2 = fusion.DenseParams(params["fc2_weight"], params["fc2_bias"])
    rng = np.random.default_rng(12)
    descs = [rng.normal(0, 1, (3, 4)) for _ in range(3)]
    out = fusion.adaptive_weights(descs, fc1, fc2)

    concat = np.concatenate(descs, axis=1)
    hidden = np.maximum(concat @ params["fc1_weight"].T + params["fc1_bias"], 0.0)
    logits = hidden @ params["fc2_weight"].T + params["fc2_bias"]
    expected = 1.0 / (1.0 + np.exp(-logits))
    assert np.allclose(out, expected, rtol=0, atol=1e-10)


def test_adaptive_weights_in_open_interval(params):
    fc1 = fusion.DenseParams(params["fc1_weight"], params["fc1_bias"])
    fc2 = fusion.DenseParams(params["fc2_weight"], params["fc2_bias"])
    rng = np.random.default_rng(13)
    for _ in range(10):
        descs = [rng.normal(0, 2, (4, 4)) for _ in range(3)]
        out = fusion.adaptive_weights(descs, fc1, fc2)
        assert np.all(out > 0.0)
        assert np.all(out < 1.0)


def test_adaptive_weights_shape_errors(params):
    fc1 = fusion.DenseParams(params["fc1_weight"], params["fc1_bias"])
    fc2 = fusion.DenseParams(params["fc2_weight"], params["fc2_bias"])
    with pytest.raises(ShapeMismatch):
        fusion.adaptive_weights([], fc1, fc2)
    with pytest.raises(ShapeMismatch):
        fusion.adaptive_weights([np.zeros((2, 4)), np.zeros((3, 4))], fc1, fc2)
    with pytest.raises(ShapeMismatch):
        fusion.adaptive_weights([np.zeros((2, 4, 1))], fc1, fc2)


def test_adaptive_weights_descriptor_permutation(params):
    # swapping two descriptors while swapping the matching fc1 column
    # blocks leaves the gate output unchanged
    fc1_w = params["fc1_weight"]
    fc1 = fusion.DenseParams(fc1_w, params["fc1_bias"])
    fc2 = fusion.DenseParams(params["fc2_weight"], params["fc2_bias"])
    rng = np.random.default_rng(14)
    a, b, c = (rng.normal(0, 1, (2, 4)) for _ in range(3))
    base = fusion.adaptive_weights([a, b, c], fc1, fc2)

    swapped_w = np.concatenate(
        [fc1_w[:, 4:8], fc1_w[:, 0:4], fc1_w[:, 8:12]], axis=1
    )
    fc1_swapped = fusion.DenseParams(swapped_w, params["fc1_bias"])
    swapped = fusion.adaptive_weights([b, a, c], fc1_swapped, fc2)
    assert np.allclose(base, swapped, rtol=0, atol=1e-15)


# --------------------------------------------------- apply_prior_weights


def test_apply_prior_weights_identity():
    priors = [_features(15), _features(16)]
    out = fusion.apply_prior_weights(priors, np.ones((2, 2)))
    for got, want in zip(out, priors):
        assert np.array_equal(got, want)


def test_apply_prior_weights_scalar_halving():
    priors = [np.ones((2, 1, 2, 2))]
    out = fusion.apply_prior_weights(priors, np.full((2, 1), 0.5))
    assert np.array_equal(out[0], np.full((2, 1, 2, 2), 0.5))


def test_apply_prior_weights_broadcast_oracle():
    rng = np.random.default_rng(17)
    priors = [rng.normal(0, 1, (3, 2, 4, 4)) for _ in range(2)]
    weights = rng.uniform(0, 1, (3, 2))
    out = fusion.apply_prior_weights(priors, weights)
    for i in range(2):
        for n in range(3):
            expected = priors[i][n] * weights[n, i]
            assert np.allclose(out[i][n], expected, rtol=0, atol=1e-12)


def test_apply_prior_weights_linear_in_weights():
    prior = _features(18, (2, 1, 3, 3))
    w = np.array([[0.3], [0.7]])
    doubled = fusion.apply_prior_weights([prior], 2.0 * w)
    single = fusion.apply_prior_weights([prior], w)
    assert np.array_equal(doubled[0], 2.0 * single[0])


def test_apply_prior_weights_shape_errors():
    prior = _features(19)
    with pytest.raises(ShapeMismatch):
        fusion.apply_prior_weights([prior], np.ones((2,)))
    with pytest.raises(ShapeMismatch):
        fusion.apply_prior_weights([prior, prior], np.ones((2, 1)))
    with pytest.raises(ShapeMismatch):
        fusion.apply_prior_weights([prior], np.ones((3, 1)))


# ------------------------------------------------------ fixture loading


def test_fixture_file_loads(params):
    assert params["proj_weight"].shape == (4, 6)
    assert params["proj_bias"].shape == (4,)
    assert params["fc1_weight"].shape == (8, 12)
    assert params["fc1_bias"].shape == (8,)
    assert params["fc2_weight"].shape == (3, 8)
    assert params["fc2_bias"].shape == (3,)
    for arr in params.values():
        assert np.isfinite(arr).all()


def test_fixture_rejects_invalid_json(tmp_path):
    bad = tmp_path / "p.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(MalformedFile):
        fusion.load_parameter_fixture(bad)


def test_fixture_rejects_missing_keys(tmp_path):
    bad = tmp_path / "p.json"
    bad.write_text(json.dumps({"w": {"shape": [2]}}), encoding="utf-8")
    with pytest.raises(MalformedFile):
        fusion.load_parameter_fixture(bad)


def test_fixture_rejects_length_mismatch(tmp_path):
    bad = tmp_path / "p.json"
    bad.write_text(
        json.dumps({"w": {"shape": [2, 2], "data": [1.0, 2.0, 3.0]}}),
        encoding="utf-8",
    )
    with pytest.raises(MalformedFile):
        fusion.load_parameter_fixture(bad)


def test_fixture_rejects_non_finite(tmp_path):
    bad = tmp_path / "p.json"
    bad.write_text(
        json.dumps(
            {"w": {"shape": [2], "data": [1.0, float("nan")]}}, allow_nan=True
        ),
        encoding="utf-8",
    )
    with pytest.raises(MalformedFile):
        fusion.load_parameter_fixture(bad)


def test_fixture_rejects_non_object(tmp_path):
    bad = tmp_path / "p.json"
    bad.write_text("[1, 2, 3]", encoding="utf-8")
    with pytest.raises(MalformedFile):
        fusion.load_parameter_fixture(bad)

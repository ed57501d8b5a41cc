import math

import numpy as np
import pytest

from aquasynth.ambient import (
    BG_RANGE,
    ambient_light,
    ambient_ratio_bg,
    ambient_ratio_rg,
    sample_bg,
    unnormalized_ambient,
)
from aquasynth.errors import OutOfRange
from aquasynth.water_optics import ChannelCoefficients


def _uniform_coeffs(a, b):
    return ChannelCoefficients(a_r=a, a_g=a, a_b=a, b_r=b, b_g=b, b_b=b)


def test_closed_form_frozen_values():
    # b=0.1, beta=0.6: value is b/beta at the surface, times exp(-beta*D) below
    coeffs = _uniform_coeffs(0.5, 0.1)
    assert unnormalized_ambient(coeffs, "g", 0.0) == pytest.approx(
        0.16666666666666669, rel=1e-15
    )
    assert unnormalized_ambient(coeffs, "g", 2.0) == pytest.approx(
        0.05019903531870036, rel=1e-15
    )


def test_closed_form_scales_with_irradiance():
    coeffs = _uniform_coeffs(0.5, 0.1)
    one = unnormalized_ambient(coeffs, "g", 1.5, e0=1.0)
    two = unnormalized_ambient(coeffs, "g", 1.5, e0=2.0)
    assert two == pytest.approx(2.0 * one, rel=1e-15)


def test_ratio_frozen_values(toy_coeffs):
    assert ambient_ratio_rg(toy_coeffs, 0.0) == pytest.approx(
        0.4444444444444445, rel=1e-15
    )
    assert ambient_ratio_rg(toy_coeffs, 2.0) == pytest.approx(
        0.16350197385397439, rel=1e-15
    )
    # equal green/blue attenuation: ratio reduces to b_b/b_g at any depth
    for d in (0.0, 1.0, 2.0, 5.0):
        assert ambient_ratio_bg(toy_coeffs, d) == pytest.approx(1.6, rel=1e-12)


def test_ratios_match_closed_form_quotient():
    # The ratio expressions must agree with dividing two closed-form
    # evaluations; E0 cancels, so the quotient is parameter-free.
    rng = np.random.default_rng(31)
    for _ in range(300):
        coeffs = ChannelCoefficients(*(rng.uniform(0.01, 1.5, size=6)))
        d = float(rng.uniform(0.0, 5.0))
        quot_rg = unnormalized_ambient(coeffs, "r", d) / unnormalized_ambient(
            coeffs, "g", d
        )
        quot_bg = unnormalized_ambient(coeffs, "b", d) / unnormalized_ambient(
            coeffs, "g", d
        )
        assert ambient_ratio_rg(coeffs, d) == pytest.approx(quot_rg, rel=1e-12)
        assert ambient_ratio_bg(coeffs, d) == pytest.approx(quot_bg, rel=1e-12)


def test_ratio_monotone_when_red_attenuates_faster(toy_coeffs):
    # beta_r > beta_g, so the red share of the ambient light decays with depth
    depths = np.linspace(0.0, 5.0, 11)
    ratios = [ambient_ratio_rg(toy_coeffs, d) for d in depths]
    assert all(x > y for x, y in zip(ratios, ratios[1:]))


def test_ambient_light_frozen_triple(toy_coeffs):
    light = ambient_light(toy_coeffs, 2.0, 0.5)
    assert light.b_r == pytest.approx(0.08175098692698719, rel=1e-15)
    assert light.b_g == 0.5
    assert light.b_b == pytest.approx(0.7999999999999999, rel=1e-15)
    assert light.clamped is False


def test_ambient_light_green_passthrough(toy_coeffs):
    for green in (0.5, 0.7, 1.0):
        assert ambient_light(toy_coeffs, 1.0, green).b_g == green


def test_ambient_light_clamps_and_flags(toy_coeffs):
    # blue ratio is 1.6, so green 0.9 would put blue at 1.44
    light = ambient_light(toy_coeffs, 2.0, 0.9)
    assert light.b_b == 1.0
    assert light.clamped is True
    assert light.b_r == pytest.approx(
        ambient_ratio_rg(toy_coeffs, 2.0) * 0.9, rel=1e-15
    )


def test_ambient_light_values_stay_in_unit_interval(toy_coeffs):
    rng = np.random.default_rng(8)
    for _ in range(200):
        d = float(rng.uniform(0.0, 5.0))
        green = float(rng.uniform(*BG_RANGE))
        light = ambient_light(toy_coeffs, d, green)
        for value in light.as_tuple():
            assert 0.0 < value <= 1.0


def test_ambient_light_rejects_out_of_range(toy_coeffs):
    with pytest.raises(OutOfRange):
        ambient_light(toy_coeffs, -0.1, 0.7)
    with pytest.raises(OutOfRange):
        ambient_light(toy_coeffs, 5.1, 0.7)
    with pytest.raises(OutOfRange):
        ambient_light(toy_coeffs, 2.0, 0.0)
    with pytest.raises(OutOfRange):
        ambient_light(toy_coeffs, 2.0, 1.2)


def test_ambient_light_custom_depth_bound(toy_coeffs):
    light = ambient_light(toy_coeffs, 7.0, 0.7, max_surface_depth=8.0)
    assert light.b_g == 0.7
    with pytest.raises(OutOfRange):
        ambient_light(toy_coeffs, 7.0, 0.7, max_surface_depth=5.0)


def test_as_tuple_and_array_agree(toy_coeffs):
    light = ambient_light(toy_coeffs, 1.0, 0.6)
    assert tuple(light.as_array()) == light.as_tuple()
    assert light.as_array().dtype == np.float64


def test_sample_bg_range():
    rng = np.random.default_rng(77)
    draws = [sample_bg(rng) for _ in range(1000)]
    assert all(BG_RANGE[0] <= v <= BG_RANGE[1] for v in draws)
    assert max(draws) - min(draws) > 0.3  # actually spreads over the range


def test_boundary_depths_accepted(toy_coeffs):
    assert ambient_light(toy_coeffs, 0.0, 0.5).b_g == 0.5
    assert ambient_light(toy_coeffs, 5.0, 0.5).b_g == 0.5


def test_surface_ratio_equals_scatter_weighted_attenuation(toy_coeffs):
    # At D=0 the exponential drops out: the ratio is pure coefficient algebra.
    expected = (toy_coeffs.b_r / toy_coeffs.b_g) * (
        (toy_coeffs.a_g + toy_coeffs.b_g) / (toy_coeffs.a_r + toy_coeffs.b_r)
    )
    assert ambient_ratio_rg(toy_coeffs, 0.0) == pytest.approx(expected, rel=1e-15)
    assert math.isclose(
        ambient_ratio_rg(toy_coeffs, 0.0), 0.4444444444444445, rel_tol=1e-15
    )

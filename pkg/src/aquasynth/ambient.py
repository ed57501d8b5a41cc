"""Ambient light of the water column.

The background (veiling) light a camera sees at effectively infinite range
is not a free parameter: it follows from the water's optical coefficients
and the vertical depth of the scene below the surface. In closed form the
per-channel value is

    B_inf(c) = b(c) * exp(-(a(c) + b(c)) * D) / (a(c) + b(c)) * E0

with surface irradiance E0 equal across channels. Because E0 cancels in
channel ratios, the shipped computation anchors on a sampled green-channel
intensity and derives red and blue through the ratio expressions; the
closed form above is retained (``unnormalized_ambient``) as the reference
the ratios are verified against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OutOfRange
from .water_optics import ChannelCoefficients, total_attenuation

DEFAULT_MAX_SURFACE_DEPTH = 5.0

BG_RANGE = (0.5, 1.0)


@dataclass(frozen=True)
class AmbientLight:
    """Normalized per-channel ambient intensities, each in (0, 1].

    ``clamped`` is set when a derived channel exceeded 1 and was clipped;
    callers that want to avoid clipping can resample on that flag.
    """

    b_r: float
    b_g: float
    b_b: float
    clamped: bool = False

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.b_r, self.b_g, self.b_b)

    def as_array(self) -> np.ndarray:
        return np.array([self.b_r, self.b_g, self.b_b], dtype=np.float64)


def unnormalized_ambient(
    coeffs: ChannelCoefficients, channel: str, surface_depth: float, e0: float = 1.0
) -> float:
    """Closed-form ambient light for one channel, without normalization.

    Args:
        coeffs: optical coefficients of the water type.
        channel: "r", "g" or "b".
        surface_depth: vertical surface-to-object distance in meters, >= 0.
        e0: surface irradiance (dimensionless, > 0).
    """
    a = coeffs.absorption(channel)
    b = coeffs.scattering(channel)
    beta = a + b
    return b * math.exp(-beta * surface_depth) / beta * e0


def ambient_ratio_rg(coeffs: ChannelCoefficients, surface_depth: float) -> float:
    """Red/green ambient intensity ratio at the given surface depth."""
    beta_r = total_attenuation(coeffs, "r")
    beta_g = total_attenuation(coeffs, "g")
    return (
        (coeffs.b_r / coeffs.b_g)
        * (beta_g / beta_r)
        * math.exp(-(beta_r - beta_g) * surface_depth)
    )


def ambient_ratio_bg(coeffs: ChannelCoefficients, surface_depth: float) -> float:
    """Blue/green ambient intensity ratio at the given surface depth."""
    beta_b = total_attenuation(coeffs, "b")
    beta_g = total_attenuation(coeffs, "g")
    return (
        (coeffs.b_b / coeffs.b_g)
        * (beta_g / beta_b)
        * math.exp(-(beta_b - beta_g) * surface_depth)
    )


def ambient_light(
    coeffs: ChannelCoefficients,
    surface_depth: float,
    green: float,
    max_surface_depth: float = DEFAULT_MAX_SURFACE_DEPTH,
) -> AmbientLight:
    """Ambient light triple anchored to a green-channel intensity.

    Red and blue follow from the channel ratios; a derived channel that
    exceeds 1 is clamped to 1 and the result flagged, so the triple always
    stays inside the valid intensity range.

    Raises:
        OutOfRange: surface_depth outside [0, max_surface_depth] or green
            outside (0, 1].
    """
    if not 0.0 <= surface_depth <= max_surface_depth:
        raise OutOfRange(
            f"surface depth {surface_depth} outside [0, {max_surface_depth}]"
        )
    if not 0.0 < green <= 1.0:
        raise OutOfRange(f"green ambient intensity {green} outside (0, 1]")

    red = ambient_ratio_rg(coeffs, surface_depth) * green
    blue = ambient_ratio_bg(coeffs, surface_depth) * green
    clamped = False
    if red > 1.0:
        red = 1.0
        clamped = True
    if blue > 1.0:
        blue = 1.0
        clamped = True
    return AmbientLight(b_r=red, b_g=green, b_b=blue, clamped=clamped)


def sample_bg(rng: np.random.Generator) -> float:
    """Draw a green-channel ambient intensity uniformly from [0.5, 1]."""
    return float(rng.uniform(*BG_RANGE))

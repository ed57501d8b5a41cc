"""Per-pixel underwater image formation and its analytic inverse.

A clean pixel value is treated as the light entering the water column. It
is attenuated twice, once vertically from the surface to the scene (by
absorption only, which produces the color shift) and once along the line
of sight to the camera (by total attenuation), then mixed with the
ambient veiling light:

    observed = clean * exp(-a * D) * exp(-beta * d)
               + ambient * (1 - exp(-beta * d))

with D the surface-object depth (scalar per image), d the per-pixel
object-camera distance, and beta = a + b per channel.

All math runs in float64 working precision; clamping to [0, 1] and 8-bit
quantization happen only at file export (see ``img_io``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ambient import DEFAULT_MAX_SURFACE_DEPTH, ambient_light
from .errors import DegenerateTransmission, DimensionMismatch, InvalidParams
from .water_optics import ChannelCoefficients

DEFAULT_DEPTH_RANGE = (0.25, 20.0)

# Transmission below this is considered numerically dead for inversion.
DEFAULT_TRANSMISSION_FLOOR = 1e-6


@dataclass(frozen=True)
class SynthesisParams:
    """Everything needed to re-synthesize one image bit-identically."""

    water_type: str
    surface_depth: float
    ambient_green: float
    depth_range: tuple[float, float] = DEFAULT_DEPTH_RANGE
    seed: int = 0

    def validate(self) -> None:
        d_min, d_max = self.depth_range
        if not (math.isfinite(self.surface_depth) and self.surface_depth >= 0.0):
            raise InvalidParams(f"surface depth {self.surface_depth} must be >= 0")
        if not 0.0 < self.ambient_green <= 1.0:
            raise InvalidParams(f"green ambient {self.ambient_green} outside (0, 1]")
        if not (0.0 < d_min < d_max and math.isfinite(d_max)):
            raise InvalidParams(f"bad depth range ({d_min}, {d_max})")


def _check_pair(clean: np.ndarray, depth: np.ndarray) -> None:
    if clean.ndim != 3 or clean.shape[2] != 3:
        raise DimensionMismatch(f"expected an (H, W, 3) image, got shape {clean.shape}")
    if depth.shape != clean.shape[:2]:
        raise DimensionMismatch(
            f"depth shape {depth.shape} does not match image shape {clean.shape[:2]}"
        )


def attenuate_surface(e_in: float, absorption: float, surface_depth: float) -> float:
    """Energy left after traveling the surface-object distance."""
    return e_in * math.exp(-absorption * surface_depth)


def synthesize_pixel(
    j_prime: float, ambient: float, attenuation: float, distance: float
) -> float:
    """Camera signal for one pixel and channel.

    ``j_prime`` is the scene value already carrying the surface term. The
    result is a convex combination of ``j_prime`` and ``ambient`` weighted
    by the transmission exp(-attenuation * distance).
    """
    t = math.exp(-attenuation * distance)
    return j_prime * t + ambient * (1.0 - t)


def _channel_vectors(coeffs: ChannelCoefficients) -> tuple[np.ndarray, np.ndarray]:
    absorption = np.array([coeffs.a_r, coeffs.a_g, coeffs.a_b], dtype=np.float64)
    scattering = np.array([coeffs.b_r, coeffs.b_g, coeffs.b_b], dtype=np.float64)
    return absorption, absorption + scattering


def synthesize_image(
    clean: np.ndarray,
    depth: np.ndarray,
    coeffs: ChannelCoefficients,
    params: SynthesisParams,
    max_surface_depth: float = DEFAULT_MAX_SURFACE_DEPTH,
) -> np.ndarray:
    """Synthesize an underwater image from a clean RGB-D pair.

    Args:
        clean: (H, W, 3) float array in [0, 1], the ground-truth image.
        depth: (H, W) float array, object-camera distance in meters.
        coeffs: optical coefficients of the water type.
        params: sampled synthesis parameters.
        max_surface_depth: upper bound accepted for the surface depth.

    Returns:
        (H, W, 3) float64 array, unclamped working-precision values.
    """
    clean = np.asarray(clean, dtype=np.float64)
    depth = np.asarray(depth, dtype=np.float64)
    _check_pair(clean, depth)
    params.validate()

    light = ambient_light(
        coeffs, params.surface_depth, params.ambient_green, max_surface_depth
    )
    absorption, beta = _channel_vectors(coeffs)

    transmission = np.exp(-depth[..., None] * beta)
    surface_factor = np.exp(-absorption * params.surface_depth)
    return clean * surface_factor * transmission + light.as_array() * (1.0 - transmission)


def invert_formation(
    observed: np.ndarray,
    depth: np.ndarray,
    coeffs: ChannelCoefficients,
    params: SynthesisParams,
    transmission_floor: float = DEFAULT_TRANSMISSION_FLOOR,
    max_surface_depth: float = DEFAULT_MAX_SURFACE_DEPTH,
) -> tuple[np.ndarray, np.ndarray]:
    """Recover the clean image from an observed one, given the same parameters.

    Entries whose transmission falls at or below ``transmission_floor``
    carry essentially no scene signal and are masked out (set to 0 in the
    output, False in the mask).

    Returns:
        (clean_estimate, valid_mask), both shaped like ``observed``.

    Raises:
        DegenerateTransmission: every entry is below the floor.
    """
    observed = np.asarray(observed, dtype=np.float64)
    depth = np.asarray(depth, dtype=np.float64)
    _check_pair(observed, depth)
    params.validate()

    light = ambient_light(
        coeffs, params.surface_depth, params.ambient_green, max_surface_depth
    )
    absorption, beta = _channel_vectors(coeffs)

    transmission = np.exp(-depth[..., None] * beta)
    valid = transmission > transmission_floor
    if not valid.any():
        raise DegenerateTransmission(
            f"all transmissions are at or below {transmission_floor}"
        )

    surface_factor = np.exp(-absorption * params.surface_depth)
    direct = observed - light.as_array() * (1.0 - transmission)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        recovered = direct / (transmission * surface_factor)
    recovered = np.where(valid, recovered, 0.0)
    return recovered, valid

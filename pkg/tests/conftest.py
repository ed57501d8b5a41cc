import numpy as np
import pytest

from aquasynth import img_io
from aquasynth.water_optics import (
    ChannelCoefficients,
    default_coefficient_path,
    load_coefficient_table,
)


@pytest.fixture(scope="session")
def table():
    return load_coefficient_table(default_coefficient_path())


@pytest.fixture
def toy_coeffs():
    # Hand-picked values with easy attenuation sums: beta = (0.9, 0.4, 0.4).
    # Equal green/blue attenuation makes the blue/green ambient ratio
    # depth-independent, which several oracle tests rely on.
    return ChannelCoefficients(a_r=0.8, a_g=0.3, a_b=0.24, b_r=0.1, b_g=0.1, b_b=0.16)


@pytest.fixture
def corpus_factory(tmp_path):
    """Write n clean RGB + depth source pairs into a fresh directory."""

    def build(n, size=24, seed=0, name="src"):
        src = tmp_path / name
        src.mkdir(exist_ok=True)
        rng = np.random.default_rng(seed)
        for i in range(n):
            img_io.write_rgb(src / f"img{i:04d}.png", rng.uniform(0, 1, (size, size, 3)))
            img_io.write_depth(
                src / f"img{i:04d}.depth.png", rng.uniform(0.5, 9.0, (size, size))
            )
        return src

    return build

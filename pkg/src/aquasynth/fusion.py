"""Forward-only fusion kernels for prior-guided feature modulation.

These are small, trainable-free reference implementations of the fusion
arithmetic used to blend guidance priors into image features: instance
normalization, scale-shift modulation with a residual scale, squeeze-style
descriptor pooling, and a two-layer gate that turns pooled descriptors
into per-prior scalar weights.

Tensors follow the (N, C, H, W) layout. Parameters are never trained
here; they come from fixture files (see ``load_parameter_fixture``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import expit

from .errors import MalformedFile, ShapeMismatch

INSTANCE_NORM_EPSILON = 1e-5


def _as_feature_tensor(arr: np.ndarray, name: str = "tensor") -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 4:
        raise ShapeMismatch(f"{name} must be (N, C, H, W), got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ShapeMismatch(f"{name} contains non-finite values")
    return arr


def instance_normalize(
    features: np.ndarray, epsilon: float = INSTANCE_NORM_EPSILON
) -> np.ndarray:
    """Zero-mean, unit-std normalization per (batch, channel) slice.

    The divisor is sigma + epsilon, so constant slices map to exact zeros
    instead of dividing by zero. Statistics are population statistics over
    the spatial dims.
    """
    features = _as_feature_tensor(features, "features")
    mean = features.mean(axis=(2, 3), keepdims=True)
    std = features.std(axis=(2, 3), keepdims=True)
    return (features - mean) / (std + epsilon)


def sft_modulate(
    features: np.ndarray, scale: np.ndarray, shift: np.ndarray
) -> np.ndarray:
    """Elementwise feature modulation: features * (scale + 1) + shift.

    The +1 keeps zero scale an identity, so the modulation acts as a
    residual branch around the unmodified features.
    """
    features = _as_feature_tensor(features, "features")
    scale = np.asarray(scale, dtype=np.float64)
    shift = np.asarray(shift, dtype=np.float64)
    if scale.shape != features.shape or shift.shape != features.shape:
        raise ShapeMismatch(
            f"modulation shapes {scale.shape}/{shift.shape} do not match "
            f"features {features.shape}"
        )
    return features * (scale + 1.0) + shift


def global_average_pool(features: np.ndarray) -> np.ndarray:
    """Squeeze spatial information: (N, C, H, W) -> (N, C) channel means."""
    features = _as_feature_tensor(features, "features")
    return features.mean(axis=(2, 3))


@dataclass(frozen=True)
class DenseParams:
    """One dense layer: weight (out_dim, in_dim) and bias (out_dim,)."""

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        weight = np.asarray(self.weight, dtype=np.float64)
        bias = np.asarray(self.bias, dtype=np.float64)
        if weight.ndim != 2 or bias.ndim != 1 or bias.shape[0] != weight.shape[0]:
            raise ShapeMismatch(
                f"dense layer needs weight (out, in) and bias (out,), got "
                f"{weight.shape} and {bias.shape}"
            )
        object.__setattr__(self, "weight", weight)
        object.__setattr__(self, "bias", bias)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if x.shape[-1] != self.weight.shape[1]:
            raise ShapeMismatch(
                f"input width {x.shape[-1]} does not match layer input "
                f"{self.weight.shape[1]}"
            )
        return x @ self.weight.T + self.bias


def pooled_descriptor(
    features: np.ndarray, projection: DenseParams
) -> np.ndarray:
    """Channel-project features to a common width, then pool: (N, C_out).

    A 1x1 convolution followed by global average pooling; both are linear
    over the spatial dims, so the pooling runs first and the projection is
    applied to the channel means (same result, H*W times cheaper).
    """
    return projection(global_average_pool(features))


def adaptive_weights(
    descriptors: Sequence[np.ndarray], fc1: DenseParams, fc2: DenseParams
) -> np.ndarray:
    """Per-prior scalar gates from pooled descriptors: (N, n) in (0, 1).

    Descriptors are concatenated per batch item and pushed through
    dense -> relu -> dense -> sigmoid; column i gates prior i.
    """
    if not descriptors:
        raise ShapeMismatch("need at least one descriptor")
    mats = []
    batch = None
    for i, d in enumerate(descriptors):
        d = np.asarray(d, dtype=np.float64)
        if d.ndim != 2:
            raise ShapeMismatch(f"descriptor {i} must be (N, C), got {d.shape}")
        if batch is None:
            batch = d.shape[0]
        elif d.shape[0] != batch:
            raise ShapeMismatch(
                f"descriptor {i} batch {d.shape[0]} does not match {batch}"
            )
        mats.append(d)
    stacked = np.concatenate(mats, axis=1)
    hidden = np.maximum(fc1(stacked), 0.0)
    return expit(fc2(hidden))


def apply_prior_weights(
    priors: Sequence[np.ndarray], weights: np.ndarray
) -> list[np.ndarray]:
    """Scale each prior tensor by its per-batch-item scalar weight.

    weights has shape (N, n) for n priors; weight column i broadcasts as
    (N, 1, 1, 1) over prior i.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 2:
        raise ShapeMismatch(f"weights must be (N, n), got shape {weights.shape}")
    if len(priors) != weights.shape[1]:
        raise ShapeMismatch(
            f"{len(priors)} priors but {weights.shape[1]} weight columns"
        )
    out = []
    for i, prior in enumerate(priors):
        prior = _as_feature_tensor(prior, f"prior {i}")
        if prior.shape[0] != weights.shape[0]:
            raise ShapeMismatch(
                f"prior {i} batch {prior.shape[0]} does not match weights "
                f"batch {weights.shape[0]}"
            )
        out.append(prior * weights[:, i].reshape(-1, 1, 1, 1))
    return out


def load_parameter_fixture(path: str | Path) -> dict[str, np.ndarray]:
    """Load named arrays from a JSON fixture with explicit shape metadata.

    Format: {"name": {"shape": [d0, d1, ...], "data": [flat values]}}.
    The flat length must match the product of the declared shape and every
    value must be finite.
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedFile(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise MalformedFile(f"{path}: expected a top-level object")
    arrays = {}
    for name, entry in doc.items():
        if not isinstance(entry, dict) or "shape" not in entry or "data" not in entry:
            raise MalformedFile(f"{path}: entry {name!r} needs 'shape' and 'data'")
        shape = tuple(int(d) for d in entry["shape"])
        data = np.asarray(entry["data"], dtype=np.float64)
        if data.ndim != 1 or data.size != int(np.prod(shape)):
            raise MalformedFile(
                f"{path}: entry {name!r} has {data.size} values for shape {shape}"
            )
        if not np.isfinite(data).all():
            raise MalformedFile(f"{path}: entry {name!r} has non-finite values")
        arrays[name] = data.reshape(shape)
    return arrays

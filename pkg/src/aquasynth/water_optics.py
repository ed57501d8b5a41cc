"""Water types and their per-channel optical coefficients.

Coefficients are absorption ``a`` and scattering ``b`` in 1/m, evaluated at
the three reference wavelengths used throughout the package:

    r -> 650 nm, g -> 525 nm, b -> 450 nm

Values live in an external JSON file (one object per water type, keys
``a_r, a_g, a_b, b_r, b_g, b_b``); nothing in this module hardcodes them.
The packaged table transcribes published measurements and carries its
source citation in the file itself.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import MalformedFile, MissingWaterType, NonPositiveCoefficient

# The ten recognized water types. Identifier strings are part of the file
# and CLI contract.
OPEN_OCEAN_TYPES = ("I", "IA", "IB", "II", "III")
COASTAL_TYPES = ("1C", "3C", "5C", "7C", "9C")
WATER_TYPES = OPEN_OCEAN_TYPES + COASTAL_TYPES

CHANNELS = ("r", "g", "b")

COEFFICIENT_FIELDS = ("a_r", "a_g", "a_b", "b_r", "b_g", "b_b")


def water_class(water_type: str) -> str:
    """Return ``"open-ocean"`` or ``"coastal"`` for a water type identifier."""
    if water_type in OPEN_OCEAN_TYPES:
        return "open-ocean"
    if water_type in COASTAL_TYPES:
        return "coastal"
    raise MissingWaterType(water_type)


@dataclass(frozen=True)
class ChannelCoefficients:
    """Absorption and scattering coefficients (1/m) for the three channels."""

    a_r: float
    a_g: float
    a_b: float
    b_r: float
    b_g: float
    b_b: float

    def absorption(self, channel: str) -> float:
        return getattr(self, f"a_{channel}")

    def scattering(self, channel: str) -> float:
        return getattr(self, f"b_{channel}")


def total_attenuation(coeffs: ChannelCoefficients, channel: str) -> float:
    """Total attenuation a + b (1/m) for one channel.

    Computed as the plain sum, no rearrangement; callers rely on the exact
    identity ``total_attenuation(c, ch) == c.absorption(ch) + c.scattering(ch)``.
    """
    return coeffs.absorption(channel) + coeffs.scattering(channel)


@dataclass(frozen=True)
class CoefficientTable:
    """Immutable mapping of water type -> ChannelCoefficients.

    Safe to share across threads once loaded.
    """

    entries: dict[str, ChannelCoefficients]
    provenance: str = ""

    def __getitem__(self, water_type: str) -> ChannelCoefficients:
        try:
            return self.entries[water_type]
        except KeyError:
            raise MissingWaterType(water_type) from None

    def __contains__(self, water_type: str) -> bool:
        return water_type in self.entries

    def __len__(self) -> int:
        return len(self.entries)


def _validate_entry(water_type: str, raw: dict) -> ChannelCoefficients:
    values = {}
    for field in COEFFICIENT_FIELDS:
        if field not in raw:
            raise MalformedFile(
                f"entry for water type {water_type!r} is missing field {field!r}"
            )
        value = raw[field]
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise MalformedFile(
                f"field {field!r} for water type {water_type!r} is not numeric"
            )
        value = float(value)
        if not math.isfinite(value) or value <= 0.0:
            raise NonPositiveCoefficient(water_type, field, value)
        values[field] = value
    return ChannelCoefficients(**values)


def load_coefficient_table(path: str | Path) -> CoefficientTable:
    """Load and validate a coefficient table from a JSON file.

    The file must contain an entry for every identifier in ``WATER_TYPES``;
    each entry needs the six positive numeric fields ``a_r .. b_b``. An
    optional top-level ``"source"`` string is kept as provenance. Loading
    is idempotent: the same file always yields an equal table.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MalformedFile(f"cannot read coefficient file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedFile(f"coefficient file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedFile(f"coefficient file {path} must contain a JSON object")

    provenance = doc.get("source", "")
    if not isinstance(provenance, str):
        raise MalformedFile("top-level 'source' must be a string")

    entries = {}
    for water_type in WATER_TYPES:
        if water_type not in doc:
            raise MissingWaterType(water_type)
        raw = doc[water_type]
        if not isinstance(raw, dict):
            raise MalformedFile(f"entry for water type {water_type!r} must be an object")
        entries[water_type] = _validate_entry(water_type, raw)

    return CoefficientTable(entries=entries, provenance=provenance)


def default_coefficient_path() -> Path:
    """Path of the coefficient table shipped with the package."""
    return Path(resources.files("aquasynth").joinpath("data/jerlov_coefficients.json"))

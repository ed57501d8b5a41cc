"""Exception types shared across the package."""


class AquaSynthError(Exception):
    """Base class for all errors raised by this package."""


class MalformedFile(AquaSynthError):
    """A data file could not be parsed or has the wrong structure."""


class MissingWaterType(AquaSynthError):
    """A coefficient table lacks an entry for a declared water type."""

    def __init__(self, name: str):
        super().__init__(f"coefficient table has no entry for water type {name!r}")
        self.name = name


class NonPositiveCoefficient(AquaSynthError):
    """An optical coefficient is zero, negative, or not finite."""

    def __init__(self, water_type: str, field: str, value):
        super().__init__(
            f"coefficient {field!r} for water type {water_type!r} must be a "
            f"positive finite number, got {value!r}"
        )
        self.water_type = water_type
        self.field = field
        self.value = value


class OutOfRange(AquaSynthError):
    """A scalar parameter lies outside its documented range."""


class InvalidParams(AquaSynthError):
    """Synthesis parameters violate their invariants."""


class DimensionMismatch(AquaSynthError):
    """Two images or an image/depth pair disagree in shape."""


class DegenerateTransmission(AquaSynthError):
    """Inversion impossible: transmission below the floor at every pixel."""


class DegenerateDepth(AquaSynthError):
    """A raw depth map is constant and cannot be rescaled to a range."""


class NonSquare(AquaSynthError):
    """Rotation augmentation requires a square image."""


class ConfigError(AquaSynthError):
    """A dataset configuration is invalid."""


class SchemaVersionMismatch(AquaSynthError):
    """A manifest was written with an unsupported schema version."""

    def __init__(self, found, expected):
        super().__init__(f"manifest schema version {found!r}, expected {expected!r}")
        self.found = found
        self.expected = expected


class ImageTooSmall(AquaSynthError):
    """An image is smaller than the analysis window of a metric."""


class ShapeMismatch(AquaSynthError):
    """Tensor shapes are incompatible for the requested operation."""

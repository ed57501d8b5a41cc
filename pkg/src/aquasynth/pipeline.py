"""Batch dataset construction from clean RGB-D pairs.

The generator walks every (clean image, water type) combination, samples
per-item parameters from deterministic substreams, synthesizes the
underwater image, and writes image, ground truth and depth copies plus a
manifest that fully determines a bit-identical re-run.

Determinism contract:

- Parameter substreams are keyed by (master_seed, stream tag, water type
  index, image index), never by processing order, so results do not depend
  on worker count or scheduling.
- Split assignment is one seeded permutation of the selected sources,
  shared by all water types: a source is in the same split everywhere.
- Output bytes depend only on the manifest record, the source files, the
  coefficient table and the fixed resampling/quantization conventions in
  ``img_io``.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import img_io
from .ambient import AmbientLight, ambient_light
from .errors import (
    AquaSynthError,
    ConfigError,
    DegenerateDepth,
    InvalidParams,
    NonSquare,
    SchemaVersionMismatch,
)
from .formation import SynthesisParams, synthesize_image
from .water_optics import WATER_TYPES, CoefficientTable

logger = logging.getLogger(__name__)

MANIFEST_SCHEMA_VERSION = 1

AUGMENT_OPS = ("rot90", "rot180", "rot270", "hflip")

# SeedSequence stream tags; keeps parameter, split and selection streams disjoint.
_PARAMS_STREAM = 0
_SPLIT_STREAM = 1
_SELECT_STREAM = 2


def default_water_types() -> list[str]:
    """The nine types used for training by default; 9C is too turbid."""
    return [wt for wt in WATER_TYPES if wt != "9C"]


@dataclass
class DatasetConfig:
    """Configuration for one dataset build. Field names mirror the JSON file."""

    input_dir: str
    output_dir: str
    water_types: list[str] = field(default_factory=default_water_types)
    images_per_type: int = 1000
    split: tuple[int, int] = (700, 300)
    depth_range: tuple[float, float] = (0.25, 20.0)
    D_range: tuple[float, float] = (0.0, 5.0)
    Bg_range: tuple[float, float] = (0.5, 1.0)
    target_size: int = 256
    master_seed: int = 0
    augment: bool = False
    normalize_export: str = "unit-interval"

    def validate(self) -> None:
        unknown = [wt for wt in self.water_types if wt not in WATER_TYPES]
        if unknown:
            raise ConfigError(f"unknown water types {unknown}")
        if len(set(self.water_types)) != len(self.water_types):
            raise ConfigError("water_types contains duplicates")
        if not self.water_types:
            raise ConfigError("water_types is empty")
        if self.images_per_type < 1:
            raise ConfigError("images_per_type must be >= 1")
        train, test = self.split
        if train < 0 or test < 0 or train + test > self.images_per_type:
            raise ConfigError(
                f"split {self.split} incompatible with images_per_type "
                f"{self.images_per_type}"
            )
        d_min, d_max = self.depth_range
        if not 0.0 < d_min < d_max:
            raise ConfigError(f"bad depth_range {self.depth_range}")
        lo, hi = self.D_range
        if not 0.0 <= lo < hi:
            raise ConfigError(f"bad D_range {self.D_range}")
        lo, hi = self.Bg_range
        if not 0.0 < lo < hi <= 1.0:
            raise ConfigError(f"bad Bg_range {self.Bg_range}")
        if self.target_size < 1:
            raise ConfigError("target_size must be >= 1")
        if self.normalize_export not in ("unit-interval", "symmetric-unit"):
            raise ConfigError(
                f"normalize_export must be 'unit-interval' or 'symmetric-unit', "
                f"got {self.normalize_export!r}"
            )

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["split"] = list(self.split)
        doc["depth_range"] = list(self.depth_range)
        doc["D_range"] = list(self.D_range)
        doc["Bg_range"] = list(self.Bg_range)
        doc["water_types"] = list(self.water_types)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "DatasetConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        if "input_dir" not in doc or "output_dir" not in doc:
            raise ConfigError("config requires input_dir and output_dir")
        kwargs = dict(doc)
        for key in ("split", "depth_range", "D_range", "Bg_range"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        if "water_types" in kwargs:
            kwargs["water_types"] = list(kwargs["water_types"])
        config = cls(**kwargs)
        config.validate()
        return config


@dataclass
class SynthesisRecord:
    """One synthesized image: everything needed to reproduce it exactly."""

    source_id: str
    water_type: str
    split: str
    surface_depth: float
    ambient_green: float
    ambient: AmbientLight
    depth_range: tuple[float, float]
    seed: int
    augment_op: str
    image_path: str
    ground_truth_path: str
    depth_path: str

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["depth_range"] = list(self.depth_range)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "SynthesisRecord":
        kwargs = dict(doc)
        kwargs["ambient"] = AmbientLight(**kwargs["ambient"])
        kwargs["depth_range"] = tuple(kwargs["depth_range"])
        return cls(**kwargs)


def rescale_depth(raw: np.ndarray, d_min: float, d_max: float) -> np.ndarray:
    """Affinely map a raw depth map onto [d_min, d_max], order-preserving.

    The per-image minimum lands on d_min and the maximum on d_max, so every
    output covers the full target range regardless of the raw units.

    Raises:
        DegenerateDepth: the raw map is constant.
        InvalidParams: non-finite input or empty map or bad target range.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.size == 0:
        raise InvalidParams("depth map is empty")
    if not np.isfinite(raw).all():
        raise InvalidParams("depth map contains non-finite values")
    if not d_min < d_max:
        raise InvalidParams(f"bad target range ({d_min}, {d_max})")
    raw_min = float(raw.min())
    raw_max = float(raw.max())
    if raw_min == raw_max:
        raise DegenerateDepth(f"depth map is constant at {raw_min}")
    return (raw - raw_min) / (raw_max - raw_min) * (d_max - d_min) + d_min


def _item_seed_sequence(
    master_seed: int, image_index: int, water_type: str
) -> np.random.SeedSequence:
    type_index = WATER_TYPES.index(water_type)
    return np.random.SeedSequence(
        [master_seed, _PARAMS_STREAM, type_index, image_index]
    )


def sample_params(
    master_seed: int, image_index: int, water_type: str, config: DatasetConfig
) -> SynthesisParams:
    """Draw per-item synthesis parameters from a deterministic substream.

    The stream is keyed by (master_seed, water type, image index) only, so
    the draw is independent of processing order and worker count. Draw
    order within the stream is fixed: surface depth, then green ambient,
    then the augmentation op (consumed even when augmentation is off).
    """
    seq = _item_seed_sequence(master_seed, image_index, water_type)
    rng = np.random.default_rng(seq)
    surface_depth = float(rng.uniform(*config.D_range))
    green = float(rng.uniform(*config.Bg_range))
    seed = int(seq.generate_state(1, np.uint64)[0])
    return SynthesisParams(
        water_type=water_type,
        surface_depth=surface_depth,
        ambient_green=green,
        depth_range=config.depth_range,
        seed=seed,
    )


def _sample_augment_op(
    master_seed: int, image_index: int, water_type: str, config: DatasetConfig
) -> str:
    # Same stream as sample_params, third draw.
    rng = np.random.default_rng(
        _item_seed_sequence(master_seed, image_index, water_type)
    )
    rng.uniform(*config.D_range)
    rng.uniform(*config.Bg_range)
    choice = int(rng.integers(0, len(AUGMENT_OPS) + 1))
    return "none" if choice == len(AUGMENT_OPS) else AUGMENT_OPS[choice]


def augment(image: np.ndarray, op: str) -> np.ndarray:
    """Apply an exact pixel-permutation augmentation (no interpolation).

    Works on (H, W) and (H, W, C) arrays. Rotations require a square
    image; "none" is accepted and returns a copy.
    """
    image = np.asarray(image)
    if op == "none":
        return image.copy()
    if op not in AUGMENT_OPS:
        raise InvalidParams(f"unknown augmentation op {op!r}")
    if op.startswith("rot"):
        if image.shape[0] != image.shape[1]:
            raise NonSquare(
                f"rotation needs a square image, got {image.shape[0]}x{image.shape[1]}"
            )
        k = {"rot90": 1, "rot180": 2, "rot270": 3}[op]
        return np.ascontiguousarray(np.rot90(image, k))
    return np.ascontiguousarray(image[:, ::-1])


@dataclass
class SourcePair:
    """A clean image and its raw depth map on disk."""

    source_id: str
    rgb_path: Path
    depth_path: Path


@dataclass
class ItemFailure:
    source_id: str
    water_type: str
    message: str


@dataclass
class DatasetResult:
    records: list[SynthesisRecord]
    failures: list[ItemFailure]
    manifest_path: Path | None


def discover_sources(input_dir: str | Path) -> tuple[list[SourcePair], list[ItemFailure]]:
    """Find <id>.png + <id>.depth.{pgm,png} pairs in a flat directory.

    Returns the readable pairs sorted by id, plus failures for clean
    images without a depth sibling.
    """
    input_dir = Path(input_dir)
    if not input_dir.is_dir():
        raise ConfigError(f"input directory {input_dir} does not exist")
    pairs = []
    failures = []
    for rgb_path in sorted(input_dir.glob("*.png")):
        name = rgb_path.name
        if name.endswith(".depth.png") or name.endswith(".gt.png"):
            continue
        source_id = rgb_path.stem
        depth_path = None
        for candidate in (f"{source_id}.depth.pgm", f"{source_id}.depth.png"):
            if (input_dir / candidate).is_file():
                depth_path = input_dir / candidate
                break
        if depth_path is None:
            failures.append(
                ItemFailure(source_id, "", f"no depth file for {name}")
            )
            continue
        pairs.append(SourcePair(source_id, rgb_path, depth_path))
    return pairs, failures


def _select_sources(source_ids: list[str], config: DatasetConfig) -> list[str]:
    if len(source_ids) < config.images_per_type:
        raise ConfigError(
            f"need {config.images_per_type} sources, found {len(source_ids)}"
        )
    source_ids = sorted(source_ids)
    if len(source_ids) == config.images_per_type:
        return source_ids
    rng = np.random.default_rng(
        np.random.SeedSequence([config.master_seed, _SELECT_STREAM])
    )
    chosen = rng.choice(len(source_ids), size=config.images_per_type, replace=False)
    return sorted(source_ids[i] for i in chosen)


def _split_labels(config: DatasetConfig) -> list[str]:
    train, test = config.split
    rng = np.random.default_rng(
        np.random.SeedSequence([config.master_seed, _SPLIT_STREAM])
    )
    order = rng.permutation(config.images_per_type)
    labels = ["extra"] * config.images_per_type
    for pos in order[:train]:
        labels[pos] = "train"
    for pos in order[train : train + test]:
        labels[pos] = "test"
    return labels


def plan_dataset(
    config: DatasetConfig, table: CoefficientTable, source_ids: list[str]
) -> list[SynthesisRecord]:
    """Build the full record list without touching any pixel data.

    Selection, split assignment and parameter sampling happen here; the
    records returned are exactly the ones a full run would write to the
    manifest, in deterministic (water type, source) order.
    """
    config.validate()
    selected = _select_sources(source_ids, config)
    labels = _split_labels(config)
    records = []
    for water_type in config.water_types:
        coeffs = table[water_type]
        for index, source_id in enumerate(selected):
            params = sample_params(config.master_seed, index, water_type, config)
            light = ambient_light(
                coeffs,
                params.surface_depth,
                params.ambient_green,
                max_surface_depth=config.D_range[1],
            )
            split = labels[index]
            op = "none"
            if config.augment and split == "train":
                op = _sample_augment_op(config.master_seed, index, water_type, config)
            stem = f"{water_type}/{split}/{source_id}"
            records.append(
                SynthesisRecord(
                    source_id=source_id,
                    water_type=water_type,
                    split=split,
                    surface_depth=params.surface_depth,
                    ambient_green=params.ambient_green,
                    ambient=light,
                    depth_range=config.depth_range,
                    seed=params.seed,
                    augment_op=op,
                    image_path=f"{stem}.png",
                    ground_truth_path=f"{stem}.gt.png",
                    depth_path=f"{stem}.depth.png",
                )
            )
    return records


def synthesize_record(
    record: SynthesisRecord,
    config: DatasetConfig,
    table: CoefficientTable,
    source: SourcePair,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Run one record's synthesis steps; returns (image, ground truth, depth).

    Image and ground truth come back as uint8, depth in meters; these are
    exactly the arrays the exported files store.
    """
    clean = img_io.read_rgb(source.rgb_path, size=config.target_size)
    raw_depth = img_io.read_depth(source.depth_path, size=config.target_size)
    depth = rescale_depth(raw_depth, *record.depth_range)
    params = SynthesisParams(
        water_type=record.water_type,
        surface_depth=record.surface_depth,
        ambient_green=record.ambient_green,
        depth_range=record.depth_range,
        seed=record.seed,
    )
    synthesized = synthesize_image(
        clean, depth, table[record.water_type], params,
        max_surface_depth=config.D_range[1],
    )
    image = augment(img_io.quantize_unit(synthesized), record.augment_op)
    ground_truth = augment(img_io.quantize_unit(clean), record.augment_op)
    depth_out = augment(depth, record.augment_op)
    return image, ground_truth, depth_out


def _run_item(
    record: SynthesisRecord,
    config: DatasetConfig,
    table: CoefficientTable,
    source: SourcePair,
    output_dir: Path,
) -> ItemFailure | None:
    try:
        image, ground_truth, depth = synthesize_record(record, config, table, source)
        image_path = output_dir / record.image_path
        image_path.parent.mkdir(parents=True, exist_ok=True)
        img_io.write_rgb_u8(image_path, image)
        img_io.write_rgb_u8(output_dir / record.ground_truth_path, ground_truth)
        img_io.write_depth(output_dir / record.depth_path, depth)
        return None
    except (OSError, AquaSynthError) as exc:
        logger.warning(
            "item %s/%s failed: %s", record.water_type, record.source_id, exc
        )
        return ItemFailure(record.source_id, record.water_type, str(exc))


def generate_dataset(
    config: DatasetConfig, table: CoefficientTable, workers: int = 1
) -> DatasetResult:
    """Generate the full dataset and write its manifest.

    Items are independent; ``workers`` only changes wall time, never output
    bytes. Per-item failures are collected and reported, the batch
    continues; the manifest holds only successful records.
    """
    config.validate()
    sources, failures = discover_sources(config.input_dir)
    if not sources:
        raise ConfigError(f"no source pairs found in {config.input_dir}")
    by_id = {pair.source_id: pair for pair in sources}

    records = plan_dataset(config, table, list(by_id))
    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)

    def run(record: SynthesisRecord) -> ItemFailure | None:
        return _run_item(record, config, table, by_id[record.source_id], output_dir)

    if workers <= 1:
        outcomes = [run(record) for record in records]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, records))

    failed_keys = set()
    for record, outcome in zip(records, outcomes):
        if outcome is not None:
            failures.append(outcome)
            failed_keys.add((record.water_type, record.source_id))
    kept = [
        r for r in records if (r.water_type, r.source_id) not in failed_keys
    ]

    manifest_path = output_dir / "manifest.json"
    write_manifest(kept, manifest_path, config=config)
    logger.info(
        "dataset complete: %d records, %d failures", len(kept), len(failures)
    )
    return DatasetResult(records=kept, failures=failures, manifest_path=manifest_path)


@dataclass
class Manifest:
    records: list[SynthesisRecord]
    config: DatasetConfig | None = None


def write_manifest(
    records: list[SynthesisRecord],
    path: str | Path,
    config: DatasetConfig | None = None,
) -> None:
    """Write records (and optionally the config) as deterministic JSON.

    Keys are sorted and floats use shortest round-trip repr, so identical
    records always produce identical bytes.
    """
    doc = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "records": [r.to_dict() for r in records],
    }
    if config is not None:
        doc["config"] = config.to_dict()
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def read_manifest(path: str | Path) -> Manifest:
    """Read a manifest back; lossless inverse of ``write_manifest``."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    version = doc.get("schema_version")
    if version != MANIFEST_SCHEMA_VERSION:
        raise SchemaVersionMismatch(version, MANIFEST_SCHEMA_VERSION)
    records = [SynthesisRecord.from_dict(raw) for raw in doc["records"]]
    config = None
    if "config" in doc:
        config = DatasetConfig.from_dict(doc["config"])
    return Manifest(records=records, config=config)


def verify_record(
    record: SynthesisRecord,
    config: DatasetConfig,
    table: CoefficientTable,
    input_dir: str | Path | None = None,
) -> bool:
    """Re-synthesize a record and compare against the exported image bytes."""
    input_dir = Path(input_dir if input_dir is not None else config.input_dir)
    sources, _ = discover_sources(input_dir)
    by_id = {pair.source_id: pair for pair in sources}
    if record.source_id not in by_id:
        raise ConfigError(f"source {record.source_id!r} not found in {input_dir}")
    image, _, _ = synthesize_record(record, config, table, by_id[record.source_id])
    stored = img_io.read_rgb(Path(config.output_dir) / record.image_path)
    return np.array_equal(img_io.quantize_unit(stored), image)

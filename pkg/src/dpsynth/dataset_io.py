"""Readers and writers for every on-disk format the pipeline touches.

Input formats: IDX image/label pairs (big-endian), CIFAR-10 binary batches
(3073-byte records), and numeric CSV with a header row. Output formats: the
synthetic container (little-endian, magic "DPCD") and binary PGM/PPM
preview grids.

Labels are remapped to contiguous {1..K} at load time and the original
values are kept in ``label_values`` (class k corresponds to
``label_values[k-1]``). IDX and CIFAR remap distinct byte values in numeric
order; CSV preserves order of first appearance.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import (
    ConfigurationError,
    DataError,
    DatasetConsistencyError,
    DatasetFormatError,
    DatasetLengthError,
    DatasetParseError,
    DimensionError,
)

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801
CIFAR_RECORD_BYTES = 3073
CONTAINER_MAGIC = b"DPCD"
CONTAINER_VERSION = 1
CONTAINER_HEADER = struct.Struct("<4sHHQQII")  # magic, version, pad, T, d_x, K, pad


def _freeze(*arrays: np.ndarray) -> None:
    for a in arrays:
        a.flags.writeable = False


@dataclass(frozen=True, eq=False)
class Dataset:
    """A labeled feature matrix with contiguous integer classes.

    ``class_count`` of 1 can occur for degenerate fixtures; synthesis
    requires at least two classes and checks at its own entry point.
    """

    features: np.ndarray  # (N, d_x) float64
    labels: np.ndarray  # (N,) int64 in {1..K}
    class_count: int
    source_name: str
    label_values: tuple = ()

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise DimensionError(f"features must be (N, d_x) with N >= 1, got {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise DatasetConsistencyError(
                f"{self.labels.shape[0]} labels for {self.features.shape[0]} rows"
            )
        if not np.isfinite(self.features).all():
            raise ValueError("features contain non-finite values")
        if self.class_count < 1:
            raise ConfigurationError("class_count must be >= 1")
        if self.labels.min() < 1 or self.labels.max() > self.class_count:
            raise ValueError(
                f"labels must lie in 1..{self.class_count}, found "
                f"[{self.labels.min()}, {self.labels.max()}]"
            )
        _freeze(self.features, self.labels)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d_x(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count + 1)[1:]


@dataclass(frozen=True, eq=False)
class SyntheticDataset:
    """Synthesized samples plus the provenance metadata embedded on write.

    Generation is class-balanced (per-class targets differ by at most 1;
    metadata carries them as ``generated_per_class``), but the stored labels
    are the argmax-decoded noisy one-hots, which label noise can flip, so
    no balance constraint applies to them.
    """

    features: np.ndarray  # (T', d_x) float
    labels: np.ndarray  # (T',) int in {1..K}
    class_count: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise DimensionError(f"features must be (T, d_x) with T >= 1, got {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise DatasetConsistencyError(
                f"{self.labels.shape[0]} labels for {self.features.shape[0]} rows"
            )
        if not np.isfinite(self.features).all():
            raise ValueError("synthetic features contain non-finite values")
        if self.class_count < 1 or self.labels.min() < 1 or self.labels.max() > self.class_count:
            raise ValueError("labels must lie in 1..class_count")
        _freeze(self.features, self.labels)

    @property
    def t(self) -> int:
        return self.features.shape[0]

    @property
    def d_x(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class PreviewGrid:
    """Geometry of a preview image: rows x cols cells of cell_height x cell_width.

    ``color`` is "gray" (d_x = h*w) or "rgb" (d_x = 3*h*w, channel-planar as
    in the CIFAR layout). ``pixel_range`` overrides the rescaling range;
    None means the min/max of the displayed samples.
    """

    rows: int
    cols: int
    cell_height: int
    cell_width: int
    color: str = "gray"
    pixel_range: Optional[tuple] = None

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ConfigurationError("grid must have positive rows and cols")
        if self.cell_height < 1 or self.cell_width < 1:
            raise ConfigurationError("cells must have positive dimensions")
        if self.color not in ("gray", "rgb"):
            raise ConfigurationError(f"color must be 'gray' or 'rgb', got {self.color!r}")


def _remap_sorted(raw: np.ndarray, source: str):
    values = np.unique(raw)
    lookup = {int(v): k + 1 for k, v in enumerate(values)}
    labels = np.array([lookup[int(v)] for v in raw], dtype=np.int64)
    return labels, len(values), tuple(int(v) for v in values)


def _read_exact(f, nbytes: int, what: str, path) -> bytes:
    data = f.read(nbytes)
    if len(data) != nbytes:
        raise DatasetLengthError(
            f"{path}: truncated {what}: expected {nbytes} bytes, got {len(data)}"
        )
    return data


def load_idx(images_path, labels_path) -> Dataset:
    """Parse a big-endian IDX image/label file pair."""
    images_path, labels_path = Path(images_path), Path(labels_path)
    with open(images_path, "rb") as f:
        magic, count, rows, cols = struct.unpack(">IIII", _read_exact(f, 16, "IDX image header", images_path))
        if magic != IDX_IMAGE_MAGIC:
            raise DatasetFormatError(
                f"{images_path}: bad IDX image magic 0x{magic:08x}, expected 0x{IDX_IMAGE_MAGIC:08x}"
            )
        pixels = _read_exact(f, count * rows * cols, "IDX pixel payload", images_path)
        if f.read(1):
            raise DatasetLengthError(f"{images_path}: trailing bytes after pixel payload")
    with open(labels_path, "rb") as f:
        magic, label_count = struct.unpack(">II", _read_exact(f, 8, "IDX label header", labels_path))
        if magic != IDX_LABEL_MAGIC:
            raise DatasetFormatError(
                f"{labels_path}: bad IDX label magic 0x{magic:08x}, expected 0x{IDX_LABEL_MAGIC:08x}"
            )
        raw_labels = _read_exact(f, label_count, "IDX label payload", labels_path)
        if f.read(1):
            raise DatasetLengthError(f"{labels_path}: trailing bytes after label payload")
    if count != label_count:
        raise DatasetConsistencyError(
            f"{count} images in {images_path} but {label_count} labels in {labels_path}"
        )
    features = np.frombuffer(pixels, dtype=np.uint8).reshape(count, rows * cols).astype(np.float64)
    labels, k, values = _remap_sorted(np.frombuffer(raw_labels, dtype=np.uint8), str(images_path))
    return Dataset(
        features=features,
        labels=labels,
        class_count=k,
        source_name=images_path.name,
        label_values=values,
    )


def load_cifar10(directory) -> Dataset:
    """Parse CIFAR-10 binary batches (data_batch_*.bin) from a directory.

    Accepts any whole number of 3073-byte records per file; the canonical
    training set is five 30,730,000-byte batches.
    """
    directory = Path(directory)
    files = sorted(directory.glob("data_batch_*.bin"))
    if not files:
        raise DatasetFormatError(f"{directory}: no data_batch_*.bin files found")
    parts = []
    raw_labels = []
    for path in files:
        blob = path.read_bytes()
        if len(blob) == 0 or len(blob) % CIFAR_RECORD_BYTES != 0:
            raise DatasetFormatError(
                f"{path}: size {len(blob)} is not a positive multiple of {CIFAR_RECORD_BYTES}"
            )
        records = np.frombuffer(blob, dtype=np.uint8).reshape(-1, CIFAR_RECORD_BYTES)
        if records[:, 0].max() > 9:
            raise DataError(f"{path}: label byte {records[:, 0].max()} exceeds 9")
        raw_labels.append(records[:, 0])
        parts.append(records[:, 1:])
    features = np.concatenate(parts).astype(np.float64)
    labels, k, values = _remap_sorted(np.concatenate(raw_labels), str(directory))
    return Dataset(
        features=features,
        labels=labels,
        class_count=k,
        source_name=directory.name,
        label_values=values,
    )


def load_csv(path, label_column) -> Dataset:
    """Parse a rectangular numeric CSV with a header row.

    ``label_column`` is a header name or 0-based column index; that column
    must hold integers. Classes are numbered by order of first appearance.
    """
    path = Path(path)
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError(f"{path}: empty file") from None
        if isinstance(label_column, int):
            if not 0 <= label_column < len(header):
                raise ConfigurationError(
                    f"label column index {label_column} out of range for {len(header)} columns"
                )
            label_idx = label_column
        else:
            try:
                label_idx = header.index(label_column)
            except ValueError:
                raise ConfigurationError(
                    f"label column {label_column!r} not in header {header}"
                ) from None
        feature_cols = [j for j in range(len(header)) if j != label_idx]
        rows = []
        raw_labels = []
        for r, fields in enumerate(reader, start=1):
            if len(fields) != len(header):
                raise DatasetFormatError(
                    f"{path}: row {r}: expected {len(header)} fields, got {len(fields)}"
                )
            try:
                raw_labels.append(int(fields[label_idx]))
            except ValueError:
                raise DatasetParseError(
                    f"{path}: row {r}, column {header[label_idx]!r}: "
                    f"cannot parse {fields[label_idx]!r} as an integer label"
                ) from None
            row = np.empty(len(feature_cols))
            for out_j, j in enumerate(feature_cols):
                try:
                    row[out_j] = float(fields[j])
                except ValueError:
                    raise DatasetParseError(
                        f"{path}: row {r}, column {header[j]!r}: "
                        f"cannot parse {fields[j]!r} as a number"
                    ) from None
            rows.append(row)
    if not rows:
        raise DatasetFormatError(f"{path}: no data rows")
    seen = {}
    for v in raw_labels:
        if v not in seen:
            seen[v] = len(seen) + 1
    labels = np.array([seen[v] for v in raw_labels], dtype=np.int64)
    return Dataset(
        features=np.vstack(rows),
        labels=labels,
        class_count=len(seen),
        source_name=path.name,
        label_values=tuple(seen.keys()),
    )


def _canonical_metadata(metadata: dict) -> bytes:
    # Deterministic serialization: container bytes must be identical across
    # runs for identical contents.
    return json.dumps(metadata, sort_keys=True, separators=(",", ":")).encode("utf-8")


def write_synthetic(ds: SyntheticDataset, path, format: str = "container") -> None:
    """Write a synthetic dataset as the binary container or as CSV.

    Container layout (little-endian): 32-byte header (magic "DPCD", u16
    version=1, u16 reserved, u64 T, u64 d_x, u32 K, u32 reserved), T*d_x
    float32 features row-major, T u8 labels in 1..K, then a u32
    length-prefixed UTF-8 JSON metadata blob.
    """
    path = Path(path)
    if format == "container":
        if ds.class_count > 255:
            raise ConfigurationError("container labels are u8: class_count must be <= 255")
        header = CONTAINER_HEADER.pack(
            CONTAINER_MAGIC, CONTAINER_VERSION, 0, ds.t, ds.d_x, ds.class_count, 0
        )
        meta = _canonical_metadata(ds.metadata)
        with open(path, "wb") as f:
            f.write(header)
            f.write(np.ascontiguousarray(ds.features, dtype="<f4").tobytes())
            f.write(ds.labels.astype("<u1").tobytes())
            f.write(struct.pack("<I", len(meta)))
            f.write(meta)
    elif format == "csv":
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow([f"f{j}" for j in range(ds.d_x)] + ["label"])
            for row, label in zip(np.asarray(ds.features, dtype=np.float64), ds.labels):
                writer.writerow([repr(float(v)) for v in row] + [int(label)])
    else:
        raise ConfigurationError(f"unknown output format {format!r}")


def read_synthetic(path) -> SyntheticDataset:
    """Inverse of write_synthetic for the container format (float32 features)."""
    path = Path(path)
    with open(path, "rb") as f:
        header = _read_exact(f, CONTAINER_HEADER.size, "container header", path)
        magic, version, _, t, d_x, k, _ = CONTAINER_HEADER.unpack(header)
        if magic != CONTAINER_MAGIC:
            raise DatasetFormatError(f"{path}: bad container magic {magic!r}")
        if version != CONTAINER_VERSION:
            raise DatasetFormatError(f"{path}: unsupported container version {version}")
        features = np.frombuffer(
            _read_exact(f, t * d_x * 4, "feature payload", path), dtype="<f4"
        ).reshape(t, d_x)
        labels = np.frombuffer(
            _read_exact(f, t, "label payload", path), dtype=np.uint8
        ).astype(np.int64)
        (meta_len,) = struct.unpack("<I", _read_exact(f, 4, "metadata length", path))
        meta = json.loads(_read_exact(f, meta_len, "metadata blob", path).decode("utf-8"))
        if f.read(1):
            raise DatasetLengthError(f"{path}: trailing bytes after metadata blob")
    return SyntheticDataset(
        features=features, labels=labels, class_count=k, metadata=meta
    )


def render_preview_grid(ds: SyntheticDataset, grid: PreviewGrid, out) -> None:
    """Write a binary PGM (gray) or PPM (rgb) of the first rows*cols samples.

    Cells are placed in storage order, rescaled jointly (one min/max for the
    whole grid) to 0..255.
    """
    cells = grid.rows * grid.cols
    if cells > ds.t:
        raise ConfigurationError(f"grid wants {cells} samples but dataset has {ds.t}")
    hw = grid.cell_height * grid.cell_width
    planes = 1 if grid.color == "gray" else 3
    if ds.d_x != planes * hw:
        raise DimensionError(
            f"d_x={ds.d_x} incompatible with {grid.color} cells of "
            f"{grid.cell_height}x{grid.cell_width}"
        )
    shown = np.asarray(ds.features[:cells], dtype=np.float64)
    lo, hi = grid.pixel_range if grid.pixel_range is not None else (shown.min(), shown.max())
    if hi > lo:
        scaled = np.clip(np.rint((shown - lo) / (hi - lo) * 255.0), 0, 255).astype(np.uint8)
    else:
        scaled = np.zeros(shown.shape, dtype=np.uint8)
    height, width = grid.rows * grid.cell_height, grid.cols * grid.cell_width
    if grid.color == "gray":
        canvas = np.zeros((height, width), dtype=np.uint8)
        cell_shape = (grid.cell_height, grid.cell_width)
    else:
        canvas = np.zeros((height, width, 3), dtype=np.uint8)
        cell_shape = (3, grid.cell_height, grid.cell_width)
    for i in range(cells):
        r, c = divmod(i, grid.cols)
        cell = scaled[i].reshape(cell_shape)
        if grid.color == "rgb":
            cell = cell.transpose(1, 2, 0)  # planar to interleaved
        canvas[
            r * grid.cell_height : (r + 1) * grid.cell_height,
            c * grid.cell_width : (c + 1) * grid.cell_width,
        ] = cell
    code = b"P5" if grid.color == "gray" else b"P6"
    with open(Path(out), "wb") as f:
        f.write(code + b"\n%d %d\n255\n" % (width, height))
        f.write(canvas.tobytes())

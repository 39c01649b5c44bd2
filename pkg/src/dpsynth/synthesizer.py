"""Generation loop: per-class uniform mixing plus Gaussian noise.

Each synthetic sample of class k averages ``l`` distinct records sampled
uniformly without replacement from class k (partial Fisher-Yates), adds
N(0, sigma_x^2) per feature coordinate, averages the matching one-hot rows,
adds N(0, sigma_y^2) per label coordinate, and argmax-decodes the label
(ties break to the lowest class index).

Determinism contract: every output sample owns a counter-derived stream,

    Philox(SeedSequence(entropy=seed, spawn_key=(class_id, sample_index))),

with class_id 1-based and sample_index 0-based within its class. Within a
stream the draw order is fixed: one vectorized ``integers`` call for the l
selection offsets, then ``standard_normal(d_x)`` if sigma_x > 0, then
``standard_normal(K)`` if sigma_y > 0. Results are therefore a pure
function of (dataset, config), independent of worker count or scheduling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataset_io import Dataset, SyntheticDataset
from .errors import ConfigurationError, DimensionError, InsufficientClassSizeError
from .preprocess import one_hot

# Preprocessed rows may exceed the clip bound by float rounding only.
_NORM_SLACK = 1e-9


@dataclass(frozen=True)
class SynthesisConfig:
    """Everything that determines a synthesis run."""

    l: int
    t: int
    sigma_x: float
    sigma_y: float
    seed: int
    c: float = 1.0

    def __post_init__(self):
        if self.l < 1:
            raise ConfigurationError(f"order of mixture must be >= 1, got {self.l}")
        if self.t < 1:
            raise ConfigurationError(f"synthetic sample count must be >= 1, got {self.t}")
        if self.sigma_x < 0 or self.sigma_y < 0:
            raise ConfigurationError("noise standard deviations must be nonnegative")
        if not self.c > 0:
            raise ConfigurationError(f"clipping bound must be positive, got {self.c}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        return {
            "l": self.l,
            "t": self.t,
            "sigma_x": self.sigma_x,
            "sigma_y": self.sigma_y,
            "c": self.c,
            "seed": self.seed,
        }


@dataclass(frozen=True, eq=False)
class ClassIndex:
    """Row indices of each class, preserving original row order."""

    class_count: int
    indices: tuple  # tuple of int64 arrays, entry k-1 for class k

    @property
    def counts(self) -> tuple:
        return tuple(len(a) for a in self.indices)

    @property
    def min_count(self) -> int:
        return min(self.counts)


def partition_by_class(ds: Dataset) -> ClassIndex:
    """Split row indices by class; every class 1..K must be nonempty."""
    if ds.class_count < 2:
        raise ConfigurationError(
            f"synthesis needs at least 2 classes, dataset has {ds.class_count}"
        )
    groups = []
    for k in range(1, ds.class_count + 1):
        idx = np.flatnonzero(ds.labels == k)
        if idx.size == 0:
            raise ConfigurationError(f"class {k} has no samples")
        idx.flags.writeable = False
        groups.append(idx)
    return ClassIndex(class_count=ds.class_count, indices=tuple(groups))


def sample_indices(class_rows: np.ndarray, l: int, rng: np.random.Generator) -> np.ndarray:
    """Draw l distinct entries uniformly from class_rows (partial Fisher-Yates).

    Every size-l subset is equally likely under the stream; one vectorized
    ``integers`` call consumes the randomness.
    """
    n = len(class_rows)
    if l > n:
        raise InsufficientClassSizeError(
            f"insufficient class size: cannot draw {l} distinct samples "
            f"from a class of size {n}"
        )
    pool = np.array(class_rows)
    offsets = rng.integers(0, n - np.arange(l))
    for i in range(l):
        j = i + offsets[i]
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:l]


def synthesize_sample(
    rows: np.ndarray,
    onehots: np.ndarray,
    sigma_x: float,
    sigma_y: float,
    rng: np.random.Generator,
):
    """Mix l rows into one sample: (features, noisy one-hot, decoded label)."""
    if rows.ndim != 2 or onehots.ndim != 2 or rows.shape[0] != onehots.shape[0]:
        raise DimensionError(
            f"rows {rows.shape} and one-hots {onehots.shape} must pair up"
        )
    x = rows.mean(axis=0)
    if sigma_x > 0:
        x = x + sigma_x * rng.standard_normal(rows.shape[1])
    y = onehots.mean(axis=0)
    if sigma_y > 0:
        y = y + sigma_y * rng.standard_normal(onehots.shape[1])
    return x, y, int(np.argmax(y)) + 1


def _sample_stream(seed: int, class_id: int, sample_index: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(class_id, sample_index)))
    )


def class_targets(t: int, class_count: int) -> list:
    """Per-class sample counts: floor(T/K) each, remainder to the lowest ids."""
    base, extra = divmod(t, class_count)
    return [base + (1 if k <= extra else 0) for k in range(1, class_count + 1)]


def synthesize_dataset(
    ds: Dataset, config: SynthesisConfig, threads: int = 1
) -> SyntheticDataset:
    """Generate the full class-balanced synthetic dataset.

    ``ds`` must already be preprocessed (z-scored, clipped to config.c).
    Output rows are class-major: all class-1 samples first, in sample-index
    order. ``threads`` parallelizes over samples without affecting results.
    """
    index = partition_by_class(ds)
    if config.l > index.min_count:
        raise InsufficientClassSizeError(
            f"insufficient class size: order of mixture {config.l} exceeds "
            f"smallest class size {index.min_count}"
        )
    max_norm = float(np.linalg.norm(ds.features, axis=1).max())
    if max_norm > config.c * (1.0 + _NORM_SLACK):
        raise ConfigurationError(
            f"dataset does not look preprocessed: max row norm {max_norm:.6g} "
            f"exceeds the clipping bound c={config.c:.6g}"
        )
    if threads < 1:
        raise ConfigurationError(f"threads must be >= 1, got {threads}")

    onehots = one_hot(ds.labels, ds.class_count)
    targets = class_targets(config.t, ds.class_count)
    offsets = np.concatenate([[0], np.cumsum(targets)])
    out_x = np.empty((config.t, ds.d_x))
    out_labels = np.empty(config.t, dtype=np.int64)

    jobs = [
        (k, s, offsets[k - 1] + s)
        for k in range(1, ds.class_count + 1)
        for s in range(targets[k - 1])
    ]

    def run(job):
        k, s, row = job
        rng = _sample_stream(config.seed, k, s)
        picked = sample_indices(index.indices[k - 1], config.l, rng)
        x, _, label = synthesize_sample(
            ds.features[picked], onehots[picked], config.sigma_x, config.sigma_y, rng
        )
        out_x[row] = x
        out_labels[row] = label

    if threads == 1:
        for job in jobs:
            run(job)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, jobs, chunksize=max(1, len(jobs) // (8 * threads))))

    metadata = {
        "config": config.to_dict(),
        "generated_per_class": targets,
        "source": {
            "name": ds.source_name,
            "n": ds.n,
            "d_x": ds.d_x,
            "class_count": ds.class_count,
            "class_counts": [int(v) for v in ds.class_counts()],
            "label_values": list(ds.label_values),
        },
    }
    return SyntheticDataset(
        features=out_x,
        labels=out_labels,
        class_count=ds.class_count,
        metadata=metadata,
    )

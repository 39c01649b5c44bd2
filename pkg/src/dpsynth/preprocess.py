"""Two-stage feature normalization and label encoding ahead of synthesis.

Features are z-scored per column (population statistics, divide-by-N) and
then clipped to an l2 ball of radius c; labels become one-hot rows. The
clipping radius is what bounds each record's contribution to a mixed
sample, so c is part of the privacy accounting inputs.

Privacy note: the normalization statistics are computed on the full private
dataset and are never released. They are used only inside the pipeline, and
the privacy accounting deliberately does not charge for them; only the
synthetic samples are published.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionError

# Columns whose population std falls below this carry no information; their
# z-scores are defined as exactly 0 instead of dividing by ~0.
DEGENERATE_STD_TOL = 1e-12

# Rows already within c * (1 + this) are passed through bit-identically,
# which also makes clipping exactly idempotent.
_CLIP_SLACK = 1e-12


@dataclass(frozen=True)
class ClipParam:
    """l2-norm bound applied after z-scoring (normalized feature units)."""

    c: float = 1.0

    def __post_init__(self):
        if not self.c > 0:
            raise ConfigurationError(f"clipping bound must be positive, got {self.c}")


@dataclass(frozen=True, eq=False)
class FeatureStats:
    """Per-column population mean/std plus a mask of degenerate columns."""

    means: np.ndarray
    stds: np.ndarray
    degenerate_mask: np.ndarray

    @property
    def width(self) -> int:
        return self.means.shape[0]


def zscore_fit(features: np.ndarray) -> FeatureStats:
    """Population mean and divide-by-N standard deviation per column."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 1:
        raise DimensionError(f"expected a nonempty 2-d matrix, got shape {features.shape}")
    if not np.isfinite(features).all():
        raise ValueError("features contain non-finite values")
    means = features.mean(axis=0)
    stds = features.std(axis=0)  # ddof=0: population form
    mask = stds < DEGENERATE_STD_TOL
    for a in (means, stds, mask):
        a.flags.writeable = False
    return FeatureStats(means=means, stds=stds, degenerate_mask=mask)


def zscore_apply(features: np.ndarray, stats: FeatureStats) -> np.ndarray:
    """(x - mean) / std per column; degenerate columns map to exactly 0."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != stats.width:
        raise DimensionError(
            f"feature width {features.shape[-1] if features.ndim == 2 else '?'} "
            f"does not match fitted width {stats.width}"
        )
    denom = np.where(stats.degenerate_mask, 1.0, stats.stds)
    out = (features - stats.means) / denom
    out[:, stats.degenerate_mask] = 0.0
    return out


def clip_l2(features: np.ndarray, clip: ClipParam | float) -> np.ndarray:
    """Scale each row onto the l2 ball of radius c: x / max(1, ||x||/c).

    Rows already inside the ball are returned bit-identically, so the
    operation is exactly idempotent and never changes a row's direction.
    """
    c = clip.c if isinstance(clip, ClipParam) else ClipParam(float(clip)).c
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {features.shape}")
    if not np.isfinite(features).all():
        raise ValueError("features contain non-finite values")
    norms = np.linalg.norm(features, axis=1)
    scale = np.ones_like(norms)
    over = norms > c * (1.0 + _CLIP_SLACK)
    scale[over] = c / norms[over]
    return features * scale[:, None]


def one_hot(labels: np.ndarray, class_count: int) -> np.ndarray:
    """Encode labels in {1..K} as rows of the K standard basis vectors."""
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise DimensionError(f"labels must be 1-d, got shape {labels.shape}")
    if not np.issubdtype(labels.dtype, np.integer):
        raise ValueError(f"labels must be integers, got dtype {labels.dtype}")
    if class_count < 1:
        raise ConfigurationError(f"class count must be >= 1, got {class_count}")
    if labels.size and (labels.min() < 1 or labels.max() > class_count):
        raise ValueError(
            f"labels must lie in 1..{class_count}, found range "
            f"[{labels.min()}, {labels.max()}]"
        )
    out = np.zeros((labels.shape[0], class_count), dtype=np.float64)
    out[np.arange(labels.shape[0]), labels - 1] = 1.0
    return out

"""Labelled patch extraction and per-filter training subsets."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import DegenerateLabels, InvalidArgument, InvalidGeometry
from .linsvm import PatchSet
from .rng import stream
from .tensor import Tensor3


def patch_positions(t: Tensor3, k: int, per_image: int, seed: int, index: int) -> np.ndarray:
    """Top-left (row, col) of `per_image` uniformly drawn k x k windows of `t`."""
    rng = stream(seed, "patches", index)
    rows = rng.integers(0, t.height - k + 1, size=per_image)
    cols = rng.integers(0, t.width - k + 1, size=per_image)
    return np.stack([rows, cols], axis=1)


def extract_patches(
    samples: Sequence[tuple[Tensor3, int]], k: int, per_image: int, seed: int
) -> PatchSet:
    """Draw `per_image` random k x k x C patches from every sample.

    Patches inherit their parent's label and are flattened in (row, col,
    channel) order, the same layout as a filter kernel. Sample i draws from
    stream (seed, "patches", i).
    """
    if k < 1 or per_image < 1:
        raise InvalidArgument(f"need k >= 1 and per_image >= 1, got k={k} per_image={per_image}")
    if not samples:
        raise InvalidArgument("no samples to extract patches from")
    rows, labels = [], []
    for i, (t, label) in enumerate(samples):
        if k > min(t.height, t.width):
            raise InvalidGeometry(f"patch size {k} larger than sample {i} ({t.height}x{t.width})")
        pos = patch_positions(t, k, per_image, seed, i)
        # fancy-index every window at once: (per_image, k, k, C)
        r = pos[:, 0, None] + np.arange(k)
        c = pos[:, 1, None] + np.arange(k)
        win = t.data[r[:, :, None], c[:, None, :]]
        rows.append(win.reshape(per_image, -1))
        labels.append(np.full(per_image, label, dtype=np.int8))
    return PatchSet(np.concatenate(rows), np.concatenate(labels))


def subset_indices(ps: PatchSet, n_per_class: int, seed: int) -> np.ndarray:
    if n_per_class < 1:
        raise InvalidArgument(f"n_per_class must be >= 1, got {n_per_class}")
    pos = np.flatnonzero(ps.labels == 1)
    neg = np.flatnonzero(ps.labels == -1)
    if pos.size == 0 or neg.size == 0:
        raise DegenerateLabels(f"patch set has {pos.size} positive and {neg.size} negative patches")
    rng = seed if isinstance(seed, np.random.Generator) else stream(seed, "subset")
    take_pos = rng.choice(pos, size=min(n_per_class, pos.size), replace=False)
    take_neg = rng.choice(neg, size=min(n_per_class, neg.size), replace=False)
    return np.sort(np.concatenate([take_pos, take_neg]))


def sample_subset(ps: PatchSet, n_per_class: int, seed) -> PatchSet:
    """Balanced draw without replacement of up to `n_per_class` patches per class.

    `seed` is an int or an already derived ``np.random.Generator``.
    """
    idx = subset_indices(ps, n_per_class, seed)
    return PatchSet(ps.features[idx], ps.labels[idx])

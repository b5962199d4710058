"""Image decoding, two-class dataset directories and the stratified split.

Layout on disk::

    <root>/<class_name>/*.png|*.jpg|*.jpeg

exactly two class directories, one of which is the positive class
(label +1); the other gets -1. Samples are ordered lexicographically by
relative path.
"""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (DecodeError, DegenerateLabels, EmptyClassError, InvalidArgument,
                     InvalidInput, LayoutError)
from .rng import stream
from .tensor import Tensor3

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
BT601 = np.array([0.299, 0.587, 0.114])
DEFAULT_SIZE = (128, 128)


def _to_unit_gray(img: Image.Image) -> np.ndarray:
    mode = img.mode
    if mode == "1":
        return np.asarray(img, dtype=np.float64)
    if mode == "L":
        return np.asarray(img, dtype=np.float64) / 255.0
    if mode.startswith("I;16") or mode == "I":
        # 16-bit grayscale; Pillow reports some 16-bit PNGs as mode "I"
        return np.clip(np.asarray(img, dtype=np.float64) / 65535.0, 0.0, 1.0)
    if mode == "F":
        return np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
    return rgb @ BT601 / 255.0


def load_image(path, target: tuple[int, int] = DEFAULT_SIZE) -> Tensor3:
    """Decode `path` to a single-channel H x W tensor with values in [0, 1].

    Colour is reduced with BT.601 luminance weights; resizing is bilinear
    on the float image (Pillow's filter, which widens its support when
    downscaling).
    """
    h, w = target
    if h < 1 or w < 1:
        raise InvalidArgument(f"target size must be positive, got {target}")
    try:
        with Image.open(path) as img:
            img.load()
            if img.width == 0 or img.height == 0:
                raise InvalidInput(f"{path}: zero-dimension image")
            gray = _to_unit_gray(img)
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        if isinstance(exc, InvalidInput):
            raise
        raise DecodeError(path, str(exc)) from exc
    if gray.shape != (h, w):
        resized = Image.fromarray(gray.astype(np.float32)).resize((w, h), Image.Resampling.BILINEAR)
        gray = np.clip(np.asarray(resized, dtype=np.float64), 0.0, 1.0)
    return Tensor3(gray)


@dataclass(frozen=True, eq=False)
class ImageSample:
    tensor: Tensor3
    label: int
    id: str


@dataclass(frozen=True, eq=False)
class Dataset:
    samples: tuple[ImageSample, ...]
    class_names: tuple[str, str]  # (positive, negative)

    def __post_init__(self):
        ids = [s.id for s in self.samples]
        if len(set(ids)) != len(ids):
            raise InvalidInput("sample ids must be unique")

    def __len__(self):
        return len(self.samples)

    def class_counts(self) -> dict[str, int]:
        pos = sum(1 for s in self.samples if s.label == 1)
        return {self.class_names[0]: pos, self.class_names[1]: len(self.samples) - pos}

    def by_id(self) -> dict[str, ImageSample]:
        return {s.id: s for s in self.samples}

    def label_name(self, label: int) -> str:
        return self.class_names[0] if label == 1 else self.class_names[1]


def class_dirs(root, positive_class: str) -> tuple[Path, Path]:
    root = Path(root)
    if not root.is_dir():
        raise LayoutError(f"{root} is not a directory")
    subdirs = sorted(p for p in root.iterdir() if p.is_dir())
    if len(subdirs) != 2:
        raise LayoutError(
            f"{root} must contain exactly two class directories, found {[p.name for p in subdirs]}"
        )
    names = [p.name for p in subdirs]
    if positive_class not in names:
        raise LayoutError(f"positive class {positive_class!r} not among {names}")
    pos = subdirs[names.index(positive_class)]
    neg = subdirs[1 - names.index(positive_class)]
    return pos, neg


def load_dataset(root, positive_class: str = "COVID", target: tuple[int, int] = DEFAULT_SIZE,
                 workers: int = 1) -> Dataset:
    """Load every decodable image under the two class directories of `root`.

    Undecodable files are skipped with a warning. Raises EmptyClassError if
    a class ends up with no images.
    """
    root = Path(root)
    pos_dir, neg_dir = class_dirs(root, positive_class)
    entries = []
    for d, label in ((pos_dir, 1), (neg_dir, -1)):
        for f in d.iterdir():
            if f.is_file() and f.suffix.lower() in IMAGE_SUFFIXES:
                entries.append((f.relative_to(root).as_posix(), f, label))
    entries.sort(key=lambda e: e[0])

    def load(entry):
        try:
            return load_image(entry[1], target)
        except (DecodeError, InvalidInput) as exc:
            log.warning("skipping %s", exc)
            return None

    with ThreadPoolExecutor(max_workers=max(1, workers)) as ex:
        tensors = list(ex.map(load, entries))
    samples = tuple(ImageSample(t, label, rel) for (rel, _, label), t in zip(entries, tensors)
                    if t is not None)
    ds = Dataset(samples, (pos_dir.name, neg_dir.name))
    for name, count in ds.class_counts().items():
        if count == 0:
            raise EmptyClassError(f"class {name!r} under {root} has no readable images")
    log.info("loaded %s", ds.class_counts())
    return ds


@dataclass(frozen=True)
class SplitSpec:
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    seed: int
    train_fraction: float

    def to_json(self) -> str:
        return json.dumps({
            "seed": self.seed,
            "train_fraction": self.train_fraction,
            "train_ids": list(self.train_ids),
            "test_ids": list(self.test_ids),
        }, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SplitSpec":
        try:
            d = json.loads(text)
            spec = cls(tuple(d["train_ids"]), tuple(d["test_ids"]), int(d["seed"]),
                       float(d["train_fraction"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed split file: {exc}") from exc
        if set(spec.train_ids) & set(spec.test_ids):
            raise InvalidInput("split file lists ids in both partitions")
        return spec

    def save(self, path):
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "SplitSpec":
        return cls.from_json(Path(path).read_text())


def n_test_for_class(n_class: int, train_fraction: float) -> int:
    # the epsilon keeps e.g. (1 - 0.9) * 10 = 0.99999... from flooring to 0
    return math.floor((1.0 - train_fraction) * n_class + 1e-9)


def split_dataset(ds: Dataset, train_fraction: float = 0.75, seed: int = 0) -> SplitSpec:
    """Stratified split: per class, floor((1 - f) * n) samples go to test,
    chosen by a seeded shuffle of that class. Ids keep dataset order."""
    if not 0.0 < train_fraction < 1.0:
        raise InvalidArgument(f"train_fraction must be in (0, 1), got {train_fraction}")
    test = set()
    for ci, label in enumerate((1, -1)):
        idx = [i for i, s in enumerate(ds.samples) if s.label == label]
        if len(idx) < 2:
            raise DegenerateLabels(
                f"class {ds.label_name(label)!r} has {len(idx)} samples; need at least 2 to split"
            )
        perm = stream(seed, "split", ci).permutation(len(idx))
        test.update(idx[j] for j in perm[: n_test_for_class(len(idx), train_fraction)])
    train_ids = tuple(s.id for i, s in enumerate(ds.samples) if i not in test)
    test_ids = tuple(s.id for i, s in enumerate(ds.samples) if i in test)
    return SplitSpec(train_ids, test_ids, int(seed), float(train_fraction))


def apply_split(ds: Dataset, split: SplitSpec) -> tuple[list[ImageSample], list[ImageSample]]:
    lookup = ds.by_id()
    missing = [i for i in split.train_ids + split.test_ids if i not in lookup]
    if missing:
        raise InvalidInput(f"split references {len(missing)} ids not in dataset, e.g. {missing[0]!r}")
    return [lookup[i] for i in split.train_ids], [lookup[i] for i in split.test_ids]

"""CSVM network: blocks of SVM-filter convolution, activation and pooling,
trained one block at a time without backpropagation, with a linear SVM
head after every block.

Training of block d:

1. draw labelled patches from the current feature maps of (a subset of)
   the training images;
2. for each filter, draw a balanced random subset of those patches and fit
   a squared-hinge SVM on it;
3. reshape the weight vectors to k x k x C_in kernels and stack them;
4. push every training sample through the new block.

The head for depth d is an SVM on the flattened output of block d, fit on
all training images.
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from . import layers
from .errors import DegenerateLabels, InvalidArgument, InvalidInput
from .layers import FilterBank, PoolSpec
from .linsvm import PatchSet, SvmModel, decision, train_l2svm
from .patches import extract_patches, sample_subset
from .rng import stream
from .tensor import Tensor3, flatten

log = logging.getLogger(__name__)

Sample = tuple[Tensor3, int]


@dataclass(frozen=True)
class BlockSpec:
    n_filters: int
    kernel: int
    stride: int = 1
    pool: PoolSpec = field(default_factory=PoolSpec)
    activation: str = "relu"

    def __post_init__(self):
        if self.n_filters < 1 or self.kernel < 1 or self.stride < 1:
            raise InvalidArgument(f"bad block spec {self}")
        if self.activation not in layers.ACTIVATIONS:
            raise InvalidArgument(f"unknown activation {self.activation!r}")
        if isinstance(self.pool, dict):
            object.__setattr__(self, "pool", PoolSpec(**self.pool))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "BlockSpec":
        return cls(**d)


def default_architecture() -> list[BlockSpec]:
    """Three blocks: 40 x 7x7/2, 128 x 3x3/1, 256 x 1x1/1, each with ReLU and 3x3/2 max pooling."""
    return [
        BlockSpec(40, 7, 2, PoolSpec(3, 2, "max")),
        BlockSpec(128, 3, 1, PoolSpec(3, 2, "max")),
        BlockSpec(256, 1, 1, PoolSpec(3, 2, "max")),
    ]


@dataclass(frozen=True)
class TrainConfig:
    svm_c: float = 0.01
    tol: float = 1e-6
    max_iter: int = 1000
    per_image_patches: int = 30
    subset_per_class: int = 500
    patch_source_images: int = 200
    master_seed: int = 0
    # append a constant-1 feature to head inputs
    head_bias: bool = False
    solver: str = "newton"

    def __post_init__(self):
        for name in ("svm_c", "tol", "max_iter", "per_image_patches",
                     "subset_per_class", "patch_source_images"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"TrainConfig.{name} must be positive")
        if self.master_seed < 0:
            raise InvalidArgument("TrainConfig.master_seed must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InvalidArgument(f"unknown train config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True, eq=False)
class CsvmNetwork:
    input_spec: tuple[int, int, int]
    blocks: tuple[tuple[BlockSpec, FilterBank], ...]
    heads: tuple[SvmModel, ...]
    config: TrainConfig
    class_names: tuple[str, str] = ("positive", "negative")

    @property
    def depth(self) -> int:
        return len(self.blocks)


def output_shapes(input_spec, arch: Sequence[BlockSpec]) -> list[dict]:
    """Spatial size after each conv and pool, plus the flattened head dimension."""
    h, w, _ = input_spec
    out = []
    for spec in arch:
        ch = layers.conv_output_size(h, 0, spec.kernel, spec.stride)
        cw = layers.conv_output_size(w, 0, spec.kernel, spec.stride)
        h = layers.conv_output_size(ch, 0, spec.pool.window, spec.pool.stride)
        w = layers.conv_output_size(cw, 0, spec.pool.window, spec.pool.stride)
        out.append({"conv": (ch, cw), "pool": (h, w), "head_dim": h * w * spec.n_filters})
    return out


def block_forward(t: Tensor3, spec: BlockSpec, bank: FilterBank) -> Tensor3:
    if bank.kernel != spec.kernel or bank.n_filters != spec.n_filters or bank.stride != spec.stride:
        raise InvalidInput(f"{bank!r} does not match {spec}")
    z = layers.conv2d(t, bank, 0)
    return layers.pool(layers.activate(z, spec.activation), spec.pool)


def filter_stream(master_seed: int, depth: int, index: int) -> np.random.Generator:
    return stream(master_seed, "filter", depth, index)


@contextmanager
def _executor(workers: int):
    # BLAS pinned to one thread so reductions are identical for any worker count
    with threadpool_limits(limits=1), ThreadPoolExecutor(max_workers=max(1, workers)) as ex:
        yield ex


def _check_both_classes(samples: Sequence[Sample]):
    labels = {int(label) for _, label in samples}
    if labels != {1, -1}:
        raise DegenerateLabels(f"training samples carry labels {sorted(labels)}; need both +1 and -1")


def _patch_sources(inputs: Sequence[Sample], cfg: TrainConfig, depth: int) -> list[Sample]:
    if len(inputs) <= cfg.patch_source_images:
        return list(inputs)
    rng = stream(cfg.master_seed, "patch-source", depth)
    idx = np.sort(rng.choice(len(inputs), size=cfg.patch_source_images, replace=False))
    return [inputs[i] for i in idx]


def learn_filters(
    inputs: Sequence[Sample], spec: BlockSpec, cfg: TrainConfig, depth: int, workers: int = 1
) -> list[SvmModel]:
    """Fit one SVM per filter of block `depth` on patches of `inputs`."""
    _check_both_classes(inputs)
    sources = _patch_sources(inputs, cfg, depth)
    patch_seed = stream(cfg.master_seed, "block-patches", depth).integers(2**63)
    ps = extract_patches(sources, spec.kernel, cfg.per_image_patches, int(patch_seed))

    def fit(index: int) -> SvmModel:
        sub = sample_subset(ps, cfg.subset_per_class, filter_stream(cfg.master_seed, depth, index))
        try:
            return train_l2svm(sub, cfg.svm_c, cfg.tol, cfg.max_iter, method=cfg.solver)
        except (DegenerateLabels, InvalidInput, InvalidArgument) as exc:
            raise type(exc)(f"block {depth}, filter {index}: {exc}") from exc

    with _executor(workers) as ex:
        return list(ex.map(fit, range(spec.n_filters)))


def stack_filters(models: Sequence[SvmModel], spec: BlockSpec, in_channels: int) -> FilterBank:
    vecs = np.stack([m.weights for m in models]).astype(np.float32)
    return FilterBank.from_vectors(vecs, spec.kernel, in_channels, spec.stride)


def forward_samples(samples: Sequence[Sample], spec: BlockSpec, bank: FilterBank,
                    workers: int = 1) -> list[Sample]:
    with _executor(workers) as ex:
        outs = list(ex.map(lambda s: block_forward(s[0], spec, bank), samples))
    return [(o, label) for o, (_, label) in zip(outs, samples)]


def train_block(
    inputs: Sequence[Sample], spec: BlockSpec, cfg: TrainConfig, depth: int, workers: int = 1
) -> tuple[FilterBank, list[Sample]]:
    if not inputs:
        raise DegenerateLabels("no training samples")
    models = learn_filters(inputs, spec, cfg, depth, workers)
    bank = stack_filters(models, spec, inputs[0][0].channels)
    return bank, forward_samples(inputs, spec, bank, workers)


def head_features(tensors: Sequence[Tensor3], bias: bool = False) -> np.ndarray:
    x = np.stack([flatten(t) for t in tensors])
    if bias:
        x = np.hstack([x, np.ones((x.shape[0], 1), dtype=x.dtype)])
    return x


def train_head(samples: Sequence[Sample], cfg: TrainConfig) -> SvmModel:
    x = head_features([t for t, _ in samples], cfg.head_bias)
    y = np.array([label for _, label in samples])
    m = train_l2svm(PatchSet(x, y), cfg.svm_c, cfg.tol, cfg.max_iter, method=cfg.solver)
    # heads are stored in float32; keep the in-memory model identical to a reloaded one
    return SvmModel(m.weights.astype(np.float32), m.penalty_c, m.iterations_run, m.final_objective)


def train_network(
    train: Sequence[Sample],
    arch: Sequence[BlockSpec] | None = None,
    cfg: TrainConfig | None = None,
    workers: int = 1,
    class_names: tuple[str, str] = ("positive", "negative"),
) -> CsvmNetwork:
    arch = list(arch) if arch is not None else default_architecture()
    cfg = cfg or TrainConfig()
    if not arch:
        raise InvalidArgument("architecture needs at least one block")
    if not train:
        raise DegenerateLabels("empty training set")
    _check_both_classes(train)
    for label in (1, -1):
        if sum(1 for _, lab in train if lab == label) < 2:
            raise DegenerateLabels(f"need at least 2 training samples of class {label:+d}")
    input_spec = train[0][0].shape
    if any(t.shape != input_spec for t, _ in train):
        raise InvalidInput("training tensors differ in shape")
    output_shapes(input_spec, arch)  # fail fast on geometry

    blocks, heads = [], []
    current = list(train)
    for depth, spec in enumerate(arch, start=1):
        t0 = time.perf_counter()
        bank, current = train_block(current, spec, cfg, depth, workers)
        t1 = time.perf_counter()
        with threadpool_limits(limits=1):
            head = train_head(current, cfg)
        t2 = time.perf_counter()
        log.info("block %d: %d filters %.1fs, head dim %d (%d iters) %.1fs",
                 depth, spec.n_filters, t1 - t0, head.dim, head.iterations_run, t2 - t1)
        blocks.append((spec, bank))
        heads.append(head)
    return CsvmNetwork(tuple(input_spec), tuple(blocks), tuple(heads), cfg, tuple(class_names))


def _check_depth(net: CsvmNetwork, depth: int):
    if not 1 <= depth <= net.depth:
        raise InvalidArgument(f"depth must be in 1..{net.depth}, got {depth}")


def features(net: CsvmNetwork, t: Tensor3, depth: int) -> Tensor3:
    _check_depth(net, depth)
    if t.shape != tuple(net.input_spec):
        raise InvalidInput(f"input {t.shape} does not match network input {tuple(net.input_spec)}")
    for spec, bank in net.blocks[:depth]:
        t = block_forward(t, spec, bank)
    return t


def score(net: CsvmNetwork, t: Tensor3, depth: int) -> float:
    x = head_features([features(net, t, depth)], net.config.head_bias)[0]
    return decision(net.heads[depth - 1], x)


def infer(net: CsvmNetwork, t: Tensor3, depth: int) -> tuple[int, float]:
    """Class label (+1/-1, ties to -1) and raw head score at `depth`."""
    s = score(net, t, depth)
    return (1 if s > 0 else -1), s


def score_many(net: CsvmNetwork, tensors: Sequence[Tensor3], depth: int, workers: int = 1) -> np.ndarray:
    _check_depth(net, depth)
    with _executor(workers) as ex:
        return np.array(list(ex.map(lambda t: score(net, t, depth), tensors)), dtype=np.float64)

"""Command-line front end.

    csvm split    write a stratified train/test split file
    csvm train    train a CSVM network on the train partition
    csvm eval     metrics, confusion counts and ROC on the test partition
    csvm predict  classify one image
    csvm metrics  the seven metrics from raw confusion counts

Exit codes: 0 success, 1 runtime or data error, 2 usage or validation error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import modelio
from .errors import CsvmError, DegenerateLabels, InvalidArgument
from .ingest import SplitSpec, apply_split, load_dataset, load_image, split_dataset
from .metrics import compute_metrics, confusion, format_table, report_json, roc_auc, ConfusionCounts
from .net import BlockSpec, TrainConfig, default_architecture, score_many, train_network

log = logging.getLogger("csvm")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    dataset_root: Optional[str] = None
    split_file: Optional[str] = None
    arch: list = field(default_factory=default_architecture)
    train: TrainConfig = field(default_factory=TrainConfig)
    input_size: tuple = (128, 128)
    positive_class: str = "COVID"
    train_fraction: float = 0.75
    split_seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        try:
            if "arch" in d:
                d["arch"] = [BlockSpec.from_dict(b) for b in d["arch"]]
            if "train" in d:
                d["train"] = TrainConfig.from_dict(d["train"])
            if "input_size" in d:
                d["input_size"] = tuple(d["input_size"])
        except (TypeError, ValueError) as exc:
            raise UsageError(f"invalid config: {exc}") from exc
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["input_size"] = list(self.input_size)
        return d

    def validate(self):
        if len(self.input_size) != 2 or min(self.input_size) < 1:
            raise UsageError(f"input_size must be two positive integers, got {self.input_size}")
        if not 0.0 < self.train_fraction < 1.0:
            raise UsageError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if not self.arch:
            raise UsageError("arch must contain at least one block")
        from .net import output_shapes
        try:
            output_shapes((*self.input_size, 1), self.arch)
        except ValueError as exc:
            raise UsageError(f"architecture does not fit {self.input_size}: {exc}") from exc


def _threads(args) -> int:
    if args.threads is not None:
        n = args.threads
    else:
        env = os.environ.get("CSVM_THREADS", "1")
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"CSVM_THREADS must be an integer, got {env!r}") from None
    if n < 1:
        raise UsageError(f"thread count must be >= 1, got {n}")
    return n


def _load_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        try:
            cfg = RunConfig.from_dict(json.loads(Path(args.config).read_text()))
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config} is not valid JSON: {exc}") from exc
    overrides = {}
    for flag, key in (("dataset_root", "dataset_root"), ("split", "split_file"),
                      ("positive_class", "positive_class"), ("train_fraction", "train_fraction"),
                      ("split_seed", "split_seed")):
        v = getattr(args, flag, None)
        if v is not None:
            overrides[key] = v
    cfg = replace(cfg, **overrides)
    seed = getattr(args, "seed", None)
    if seed is not None:
        try:
            cfg = replace(cfg, train=replace(cfg.train, master_seed=seed))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    cfg.validate()
    return cfg


def _require(value, what):
    if not value:
        raise UsageError(f"{what} is required (flag or config file)")
    return value


def _dataset(cfg: RunConfig, threads: int):
    root = _require(cfg.dataset_root, "dataset root")
    return load_dataset(root, cfg.positive_class, tuple(cfg.input_size), workers=threads)


def cmd_split(args) -> int:
    cfg = _load_config(args)
    ds = _dataset(cfg, _threads(args))
    split = split_dataset(ds, cfg.train_fraction, cfg.split_seed)
    split.save(args.out)
    test = set(split.test_ids)
    for label, name in ((1, ds.class_names[0]), (-1, ds.class_names[1])):
        n = sum(1 for s in ds.samples if s.label == label)
        n_test = sum(1 for s in ds.samples if s.label == label and s.id in test)
        print(f"{name}: {n - n_test} train, {n_test} test")
    print(f"total: {len(split.train_ids)} train, {len(split.test_ids)} test -> {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _load_config(args)
    threads = _threads(args)
    split = SplitSpec.load(_require(cfg.split_file, "split file"))
    if not split.train_ids:
        raise DegenerateLabels("train partition is empty")
    ds = _dataset(cfg, threads)
    train, _ = apply_split(ds, split)
    samples = [(s.tensor, s.label) for s in train]
    t0 = time.perf_counter()
    net = train_network(samples, cfg.arch, cfg.train, workers=threads, class_names=ds.class_names)
    digest = modelio.save(net, args.model_out)
    log.info("trained %d blocks on %d images in %.1fs", net.depth, len(samples), time.perf_counter() - t0)
    print(f"model written to {args.model_out} (sha256 {digest})")
    return EXIT_OK


def _load_model_and_depth(path, depth):
    net = modelio.load(path)
    depth = net.depth if depth is None else depth
    if not 1 <= depth <= net.depth:
        raise UsageError(f"depth must be in 1..{net.depth}, got {depth}")
    return net, depth


def cmd_eval(args) -> int:
    net, depth = _load_model_and_depth(args.model, args.depth)
    cfg = _load_config(args)
    threads = _threads(args)
    split = SplitSpec.load(_require(cfg.split_file, "split file"))
    ds = _dataset(cfg, threads)
    _, test = apply_split(ds, split)
    if not test:
        raise DegenerateLabels("test partition is empty")
    scores = score_many(net, [s.tensor for s in test], depth, workers=threads)
    truths = np.array([s.label for s in test])
    preds = np.where(scores > 0, 1, -1)
    cc = confusion(preds, truths, positive=1)
    rep = compute_metrics(cc)
    roc, roc_error = None, None
    try:
        roc = roc_auc(scores, truths, positive=1)
    except DegenerateLabels as exc:
        roc_error = str(exc)

    print(format_table({f"CSVM depth {depth}": rep}))
    print(f"TP={cc.tp} FN={cc.fn} FP={cc.fp} TN={cc.tn}")
    print(f"AUC: {'undefined' if roc is None else format(roc.auc, '.4f')}")
    if args.json:
        Path(args.json).write_text(report_json(cc, rep, roc, depth=depth, n_test=len(test)) + "\n")
    if args.roc_csv and roc is not None:
        Path(args.roc_csv).write_text(roc.to_csv())
    if roc_error:
        print(f"error: ROC undefined: {roc_error}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_predict(args) -> int:
    net, depth = _load_model_and_depth(args.model, args.depth)
    h, w, _ = net.input_spec
    t = load_image(args.image, (h, w))
    s = float(score_many(net, [t], depth)[0])
    label = 1 if s > 0 else -1
    name = net.class_names[0] if label == 1 else net.class_names[1]
    print(f"{name}\t{s!r}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    cc = ConfusionCounts(args.tp, args.fn, args.fp, args.tn)
    rep = compute_metrics(cc)
    if args.json:
        print(report_json(cc, rep))
    else:
        print(format_table({"counts": rep}))
    return EXIT_OK


def _count(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"counts must be non-negative, got {v}")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="csvm", description="Convolutional SVM network tools")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, dataset=True):
        sp.add_argument("--config", help="RunConfig JSON file")
        sp.add_argument("--threads", type=int, help="worker threads (default: $CSVM_THREADS or 1)")
        if dataset:
            sp.add_argument("--dataset-root", dest="dataset_root")
            sp.add_argument("--positive-class", dest="positive_class")

    sp = sub.add_parser("split", help="write a stratified train/test split")
    common(sp)
    sp.add_argument("--train-fraction", dest="train_fraction", type=float)
    sp.add_argument("--seed", dest="split_seed", type=int)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_split)

    sp = sub.add_parser("train", help="train a network on the train partition")
    common(sp)
    sp.add_argument("--split")
    sp.add_argument("--seed", type=int, help="master seed override")
    sp.add_argument("--model-out", dest="model_out", required=True)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="evaluate on the test partition")
    common(sp)
    sp.add_argument("--model", required=True)
    sp.add_argument("--split")
    sp.add_argument("--depth", type=int, help="head to use (default: deepest)")
    sp.add_argument("--json", help="write metrics report JSON here")
    sp.add_argument("--roc-csv", dest="roc_csv", help="write ROC points CSV here")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("predict", help="classify one image")
    sp.add_argument("--model", required=True)
    sp.add_argument("--depth", type=int)
    sp.add_argument("image")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("metrics", help="metrics from confusion counts")
    for name in ("tp", "fn", "fp", "tn"):
        sp.add_argument(name, type=_count)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_metrics)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (UsageError, InvalidArgument) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CsvmError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

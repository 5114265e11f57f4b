"""Cross-validation fold plans: shuffle once, split into k contiguous blocks,
rotate roles so fold k tests on block k and tunes on block (k+1) mod k.

Plans serialize to JSON so reruns are byte-reproducible given the same seed.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence


@dataclass(frozen=True)
class FoldSplit:
    fold: int
    train: tuple[str, ...]
    dev: tuple[str, ...]
    test: tuple[str, ...]


@dataclass(frozen=True)
class FoldPlan:
    seed: int
    n_folds: int
    splits: tuple[FoldSplit, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {"seed": self.seed, "n_folds": self.n_folds,
                "splits": [{"fold": s.fold, "train": list(s.train),
                            "dev": list(s.dev), "test": list(s.test)}
                           for s in self.splits]}


def make_fold_plan(ids: Sequence[str], n_folds: int = 5, seed: int = 0) -> FoldPlan:
    """Shuffle ids once with random.Random(seed), then cut into n_folds blocks.

    Block b holds ids[b::n_folds] boundaries computed by even partition: the
    first (len % n_folds) blocks get one extra id. Fold k: test = block k,
    dev = block (k+1) mod n_folds, train = the rest, preserving shuffled order.
    With 5 folds that is the 6:2:2 train/dev/test ratio.
    """
    ids = list(ids)
    if len(set(ids)) != len(ids):
        raise ValueError("fold ids must be unique")
    if len(ids) < n_folds:
        raise ValueError(f"need at least {n_folds} ids, got {len(ids)}")
    shuffled = list(ids)
    random.Random(seed).shuffle(shuffled)
    base, extra = divmod(len(shuffled), n_folds)
    blocks: list[list[str]] = []
    start = 0
    for b in range(n_folds):
        size = base + (1 if b < extra else 0)
        blocks.append(shuffled[start:start + size])
        start += size
    splits = []
    for k in range(n_folds):
        dev_block = (k + 1) % n_folds
        train: list[str] = []
        for b in range(n_folds):
            if b != k and b != dev_block:
                train.extend(blocks[b])
        splits.append(FoldSplit(fold=k, train=tuple(train),
                                dev=tuple(blocks[dev_block]), test=tuple(blocks[k])))
    return FoldPlan(seed=seed, n_folds=n_folds, splits=tuple(splits))


def save_fold_plan(plan: FoldPlan, path: str | Path) -> None:
    Path(path).write_text(json.dumps(plan.to_dict(), indent=2, sort_keys=True),
                          encoding="utf-8")


def load_fold_plan(path: str | Path) -> FoldPlan:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    splits = tuple(FoldSplit(fold=s["fold"], train=tuple(s["train"]),
                             dev=tuple(s["dev"]), test=tuple(s["test"]))
                   for s in data["splits"])
    return FoldPlan(seed=data["seed"], n_folds=data["n_folds"], splits=splits)

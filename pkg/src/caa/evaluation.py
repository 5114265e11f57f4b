"""Cross-validated evaluation regimes over frozen features and gold labels.

A LanguageData bundle pairs instance ids with a feature matrix and ternary
labels. All regimes run per fold of the target language's plan, report per-fold
macro-F1, and record the class weights chosen on the dev split.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ._stats import PairedTResult, paired_t
from .classifier import (GridSearchResult, Model, TrainConfig, grid_search_class_weights,
                         macro_f1, predict, train)
from .errors import EvaluationError
from .folds import FoldPlan


@dataclass
class LanguageData:
    """Features and gold labels for one (language, dimension) slice, id-keyed."""

    language: str
    dimension: str
    ids: list[str]
    features: np.ndarray
    labels: list[int]

    def __post_init__(self):
        if len(self.ids) != len(self.labels) or len(self.ids) != self.features.shape[0]:
            raise EvaluationError(
                f"{self.language}/{self.dimension}: {len(self.ids)} ids, "
                f"{self.features.shape[0]} feature rows, {len(self.labels)} labels")
        if len(set(self.ids)) != len(self.ids):
            raise EvaluationError(f"{self.language}/{self.dimension}: duplicate ids")
        self._index = {i: k for k, i in enumerate(self.ids)}

    def subset(self, ids: Sequence[str]) -> tuple[np.ndarray, list[int]]:
        try:
            rows = [self._index[i] for i in ids]
        except KeyError as exc:
            raise EvaluationError(f"id {exc.args[0]!r} missing from "
                                  f"{self.language}/{self.dimension} data")
        return self.features[rows], [self.labels[r] for r in rows]


@dataclass
class FoldOutcome:
    fold: int
    macro_f1: float
    class_weights: tuple[float, float, float]
    n_train: int
    n_test: int


@dataclass
class EvalResult:
    target: str
    sources: tuple[str, ...]
    dimension: str
    regime: str
    folds: list[FoldOutcome] = field(default_factory=list)

    @property
    def per_fold_f1(self) -> list[float]:
        return [f.macro_f1 for f in self.folds]

    @property
    def mean_f1(self) -> float:
        return statistics.fmean(self.per_fold_f1)


def _tuned_model(train_x, train_y, dev_x, dev_y, grid, base: TrainConfig
                 ) -> tuple[Model, tuple[float, float, float]]:
    if grid is None:
        model = train(train_x, train_y, base)
        return model, base.class_weights
    result: GridSearchResult = grid_search_class_weights(
        train_x, train_y, dev_x, dev_y, grid=grid, base=base)
    cfg = TrainConfig(l2=base.l2, class_weights=result.best_weights,
                      max_iter=base.max_iter, tol=base.tol, armijo_c=base.armijo_c,
                      backtrack=base.backtrack, init_step=base.init_step)
    return train(train_x, train_y, cfg), result.best_weights


def run_single_language_eval(target: LanguageData, source: LanguageData,
                             target_plan: FoldPlan, source_plan: FoldPlan | None = None,
                             grid: Sequence[float] | None = None,
                             base: TrainConfig = TrainConfig()) -> EvalResult:
    """Train on source train split, tune on source dev, test on target test.

    With source == target (and one fold plan) this is plain same-language
    cross-validation. Cross-language runs need both plans; class weights are
    tuned on the source's dev split.
    """
    if source_plan is None:
        if source.language != target.language:
            raise EvaluationError("cross-language run requires the source fold plan")
        source_plan = target_plan
    if source_plan.n_folds != target_plan.n_folds:
        raise EvaluationError(f"fold count mismatch: {source_plan.n_folds} "
                              f"vs {target_plan.n_folds}")
    result = EvalResult(target=target.language, sources=(source.language,),
                        dimension=target.dimension, regime="single")
    for t_split, s_split in zip(target_plan.splits, source_plan.splits):
        train_x, train_y = source.subset(s_split.train)
        dev_x, dev_y = source.subset(s_split.dev)
        test_x, test_y = target.subset(t_split.test)
        model, weights = _tuned_model(train_x, train_y, dev_x, dev_y, grid, base)
        f1 = macro_f1(test_y, predict(model, test_x))
        result.folds.append(FoldOutcome(fold=t_split.fold, macro_f1=f1,
                                        class_weights=weights,
                                        n_train=len(train_y), n_test=len(test_y)))
    return result


def run_augmented_eval(target: LanguageData, added_sources: Sequence[LanguageData],
                       target_plan: FoldPlan,
                       source_plans: Mapping[str, FoldPlan] | None = None,
                       grid: Sequence[float] | None = None,
                       base: TrainConfig = TrainConfig()) -> EvalResult:
    """Train on target-train plus every added source's train split; tune on target-dev."""
    source_plans = dict(source_plans or {})
    for src in added_sources:
        if src.language not in source_plans:
            raise EvaluationError(f"no fold plan for added source {src.language!r}")
        if source_plans[src.language].n_folds != target_plan.n_folds:
            raise EvaluationError("fold count mismatch in augmented run")
        if src.features.shape[1] != target.features.shape[1]:
            raise EvaluationError(
                f"feature dim mismatch: {src.language} has {src.features.shape[1]}, "
                f"target has {target.features.shape[1]}")
    names = tuple([target.language] + [s.language for s in added_sources])
    result = EvalResult(target=target.language, sources=names,
                        dimension=target.dimension, regime="augmented")
    for t_split in target_plan.splits:
        train_x, train_y = target.subset(t_split.train)
        blocks_x, blocks_y = [train_x], [train_y]
        for src in added_sources:
            s_split = source_plans[src.language].splits[t_split.fold]
            sx, sy = src.subset(s_split.train)
            blocks_x.append(sx)
            blocks_y.append(sy)
        train_x = np.concatenate(blocks_x, axis=0)
        train_y = [y for ys in blocks_y for y in ys]
        dev_x, dev_y = target.subset(t_split.dev)
        test_x, test_y = target.subset(t_split.test)
        model, weights = _tuned_model(train_x, train_y, dev_x, dev_y, grid, base)
        f1 = macro_f1(test_y, predict(model, test_x))
        result.folds.append(FoldOutcome(fold=t_split.fold, macro_f1=f1,
                                        class_weights=weights,
                                        n_train=len(train_y), n_test=len(test_y)))
    return result


def run_mt_eval(target: LanguageData, translated: Mapping[str, np.ndarray],
                english: LanguageData, english_plan: FoldPlan, target_plan: FoldPlan,
                grid: Sequence[float] | None = None,
                base: TrainConfig = TrainConfig()) -> EvalResult:
    """English-trained models scored on translated features against target gold.

    translated maps target instance ids to feature vectors extracted from the
    machine-translated sentence. Missing test ids are an error, not a skip.
    """
    if english_plan.n_folds != target_plan.n_folds:
        raise EvaluationError("fold count mismatch between English and target plans")
    result = EvalResult(target=target.language, sources=(english.language,),
                        dimension=target.dimension, regime="mt")
    for t_split, e_split in zip(target_plan.splits, english_plan.splits):
        missing = [i for i in t_split.test if i not in translated]
        if missing:
            raise EvaluationError(
                f"translated features missing for test ids {missing[:5]!r}"
                + ("..." if len(missing) > 5 else ""))
        train_x, train_y = english.subset(e_split.train)
        dev_x, dev_y = english.subset(e_split.dev)
        model, weights = _tuned_model(train_x, train_y, dev_x, dev_y, grid, base)
        test_x = np.stack([translated[i] for i in t_split.test]).astype(np.float64)
        if test_x.shape[1] != model.dim:
            raise EvaluationError(f"translated feature dim {test_x.shape[1]} "
                                  f"!= model dim {model.dim}")
        _, test_y = target.subset(t_split.test)
        f1 = macro_f1(test_y, predict(model, test_x))
        result.folds.append(FoldOutcome(fold=t_split.fold, macro_f1=f1,
                                        class_weights=weights,
                                        n_train=len(train_y), n_test=len(test_y)))
    return result


def paired_fold_ttest(result_a: EvalResult, result_b: EvalResult) -> PairedTResult:
    """Two-sided paired t-test over per-fold macro-F1 differences (a minus b)."""
    if len(result_a.folds) != len(result_b.folds):
        raise EvaluationError(f"fold count mismatch: {len(result_a.folds)} "
                              f"vs {len(result_b.folds)}")
    if [f.fold for f in result_a.folds] != [f.fold for f in result_b.folds]:
        raise EvaluationError("fold indices disagree; results use different plans")
    diffs = [a.macro_f1 - b.macro_f1 for a, b in zip(result_a.folds, result_b.folds)]
    return paired_t(diffs)


def write_eval_csv(results: Sequence[EvalResult], path: str | Path) -> None:
    """Per-fold rows plus one summary row per result (fold column = 'mean')."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["target", "sources", "dimension", "regime", "fold", "macro_f1",
                         "class_weights"])
        for res in results:
            for fold in res.folds:
                writer.writerow([res.target, "+".join(res.sources), res.dimension,
                                 res.regime, fold.fold, f"{fold.macro_f1:.6f}",
                                 "/".join(str(w) for w in fold.class_weights)])
            writer.writerow([res.target, "+".join(res.sources), res.dimension,
                             res.regime, "mean", f"{res.mean_f1:.6f}", ""])

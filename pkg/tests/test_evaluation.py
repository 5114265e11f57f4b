import csv
import math

import numpy as np
import pytest
from scipy import stats

from caa.classifier import TrainConfig
from caa.errors import EvaluationError
from caa.evaluation import (EvalResult, FoldOutcome, LanguageData,
                            paired_fold_ttest, run_augmented_eval,
                            run_mt_eval, run_single_language_eval,
                            write_eval_csv)
from caa.folds import make_fold_plan

FAST = TrainConfig(max_iter=150)


def toy_language(language="en", n=20, seed=0, noise=0.05, dimension="power"):
    """Cleanly separable 3-class data: class center is a one-hot corner."""
    rng = np.random.default_rng(seed)
    ids, labels, rows = [], [], []
    for i in range(n):
        label = (-1, 0, 1)[i % 3]
        center = np.zeros(3)
        center[label + 1] = 2.0
        rows.append(center + rng.normal(scale=noise, size=3))
        ids.append(f"{language}_{i:03d}")
        labels.append(label)
    return LanguageData(language, dimension, ids, np.array(rows), labels)


def result_with(f1s, target="en", regime="single"):
    folds = [FoldOutcome(fold=k, macro_f1=f, class_weights=(1.0, 1.0, 1.0),
                         n_train=12, n_test=4) for k, f in enumerate(f1s)]
    return EvalResult(target=target, sources=(target,), dimension="power",
                      regime=regime, folds=folds)


class TestLanguageData:
    def test_length_mismatch(self):
        with pytest.raises(EvaluationError, match="labels"):
            LanguageData("en", "power", ["a", "b"], np.zeros((2, 3)), [0])

    def test_duplicate_ids(self):
        with pytest.raises(EvaluationError, match="duplicate"):
            LanguageData("en", "power", ["a", "a"], np.zeros((2, 3)), [0, 0])

    def test_subset_missing_id(self):
        data = toy_language()
        with pytest.raises(EvaluationError, match="missing"):
            data.subset(["nope"])

    def test_subset_preserves_order(self):
        data = toy_language()
        x, y = data.subset(["en_003", "en_000"])
        np.testing.assert_array_equal(x[0], data.features[3])
        assert y == [data.labels[3], data.labels[0]]


class TestSingleLanguage:
    def test_same_language_perfect(self):
        # seed 17 puts all three classes in every block of the 20-id shuffle
        data = toy_language()
        plan = make_fold_plan(data.ids, seed=17)
        result = run_single_language_eval(data, data, plan, base=FAST)
        assert result.regime == "single"
        assert result.mean_f1 == 1.0
        assert [f.n_train for f in result.folds] == [12] * 5
        assert [f.n_test for f in result.folds] == [4] * 5

    def test_cross_language_requires_source_plan(self):
        en, es = toy_language("en"), toy_language("es", seed=2)
        plan = make_fold_plan(en.ids, seed=17)
        with pytest.raises(EvaluationError, match="source fold plan"):
            run_single_language_eval(es, en, make_fold_plan(es.ids, seed=17))
        result = run_single_language_eval(
            es, en, make_fold_plan(es.ids, seed=17), source_plan=plan, base=FAST)
        assert result.sources == ("en",)
        assert result.mean_f1 == 1.0

    def test_fold_count_mismatch(self):
        en = toy_language()
        with pytest.raises(EvaluationError, match="fold count"):
            run_single_language_eval(
                en, en, make_fold_plan(en.ids, n_folds=5),
                source_plan=make_fold_plan(en.ids, n_folds=4))

    def test_grid_records_chosen_weights(self):
        data = toy_language()
        plan = make_fold_plan(data.ids, seed=1)
        result = run_single_language_eval(data, data, plan, grid=(1.0, 2.0),
                                          base=TrainConfig(max_iter=80))
        for fold in result.folds:
            assert all(w in (1.0, 2.0) for w in fold.class_weights)


class TestAugmented:
    def test_self_augmentation_matches_single(self):
        # adding a copy of the target only duplicates the training set
        target = toy_language("en")
        copy = toy_language("xx")
        plan = make_fold_plan(target.ids, seed=1)
        copy_plan = make_fold_plan(copy.ids, seed=1)
        single = run_single_language_eval(target, target, plan, base=FAST)
        augmented = run_augmented_eval(target, [copy], plan,
                                       {"xx": copy_plan}, base=FAST)
        assert augmented.regime == "augmented"
        assert augmented.sources == ("en", "xx")
        assert augmented.per_fold_f1 == single.per_fold_f1
        assert [f.n_train for f in augmented.folds] == [24] * 5

    def test_requires_plan_per_source(self):
        target, other = toy_language("en"), toy_language("es", seed=2)
        plan = make_fold_plan(target.ids, seed=1)
        with pytest.raises(EvaluationError, match="no fold plan"):
            run_augmented_eval(target, [other], plan, {})

    def test_dim_mismatch(self):
        target = toy_language("en")
        bad = LanguageData("es", "power", ["e0", "e1", "e2", "e3", "e4"],
                           np.zeros((5, 4)), [0, 0, 0, 0, 0])
        plan = make_fold_plan(target.ids, seed=1)
        with pytest.raises(EvaluationError, match="dim"):
            run_augmented_eval(target, [bad], plan,
                               {"es": make_fold_plan(bad.ids, seed=1)})


class TestMt:
    def test_identity_translation_matches_single(self):
        en = toy_language("en")
        es = toy_language("es", seed=3)
        en_plan = make_fold_plan(en.ids, seed=17)
        es_plan = make_fold_plan(es.ids, seed=17)
        translated = {i: es.features[k] for k, i in enumerate(es.ids)}
        mt = run_mt_eval(es, translated, en, en_plan, es_plan, base=FAST)
        assert mt.regime == "mt"
        # train split sizes come from the English plan
        assert [f.n_train for f in mt.folds] == [12] * 5
        assert mt.mean_f1 == 1.0

    def test_missing_translated_id(self):
        en = toy_language("en")
        es = toy_language("es", seed=3)
        translated = {i: es.features[k] for k, i in enumerate(es.ids)}
        del translated["es_005"]
        with pytest.raises(EvaluationError, match="es_005"):
            run_mt_eval(es, translated, en, make_fold_plan(en.ids, seed=1),
                        make_fold_plan(es.ids, seed=4), base=FAST)

    def test_translated_dim_mismatch(self):
        en = toy_language("en")
        es = toy_language("es", seed=3)
        translated = {i: np.zeros(4) for i in es.ids}
        with pytest.raises(EvaluationError, match="dim"):
            run_mt_eval(es, translated, en, make_fold_plan(en.ids, seed=1),
                        make_fold_plan(es.ids, seed=4), base=FAST)


class TestPairedTtest:
    def test_frozen_textbook_case(self):
        a = result_with([0.5, 0.6, 0.55, 0.52, 0.58])
        b = result_with([0.4, 0.41, 0.39, 0.42, 0.40])
        res = paired_fold_ttest(a, b)
        assert res.n == 5 and res.df == 4
        assert res.mean_diff == pytest.approx(0.146)
        assert res.t == pytest.approx(7.529375097689192, abs=1e-6)
        assert res.p == pytest.approx(0.001666078006493539, abs=1e-9)
        assert not res.zero_variance

    def test_matches_scipy_ttest_rel(self):
        a = result_with([0.61, 0.72, 0.58, 0.66, 0.70])
        b = result_with([0.52, 0.75, 0.49, 0.68, 0.61])
        res = paired_fold_ttest(a, b)
        ref = stats.ttest_rel(a.per_fold_f1, b.per_fold_f1)
        assert res.t == pytest.approx(ref.statistic, abs=1e-12)
        assert res.p == pytest.approx(ref.pvalue, abs=1e-12)

    def test_antisymmetric(self):
        a = result_with([0.61, 0.72, 0.58, 0.66, 0.70])
        b = result_with([0.52, 0.75, 0.49, 0.68, 0.61])
        fwd, rev = paired_fold_ttest(a, b), paired_fold_ttest(b, a)
        assert fwd.t == pytest.approx(-rev.t)
        assert fwd.p == pytest.approx(rev.p)
        assert fwd.mean_diff == pytest.approx(-rev.mean_diff)

    def test_zero_variance_nonzero_mean(self):
        res = paired_fold_ttest(result_with([0.6] * 5), result_with([0.5] * 5))
        assert res.zero_variance
        assert math.isinf(res.t) and res.t > 0
        assert res.p == 0.0

    def test_zero_variance_zero_mean(self):
        res = paired_fold_ttest(result_with([0.5] * 5), result_with([0.5] * 5))
        assert res.zero_variance
        assert res.t == 0.0 and res.p == 1.0

    def test_fold_mismatch(self):
        a = result_with([0.5] * 5)
        b = result_with([0.5] * 4)
        with pytest.raises(EvaluationError, match="fold count"):
            paired_fold_ttest(a, b)


class TestEvalCsv:
    def test_layout(self, tmp_path):
        res = result_with([0.5, 0.75, 0.625, 0.5, 0.5], regime="augmented")
        res.sources = ("es", "en", "ru")
        path = tmp_path / "eval.csv"
        write_eval_csv([res], path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["target", "sources", "dimension", "regime", "fold",
                           "macro_f1", "class_weights"]
        assert len(rows) == 7
        assert rows[1][4] == "0" and rows[1][1] == "es+en+ru"
        assert rows[-1][4] == "mean"
        assert rows[-1][5] == "0.575000"

"""Command-line pipeline driver. Every subcommand reads the shared config
(INI plus --set overrides), writes its outputs, and drops a run manifest
(config hash, seed, input checksums) next to the primary output.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import agreement as agreement_mod
from . import context as context_mod
from .classifier import TrainConfig, load_model, save_model, train
from .config import PipelineConfig, load_config
from .corpus import (extract_candidate_tuples, filter_entries, load_corpus_dump,
                     load_person_nouns, resolve_pronouns)
from .errors import CaaError, ConfigError, ScoringError
from .evaluation import (LanguageData, run_augmented_eval, run_mt_eval,
                         run_single_language_eval, write_eval_csv)
from .features import read_features
from .folds import make_fold_plan, save_fold_plan
from .lexicon import (aggregate_and_ternarize, filter_annotators,
                      ingest_annotation_file, lexicon_filename, load_lexicon,
                      save_lexicon)
from .manifest import manifest_path, write_manifest
from .matching import (load_exclusion_list, match_controls, read_pairs_csv,
                       split_pools, tune_slope, write_pairs_csv,
                       build_category_vectors)
from .scoring import (default_facets, diff_scores, rank_imbalance, read_scores_json,
                      score_entities, subgroup_report, write_diff_reports_csv,
                      write_imbalance_csv, write_scores_json)
from .types import Dimension


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="INI config file")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a config key (repeatable)")


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    overrides = {}
    problems = []
    for item in args.overrides:
        key, sep, value = item.partition("=")
        if not sep:
            problems.append(f"--set needs KEY=VALUE, got {item!r}")
        else:
            overrides[key.strip()] = value.strip()
    if problems:
        raise ConfigError(problems)
    cfg = load_config(args.config, overrides)
    cfg.validate()
    return cfg


def _write_json(path: str | Path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True),
                          encoding="utf-8")


def _language_data(lexicon_path: str, features_path: str) -> tuple[LanguageData, list[str]]:
    """Join an aggregated lexicon with its feature file by instance id."""
    lexicon = load_lexicon(lexicon_path)
    ffile = read_features(features_path)
    by_key = ffile.as_mapping()
    ids, rows, labels = [], [], []
    missing = []
    for inst in lexicon.instances:
        if inst.label is None:
            raise ScoringError(f"{lexicon_path}: instance {inst.instance_id} has no "
                               "label; run aggregate first")
        vec = by_key.get(inst.instance_id)
        if vec is None:
            missing.append(inst.instance_id)
            continue
        ids.append(inst.instance_id)
        rows.append(vec)
        labels.append(int(inst.label))
    if missing:
        raise ScoringError(f"{features_path}: no features for instances "
                           f"{missing[:5]!r}" + ("..." if len(missing) > 5 else ""))
    data = LanguageData(language=lexicon.language, dimension=lexicon.dimension.value,
                        ids=ids, features=np.stack(rows).astype(np.float64),
                        labels=labels)
    return data, [lexicon_path, features_path]


def _parse_weights(raw: str) -> tuple[float, float, float]:
    parts = [float(x) for x in raw.replace(",", " ").split()]
    if len(parts) != 3:
        raise ConfigError([f"--class-weights needs 3 numbers, got {raw!r}"])
    return tuple(parts)  # type: ignore[return-value]


def cmd_ingest(args, cfg: PipelineConfig) -> list[Path]:
    lexicons = ingest_annotation_file(args.annotations)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for lex in lexicons:
        path = out_dir / lexicon_filename(lex.language, lex.dimension)
        save_lexicon(lex, path)
        outputs.append(path)
    write_manifest(manifest_path(out_dir / "ingest"), "ingest", cfg,
                   inputs=[args.annotations], outputs=outputs,
                   extra={"lexicons": len(outputs)})
    return outputs


def cmd_aggregate(args, cfg: PipelineConfig) -> list[Path]:
    lexicons = [load_lexicon(p) for p in args.lexicons]
    filtered, report = filter_annotators(lexicons, threshold_sds=cfg.filter_threshold_sds)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for lex in filtered:
        aggregated = aggregate_and_ternarize(lex)
        path = out_dir / lexicon_filename(lex.language, lex.dimension)
        save_lexicon(aggregated, path)
        outputs.append(path)
    report_path = out_dir / "annotator_report.json"
    _write_json(report_path, report.to_dict())
    outputs.append(report_path)
    write_manifest(manifest_path(out_dir / "aggregate"), "aggregate", cfg,
                   inputs=args.lexicons, outputs=outputs,
                   extra={"removed_annotators": sorted(report.removed)})
    return outputs


def cmd_agreement(args, cfg: PipelineConfig) -> list[Path]:
    lexicon = load_lexicon(args.lexicon)
    result = agreement_mod.alpha_details(
        [[j.value for j in inst.judgements] for inst in lexicon.instances],
        metric=args.metric)
    payload = {"language": lexicon.language, "dimension": lexicon.dimension.value,
               "metric": args.metric, "alpha": result.alpha,
               "degenerate": result.degenerate,
               "pairwise_agreement": agreement_mod.pairwise_agreement(lexicon),
               "pairwise_agreement_ignoring_neutral":
                   agreement_mod.pairwise_agreement(lexicon, ignore_neutral_conflicts=True)}
    _write_json(args.out, payload)
    write_manifest(manifest_path(args.out), "agreement", cfg,
                   inputs=[args.lexicon], outputs=[args.out])
    return [Path(args.out)]


def cmd_context_loss(args, cfg: PipelineConfig) -> list[Path]:
    lexicon = load_lexicon(args.lexicon)
    loss = context_mod.context_loss(lexicon)
    payload = {"language": lexicon.language, "dimension": lexicon.dimension.value,
               "context_loss_percent": loss, "n_instances": len(lexicon)}
    _write_json(args.out, payload)
    write_manifest(manifest_path(args.out), "context-loss", cfg,
                   inputs=[args.lexicon], outputs=[args.out])
    return [Path(args.out)]


def cmd_translation_loss(args, cfg: PipelineConfig) -> list[Path]:
    source = load_lexicon(args.lexicon)
    english = load_lexicon(args.english_lexicon)
    table = context_mod.load_translation_table(args.table)
    loss, n = context_mod.translation_loss(source, english, table)
    payload = {"language": source.language, "dimension": source.dimension.value,
               "translation_loss_percent": loss, "n_translated_verbs": n}
    _write_json(args.out, payload)
    write_manifest(manifest_path(args.out), "translation-loss", cfg,
                   inputs=[args.lexicon, args.english_lexicon, args.table],
                   outputs=[args.out])
    return [Path(args.out)]


def cmd_train(args, cfg: PipelineConfig) -> list[Path]:
    data, inputs = _language_data(args.lexicon, args.features)
    weights = _parse_weights(args.class_weights)
    tc = TrainConfig(l2=cfg.l2, class_weights=weights, max_iter=cfg.max_iter,
                     tol=cfg.tol)
    encoder = read_features(args.features).header.encoder
    model = train(data.features, data.labels, tc, encoder=encoder,
                  dimension=data.dimension, language=data.language)
    save_model(model, args.out)
    write_manifest(manifest_path(args.out), "train", cfg, inputs=inputs,
                   outputs=[args.out],
                   extra={"n_iter": model.n_iter, "converged": model.converged,
                          "class_weights": list(weights)})
    return [Path(args.out)]


def _grid(cfg: PipelineConfig, args) -> tuple[tuple[float, ...] | None, TrainConfig]:
    base = TrainConfig(l2=cfg.l2, max_iter=cfg.max_iter, tol=cfg.tol)
    return (None if args.no_tune else cfg.class_weight_grid), base


def cmd_eval(args, cfg: PipelineConfig) -> list[Path]:
    target, inputs = _language_data(args.target_lexicon, args.target_features)
    target_plan = make_fold_plan(target.ids, n_folds=cfg.n_folds, seed=cfg.seed)
    if args.source_lexicon:
        source, more = _language_data(args.source_lexicon, args.source_features)
        inputs += more
        source_plan = make_fold_plan(source.ids, n_folds=cfg.n_folds, seed=cfg.seed)
    else:
        source, source_plan = target, target_plan
    grid, base = _grid(cfg, args)
    result = run_single_language_eval(target, source, target_plan,
                                      source_plan=source_plan, grid=grid, base=base)
    write_eval_csv([result], args.out)
    if args.fold_plan:
        save_fold_plan(target_plan, args.fold_plan)
    write_manifest(manifest_path(args.out), "eval", cfg, inputs=inputs,
                   outputs=[args.out], extra={"mean_macro_f1": result.mean_f1})
    return [Path(args.out)]


def cmd_augment_eval(args, cfg: PipelineConfig) -> list[Path]:
    target, inputs = _language_data(args.target_lexicon, args.target_features)
    target_plan = make_fold_plan(target.ids, n_folds=cfg.n_folds, seed=cfg.seed)
    sources, plans = [], {}
    for spec_pair in args.source:
        try:
            lex_path, feat_path = spec_pair.split(":", 1)
        except ValueError:
            raise ConfigError([f"--source needs LEXICON:FEATURES, got {spec_pair!r}"])
        src, more = _language_data(lex_path, feat_path)
        inputs += more
        sources.append(src)
        plans[src.language] = make_fold_plan(src.ids, n_folds=cfg.n_folds,
                                             seed=cfg.seed)
    grid, base = _grid(cfg, args)
    result = run_augmented_eval(target, sources, target_plan, source_plans=plans,
                                grid=grid, base=base)
    write_eval_csv([result], args.out)
    write_manifest(manifest_path(args.out), "augment-eval", cfg, inputs=inputs,
                   outputs=[args.out], extra={"mean_macro_f1": result.mean_f1})
    return [Path(args.out)]


def cmd_mt_eval(args, cfg: PipelineConfig) -> list[Path]:
    target, inputs = _language_data(args.target_lexicon, args.target_features)
    english, more = _language_data(args.english_lexicon, args.english_features)
    inputs += more
    translated = read_features(args.translated_features).as_mapping()
    inputs.append(args.translated_features)
    target_plan = make_fold_plan(target.ids, n_folds=cfg.n_folds, seed=cfg.seed)
    english_plan = make_fold_plan(english.ids, n_folds=cfg.n_folds, seed=cfg.seed)
    grid, base = _grid(cfg, args)
    result = run_mt_eval(target, translated, english, english_plan, target_plan,
                         grid=grid, base=base)
    write_eval_csv([result], args.out)
    write_manifest(manifest_path(args.out), "mt-eval", cfg, inputs=inputs,
                   outputs=[args.out], extra={"mean_macro_f1": result.mean_f1})
    return [Path(args.out)]


def cmd_build_corpus(args, cfg: PipelineConfig) -> list[Path]:
    entries = load_corpus_dump(args.dump)
    resolve_pronouns(entries)
    kept = filter_entries(entries, cfg.languages,
                          min_sentences=cfg.min_analyzable_sentences)
    payload = {"languages": list(cfg.languages),
               "total_entries": len(entries), "kept_entries": len(kept),
               "kept": [{"person_id": e.person_id, "group": e.group,
                         "pronouns": {l: t.value for l, t in sorted(e.pronouns.items())}}
                        for e in kept]}
    _write_json(args.out, payload)
    write_manifest(manifest_path(args.out), "build-corpus", cfg,
                   inputs=[args.dump], outputs=[args.out],
                   extra={"kept_entries": len(kept)})
    return [Path(args.out)]


def cmd_match(args, cfg: PipelineConfig) -> list[Path]:
    entries = load_corpus_dump(args.dump)
    resolve_pronouns(entries)
    kept = filter_entries(entries, cfg.languages,
                          min_sentences=cfg.min_analyzable_sentences)
    excluded = load_exclusion_list(args.exclusions)
    treatment, candidates = split_pools(kept)
    tuned = tune_slope(treatment, candidates, excluded, grid=cfg.slope_grid,
                       pivot=cfg.pivot)
    vectors = build_category_vectors(treatment + candidates, excluded,
                                     pivot=tuned.pivot, slope=tuned.best_slope)
    pairs = match_controls([e.person_id for e in treatment],
                           [e.person_id for e in candidates], vectors)
    write_pairs_csv(pairs, args.out, slope=tuned.best_slope, pivot=tuned.pivot)
    write_manifest(manifest_path(args.out), "match", cfg,
                   inputs=[args.dump, args.exclusions], outputs=[args.out],
                   extra={"slope": tuned.best_slope, "pivot": tuned.pivot,
                          "gaps": tuned.gaps, "n_pairs": len(pairs)})
    return [Path(args.out)]


def cmd_extract_tuples(args, cfg: PipelineConfig) -> list[Path]:
    entries = load_corpus_dump(args.dump)
    sentences = [s for e in entries for s in e.sentences.get(args.language, [])]
    nouns = load_person_nouns(args.person_nouns)
    tuples = extract_candidate_tuples(sentences, nouns, k_verbs=args.k_verbs,
                                      k_contexts=args.k_contexts)
    import csv as _csv
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["subject", "verb", "object", "frequency", "sample_sentence"])
        for t in tuples:
            sample = t.sample_sentences[0] if t.sample_sentences else ""
            writer.writerow([t.subject_lemma, t.verb_lemma, t.object_lemma,
                             t.frequency, sample])
    write_manifest(manifest_path(args.out), "extract-tuples", cfg,
                   inputs=[args.dump, args.person_nouns], outputs=[args.out],
                   extra={"n_tuples": len(tuples)})
    return [Path(args.out)]


def _parse_models(model_args: list[str]):
    models = {}
    for item in model_args:
        key, sep, path = item.partition("=")
        if not sep:
            raise ConfigError([f"--model needs DIMENSION=PATH, got {item!r}"])
        models[Dimension.parse(key)] = load_model(path)
    return models


def cmd_score(args, cfg: PipelineConfig) -> list[Path]:
    entries = load_corpus_dump(args.dump)
    resolve_pronouns(entries)
    kept = filter_entries(entries, cfg.languages,
                          min_sentences=cfg.min_analyzable_sentences)
    models = _parse_models(args.model)
    features = read_features(args.features).as_mapping()
    table, unscored = score_entities(kept, args.language, models, features,
                                     dimensions=tuple(models))
    write_scores_json(table, args.out)
    inputs = [args.dump, args.features] + [i.partition("=")[2] for i in args.model]
    write_manifest(manifest_path(args.out), "score", cfg, inputs=inputs,
                   outputs=[args.out],
                   extra={"language": args.language, "n_scored": len(table),
                          "unscored": unscored})
    return [Path(args.out)]


def cmd_report(args, cfg: PipelineConfig) -> list[Path]:
    scores = {}
    for path in args.scores:
        scores.update(read_scores_json(path))
    if not scores:
        raise ScoringError("no scored entities found; run the score stage first")
    pairs = read_pairs_csv(args.pairs)
    languages = sorted({lang for (_, lang, _) in scores})
    dimensions = sorted({dim for (_, _, dim) in scores}, key=lambda d: d.value)
    reports = []
    refusals = []
    for language in languages:
        for dim in dimensions:
            try:
                reports.append(diff_scores(pairs, scores, language, dim,
                                           min_verbs=cfg.min_verbs))
            except CaaError as exc:
                refusals.append({"subgroup": "all", "language": language,
                                 "dimension": dim.value, "reason": str(exc)})
    if args.subgroups:
        entries = load_corpus_dump(args.dump)
        entries_by_id = {e.person_id: e for e in entries}
        for language in languages:
            sub_reports, sub_refused = subgroup_report(
                pairs, scores, entries_by_id, [language], dimensions=dimensions,
                facets=default_facets(), min_verbs=cfg.min_verbs)
            reports.extend(sub_reports)
            refusals.extend({"subgroup": r.subgroup, "language": language,
                             "total_verbs": r.total_verbs, "min_verbs": r.min_verbs,
                             "n_pairs": r.n_pairs} for r in sub_refused)
    write_diff_reports_csv(reports, args.out)
    refusal_path = Path(args.out).with_suffix(".refusals.json")
    _write_json(refusal_path, refusals)
    inputs = [args.pairs] + list(args.scores) + ([args.dump] if args.subgroups else [])
    write_manifest(manifest_path(args.out), "report", cfg, inputs=inputs,
                   outputs=[args.out, refusal_path],
                   extra={"n_reports": len(reports), "n_refusals": len(refusals)})
    return [Path(args.out), refusal_path]


def cmd_rank_imbalance(args, cfg: PipelineConfig) -> list[Path]:
    scores = {}
    for path in args.scores:
        scores.update(read_scores_json(path))
    if not scores:
        raise ScoringError("no scored entities found; run the score stage first")
    ranking = rank_imbalance(scores, args.language_a, args.language_b,
                             Dimension.parse(args.dimension), k=cfg.top_k)
    write_imbalance_csv(ranking, args.out)
    write_manifest(manifest_path(args.out), "rank-imbalance", cfg,
                   inputs=list(args.scores), outputs=[args.out],
                   extra={"truncated": ranking.truncated,
                          "returned": len(ranking.entries)})
    return [Path(args.out)]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="caa",
        description="Contextual affect pipeline: lexicon building, classifier "
                    "evaluation, corpus matching, and paired affect reports.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="annotation CSV to raw per-language lexicons")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("aggregate", help="filter annotators, aggregate, ternarize")
    p.add_argument("--lexicons", nargs="+", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_aggregate)

    p = sub.add_parser("agreement", help="inter-annotator reliability for a lexicon")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--metric", choices=["interval", "nominal"], default="interval")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_agreement)

    p = sub.add_parser("context-loss",
                       help="% of instances changed by verb-level aggregation")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_context_loss)

    p = sub.add_parser("translation-loss",
                       help="% of verbs whose label changes across translation")
    p.add_argument("--lexicon", required=True, help="aggregated source-language lexicon")
    p.add_argument("--english-lexicon", required=True)
    p.add_argument("--table", required=True, help="translation table CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_translation_loss)

    p = sub.add_parser("train", help="fit one dimension's classifier on all data")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--class-weights", default="1,1,1")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train)

    for name, fn in (("eval", cmd_eval),):
        p = sub.add_parser(name, help="cross-validated macro-F1, single or cross-language")
        p.add_argument("--target-lexicon", required=True)
        p.add_argument("--target-features", required=True)
        p.add_argument("--source-lexicon")
        p.add_argument("--source-features")
        p.add_argument("--no-tune", action="store_true",
                       help="skip class-weight grid search")
        p.add_argument("--fold-plan", help="also write the target fold plan JSON")
        p.add_argument("--out", required=True)
        p.set_defaults(fn=fn)

    p = sub.add_parser("augment-eval", help="target training set augmented with sources")
    p.add_argument("--target-lexicon", required=True)
    p.add_argument("--target-features", required=True)
    p.add_argument("--source", action="append", default=[],
                   metavar="LEXICON:FEATURES", help="added source (repeatable)")
    p.add_argument("--no-tune", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_augment_eval)

    p = sub.add_parser("mt-eval",
                       help="English-trained model on translated-sentence features")
    p.add_argument("--target-lexicon", required=True)
    p.add_argument("--target-features", required=True,
                   help="unused for scoring; defines the target id space")
    p.add_argument("--english-lexicon", required=True)
    p.add_argument("--english-features", required=True)
    p.add_argument("--translated-features", required=True,
                   help="features of translated sentences, keyed by target ids")
    p.add_argument("--no-tune", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_mt_eval)

    p = sub.add_parser("build-corpus", help="load, filter, and summarize the dump")
    p.add_argument("--dump", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_build_corpus)

    p = sub.add_parser("match", help="tune slope and build the control pairing")
    p.add_argument("--dump", required=True)
    p.add_argument("--exclusions", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_match)

    p = sub.add_parser("extract-tuples",
                       help="top transitive verbs with human-participant tuples")
    p.add_argument("--dump", required=True)
    p.add_argument("--person-nouns", required=True)
    p.add_argument("--language", required=True)
    p.add_argument("--k-verbs", type=int, default=300)
    p.add_argument("--k-contexts", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_extract_tuples)

    p = sub.add_parser("score", help="entity affect scores for one language")
    p.add_argument("--dump", required=True)
    p.add_argument("--language", required=True)
    p.add_argument("--model", action="append", default=[],
                   metavar="DIMENSION=PATH", help="trained model (repeatable)")
    p.add_argument("--features", required=True, help="corpus verb features")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_score)

    p = sub.add_parser("report", help="paired diff statistics, optionally by subgroup")
    p.add_argument("--pairs", required=True)
    p.add_argument("--scores", nargs="+", required=True)
    p.add_argument("--subgroups", action="store_true")
    p.add_argument("--dump", help="needed with --subgroups for facet attributes")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("rank-imbalance", help="largest cross-language score gaps")
    p.add_argument("--scores", nargs="+", required=True)
    p.add_argument("--language-a", required=True)
    p.add_argument("--language-b", required=True)
    p.add_argument("--dimension", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_rank_imbalance)

    for sp in sub.choices.values():
        _add_common(sp)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "report" and args.subgroups and not args.dump:
            raise ConfigError(["--subgroups requires --dump"])
        args.fn(args, cfg)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"caa {args.command}: config error: {problem}", file=sys.stderr)
        return 2
    except CaaError as exc:
        print(f"caa {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

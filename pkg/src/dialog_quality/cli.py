"""Command-line entry point wiring the modules into reproducible pipelines.

Subcommands: segment, score, train, predict, evaluate, correlate, agreement,
serve, export, synth. Every run is a pure function of its inputs, flags, and
seed. Exit codes: 0 success, 1 validation error (including unknown flags),
2 I/O error.

Environment variables (path defaults only): DQW_STORE (annotation store
file), DQW_MODEL (model bundle directory), DQW_OUT_DIR (directory for
outputs given as bare file names).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import aggregators, annotation, dialogs, features, forest, metrics, synth, tld

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract here is exit 1
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(ValueError):
    pass


def _env_path(flag_value: str | None, env_name: str) -> str | None:
    if flag_value is not None:
        return flag_value
    return os.environ.get(env_name)


def _out_path(name: str) -> Path:
    path = Path(name)
    if path.parent == Path("."):
        return Path(os.environ.get("DQW_OUT_DIR", ".")) / path
    return path


# ----------------------------------------------------------------------
# shared input loading


def _load_score_map(args, loaded_dialogs: list[dialogs.Dialog]) -> tld.TldScoreMap:
    if getattr(args, "heuristic", False):
        rules = tld.DEFAULT_RULES
        if getattr(args, "rules", None):
            rules = tld.load_rule_table(args.rules)
        return tld.heuristic_scores(loaded_dialogs, rules)
    if not getattr(args, "scores", None):
        raise _UsageError("either --scores or --heuristic is required")
    return tld.load_scores(args.scores, loaded_dialogs)


def _methods_for(flag: str) -> list[str]:
    if flag == "all":
        return ["mean", "last_turn", "union", "rising_linear"]
    return [aggregators.METHOD_ALIASES[flag]]


# ----------------------------------------------------------------------
# subcommand implementations


def _cmd_segment(args) -> int:
    with open(args.input, encoding="utf-8") as fh:
        events = dialogs.parse_dialog_log(fh)
    if events and all(e.dialog_id is not None for e in events):
        sessions = dialogs.group_presessionized(events)
    else:
        ordered = sorted(events, key=lambda e: (e.user_id, e.timestamp))
        sessions = dialogs.segment_sessions(ordered, args.gap)
    for d in sessions:
        dialogs.validate_dialog(d)
    dialogs.write_dialogs(_out_path(args.out), sessions)
    print(f"wrote {len(sessions)} dialogs to {_out_path(args.out)}")
    return EXIT_OK


def _cmd_score(args) -> int:
    loaded = dialogs.read_dialogs(args.dialogs)
    score_map = _load_score_map(args, loaded)
    rows = aggregators.score_dialogs(
        loaded, score_map, _methods_for(args.method), args.threshold
    )
    aggregators.write_dialog_scores(_out_path(args.out), rows)
    print(f"wrote {len(rows)} dialog scores to {_out_path(args.out)}")
    return EXIT_OK


def _grid_from_file(path: str, seed: int) -> list[tuple[features.FeatureConfig, forest.ForestParams]]:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    points = obj.get("points")
    if not points:
        raise ValueError("grid file must contain a non-empty 'points' array")
    grid = []
    for p in points:
        config = features.FeatureConfig(
            encoder_dim=p.get("encoder_dim", features.DEFAULT_ENCODER_DIM),
            vocab_size=p.get("vocab_size", features.DEFAULT_VOCAB_SIZE),
            use_tfidf=p.get("use_tfidf", True),
            use_tld=p.get("use_tld", True),
        )
        params = forest.ForestParams(
            n_trees=p.get("n_trees", 100),
            max_depth=p.get("max_depth", 16),
            min_samples_leaf=p.get("min_samples_leaf", 1),
            features_per_split=p.get("features_per_split"),
            rng_seed=seed,
        )
        grid.append((config, params))
    return grid


def _cmd_train(args) -> int:
    labeled = features.read_labeled_dialogs(args.dialogs)
    train_dialogs = [d for d, _, _ in labeled]
    labels = [label for _, _, label in labeled]
    score_map = _load_score_map(args, train_dialogs)

    base_config = features.FeatureConfig(
        encoder_dim=args.encoder_dim, vocab_size=args.vocab_size
    )
    if args.grid:
        grid = _grid_from_file(args.grid, args.seed)
        y = np.array(labels, dtype=bool)
        pipelines: dict[features.FeatureConfig, features.FeaturePipeline] = {}
        matrices: dict[features.FeatureConfig, np.ndarray] = {}
        results = []
        best_i, best_f1 = -1, -1.0
        for i, (config, params) in enumerate(grid):
            if config not in pipelines:
                pipelines[config] = features.FeaturePipeline.fit(train_dialogs, config)
                matrices[config] = pipelines[config].transform_all(
                    train_dialogs, score_map
                )
            _, point_results = forest.cross_validate(
                matrices[config], y, [params], k=args.cv_folds, seed=args.seed
            )
            mean_f1 = point_results[0][1]
            results.append((config, params, mean_f1))
            if mean_f1 > best_f1:
                best_f1, best_i = mean_f1, i
        config, params, _ = results[best_i]
        for c, p, f1 in results:
            print(f"grid point trees={p.n_trees} depth={p.max_depth} "
                  f"min_leaf={p.min_samples_leaf} tfidf={c.use_tfidf} "
                  f"tld={c.use_tld}: mean F1 {f1:.4f}")
    else:
        config = base_config
        params = forest.ForestParams(
            n_trees=args.trees,
            max_depth=args.max_depth,
            min_samples_leaf=args.min_leaf,
            rng_seed=args.seed,
        )
    bundle = forest.fit_bundle(train_dialogs, labels, score_map, config, params)
    out_dir = _out_path(args.out)
    forest.save_bundle(out_dir, bundle)
    if args.dump_features:
        X = bundle.pipeline.transform_all(train_dialogs, score_map)
        features.write_feature_rows(
            args.dump_features, [d.dialog_id for d in train_dialogs], X, labels
        )
    print(f"trained on {len(labeled)} dialogs; bundle written to {out_dir}")
    return EXIT_OK


def _cmd_predict(args) -> int:
    model_dir = _env_path(args.model, "DQW_MODEL")
    if model_dir is None:
        raise _UsageError("--model is required (or set DQW_MODEL)")
    bundle = forest.load_bundle(model_dir)
    loaded = dialogs.read_dialogs(args.dialogs)
    score_map = _load_score_map(args, loaded)
    proba = bundle.predict_proba(loaded, score_map)
    rows = [
        aggregators.DialogScore(
            dialog_id=d.dialog_id,
            method="dqm",
            score=float(p),
            predicted_defect=aggregators.binarize_score(float(p), args.threshold),
        )
        for d, p in zip(loaded, proba)
    ]
    aggregators.write_dialog_scores(_out_path(args.out), rows)
    print(f"wrote {len(rows)} predictions to {_out_path(args.out)}")
    return EXIT_OK


def _format_table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [
        max(len(headers[c]), *(len(r[c]) for r in rows)) if rows else len(headers[c])
        for c in range(len(headers))
    ]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)))
    return "\n".join(lines)


def _fmt(value: float | None) -> str:
    return "-" if value is None else f"{value:.3f}"


def evaluate_methods(
    eval_dialogs: list[dialogs.Dialog],
    labels: list[bool],
    score_map: tld.TldScoreMap,
    bundle: forest.ModelBundle | None,
    threshold: float = aggregators.DEFAULT_THRESHOLD,
) -> dict:
    """Per-method classification reports and length-stratified ROC-AUC."""
    lengths = [len(d) for d in eval_dialogs]
    method_scores: dict[str, list[float]] = {}
    for method in ("mean", "last_turn", "union", "rising_linear"):
        fn = aggregators.AGGREGATORS[method]
        method_scores[method] = [
            fn(score_map.for_dialog(d)) for d in eval_dialogs
        ]
    if bundle is not None:
        method_scores["dqm"] = [
            float(p) for p in bundle.predict_proba(eval_dialogs, score_map)
        ]
    two_classes = any(labels) and not all(labels)
    methods_out = {}
    for method, scores in method_scores.items():
        predicted = [aggregators.binarize_score(s, threshold) for s in scores]
        report = metrics.classification_report(predicted, labels)
        methods_out[method] = {
            "tp": report.tp,
            "fp": report.fp,
            "tn": report.tn,
            "fn": report.fn,
            "precision": report.precision,
            "recall": report.recall,
            "f1": report.f1,
            "roc_auc": metrics.roc_auc(scores, labels) if two_classes else None,
            "stratified_auc": metrics.stratified_auc(scores, labels, lengths)
            if two_classes
            else {},
        }
    return {
        "schema": "eval-report v1",
        "n_dialogs": len(eval_dialogs),
        "threshold": threshold,
        "methods": methods_out,
    }


def render_eval_report(report: dict) -> str:
    headers = ["method", "precision", "recall", "f1", "roc_auc"]
    rows = []
    for method, m in report["methods"].items():
        rows.append(
            [method, _fmt(m["precision"]), _fmt(m["recall"]), _fmt(m["f1"]),
             _fmt(m["roc_auc"])]
        )
    out = [_format_table(headers, rows)]
    buckets = ["short", "medium", "long"]
    auc_headers = ["method"] + buckets
    auc_rows = []
    for method, m in report["methods"].items():
        strat = m.get("stratified_auc", {})
        auc_rows.append([method] + [_fmt(strat.get(b)) for b in buckets])
    out.append("")
    out.append("ROC-AUC by dialog length (short <=3, medium 4-6, long >=7):")
    out.append(_format_table(auc_headers, auc_rows))
    if report.get("correlations"):
        out.append("")
        out.append("attribute correlations (rho, p):")
        corr_rows = []
        for name, entry in report["correlations"]["attributes"].items():
            corr_rows.append(
                [name, _fmt(entry[0]) if entry else "-", _fmt(entry[1]) if entry else "-"]
            )
        lots = report["correlations"].get("friction_lots_high")
        if lots:
            corr_rows.append(["goal_friction (lots-high)", _fmt(lots[0]), _fmt(lots[1])])
        out.append(_format_table(["attribute", "rho", "p"], corr_rows))
    if report.get("agreement"):
        out.append("")
        agreement = report["agreement"]
        out.append(
            f"inter-annotator agreement (within one point): "
            f"{agreement['overall_within_one']:.3f} over "
            f"{agreement['dual_pairs']} dual pairs"
        )
    return "\n".join(out)


def _correlation_report_dict(report: metrics.CorrelationReport) -> dict:
    return {
        "attributes": {
            name: list(entry) if entry is not None else None
            for name, entry in report.attributes.items()
        },
        "friction_lots_high": list(report.friction_lots_high)
        if report.friction_lots_high is not None
        else None,
    }


def _cmd_evaluate(args) -> int:
    labeled = features.read_labeled_dialogs(args.dialogs)
    eval_dialogs = [d for d, _, _ in labeled]
    labels = [label for _, _, label in labeled]
    score_map = _load_score_map(args, eval_dialogs)
    model_dir = _env_path(args.model, "DQW_MODEL")
    bundle = forest.load_bundle(model_dir) if model_dir else None
    report = evaluate_methods(eval_dialogs, labels, score_map, bundle, args.threshold)
    if args.annotations:
        records = annotation_records_from_file(args.annotations)
        report["correlations"] = _correlation_report_dict(
            metrics.attribute_correlations([q for _, _, q in records])
        )
    store_path = _env_path(args.store, "DQW_STORE")
    if store_path:
        store = annotation.AnnotationStore(store_path)
        agreement = store.agreement_report()
        report["agreement"] = {
            "overall_within_one": agreement.overall_within_one,
            "dual_pairs": agreement.dual_pairs,
            "per_annotator": agreement.per_annotator,
        }
    if args.out:
        with open(_out_path(args.out), "w", encoding="utf-8") as fh:
            json.dump(report, fh, sort_keys=True, indent=2)
            fh.write("\n")
    print(render_eval_report(report))
    return EXIT_OK


def annotation_records_from_file(
    path: str | Path,
) -> list[tuple[str, str, annotation.DqaQuestionnaire]]:
    """Read annotation JSON Lines: dialog_id, annotator_id, questionnaire."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            try:
                questionnaire = annotation.DqaQuestionnaire.from_dict(
                    obj["questionnaire"] if "questionnaire" in obj else obj
                )
            except annotation.AnnotationError as exc:
                raise annotation.AnnotationError(
                    exc.code, f"line {line_no}: {exc}"
                ) from exc
            records.append(
                (obj.get("dialog_id", ""), obj.get("annotator_id", ""), questionnaire)
            )
    return records


def _cmd_correlate(args) -> int:
    records = annotation_records_from_file(args.annotations)
    report = metrics.attribute_correlations([q for _, _, q in records])
    obj = _correlation_report_dict(report)
    if args.out:
        with open(_out_path(args.out), "w", encoding="utf-8") as fh:
            json.dump(obj, fh, sort_keys=True, indent=2)
            fh.write("\n")
    rows = []
    for name, entry in obj["attributes"].items():
        rows.append(
            [name, _fmt(entry[0]) if entry else "-", _fmt(entry[1]) if entry else "-"]
        )
    if obj["friction_lots_high"]:
        rows.append(
            ["goal_friction (lots-high)",
             _fmt(obj["friction_lots_high"][0]), _fmt(obj["friction_lots_high"][1])]
        )
    print(_format_table(["attribute", "rho", "p"], rows))
    return EXIT_OK


def _cmd_agreement(args) -> int:
    store_path = _env_path(args.store, "DQW_STORE")
    if store_path is None:
        raise _UsageError("--store is required (or set DQW_STORE)")
    store = annotation.AnnotationStore(store_path)
    report = store.agreement_report()
    print(
        json.dumps(
            {
                "overall_within_one": report.overall_within_one,
                "dual_pairs": report.dual_pairs,
                "per_annotator": report.per_annotator,
            },
            sort_keys=True,
        )
    )
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    store_path = _env_path(args.store, "DQW_STORE")
    if store_path is None:
        raise _UsageError("--store is required (or set DQW_STORE)")
    store = annotation.AnnotationStore(store_path)
    app = create_app(store, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def _cmd_export(args) -> int:
    store_path = _env_path(args.store, "DQW_STORE")
    if store_path is None:
        raise _UsageError("--store is required (or set DQW_STORE)")
    store = annotation.AnnotationStore(store_path)
    rows = store.export_training_set()
    features.write_labeled_dialogs(_out_path(args.out), rows)
    print(f"exported {len(rows)} labeled dialogs to {_out_path(args.out)}")
    return EXIT_OK


def parse_mix(text: str) -> dict[str, float]:
    mix = {}
    for part in text.split(","):
        if "=" not in part:
            raise ValueError(f"mix entry '{part}' must look like pattern=fraction")
        name, value = part.split("=", 1)
        mix[name.strip()] = float(value)
    return mix


def _cmd_synth(args) -> int:
    spec = synth.CorpusSpec(
        n_dialogs=args.n, mix=parse_mix(args.mix), seed=args.seed
    )
    rows, score_map = synth.generate_corpus(spec)
    patterns = {r.dialog.dialog_id: r.pattern for r in rows}
    features.write_labeled_dialogs(
        _out_path(args.out_dialogs),
        [(r.dialog, r.rating, r.label) for r in rows],
        patterns=patterns,
    )
    tld.write_scores(_out_path(args.out_scores), score_map)
    print(
        f"wrote {len(rows)} dialogs to {_out_path(args.out_dialogs)} "
        f"and {len(score_map)} scores to {_out_path(args.out_scores)}"
    )
    return EXIT_OK


def stratified_split(
    rows: list, key: callable, test_fraction: float, seed: int
) -> tuple[list, list]:
    """Deterministic train/test split keeping each key at a similar rate."""
    import random as _random

    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    rng = _random.Random(seed)
    groups: dict = {}
    for row in rows:
        groups.setdefault(key(row), []).append(row)
    train, test = [], []
    for _, group in sorted(groups.items(), key=lambda kv: str(kv[0])):
        shuffled = list(group)
        rng.shuffle(shuffled)
        n_test = round(test_fraction * len(shuffled))
        test.extend(shuffled[:n_test])
        train.extend(shuffled[n_test:])
    return train, test


# ----------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dqw", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="split a dialog log into sessions")
    p.add_argument("input", help="dialog-log v1 JSON Lines file")
    p.add_argument("--gap", type=int, default=dialogs.DEFAULT_GAP_SECONDS,
                   help="inactivity gap in seconds that starts a new session")
    p.add_argument("--out", default="dialogs.jsonl")
    p.set_defaults(fn=_cmd_segment)

    p = sub.add_parser("score", help="aggregate turn scores into dialog scores")
    p.add_argument("--dialogs", required=True)
    p.add_argument("--scores", help="tld-scores v1 file")
    p.add_argument("--heuristic", action="store_true",
                   help="score turns with the built-in heuristic instead")
    p.add_argument("--rules", help="heuristic rule table JSON")
    p.add_argument("--method", default="all",
                   choices=["mean", "last", "union", "rising", "all"])
    p.add_argument("--threshold", type=float, default=aggregators.DEFAULT_THRESHOLD)
    p.add_argument("--out", default="dialog_scores.jsonl")
    p.set_defaults(fn=_cmd_score)

    p = sub.add_parser("train", help="train the dialog-level defect model")
    p.add_argument("--dialogs", required=True, help="labeled-dialog v1 file")
    p.add_argument("--scores")
    p.add_argument("--heuristic", action="store_true")
    p.add_argument("--rules")
    p.add_argument("--grid", help="hyperparameter grid JSON file")
    p.add_argument("--seed", type=int, default=1302)
    p.add_argument("--cv-folds", type=int, default=5)
    p.add_argument("--encoder-dim", type=int, default=features.DEFAULT_ENCODER_DIM)
    p.add_argument("--vocab-size", type=int, default=features.DEFAULT_VOCAB_SIZE)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=16)
    p.add_argument("--min-leaf", type=int, default=1)
    p.add_argument("--dump-features", help="write features v1 JSON Lines here")
    p.add_argument("--out", default="model")
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("predict", help="score dialogs with a trained model")
    p.add_argument("--model")
    p.add_argument("--dialogs", required=True)
    p.add_argument("--scores")
    p.add_argument("--heuristic", action="store_true")
    p.add_argument("--rules")
    p.add_argument("--threshold", type=float, default=aggregators.DEFAULT_THRESHOLD)
    p.add_argument("--out", default="predictions.jsonl")
    p.set_defaults(fn=_cmd_predict)

    p = sub.add_parser("evaluate", help="compare methods against labels")
    p.add_argument("--dialogs", required=True, help="labeled-dialog v1 file")
    p.add_argument("--scores")
    p.add_argument("--heuristic", action="store_true")
    p.add_argument("--rules")
    p.add_argument("--model", help="include DQM predictions from this bundle")
    p.add_argument("--annotations", help="annotation records for correlations")
    p.add_argument("--store", help="annotation store for agreement section")
    p.add_argument("--threshold", type=float, default=aggregators.DEFAULT_THRESHOLD)
    p.add_argument("--out", help="write eval-report v1 JSON here")
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("correlate", help="attribute-vs-rating correlations")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_correlate)

    p = sub.add_parser("agreement", help="inter-annotator agreement report")
    p.add_argument("--store")
    p.set_defaults(fn=_cmd_agreement)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--store")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui", help="static UI asset directory")
    p.set_defaults(fn=_cmd_serve)

    p = sub.add_parser("export", help="export labeled training data from a store")
    p.add_argument("--store")
    p.add_argument("--out", default="training.jsonl")
    p.set_defaults(fn=_cmd_export)

    p = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mix",
                   default="fatal_turn=0.25,rephrase_loop=0.25,"
                           "refinement_chain=0.25,clean=0.25")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dialogs", default="synth_dialogs.jsonl")
    p.add_argument("--out-scores", default="synth_scores.jsonl")
    p.set_defaults(fn=_cmd_synth)

    return parser


def run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (
        dialogs.DialogLogError,
        dialogs.DialogValidationError,
        tld.TldScoreError,
        annotation.AnnotationError,
        metrics.MetricError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()

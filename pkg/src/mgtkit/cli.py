"""Command-line entry point.

Subcommands mirror the batch workflow: `preprocess` rewrites corpus text,
`fit` trains featurizer+model components from a JSON config, `predict` writes
per-component prediction files, `ensemble` combines prediction files with
dev-derived weights, and `evaluate` scores predictions and emits a report.

Exit codes: 0 on success, 2 for usage/config/input errors, 1 for unexpected
runtime failures. All commands are deterministic: rerunning with identical
inputs rewrites byte-identical outputs.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from .boundary import (
    BoundaryComponent,
    clip_round,
    component_predictions,
    fit_boundary_component,
    round_half_away,
)
from .corpus import (
    CLEANING_MODES,
    Corpus,
    LabelScheme,
    clean_text,
    load_jsonl,
    tokenize_words,
    write_predictions,
)
from .ensemble import (
    PredictionSet,
    accuracy_weights,
    average_predictions,
    combine_prob_predictions,
    inverse_mae_weights,
    load_prediction_set,
    vote_predictions,
)
from .features import (
    TfidfConfig,
    featurize,
    featurizer_from_dict,
    featurizer_to_dict,
    fit_ppmi,
    fit_tfidf,
)
from .metrics import (
    RunReport,
    accuracy,
    confusion,
    emit_report,
    mean_absolute_error,
)
from .regress import fit_softmax, load_model, predict_classes, save_model

TASKS = ("binary", "multiway", "boundary")

_SCHEMES = {
    "binary": LabelScheme.BINARY,
    "multiway": LabelScheme.MULTIWAY6,
    "boundary": LabelScheme.BOUNDARY,
}

_N_CLASSES = {"binary": 2, "multiway": 6}

_DEFAULT_CLASSIFIER = {"lr": 0.5, "epochs": 300, "l2": 0.0}


def _load_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _require(mapping: dict, field: str, where: str):
    if field not in mapping:
        raise ValueError(f"{where} is missing required field {field!r}")
    return mapping[field]


def _task_scheme(task: str) -> LabelScheme:
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")
    return _SCHEMES[task]


def _load_config(args) -> dict:
    if not args.config:
        raise ValueError("this command needs --config")
    config = _load_json(args.config)
    if not isinstance(config, dict):
        raise ValueError(f"{args.config}: config must be a JSON object")
    task = _require(config, "task", "config")
    _task_scheme(task)
    cleaning = config.get("cleaning", "none")
    if cleaning not in CLEANING_MODES:
        raise ValueError(f"unknown cleaning mode {cleaning!r}")
    if task == "boundary" and cleaning != "none":
        raise ValueError(
            "boundary corpora must use cleaning mode 'none': gold indices "
            "refer to the text as stored"
        )
    components = _require(config, "components", "config")
    if not isinstance(components, list) or not components:
        raise ValueError("config needs a non-empty 'components' list")
    if args.seed is not None:
        config = {**config, "seed": args.seed}
    config.setdefault("seed", 0)
    return config


def _load_corpus(path, task: str, cleaning: str) -> Corpus:
    corpus = load_jsonl(path, _task_scheme(task))
    if cleaning == "none":
        return corpus
    docs = tuple(
        dataclasses.replace(doc, text=clean_text(doc.text, cleaning))
        for doc in corpus
    )
    return Corpus(documents=docs, scheme=corpus.scheme)


def _fit_classifier_component(name, spec, train, y, params):
    features_spec = _require(spec, "features", f"component {name!r}")
    kind = features_spec.get("kind")
    if kind == "tfidf":
        featurizer = fit_tfidf(
            train,
            TfidfConfig(
                min_df=features_spec.get("min_df", TfidfConfig.min_df),
                max_features=features_spec.get(
                    "max_features", TfidfConfig.max_features
                ),
                l2_normalize=features_spec.get(
                    "l2_normalize", TfidfConfig.l2_normalize
                ),
            ),
        )
    elif kind == "ppmi":
        featurizer = fit_ppmi(train)
    else:
        raise ValueError(f"component {name!r}: CLI fit supports tfidf and ppmi")
    X = featurize(train, featurizer)
    model = fit_softmax(X, y, **params)
    return featurizer, model


def cmd_fit(args) -> None:
    config = _load_config(args)
    task = config["task"]
    cleaning = config.get("cleaning", "none")
    train = _load_corpus(_require(config, "train_path", "config"), task, cleaning)
    out_dir = Path(args.out_dir)
    os.makedirs(out_dir, exist_ok=True)

    if task == "boundary":
        for spec in config["components"]:
            name = _require(spec, "name", "component")
            component = fit_boundary_component(
                name,
                train,
                _require(spec, "features", f"component {name!r}"),
                _require(spec, "regressor", f"component {name!r}"),
            )
            _write_json(
                featurizer_to_dict(component.featurizer),
                out_dir / f"{name}.features.json",
            )
            save_model(component.regressor, out_dir / f"{name}.model.json")
    else:
        labels = [doc.label for doc in train]
        if any(lbl is None for lbl in labels):
            raise ValueError("training corpus has unlabeled documents")
        default_params = {**_DEFAULT_CLASSIFIER, **config.get("classifier", {})}
        for spec in config["components"]:
            name = _require(spec, "name", "component")
            params = {**default_params, **spec.get("classifier", {})}
            featurizer, model = _fit_classifier_component(
                name, spec, train, labels, params
            )
            _write_json(featurizer_to_dict(featurizer), out_dir / f"{name}.features.json")
            save_model(model, out_dir / f"{name}.model.json")


def cmd_predict(args) -> None:
    config = _load_config(args)
    task = config["task"]
    corpus = _load_corpus(args.input, task, config.get("cleaning", "none"))
    model_dir = Path(args.model_dir)
    out_dir = Path(args.out_dir)
    os.makedirs(out_dir, exist_ok=True)

    for spec in config["components"]:
        name = _require(spec, "name", "component")
        featurizer = featurizer_from_dict(_load_json(model_dir / f"{name}.features.json"))
        model = load_model(model_dir / f"{name}.model.json")
        if task == "boundary":
            component = BoundaryComponent(name, featurizer, model)
            preds = component_predictions(
                component, corpus, snap=not args.no_snap, clip=not args.no_clip
            )
        else:
            classes = predict_classes(model, featurize(corpus, featurizer))
            preds = PredictionSet(
                name=name,
                kind="class",
                values={doc.id: int(c) for doc, c in zip(corpus, classes)},
            )
        write_predictions(preds, out_dir / f"{name}.jsonl")


def _ensemble_weights(spec, components, rule, args):
    metrics = [c.get("dev_metric") for c in spec["components"]]
    if all(m is not None for m in metrics):
        if rule == "weighted_average":
            return inverse_mae_weights(metrics)
        weights = [float(m) for m in metrics]
        if any(w <= 0 for w in weights):
            raise ValueError("zero weight component: dev accuracy must be positive")
        return weights
    if not args.dev_gold:
        raise ValueError(
            "ensemble spec components lack dev_metric; pass --dev-gold and "
            "per-component dev_path to compute weights"
        )
    gold = load_jsonl(args.dev_gold, _task_scheme(spec["task"]))
    dev_sets = []
    for entry, comp in zip(spec["components"], components):
        dev_path = _require(entry, "dev_path", f"component {comp.name!r}")
        dev_sets.append(load_prediction_set(dev_path, comp.name, comp.kind))
    if rule == "weighted_average":
        return inverse_mae_weights([mean_absolute_error(s, gold) for s in dev_sets])
    return accuracy_weights(dev_sets, gold)


def cmd_ensemble(args) -> None:
    spec = _load_json(args.spec)
    if not isinstance(spec, dict):
        raise ValueError(f"{args.spec}: ensemble spec must be a JSON object")
    _task_scheme(_require(spec, "task", "ensemble spec"))
    rule = _require(spec, "rule", "ensemble spec")
    if rule not in ("vote", "weighted_average"):
        raise ValueError(f"unknown ensemble rule {rule!r}")
    entries = _require(spec, "components", "ensemble spec")
    if not isinstance(entries, list) or not entries:
        raise ValueError("ensemble spec needs a non-empty 'components' list")

    components = []
    for entry in entries:
        name = _require(entry, "name", "ensemble component")
        kind = entry.get("kind", "scalar" if rule == "weighted_average" else "class")
        components.append(
            load_prediction_set(_require(entry, "path", f"component {name!r}"), name, kind)
        )
    kinds = {c.kind for c in components}
    if len(kinds) > 1:
        raise ValueError(f"ensemble components mix prediction kinds: {sorted(kinds)}")

    weights = _ensemble_weights(spec, components, rule, args)
    if rule == "vote":
        if kinds == {"probs"}:
            combined = combine_prob_predictions(components, weights)
        else:
            combined = vote_predictions(components, weights)
        final = combined.values
    else:
        combined = average_predictions(components, weights)
        if args.input:
            # With the target corpus at hand the averaged index can be
            # clamped into each document's valid range; otherwise round only.
            corpus = load_jsonl(args.input, LabelScheme.BOUNDARY)
            final = {
                doc.id: clip_round(
                    combined.values[doc.id], len(tokenize_words(doc.text))
                )
                for doc in corpus
            }
        else:
            final = {
                doc_id: max(0, round_half_away(value))
                for doc_id, value in combined.values.items()
            }
    write_predictions(final, args.out)
    if args.weights_out:
        _write_json(
            {
                "rule": rule,
                "components": [c.name for c in components],
                "weights": [float(w) for w in weights],
            },
            args.weights_out,
        )


def cmd_evaluate(args) -> None:
    task = args.task
    gold = load_jsonl(args.gold, _task_scheme(task))
    kind = "scalar" if task == "boundary" else "class"
    preds = load_prediction_set(args.preds, Path(args.preds).stem, kind)

    confusion_matrix = None
    if task == "boundary":
        metric = mean_absolute_error(preds, gold)
    else:
        metric = accuracy(preds, gold)
        if args.confusion_csv:
            confusion_matrix = confusion(preds, gold, _N_CLASSES[task])

    report = RunReport(
        task=task,
        split=args.split,
        components=({"name": preds.name, "metric": metric},),
        ensemble=None,
        total_documents=len(gold),
        confusion_csv_path=args.confusion_csv,
        config={},
        timestamp=None,
    )
    emit_report(report, args.report, confusion_matrix)


def cmd_preprocess(args) -> None:
    if args.mode not in CLEANING_MODES:
        raise ValueError(f"unknown cleaning mode {args.mode!r}")
    with open(args.input, encoding="utf-8") as src, open(
        args.output, "w", encoding="utf-8"
    ) as dst:
        for line_no, line in enumerate(src, start=1):
            if not line.strip():
                continue
            where = f"{args.input}: line {line_no}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{where}: invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict) or "text" not in obj:
                raise ValueError(f"{where}: expected an object with a 'text' field")
            obj["text"] = clean_text(obj["text"], args.mode)
            dst.write(json.dumps(obj, ensure_ascii=False) + "\n")


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="JSON run config")
    shared.add_argument("--seed", type=int, default=None, help="override config seed")
    shared.add_argument(
        "--jobs", type=int, default=1, help="worker count (accepted; runs single-process)"
    )

    parser = argparse.ArgumentParser(
        prog="mgtkit",
        description="Machine-generated text detection toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", parents=[shared], help="clean corpus text")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--mode", default="full", choices=CLEANING_MODES)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("fit", parents=[shared], help="train components from a config")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", parents=[shared], help="write per-component predictions")
    p.add_argument("--model-dir", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--no-snap", action="store_true", help="skip paragraph snapping")
    p.add_argument("--no-clip", action="store_true", help="skip clipping to [0, word count]")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("ensemble", parents=[shared], help="combine prediction files")
    p.add_argument("--spec", required=True, help="ensemble spec JSON")
    p.add_argument("--dev-gold", help="gold dev JSONL for computing weights")
    p.add_argument("--input", help="target corpus JSONL, enables range clamping")
    p.add_argument("--out", required=True)
    p.add_argument("--weights-out", help="write resolved weights as JSON")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("evaluate", parents=[shared], help="score predictions")
    p.add_argument("--preds", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--task", required=True, choices=TASKS)
    p.add_argument("--report", required=True)
    p.add_argument("--confusion-csv")
    p.add_argument("--split", default="eval")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs is not None and args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return 2
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"unexpected error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

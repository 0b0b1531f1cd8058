"""Command-line driver for the full analysis pipeline.

Subcommands: gen, screen, fit, select, tree, rules, predict, evaluate,
pipeline, serve.  Each reads/writes plain artifact files (CSV/JSON/SVG)
in an output directory; `pipeline` chains everything on a seeded
train/holdout split and writes a manifest with content hashes.  Exit
codes: 0 success, 2 validation error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    AttributeSchema,
    Dataset,
    InputError,
    load_csv,
    save_csv,
)
from .evaluate import MetricsTable, confusion, roc_points, save_collapses_csv, collapse
from .logit import (
    FittedLogitModel,
    ModelSpec,
    ModelTerm,
    ClassificationTable,
    classify_many,
    fit,
)
from .rng import SplitMix64
from .rules import RuleTree, build_tree, extract_rules, save_rules
from .select import forward_select, goodness_of_fit
from .service import Artifacts, predict_profile
from .stats import screen_univariate
from .synth import GeneratorSpec, default_generator_spec, generate

DEFAULT_SCREEN_ALPHA = 0.20
DEFAULT_SELECT_ALPHA = 0.05
DEFAULT_HOLDOUT = 0.20


def _out_dir(args) -> Path:
    # DSS_OUTPUT_DIR, when set, overrides whatever --out says.
    out = os.environ.get("DSS_OUTPUT_DIR") or args.out
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_inputs(args) -> Dataset:
    schema = AttributeSchema.load(args.schema)
    return load_csv(args.data, schema, missing=args.missing)


def _check_alpha(value: float, name: str) -> float:
    if not 0 < value <= 1:
        raise InputError(f"{name} must be in (0, 1], got {value}")
    return value


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _write_classification_csv(path: Path, table: ClassificationTable) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        import csv as _csv

        writer = _csv.writer(fh)
        writer.writerow(["observed", *table.labels, "percent_correct"])
        for i, label in enumerate(table.labels):
            pct = table.row_percent_correct[i]
            writer.writerow(
                [
                    label,
                    *[int(c) for c in table.counts[i]],
                    "" if pct is None else f"{pct:.1f}",
                ]
            )
        writer.writerow(
            [
                "overall_percentage",
                *[f"{p:.1f}" for p in table.column_percentages],
                f"{table.overall_percent_correct:.1f}",
            ]
        )


def _tree_order_from_trace(trace_doc: dict) -> list[str]:
    """Split order from a selection trace: main effects in selection
    order, then parents of selected interactions not already present."""
    order: list[str] = []
    for step in trace_doc["steps"]:
        winner = step.get("winner")
        if not winner:
            continue
        if step["phase"] == "main":
            if winner not in order:
                order.append(winner)
        else:
            for attr in winner.split("*"):
                if attr not in order:
                    order.append(attr)
    return order


def _manifest(out: Path, files: list[Path]) -> None:
    entries = {}
    for f in sorted(files):
        digest = hashlib.sha256(f.read_bytes()).hexdigest()
        entries[str(f.relative_to(out))] = digest
    _write_json(out / "manifest.json", {"files": entries})


def cmd_gen(args) -> int:
    out = _out_dir(args)
    if args.default:
        spec = default_generator_spec()
    else:
        if not args.spec:
            raise InputError("gen needs --default or --spec FILE")
        spec = GeneratorSpec.load(args.spec)
    spec = spec.with_overrides(seed=args.seed, n=args.n)
    data = generate(spec)
    spec.schema.save(out / "schema.json")
    spec.save(out / "generator.json")
    save_csv(data, out / "data.csv")
    print(f"wrote {len(data)} records to {out / 'data.csv'}")
    return 0


def cmd_screen(args) -> int:
    out = _out_dir(args)
    alpha = _check_alpha(args.alpha, "--alpha")
    data = _load_inputs(args)
    report = screen_univariate(data, alpha)
    report.save_csv(out / "screening.csv")
    for row in report.rows:
        if row.error is not None:
            print(f"{row.name}: ERROR {row.error}")
        else:
            mark = "*" if row.significant else " "
            print(
                f"{mark} {row.name}: chi2={row.statistic:.4f} df={row.df} "
                f"p={row.p_value:.6g}"
            )
    print(f"wrote {out / 'screening.csv'}")
    return 0


def _parse_terms(schema: AttributeSchema, text: str) -> ModelSpec:
    terms = [ModelTerm.parse(t) for t in text.split(",") if t.strip()]
    return ModelSpec(schema, (ModelTerm.intercept(), *terms))


def cmd_fit(args) -> int:
    out = _out_dir(args)
    data = _load_inputs(args)
    if args.terms:
        spec = _parse_terms(data.schema, args.terms)
    elif args.from_trace:
        doc = json.loads(Path(args.from_trace).read_text(encoding="utf-8"))
        terms = tuple(ModelTerm.parse(t) for t in doc["final_terms"])
        spec = ModelSpec(data.schema, terms)
    else:
        raise InputError("fit needs --terms or --from-trace")
    model = fit(data, spec)
    model.save(out / "model.json")
    observed = data.class_column()
    predicted = classify_many(model, data.records)
    table = ClassificationTable.from_labels(
        observed, predicted, data.schema.class_attribute.levels
    )
    _write_classification_csv(out / "classification.csv", table)
    try:
        gof = goodness_of_fit(model, data)
        _write_json(out / "gof.json", gof.to_json_dict())
    except InputError as exc:
        print(f"goodness-of-fit not computable: {exc}")
    print(
        f"deviance={model.deviance:.4f} params={model.n_params} "
        f"converged={model.converged}"
    )
    return 0


def cmd_select(args) -> int:
    out = _out_dir(args)
    screen_alpha = _check_alpha(args.screen_alpha, "--screen-alpha")
    alpha = _check_alpha(args.alpha, "--alpha")
    data = _load_inputs(args)
    report = screen_univariate(data, screen_alpha)
    report.save_csv(out / "screening.csv")
    mains = report.significant_attributes
    trace = forward_select(
        data,
        mains,
        interaction_pool=[] if args.no_interactions else None,
        alpha=alpha,
        jobs=args.jobs,
    )
    trace.save(out / "trace.json")
    trace.save_csv(out / "trace.csv")
    trace.final_model.save(out / "model.json")
    print(f"final terms: {', '.join(trace.final_spec.term_labels())}")
    print(f"final deviance: {trace.final_model.deviance:.4f}")
    return 0


def cmd_tree(args) -> int:
    out = _out_dir(args)
    data = _load_inputs(args)
    if args.order:
        order = [a.strip() for a in args.order.split(",") if a.strip()]
    elif args.from_trace:
        doc = json.loads(Path(args.from_trace).read_text(encoding="utf-8"))
        order = _tree_order_from_trace(doc)
    else:
        raise InputError("tree needs --order or --from-trace")
    tree = build_tree(data, order, min_support=args.min_support, max_depth=args.max_depth)
    tree.save(out / "tree.json")
    print(f"tree over {order} written to {out / 'tree.json'}")
    return 0


def cmd_rules(args) -> int:
    out = _out_dir(args)
    schema = AttributeSchema.load(args.schema)
    tree = RuleTree.load(args.tree, schema)
    rules = extract_rules(tree, include_backoff=args.include_backoff)
    save_rules(rules, out / "rules.txt", out / "rules.json")
    print(f"{len(rules)} rules written to {out / 'rules.txt'}")
    return 0


def cmd_predict(args) -> int:
    artifacts = Artifacts.load(args.artifacts)
    if args.profile:
        profile = json.loads(args.profile)
    elif args.profile_file:
        profile = json.loads(Path(args.profile_file).read_text(encoding="utf-8"))
    else:
        raise InputError("predict needs --profile JSON or --profile-file FILE")
    from .service import validate_profile

    errors = validate_profile(artifacts.schema, profile)
    if errors:
        raise InputError(
            "; ".join(f"{e['field']}: {e['message']}" for e in errors)
        )
    response = predict_profile(artifacts, profile)
    print(json.dumps(response, indent=2))
    return 0


def _evaluate_to_dir(
    out: Path, data: Dataset, model: FittedLogitModel, tree: RuleTree
) -> dict:
    labels = data.schema.class_attribute.levels
    observed = data.class_column()
    model_pred = classify_many(model, data.records)
    tree_pred = tree.classify_many(data.records)

    model_conf = confusion(observed, model_pred, labels)
    tree_conf = confusion(observed, tree_pred, labels)
    _write_classification_csv(
        out / "classification_model.csv",
        ClassificationTable.from_labels(observed, model_pred, labels),
    )
    _write_classification_csv(
        out / "classification_tree.csv",
        ClassificationTable.from_labels(observed, tree_pred, labels),
    )
    table = MetricsTable.from_confusions([("model", model_conf), ("tree", tree_conf)])
    table.save_csv(out / "eval.csv")
    save_collapses_csv(
        [
            (ds, cl, collapse(conf, cl))
            for ds, conf in (("model", model_conf), ("tree", tree_conf))
            for cl in labels
        ],
        out / "collapses.csv",
    )
    report = roc_points(table.roc_points())
    report.save_csv(out / "roc.csv")
    report.save_svg(out / "roc.svg")

    model_acc = float((model_pred == observed).mean())
    tree_acc = float((tree_pred == observed).mean())
    agreement = float((model_pred == tree_pred).mean())
    return {
        "n_eval": len(data),
        "model_accuracy": model_acc,
        "tree_accuracy": tree_acc,
        "model_tree_agreement": agreement,
        "roc_fraction_above_diagonal": report.fraction_above_diagonal,
    }


def cmd_evaluate(args) -> int:
    out = _out_dir(args)
    data = _load_inputs(args)
    model = FittedLogitModel.load(args.model, data.schema)
    tree = RuleTree.load(args.tree, data.schema)
    summary = _evaluate_to_dir(out, data, model, tree)
    _write_json(out / "eval_summary.json", summary)
    print(json.dumps(summary, indent=2))
    return 0


def cmd_pipeline(args) -> int:
    out = _out_dir(args)
    screen_alpha = _check_alpha(args.screen_alpha, "--screen-alpha")
    alpha = _check_alpha(args.alpha, "--alpha")
    if not 0 < args.holdout < 1:
        raise InputError(f"--holdout must be in (0, 1), got {args.holdout}")

    if args.gen_default:
        spec = default_generator_spec().with_overrides(seed=args.seed, n=args.n)
        data = generate(spec)
        spec.save(out / "generator.json")
    elif args.data and args.schema:
        data = _load_inputs(args)
    else:
        raise InputError("pipeline needs --gen-default or both --data and --schema")
    schema = data.schema
    schema.save(out / "schema.json")
    save_csv(data, out / "data.csv")

    # seeded holdout split
    rng = SplitMix64(args.seed)
    order = list(range(len(data)))
    rng.shuffle(order)
    cut = int(round(len(order) * (1.0 - args.holdout)))
    train_idx = np.array(sorted(order[:cut]), dtype=np.int64)
    eval_idx = np.array(sorted(order[cut:]), dtype=np.int64)
    if len(train_idx) == 0 or len(eval_idx) == 0:
        raise InputError("split left an empty train or holdout set")
    train = data.subset(train_idx)
    holdout = data.subset(eval_idx)
    save_csv(train, out / "train.csv")
    save_csv(holdout, out / "eval_data.csv")

    report = screen_univariate(train, screen_alpha)
    report.save_csv(out / "screening.csv")
    mains = report.significant_attributes

    trace = forward_select(train, mains, alpha=alpha, jobs=args.jobs)
    trace.save(out / "trace.json")
    trace.save_csv(out / "trace.csv")
    model = trace.final_model
    model.save(out / "model.json")

    gof_doc = None
    try:
        gof = goodness_of_fit(model, train)
        gof_doc = gof.to_json_dict()
        _write_json(out / "gof.json", gof_doc)
    except InputError:
        pass

    order_attrs = _tree_order_from_trace(trace.to_json_dict())
    tree = build_tree(
        train, order_attrs, min_support=args.min_support, max_depth=args.max_depth
    )
    tree.save(out / "tree.json")
    rules = extract_rules(tree)
    save_rules(rules, out / "rules.txt", out / "rules.json")

    eval_summary = _evaluate_to_dir(out, holdout, model, tree)

    train_classes = train.class_column()
    majority = int(np.argmax(np.bincount(train_classes, minlength=schema.class_attribute.n_levels)))
    baseline_acc = float((holdout.class_column() == majority).mean())

    summary = {
        "seed": args.seed,
        "n_total": len(data),
        "n_train": len(train),
        "screening_significant": mains,
        "final_terms": trace.final_spec.term_labels(),
        "final_deviance": model.deviance,
        "converged": model.converged,
        "goodness_of_fit": gof_doc,
        "tree_order": order_attrs,
        "n_rules": len(rules),
        "majority_class": schema.class_attribute.levels[majority],
        "baseline_accuracy": baseline_acc,
        **eval_summary,
    }
    _write_json(out / "summary.json", summary)

    files = [p for p in out.rglob("*") if p.is_file() and p.name != "manifest.json"]
    _manifest(out, files)
    print(json.dumps(summary, indent=2))
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    serve(args.artifacts, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="youthdss",
        description=__doc__,
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    subparsers = parser.add_subparsers(dest="command", required=True)

    class _Sub:
        """add_parser wrapper that keeps defaults visible in --help."""

        def add_parser(self, name, **kwargs):
            kwargs.setdefault(
                "formatter_class", argparse.ArgumentDefaultsHelpFormatter
            )
            return subparsers.add_parser(name, **kwargs)

    sub = _Sub()

    def add_out(p):
        p.add_argument("--out", default="out", help="output directory")

    def add_data(p):
        p.add_argument("--data", required=True, help="CSV data file")
        p.add_argument("--schema", required=True, help="schema JSON file")
        p.add_argument(
            "--missing",
            choices=["fail", "skip"],
            default="fail",
            help="policy for rows with empty cells",
        )

    p = sub.add_parser("gen", help="generate synthetic data")
    p.add_argument("--default", action="store_true", help="use the stock generator spec")
    p.add_argument("--spec", help="generator spec JSON file")
    p.add_argument("--seed", type=int, default=None, help="override spec seed")
    p.add_argument("--n", type=int, default=None, help="override spec record count")
    add_out(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("screen", help="univariate chi-square screening")
    add_data(p)
    p.add_argument("--alpha", type=float, default=DEFAULT_SCREEN_ALPHA, help="screening tolerance")
    add_out(p)
    p.set_defaults(func=cmd_screen)

    p = sub.add_parser("fit", help="fit a logit model with given terms")
    add_data(p)
    p.add_argument("--terms", help="comma-separated terms, e.g. 'A,B,A*B'")
    p.add_argument("--from-trace", help="use the final terms of a trace.json")
    add_out(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select", help="forward selection (mains then interactions)")
    add_data(p)
    p.add_argument("--screen-alpha", type=float, default=DEFAULT_SCREEN_ALPHA, help="screening tolerance for the main pool")
    p.add_argument("--alpha", type=float, default=DEFAULT_SELECT_ALPHA, help="selection significance level")
    p.add_argument("--no-interactions", action="store_true", help="skip the interaction phase")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="parallel candidate fits")
    add_out(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("tree", help="build the fixed-order decision tree")
    add_data(p)
    p.add_argument("--order", help="comma-separated attribute order")
    p.add_argument("--from-trace", help="derive the order from a trace.json")
    p.add_argument("--min-support", type=int, default=1, help="minimum records per split node")
    p.add_argument("--max-depth", type=int, default=None, help="depth cap (default: split order length)")
    add_out(p)
    p.set_defaults(func=cmd_tree)

    p = sub.add_parser("rules", help="extract rules from a tree artifact")
    p.add_argument("--tree", required=True, help="tree JSON artifact")
    p.add_argument("--schema", required=True, help="schema JSON file")
    p.add_argument("--include-backoff", action="store_true", help="emit rules for empty backoff leaves too")
    add_out(p)
    p.set_defaults(func=cmd_rules)

    p = sub.add_parser("predict", help="predict one profile from artifacts")
    p.add_argument("--artifacts", required=True, help="directory with schema/model/tree JSON")
    p.add_argument("--profile", help="inline JSON object {attribute: level}")
    p.add_argument("--profile-file", help="JSON file with the profile")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="evaluate model and tree on a dataset")
    add_data(p)
    p.add_argument("--model", required=True, help="model JSON artifact")
    p.add_argument("--tree", required=True, help="tree JSON artifact")
    add_out(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="full run: gen/load, screen, select, tree, evaluate")
    p.add_argument("--gen-default", action="store_true", help="generate stock synthetic data")
    p.add_argument("--data", help="CSV data file (instead of --gen-default)")
    p.add_argument("--schema", help="schema JSON file (instead of --gen-default)")
    p.add_argument("--missing", choices=["fail", "skip"], default="fail", help="policy for rows with empty cells")
    p.add_argument("--seed", type=int, default=1, help="generation and split seed")
    p.add_argument("--n", type=int, default=None, help="generated record count")
    p.add_argument("--holdout", type=float, default=DEFAULT_HOLDOUT, help="holdout fraction")
    p.add_argument("--screen-alpha", type=float, default=DEFAULT_SCREEN_ALPHA, help="screening tolerance")
    p.add_argument("--alpha", type=float, default=DEFAULT_SELECT_ALPHA, help="selection significance level")
    p.add_argument("--min-support", type=int, default=1, help="minimum records per split node")
    p.add_argument("--max-depth", type=int, default=None, help="tree depth cap (default: split order length)")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="parallel candidate fits")
    add_out(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("serve", help="run the decision-support HTTP service")
    p.add_argument("--artifacts", required=True, help="directory with schema/model/tree JSON")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON input: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - runtime failures exit 1
        print(f"failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

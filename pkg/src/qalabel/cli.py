"""Command-line entry point.

Subcommands: label (simulate a labeling pass over a dataset), verify
(numerical checks of the label models), bounds (error-bound table over I),
train / eval (classifier experiments), serve (annotation HTTP service).

Options may come from a JSON config file (--config); explicit flags
override file values, which override built-in defaults.  Unknown config
keys are rejected.  Exit codes: 0 success, 1 check or run failure,
2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from .bounds import (
    BoundInputs,
    KernelBoundInputs,
    error_bound_isin,
    error_bound_whichone,
    kernel_rademacher_bound,
)
from .combinatorics import ClassSpace
from .data_io import (
    ImageDataset,
    append_events,
    load_idx,
    subsample_per_class,
    synthetic_blobs,
)
from .labeling import AnnotatorModel, QuestionSpec, QuestionType, simulate_dataset
from .mlp import TrainConfig, evaluate, load_params, save_params, train
from .rng import CounterRng, derive_seed
from .verification import run_verification

DEFAULTS = {
    "label": {
        "qtype": "which_one",
        "I": 1,
        "seed": 0,
        "per_class": None,
        "blob_classes": 10,
        "blob_dim": 16,
        "blob_per_class": 200,
        "blob_separation": 3.0,
        "out": "out",
    },
    "verify": {"K": [2, 3, 4, 5, 6], "posteriors": 100, "seed": 20240901},
    "bounds": {
        "K": 10,
        "rho": 1.0,
        "c_l": 2.0,
        "delta": 0.05,
        "n": 10000,
        "rad_sum": None,
        "kernel_r": 1.0,
        "kernel_lambda": 1.0,
        "out": "out",
    },
    "train": {
        "qtype": "which_one",
        "I": 1,
        "seed": 0,
        "per_class": None,
        "epochs": 800,
        "batch_size": 500,
        "hidden": 500,
        "learning_rate": 1e-2,
        "weight_decay": 1e-3,
        "repetitions": 5,
        "blob_classes": 10,
        "blob_dim": 16,
        "blob_per_class": 200,
        "blob_separation": 3.0,
        "out": "out",
    },
    "eval": {
        "blob_classes": 10,
        "blob_dim": 16,
        "blob_per_class": 200,
        "blob_separation": 3.0,
        "seed": 0,
    },
    "serve": {
        "port": 8000,
        "host": "127.0.0.1",
        "seed": 0,
        "events": "events.jsonl",
        "cors_origin": "*",
        "blob_classes": 10,
        "blob_dim": 16,
        "blob_per_class": 200,
        "blob_separation": 3.0,
    },
}


def _add_dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset-images", help="IDX image file (gzip ok)")
    p.add_argument("--dataset-labels", help="IDX label file (gzip ok)")
    p.add_argument("--synthetic", action="store_true", help="use Gaussian blob data")
    p.add_argument("--blob-classes", type=int)
    p.add_argument("--blob-dim", type=int)
    p.add_argument("--blob-per-class", type=int)
    p.add_argument("--blob-separation", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qalabel", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("label", help="simulate a labeling pass and store the events")
    p.add_argument("--config")
    p.add_argument("--qtype", choices=[q.value for q in QuestionType])
    p.add_argument("--I", type=int, dest="I")
    p.add_argument("--seed", type=int)
    p.add_argument("--per-class", type=int, help="subsample this many instances per class")
    p.add_argument("--out")
    _add_dataset_args(p)

    p = sub.add_parser("verify", help="run the numerical model checks")
    p.add_argument("--config")
    p.add_argument("--K", type=int, nargs="+")
    p.add_argument("--posteriors", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("bounds", help="write the error-bound table over I")
    p.add_argument("--config")
    p.add_argument("--K", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--c-l", type=float, dest="c_l")
    p.add_argument("--delta", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--rad-sum", type=float, help="summed per-class Rademacher complexity")
    p.add_argument("--kernel-r", type=float, help="kernel sup-norm radius (used when --rad-sum absent)")
    p.add_argument("--kernel-lambda", type=float, help="weight-norm cap")
    p.add_argument("--out")

    p = sub.add_parser("train", help="label a dataset and train the classifier")
    p.add_argument("--config")
    p.add_argument("--qtype", choices=[q.value for q in QuestionType])
    p.add_argument("--I", type=int, dest="I")
    p.add_argument("--seed", type=int)
    p.add_argument("--per-class", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--weight-decay", type=float)
    p.add_argument("--repetitions", type=int)
    p.add_argument("--test-images")
    p.add_argument("--test-labels")
    p.add_argument("--out")
    _add_dataset_args(p)

    p = sub.add_parser("eval", help="evaluate stored parameters on a test set")
    p.add_argument("--config")
    p.add_argument("--params", required=True)
    p.add_argument("--test-images")
    p.add_argument("--test-labels")
    p.add_argument("--seed", type=int)
    _add_dataset_args(p)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    p.add_argument("--config")
    p.add_argument("--port", type=int)
    p.add_argument("--host")
    p.add_argument("--seed", type=int)
    p.add_argument("--events", help="JSONL store for human-labeled events")
    p.add_argument("--cors-origin")
    _add_dataset_args(p)

    return parser


def merge_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> dict:
    """Layer built-in defaults, config-file values, and explicit flags."""
    merged = dict(DEFAULTS[args.command])
    cli_values = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    if args.config:
        try:
            file_values = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config {args.config}: {exc}")
        known = set(merged) | set(cli_values)
        unknown = set(file_values) - known
        if unknown:
            parser.error(f"unknown config keys: {sorted(unknown)}")
        merged.update(file_values)
    for key, value in cli_values.items():
        if value is not None and value is not False:
            merged[key] = value
        elif key not in merged:
            merged[key] = value
    return merged


def _load_train_dataset(opts: dict, seed: int) -> ImageDataset:
    if opts.get("dataset_images"):
        if not opts.get("dataset_labels"):
            raise ValueError("--dataset-images needs --dataset-labels")
        ds = load_idx(opts["dataset_images"], opts["dataset_labels"])
    else:
        ds = synthetic_blobs(
            K=opts["blob_classes"],
            d=opts["blob_dim"],
            per_class=opts["blob_per_class"],
            separation=opts["blob_separation"],
            seed=derive_seed(seed, 101),
        )
    if opts.get("per_class"):
        ds = subsample_per_class(ds, opts["per_class"], CounterRng(derive_seed(seed, 102)))
    return ds


def _load_test_dataset(opts: dict, seed: int, train_ds: ImageDataset) -> ImageDataset:
    if opts.get("test_images"):
        if not opts.get("test_labels"):
            raise ValueError("--test-images needs --test-labels")
        return load_idx(opts["test_images"], opts["test_labels"])
    if opts.get("dataset_images"):
        raise ValueError("IDX training data needs --test-images/--test-labels for evaluation")
    return synthetic_blobs(
        K=train_ds.K,
        d=train_ds.d,
        per_class=max(50, opts["blob_per_class"] // 2),
        separation=opts["blob_separation"],
        seed=derive_seed(seed, 103),
    )


def _check_items(parser: argparse.ArgumentParser, I: int, K: int) -> None:
    if not 1 <= I <= K - 1:
        parser.error(f"--I must lie in 1..{K - 1} for K={K}, got {I}")


def cmd_label(opts: dict, parser: argparse.ArgumentParser) -> int:
    seed = int(opts["seed"])
    ds = _load_train_dataset(opts, seed)
    _check_items(parser, opts["I"], ds.K)
    space = ClassSpace(ds.K)
    spec = QuestionSpec(QuestionType.parse(opts["qtype"]), opts["I"], space)
    ids = ds.instance_ids()
    annotator = AnnotatorModel.deterministic(
        space, {i: int(z) for i, z in zip(ids, ds.labels)}
    )
    events = simulate_dataset(derive_seed(seed, 104), spec, annotator, ids)

    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    store = out / "events.jsonl"
    append_events(store, events)
    histogram = Counter(len(e.qa_label) for e in events)
    summary = {
        "events": len(events),
        "qtype": spec.qtype.value,
        "I": spec.items,
        "K": ds.K,
        "seed": seed,
        "label_size_histogram": {str(k): v for k, v in sorted(histogram.items())},
    }
    (out / "label_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"wrote {len(events)} events to {store}")
    for size, count in sorted(histogram.items()):
        print(f"label size {size}: {count} ({count / len(events):.1%})")
    return 0


def cmd_verify(opts: dict) -> int:
    print(f"verification over K={list(opts['K'])}, seed={opts['seed']}, "
          f"{opts['posteriors']} posteriors per setting")
    results = run_verification(
        k_values=opts["K"], n_posteriors=opts["posteriors"], seed=opts["seed"]
    )
    for res in results:
        print(res.line())
    return 0 if all(r.passed for r in results) else 1


def cmd_bounds(opts: dict) -> int:
    K = int(opts["K"])
    if opts.get("rad_sum") is not None:
        rad_sum = float(opts["rad_sum"])
    else:
        per_class = kernel_rademacher_bound(
            KernelBoundInputs(r=opts["kernel_r"], lam=opts["kernel_lambda"], n=opts["n"])
        )
        rad_sum = K * per_class
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    path = out / "bounds.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["I", "bound_whichone", "bound_isin"])
        for I in range(1, K):
            inp = BoundInputs(
                K=K,
                I=I,
                rho=opts["rho"],
                c_l=opts["c_l"],
                delta=opts["delta"],
                n=opts["n"],
                rad_sum=rad_sum,
            )
            writer.writerow([I, error_bound_whichone(inp), error_bound_isin(inp)])
    print(f"wrote {path} ({K - 1} rows, rad_sum={rad_sum:.6g})")
    return 0


def cmd_train(opts: dict, parser: argparse.ArgumentParser) -> int:
    seed = int(opts["seed"])
    ds = _load_train_dataset(opts, seed)
    _check_items(parser, opts["I"], ds.K)
    test_ds = _load_test_dataset(opts, seed, ds)
    space = ClassSpace(ds.K)
    spec = QuestionSpec(QuestionType.parse(opts["qtype"]), opts["I"], space)
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)

    for rep in range(int(opts["repetitions"])):
        rep_seed = derive_seed(seed, 200 + rep)
        ids = ds.instance_ids()
        annotator = AnnotatorModel.deterministic(
            space, {i: int(z) for i, z in zip(ids, ds.labels)}
        )
        events = simulate_dataset(rep_seed, spec, annotator, ids)
        masks = np.array([e.qa_label.mask() for e in events], dtype=np.uint64)
        cfg = TrainConfig(
            qtype=spec.qtype,
            items=spec.items,
            hidden=int(opts["hidden"]),
            epochs=int(opts["epochs"]),
            batch_size=int(opts["batch_size"]),
            learning_rate=float(opts["learning_rate"]),
            weight_decay=float(opts["weight_decay"]),
            seed=rep_seed,
            repetitions=1,
        )
        params, metrics = train(
            ds.features,
            masks,
            cfg,
            test_features=test_ds.features,
            test_labels=test_ds.labels,
            n_classes=ds.K,
        )
        save_params(out / f"params_rep{rep}.bin", params)
        with open(out / f"metrics_rep{rep}.csv", "w", newline="") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=["epoch", "train_qa_risk", "test_mae", "test_accuracy"]
            )
            writer.writeheader()
            writer.writerows(metrics)
        final = metrics[-1] if metrics else {"test_mae": float("nan"), "test_accuracy": float("nan")}
        print(
            f"rep {rep}: seed={rep_seed} final test_mae={final['test_mae']:.4f} "
            f"test_accuracy={final['test_accuracy']:.4f}"
        )
    return 0


def cmd_eval(opts: dict) -> int:
    params = load_params(opts["params"])
    seed = int(opts["seed"])
    if opts.get("test_images"):
        test_ds = load_idx(opts["test_images"], opts["test_labels"])
    else:
        test_ds = synthetic_blobs(
            K=opts["blob_classes"],
            d=opts["blob_dim"],
            per_class=opts["blob_per_class"],
            separation=opts["blob_separation"],
            seed=derive_seed(seed, 103),
        )
    test_mae, accuracy = evaluate(params, test_ds.features, test_ds.labels)
    print(f"test_mae={test_mae:.6f} test_accuracy={accuracy:.6f} n={test_ds.n}")
    return 0


def cmd_serve(opts: dict) -> int:
    import uvicorn

    from .server import AnnotationService, create_app

    seed = int(opts["seed"])
    ds = _load_train_dataset(opts, seed)
    service = AnnotationService(
        datasets={"default": ds}, store_path=opts["events"], seed=seed
    )
    app = create_app(service, cors_origin=opts["cors_origin"])
    uvicorn.run(app, host=opts["host"], port=int(opts["port"]))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    opts = merge_config(args, parser)
    try:
        if args.command == "label":
            return cmd_label(opts, parser)
        if args.command == "verify":
            return cmd_verify(opts)
        if args.command == "bounds":
            return cmd_bounds(opts)
        if args.command == "train":
            return cmd_train(opts, parser)
        if args.command == "eval":
            return cmd_eval(opts)
        if args.command == "serve":
            return cmd_serve(opts)
        parser.error(f"unknown command {args.command!r}")
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

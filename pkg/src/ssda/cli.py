"""Command-line front end.

Commands
--------
fit        fit transform + sparse direction on a labelled CSV; writes a model directory
predict    label and score the rows of a CSV with a saved model
transform  fit a transform only (any number of classes) and write the transformed CSV
simulate   export a simulated data set in the CSV dialect read by ``fit``
benchmark  replicate a simulation model and write per-replication records + summary

Exit codes
----------
0 success, 2 usage / argument error, 3 input parse error (CSV or model file),
4 dimension mismatch, 5 fit error.

Every flag may also be given in a ``key = value`` config file passed with
``--config``; flags on the command line win.
"""

import argparse
import csv
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from .data import Dataset, class_order, code_binary
from .dsda import DsdaFit, Tuning, fit_ssda, predict
from .errors import (
    CsvParseError,
    DimensionMismatchError,
    ModelFormatError,
    SSDAError,
)
from .evaluation import METHODS, run_benchmark
from .simulate import make_spec, sample_model
from .transforms import TransformModel, fit_multiclass_pooled, fit_transform

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_DIMENSION = 4
EXIT_FIT = 5

TRANSFORM_FILE = "transform.json"
FIT_FILE = "fit.json"
SUMMARY_FILE = "summary.json"

# option name -> (type, default); shared by the parser and the config reader
OPTIONS = {
    "input": (str, None),
    "out": (str, None),
    "model_dir": (str, None),
    "label_col": (str, "label"),
    "variant": (str, "naive"),
    "folds": (int, 5),
    "grid_size": (int, 50),
    "lambda": (float, None),
    "winsor_a": (float, None),
    "winsor_b": (float, None),
    "model": (int, 1),
    "series": (str, "a"),
    "n": (int, None),
    "p": (int, None),
    "rho": (float, None),
    "reps": (int, 100),
    "test_size": (int, 10_000),
    "methods": (str, ",".join(METHODS)),
    "bootstrap": (int, 1000),
    "jobs": (int, 1),
    "seed": (int, 0),
}


class UsageError(Exception):
    """Bad arguments or configuration (exit code 2)."""


# ---------------------------------------------------------------- config


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment, dashes equal underscores."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in OPTIONS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _convert(key, value, f"{path}:{lineno}")
    return out


def _convert(key, value, where):
    kind = OPTIONS[key][0]
    try:
        return kind(value)
    except ValueError:
        raise UsageError(f"{where}: {key} expects {kind.__name__}, got {value!r}") from None


def resolve(args: argparse.Namespace) -> dict:
    """Defaults, then config file, then explicit flags."""
    cfg = {k: default for k, (_, default) in OPTIONS.items()}
    if args.config:
        cfg.update(read_config(args.config))
    for key in OPTIONS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    cfg["command"] = args.command
    return cfg


# ---------------------------------------------------------------- CSV


def read_csv(path, label_col: str | None = "label", require_label: bool = True):
    """Read a header + numeric-feature CSV.

    Returns ``(X, labels or None, feature_names)``. Labels are kept as strings.
    Any malformed row raises :class:`CsvParseError` with its line number.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise CsvParseError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError(f"{path}: empty file, header row required", line=1) from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise CsvParseError(f"{path}: duplicate column names in header", line=1)
        label_idx = header.index(label_col) if label_col in header else None
        if label_idx is None and require_label:
            raise CsvParseError(f"{path}: no label column {label_col!r} in header", line=1)
        feat_idx = [i for i in range(len(header)) if i != label_idx]
        rows, labels = [], []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise CsvParseError(
                    f"{path}: expected {len(header)} fields, found {len(row)}", line=line)
            vals = []
            for i in feat_idx:
                cell = row[i].strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise CsvParseError(
                        f"{path}: column {header[i]!r}: non-numeric value {cell!r}",
                        line=line) from None
                if not math.isfinite(v):
                    raise CsvParseError(
                        f"{path}: column {header[i]!r}: non-finite value {cell!r}", line=line)
                vals.append(v)
            rows.append(vals)
            if label_idx is not None:
                lab = row[label_idx].strip()
                if not lab:
                    raise CsvParseError(f"{path}: missing label", line=line)
                labels.append(lab)
    X = np.array(rows, dtype=float).reshape(len(rows), len(feat_idx))
    y = np.array(labels, dtype=object) if label_idx is not None else None
    return X, y, [header[i] for i in feat_idx]


def write_csv(path, header, rows):
    fh = sys.stdout if path in (None, "-") else open(path, "w", newline="", encoding="utf-8")
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()


def _fmt(v: float) -> str:
    return repr(float(v))


# ---------------------------------------------------------------- model files


def save_model(directory, transform: TransformModel, fit: DsdaFit, summary: dict):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / TRANSFORM_FILE).write_text(json.dumps(transform.to_dict()))
    (directory / FIT_FILE).write_text(json.dumps(fit.to_dict()))
    (directory / SUMMARY_FILE).write_text(json.dumps(summary, indent=2))


def load_model(directory):
    directory = Path(directory)
    try:
        transform = TransformModel.from_dict(json.loads((directory / TRANSFORM_FILE).read_text()))
        fit = DsdaFit.from_dict(json.loads((directory / FIT_FILE).read_text()))
    except OSError as exc:
        raise ModelFormatError(f"cannot read model in {directory}: {exc}") from exc
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ModelFormatError(f"corrupt model file in {directory}: {exc}") from exc
    if transform.n_features != fit.n_features:
        raise ModelFormatError("transform and fit disagree on the number of features")
    return transform, fit


# ---------------------------------------------------------------- commands


def _need(cfg, *keys):
    missing = [k for k in keys if not cfg.get(k)]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join(
            "--" + k.replace("_", "-") for k in missing))


def _legacy_bounds(cfg, y):
    a, b = cfg["winsor_a"], cfg["winsor_b"]
    if cfg["variant"] != "legacy":
        return None, None
    if a is None or b is None:
        # default to the bounds the naive estimator uses for the "+" class
        y_pm, _, _ = code_binary(y)
        n_pos = int(np.sum(y_pm > 0))
        a = 1.0 / n_pos**2 if a is None else a
        b = 1.0 - 1.0 / n_pos**2 if b is None else b
    if not 0.0 < a < b < 1.0:
        raise UsageError(f"need 0 < winsor-a < winsor-b < 1, got {a}, {b}")
    return a, b


def cmd_fit(cfg) -> int:
    _need(cfg, "input", "out")
    if cfg["variant"] not in ("naive", "pooled", "legacy", "identity"):
        raise UsageError(f"unknown variant {cfg['variant']!r}")
    if cfg["folds"] < 2:
        raise UsageError("--folds must be at least 2")
    X, y, names = read_csv(cfg["input"], cfg["label_col"])
    n_classes = len(class_order(y))
    if n_classes > 2:
        raise UsageError(
            f"label column has {n_classes} classes; the classifier is two-class only. "
            "Use the 'transform' command for a multiclass transform.")
    data = Dataset(X, y, feature_names=names)
    a, b = _legacy_bounds(cfg, y)
    tuning = Tuning(folds=cfg["folds"], grid_size=cfg["grid_size"], seed=cfg["seed"],
                    lam=cfg["lambda"])
    transform, fit = fit_ssda(data, cfg["variant"], tuning, a=a, b=b)
    labels, _ = predict(fit, transform, X)
    summary = {
        "config": {k: v for k, v in cfg.items() if k in (
            "input", "label_col", "variant", "folds", "grid_size", "lambda", "winsor_a",
            "winsor_b", "seed")},
        "n": data.n,
        "p": data.p,
        "labels": list(fit.labels),
        "lambda": fit.lam,
        "active_set_size": int(len(fit.active_set)),
        "active_features": [names[j] for j in fit.active_set],
        "training_error": float(np.mean(labels != y)),
    }
    save_model(cfg["out"], transform, fit, summary)
    print(f"fitted {cfg['variant']} model: lambda={fit.lam:.6g}, "
          f"{summary['active_set_size']} active feature(s), "
          f"training error {summary['training_error']:.4f}; written to {cfg['out']}")
    return EXIT_OK


def cmd_predict(cfg) -> int:
    _need(cfg, "input", "model_dir")
    transform, fit = load_model(cfg["model_dir"])
    if cfg["input"] != "-" and Path(cfg["input"]).is_file() and Path(cfg["input"]).stat().st_size == 0:
        write_csv(cfg["out"], ["label", "score"], [])
        return EXIT_OK
    X, _, _ = read_csv(cfg["input"], cfg["label_col"], require_label=False)
    if X.shape[0] == 0:
        write_csv(cfg["out"], ["label", "score"], [])
        return EXIT_OK
    if X.shape[1] != fit.n_features:
        raise DimensionMismatchError(
            f"model expects {fit.n_features} feature column(s), input has {X.shape[1]}")
    labels, scores = predict(fit, transform, X)
    write_csv(cfg["out"], ["label", "score"], [(lab, _fmt(s)) for lab, s in zip(labels, scores)])
    return EXIT_OK


def cmd_transform(cfg) -> int:
    _need(cfg, "input", "out")
    X, y, names = read_csv(cfg["input"], cfg["label_col"])
    data = Dataset(X, y, feature_names=names)
    n_classes = len(class_order(y))
    if n_classes > 2:
        if cfg["variant"] != "pooled":
            raise UsageError(f"{n_classes} classes: only the pooled transform is multiclass")
        transform = fit_multiclass_pooled(data)
    else:
        if cfg["variant"] not in ("naive", "pooled", "legacy", "identity"):
            raise UsageError(f"unknown variant {cfg['variant']!r}")
        a, b = _legacy_bounds(cfg, y)
        transform = fit_transform(data, cfg["variant"], a=a, b=b)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / TRANSFORM_FILE).write_text(json.dumps(transform.to_dict()))
    H = transform.apply(X)
    write_csv(out / "transformed.csv", names + [cfg["label_col"]],
              [[_fmt(v) for v in row] + [lab] for row, lab in zip(H, y)])
    print(f"{transform.variant} transform of {data.p} feature(s), {n_classes} classes; "
          f"written to {out}")
    return EXIT_OK


def _spec_from(cfg):
    if cfg["model"] not in (1, 2, 3, 4):
        raise UsageError(f"--model must be 1-4, got {cfg['model']}")
    if cfg["series"] not in ("a", "b"):
        raise UsageError(f"--series must be a or b, got {cfg['series']!r}")
    try:
        return make_spec(cfg["model"], cfg["series"], n=cfg["n"], p=cfg["p"], rho=cfg["rho"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_simulate(cfg) -> int:
    _need(cfg, "out")
    spec = _spec_from(cfg)
    data = sample_model(spec, seed=cfg["seed"])
    header = [f"x{j + 1}" for j in range(spec.p)] + [cfg["label_col"]]
    write_csv(cfg["out"], header,
              [[_fmt(v) for v in row] + [int(lab)] for row, lab in zip(data.X, data.y)])
    return EXIT_OK


def cmd_benchmark(cfg) -> int:
    _need(cfg, "out")
    spec = _spec_from(cfg)
    if cfg["reps"] < 1:
        raise UsageError("--reps must be at least 1")
    if cfg["test_size"] < 1:
        raise UsageError("--test-size must be at least 1")
    methods = [m.strip() for m in cfg["methods"].split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise UsageError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
    tuning = Tuning(folds=cfg["folds"], grid_size=cfg["grid_size"], lam=cfg["lambda"])
    report = run_benchmark(spec, methods, cfg["reps"], cfg["test_size"], cfg["seed"], tuning,
                           n_jobs=cfg["jobs"], bootstrap=cfg["bootstrap"])
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    report.to_csv(out / "records.csv")
    table = report.summary_table()
    (out / "summary.txt").write_text(table + "\n")
    (out / "config.json").write_text(json.dumps(report.config, indent=2))
    print(table)
    return EXIT_OK


HELP = {
    "fit": "fit transform + sparse direction on a labelled CSV",
    "predict": "label and score CSV rows with a saved model",
    "transform": "fit a transform only and write the transformed CSV",
    "simulate": "export a simulated data set as CSV",
    "benchmark": "replicate a simulation model and summarize",
}

COMMANDS = {
    "fit": cmd_fit,
    "predict": cmd_predict,
    "transform": cmd_transform,
    "simulate": cmd_simulate,
    "benchmark": cmd_benchmark,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssda", description="Sparse semiparametric discriminant analysis.",
        epilog="exit codes: 0 ok, 2 usage, 3 parse, 4 dimension mismatch, 5 fit error")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", help="key = value file; flags override it")
        for key, (kind, default) in OPTIONS.items():
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=key, type=kind, default=None,
                           help=f"(default: {default})")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        cfg = resolve(args)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return COMMANDS[cfg["command"]](cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CsvParseError, ModelFormatError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DimensionMismatchError as exc:
        print(f"dimension error: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except SSDAError as exc:
        print(f"fit error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FIT


if __name__ == "__main__":
    sys.exit(main())

"""Replication harness: test error, TRUE/FALSE selection counts, medians and
bootstrap standard errors for the benchmark classifiers."""

import csv
import io
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .data import code_binary
from .dsda import Tuning, fit_dsda, fit_ssda, kkt_residual, predict
from .errors import SSDAError
from .simulate import (
    SimulationSpec,
    bayes_error,
    bayes_scores,
    make_spec,
    oracle_transform,
    sample_model,
)
from .transforms import fit_ecdf
from .normal import inv_norm_cdf

__all__ = [
    "METHODS",
    "BenchmarkReport",
    "run_benchmark",
    "selection_counts",
    "median_bootstrap_se",
    "test_error",
    "aggregate",
    "transform_sup_error",
    "consistency_ladder",
]

METHODS = ("ssda-naive", "ssda-pooled", "dsda-raw", "oracle-dsda", "bayes")
STATS = ("test_error", "true_sel", "false_sel", "lambda")
RECORD_FIELDS = ("method", "rep", "seed", "test_error", "true_sel", "false_sel", "lambda",
                 "kkt", "active", "failed", "message")


def test_error(predictions, labels) -> float:
    """Fraction of mismatched labels."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape:
        raise ValueError("predictions and labels differ in length")
    return float(np.mean(predictions != labels))


test_error.__test__ = False  # keep pytest from collecting it


def selection_counts(beta_hat, beta_bayes):
    """``(|A_hat & A|, |A_hat - A|)`` with ``A`` the support of ``beta_bayes``."""
    beta_hat = np.asarray(beta_hat)
    beta_bayes = np.asarray(beta_bayes)
    if beta_hat.shape != beta_bayes.shape:
        raise ValueError("coefficient vectors differ in length")
    chosen = beta_hat != 0
    truth = beta_bayes != 0
    return int(np.sum(chosen & truth)), int(np.sum(chosen & ~truth))


def median_bootstrap_se(values, B: int = 1000, seed=0):
    """Median and the standard deviation of medians over ``B`` resamples.

    Resample indices come from ``numpy.random.default_rng(seed).integers(0, n, (B, n))``;
    the spread uses ``ddof=1``.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("no values")
    if B < 100:
        raise ValueError("need B >= 100 bootstrap resamples")
    med = float(np.median(values))
    if values.size == 1 or np.all(values == values[0]):
        return med, 0.0
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, values.size, size=(B, values.size))
    meds = np.median(values[idx], axis=1)
    return med, float(meds.std(ddof=1))


@dataclass
class BenchmarkReport:
    """Per-replication records and per-method median / bootstrap-SE aggregates."""

    records: list
    aggregates: dict
    config: dict = field(default_factory=dict)

    def values(self, method: str, stat: str) -> np.ndarray:
        return np.array([r[stat] for r in self.records
                         if r["method"] == method and not r["failed"]], dtype=float)

    def median(self, method: str, stat: str) -> float:
        return self.aggregates[method][stat][0]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=RECORD_FIELDS, lineterminator="\n")
        writer.writeheader()
        for rec in self.records:
            writer.writerow({k: rec.get(k, "") for k in RECORD_FIELDS})
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def summary_table(self) -> str:
        """Plain-text table laid out like the published simulation tables."""
        methods = [m for m in METHODS if m in self.aggregates]
        width = max(12, *(len(m) + 2 for m in methods))
        title = self.config.get("model", "")
        lines = [f"Model {title}  (medians over {self.config.get('reps', '?')} replications; "
                 "bootstrap SE in parentheses)"]
        lines.append(" " * 16 + "".join(m.rjust(width) for m in methods))
        rows = (("Error(%)", "test_error", 100.0, 2), ("TRUE selection", "true_sel", 1.0, 1),
                ("FALSE selection", "false_sel", 1.0, 1))
        for label, stat, scale, digits in rows:
            med = "".join(_fmt(self.aggregates[m][stat][0] * scale, digits).rjust(width)
                          for m in methods)
            se = "".join(("(" + _fmt(self.aggregates[m][stat][1] * scale, 2) + ")").rjust(width)
                         for m in methods)
            lines.append(label.ljust(16) + med)
            lines.append(" " * 16 + se)
        failed = {m: self.aggregates[m]["n_failed"] for m in methods
                  if self.aggregates[m]["n_failed"]}
        if failed:
            lines.append(f"failed fits excluded: {failed}")
        return "\n".join(lines)


def _fmt(v, digits):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "-"
    return f"{v:.{digits}f}".rstrip("0").rstrip(".") if digits else f"{v:.0f}"


def aggregate(records, B: int = 1000, seed=0) -> dict:
    """Median and bootstrap SE per method and statistic; failed records excluded."""
    out = {}
    methods = [m for m in METHODS if any(r["method"] == m for r in records)]
    for k, method in enumerate(methods):
        rows = [r for r in records if r["method"] == method]
        ok = [r for r in rows if not r["failed"]]
        agg = {"n_ok": len(ok), "n_failed": len(rows) - len(ok)}
        for s, stat in enumerate(STATS):
            vals = np.array([r[stat] for r in ok], dtype=float)
            vals = vals[~np.isnan(vals)]
            if vals.size == 0:
                agg[stat] = (float("nan"), float("nan"))
            else:
                agg[stat] = median_bootstrap_se(vals, B, seed=[_as_int(seed), k, s])
        out[method] = agg
    return out


def _as_int(seed):
    return int(seed[0]) if isinstance(seed, (tuple, list)) else int(seed)


def _fit_record(method, spec, train, test, tuning):
    y_pm, pos, neg = code_binary(train.y)
    if method in ("ssda-naive", "ssda-pooled", "dsda-raw"):
        variant = {"ssda-naive": "naive", "ssda-pooled": "pooled", "dsda-raw": "identity"}[method]
        transform, fit = fit_ssda(train, variant, tuning)
    else:
        transform = oracle_transform(spec)
        fit = fit_dsda(transform.apply(train.X), y_pm, tuning, labels=(pos, neg),
                       variant="oracle")
    H = transform.apply(train.X)
    labels, _ = predict(fit, transform, test.X)
    true_sel, false_sel = selection_counts(fit.beta, spec.beta_bayes)
    return {
        "test_error": test_error(labels.astype(test.y.dtype), test.y),
        "true_sel": true_sel,
        "false_sel": false_sel,
        "lambda": fit.lam,
        "kkt": kkt_residual(H, y_pm, fit.beta, fit.lam),
        "active": ";".join(str(j + 1) for j in fit.active_set),
    }


def _replicate(args):
    spec, methods, rep, test_size, seed, tuning = args
    train = sample_model(spec, spec.n, seed=(seed, spec.model_id, rep, 0))
    test = sample_model(spec, test_size, seed=(seed, spec.model_id, rep, 1))
    rep_tuning = replace(tuning, seed=(seed, spec.model_id, rep, 2))
    out, cache = [], {}
    for method in methods:
        base = {"method": method, "rep": rep, "seed": seed, "failed": False, "message": "",
                "kkt": float("nan"), "active": ""}
        if method == "bayes":
            pred = np.where(bayes_scores(spec, test.latent) >= 0, 1, -1)
            base.update(test_error=test_error(pred, test.y), true_sel=len(spec.support),
                        false_sel=0, **{"lambda": float("nan")},
                        active=";".join(str(j + 1) for j in spec.support))
            out.append(base)
            continue
        # on series a the oracle transform is the identity, so oracle-dsda == dsda-raw
        key = "dsda-raw" if (method == "oracle-dsda" and spec.series == "a") else method
        try:
            if key not in cache:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RuntimeWarning)
                    cache[key] = _fit_record(key, spec, train, test, rep_tuning)
            base.update(cache[key])
        except SSDAError as exc:
            base.update(test_error=float("nan"), true_sel=float("nan"), false_sel=float("nan"),
                        failed=True, message=f"{type(exc).__name__}: {exc}",
                        **{"lambda": float("nan")})
        out.append(base)
    return out


def run_benchmark(spec: SimulationSpec, methods=METHODS, reps: int = 100,
                  test_size: int = 10_000, seed: int = 0, tuning: Tuning = Tuning(),
                  n_jobs: int = 1, bootstrap: int = 1000) -> BenchmarkReport:
    """Fit every method on ``reps`` fresh training sets and score on fresh test sets.

    Replication ``r`` uses training data keyed ``(seed, model, r, 0)`` and test
    data keyed ``(seed, model, r, 1)``, so series a and b share latent draws.
    Fit errors are recorded as failed rows and excluded from the aggregates.
    """
    methods = list(methods)
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ValueError(f"unknown method(s) {unknown}; choose from {METHODS}")
    if reps < 1:
        raise ValueError("reps must be at least 1")
    if test_size < 1:
        raise ValueError("test_size must be at least 1")
    jobs = [(spec, methods, r, test_size, seed, tuning) for r in range(reps)]
    if n_jobs > 1:
        with ProcessPoolExecutor(n_jobs) as pool:
            chunks = list(pool.map(_replicate, jobs))
    else:
        chunks = [_replicate(job) for job in jobs]
    records = [rec for chunk in chunks for rec in chunk]
    config = {"model": spec.name, "n": spec.n, "p": spec.p, "reps": reps,
              "test_size": test_size, "seed": seed, "methods": methods,
              "folds": tuning.folds, "grid_size": tuning.grid_size,
              "bayes_error": bayes_error(spec)}
    return BenchmarkReport(records, aggregate(records, bootstrap, seed), config)


def transform_sup_error(sample, gamma: float = 0.5) -> float:
    """``sup |h_hat(x) - x|`` over ``|x| <= sqrt(gamma log n)`` for a N(0, 1) sample.

    ``h_hat`` is the Winsorized-ECDF estimate with bounds ``(1/n^2, 1 - 1/n^2)``.
    On each step the error is linear in ``x``, so the supremum is attained at a
    step edge (one-sided) or at an interval endpoint.
    """
    sample = np.asarray(sample, dtype=float)
    n = sample.size
    a = 1.0 / n**2
    table = fit_ecdf(sample, a, 1.0 - a)
    c = math.sqrt(gamma * math.log(n))
    knots = table.sorted_values[(table.sorted_values > -c) & (table.sorted_values <= c)]
    right = inv_norm_cdf(table.evaluate(knots))
    left = inv_norm_cdf(table.evaluate(np.nextafter(knots, -np.inf)))
    ends = np.array([-c, c])
    end_vals = inv_norm_cdf(table.evaluate(ends))
    errs = np.concatenate([np.abs(right - knots), np.abs(left - knots), np.abs(end_vals - ends)])
    return float(errs.max())


def consistency_ladder(model_id: int = 1, ns=(150, 300, 600), reps: int = 50, seed: int = 0,
                       method: str = "ssda-naive", series: str = "a", test_size: int = 10_000,
                       tuning: Tuning = Tuning()) -> list:
    """Exact-support-recovery rate and median excess error across sample sizes."""
    rows = []
    for n in ns:
        spec = make_spec(model_id, series, n=n)
        rep = run_benchmark(spec, [method], reps, test_size, seed, tuning)
        ok = [r for r in rep.records if not r["failed"]]
        support = ";".join(str(j + 1) for j in spec.support)
        exact = np.mean([r["active"] == support for r in ok])
        excess = rep.median(method, "test_error") - bayes_error(spec)
        rows.append({"n": n, "exact_recovery": float(exact), "median_excess_error": float(excess),
                     "report": rep})
    return rows

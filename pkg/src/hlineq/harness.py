"""Reproducible experiment runner.

A run takes an :class:`ExperimentConfig` (JSON, versioned schema), computes
an ordered table of cells, writes ``<experiment>.csv`` plus
``<experiment>.manifest.json`` into the output directory and reports whether
every in-config check passed.

Per-cell seeds come from :func:`hlineq.certificates.cell_seed` applied to the
master seed and the cell's grid coordinates.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .algebra import HomogeneousPolynomial, MultilinearForm, ScalarField, coeff_norm, poly_from_dict, poly_to_json, polarize
from .certificates import (
    cell_seed,
    choi_kim_scan,
    diagonal_sharpness,
    limit_trace_p_to_m,
    minkowski_interchange_check,
    search_constant_lower,
    sharpness_experiment,
)
from .normopt import form_norm_lower, form_norm_upper, poly_norm_lower
from .theory import (
    ExponentPair,
    Regime,
    bilinear_mixed_exponents,
    exponent_table,
    interpolate_exponent_pairs,
    ksz_exponent,
    symmetric_exponent,
)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_SCHEMA = 2
EXIT_IO = 3


class SchemaError(ValueError):
    pass


# -- parameter coercion ------------------------------------------------------


def _real(value) -> float:
    """Number or one of the strings ``"inf"``/``"infinity"``."""
    if isinstance(value, bool):
        raise SchemaError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str) and value.strip().lower() in ("inf", "+inf", "infinity"):
        return math.inf
    raise SchemaError(f"expected a number, got {value!r}")


def _int(value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"expected an integer, got {value!r}")
    return value


def _list_of(item: Callable) -> Callable:
    def coerce(value):
        if not isinstance(value, list):
            raise SchemaError(f"expected a list, got {value!r}")
        return [item(v) for v in value]

    return coerce


def _optional(item: Callable) -> Callable:
    return lambda value: None if value is None else item(value)


def _string(value) -> str:
    if not isinstance(value, str):
        raise SchemaError(f"expected a string, got {value!r}")
    return value


def _polynomial(value) -> HomogeneousPolynomial:
    if not isinstance(value, dict):
        raise SchemaError(f"expected a polynomial object, got {value!r}")
    try:
        return poly_from_dict(value)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad polynomial: {exc}") from exc


def _case(value) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(f"expected a case object, got {value!r}")
    unknown = set(value) - {"ps", "exponent_pair", "slope_band"}
    if unknown or "ps" not in value:
        raise SchemaError(f"case needs 'ps' and may have 'exponent_pair', 'slope_band'; got {sorted(value)}")
    out = {"ps": _list_of(_real)(value["ps"])}
    out["exponent_pair"] = _optional(_list_of(_real))(value.get("exponent_pair"))
    out["slope_band"] = _optional(_list_of(_real))(value.get("slope_band"))
    return out


def _jsonable(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if isinstance(value, HomogeneousPolynomial):
        return json.loads(poly_to_json(value))
    if isinstance(value, list):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


X1X2 = {"field": "real", "n": 2, "m": 2, "coeffs": [{"alpha": [1, 1], "re": 1.0, "im": 0.0}]}


# -- experiments ---------------------------------------------------------------


@dataclass
class Outcome:
    columns: list
    rows: list
    checks: list  # (name, passed, detail)
    cells: list = field(default_factory=list)  # (cell id, seed)


@dataclass(frozen=True)
class Experiment:
    label: str
    description: str
    defaults: dict
    schema: dict
    tolerances: dict
    runner: Callable[[dict, int, dict], Outcome]


def _check(name, passed, detail=""):
    return (name, bool(passed), detail)


def _run_exponent_table(params, seed, tol):
    rows = exponent_table(params["ms"], params["ps"])
    checks = []
    for row in rows:
        row["cell"] = f"m={row['m']},p={row['p']!r}"
        if row["m"] == 2 and math.isinf(row["p"]):
            err = abs(row["multilinear_exp"] - 4 / 3)
            checks.append(_check("littlewood_4_3", err <= tol["exponent"], f"|exp - 4/3| = {err:.3e}"))
        if row["regime"] == Regime.HIGH_P.value and row["p"] == 2 * row["m"]:
            err = abs(row["multilinear_exp"] - 2)
            checks.append(_check(f"boundary_m{row['m']}", err <= tol["exponent"], f"|exp - 2| = {err:.3e}"))
    columns = ["cell", "m", "p", "regime", "multilinear_exp", "polynomial_exp", "constant_real", "constant_complex"]
    return Outcome(columns, rows, checks, [(r["cell"], None) for r in rows])


def _run_norm(params, seed, tol):
    P = params["polynomial"]
    rows = []
    checks = []
    for p in params["ps"]:
        est = poly_norm_lower(P, p, restarts=params["restarts"], seed=seed)
        lower, upper = est.value, form_norm_upper(polarize(P), (p,) * P.m)
        rows.append({"cell": f"p={p!r}", "p": p, "lower": lower, "upper": upper, "iterations": est.iterations,
                     "converged": est.converged, "witness": json.dumps(np.asarray(est.witness[0]).real.tolist())})
        checks.append(_check(f"bracket_p{p!r}", lower <= upper + tol["sandwich"], f"{lower!r} <= {upper!r}"))
    if params["expected"] is not None:
        for row, want in zip(rows, params["expected"]):
            err = abs(row["lower"] - want)
            checks.append(_check(f"expected_{row['cell']}", err <= tol["value"], f"|lower - {want!r}| = {err:.3e}"))
    columns = ["cell", "p", "lower", "upper", "iterations", "converged", "witness"]
    return Outcome(columns, rows, checks, [(r["cell"], seed) for r in rows])


def _run_verify_inequality(params, seed, tol):
    n, p, count, restarts = params["n"], params["p"], params["count"], params["restarts"]
    exponent = p / (p - 2)
    constant = math.sqrt(2)
    rows, cells = [], []
    for k in range(count):
        s = cell_seed(seed, k)
        T = MultilinearForm(np.random.default_rng(s).standard_normal((n, n)))
        lhs = coeff_norm(T, exponent)
        lower = form_norm_lower(T, (p, p), restarts=restarts, seed=s).value
        upper = form_norm_upper(T, (p, p))
        rows.append({
            "cell": k, "seed": s, "lhs": lhs, "norm_lower": lower, "norm_upper": upper,
            "verified": lhs <= constant * lower, "violation": lhs > constant * upper,
        })
        cells.append((k, s))
    verified = sum(r["verified"] for r in rows) / count
    violations = sum(r["violation"] for r in rows)
    checks = [
        _check("verified_fraction", verified >= tol["min_verified_fraction"], f"{verified:.3f}"),
        _check("rigorous_violations", violations == 0, f"{violations}"),
    ]
    columns = ["cell", "seed", "lhs", "norm_lower", "norm_upper", "verified", "violation"]
    return Outcome(columns, rows, checks, cells)


def _run_search_constant(params, seed, tol):
    res = search_constant_lower(
        params["m"], params["n"], params["p"], ScalarField.coerce(params["field"]), params["exponent"],
        params["budget"], seed,
    )
    row = {"cell": 0, "seed": seed, "best_ratio": res.best_ratio, "evaluations": res.evaluations,
           "denominator": res.denominator, "best_object": poly_to_json(res.best_object)}
    checks = []
    if params["min_ratio"] is not None:
        checks.append(_check("min_ratio", res.best_ratio >= params["min_ratio"] - tol["ratio"],
                             f"{res.best_ratio!r} >= {params['min_ratio']!r}"))
    return Outcome(["cell", "seed", "best_ratio", "evaluations", "denominator", "best_object"], [row], checks,
                   [(0, seed)])


def _run_choi_kim_scan(params, seed, tol):
    rows = choi_kim_scan(step=params["c_step"], restarts=params["restarts"], seed=seed)
    for i, row in enumerate(rows):
        row["cell"] = i
    best = max(rows, key=lambda r: r["ratio"])
    norm_err = max(abs(r["norm"] - 1) for r in rows)
    checks = [
        _check("sup_ratio", abs(best["ratio"] - 2) <= tol["ratio"], f"max ratio {best['ratio']!r} at c={best['c']!r}"),
        _check("attained_at_abs_c_2", abs(abs(best["c"]) - 2) <= tol["ratio"], f"c={best['c']!r}"),
        _check("unit_norms", norm_err <= tol["norm"], f"max |norm - 1| = {norm_err:.3e}"),
    ]
    columns = ["cell", "case", "c", "sign", "coeff_max", "norm", "ratio"]
    return Outcome(columns, rows, checks, [(r["cell"], seed) for r in rows])


def _run_diagonal_sharpness(params, seed, tol):
    rows, checks, cells = [], [], []
    for p, q in params["pq"]:
        res = diagonal_sharpness((p, q), params["ns"], params["test_exponent"], params["restarts"], seed)
        for r in res["rows"]:
            cell = f"p={p!r},q={q!r},n={r['n']}"
            rows.append({"cell": cell, "p": p, "q": q, "size": r["n"], "seed": seed, "measured": r["measured"],
                         "closed_form": r["closed_form"], "rel_err": r["rel_err"], "ratio_r": r["ratio_r"],
                         "slope": res["slope"], "target": res["target_slope"],
                         "pass": r["rel_err"] <= tol["rel_norm"]})
            cells.append((cell, seed))
        worst = max(r["rel_err"] for r in res["rows"])
        checks.append(_check(f"norms_p{p!r}_q{q!r}", worst <= tol["rel_norm"], f"max rel err {worst:.3e}"))
        dev = abs(res["slope"] - res["target_slope"])
        checks.append(_check(f"slope_p{p!r}_q{q!r}", dev <= tol["slope"],
                             f"slope {res['slope']:.4f} vs {res['target_slope']:.4f}"))
    columns = ["cell", "p", "q", "size", "seed", "measured", "closed_form", "rel_err", "ratio_r", "slope", "target", "pass"]
    return Outcome(columns, rows, checks, cells)


def _run_ksz_sharpness(params, seed, tol):
    rows, checks, cells = [], [], []
    for case in params["cases"]:
        ps = case["ps"]
        pair = ExponentPair(*case["exponent_pair"]) if case["exponent_pair"] else bilinear_mixed_exponents(*ps)
        theo = ksz_exponent(2, ps)
        band = case["slope_band"] or [theo - tol["slope"], theo + tol["slope"]]
        rep = sharpness_experiment(2, ps, pair, params["Ns"], seed, params["seeds_per_N"], params["restarts"])
        ok = band[0] <= rep.slope <= band[1]
        tag = "p=" + ",".join(repr(p) for p in ps)
        for r in rep.rows:
            cell = f"{tag},N={r['size']},rep={r['rep']}"
            rows.append({"cell": cell, "ps": tag, "size": r["size"], "seed": r["seed"], "measured": r["measured"],
                         "closed_form": r["closed_form"], "norm": r["norm"], "slope": rep.slope,
                         "target": rep.theoretical_slope, "implied_bound": rep.implied_bound,
                         "exponent_target": rep.theoretical_target, "pass": ok})
            cells.append((cell, r["seed"]))
        closed_ok = all(abs(r["measured"] - r["closed_form"]) <= 1e-9 * r["closed_form"] for r in rep.rows)
        checks.append(_check(f"slope_{tag}", ok, f"slope {rep.slope:.4f}, band [{band[0]:.4f}, {band[1]:.4f}]"))
        checks.append(_check(f"closed_form_{tag}", closed_ok, "mixed norm of +-1 tensors"))
    columns = ["cell", "ps", "size", "seed", "measured", "closed_form", "norm", "slope", "target", "implied_bound",
               "exponent_target", "pass"]
    return Outcome(columns, rows, checks, cells)


def _run_limit_trace(params, seed, tol):
    P = params["polynomial"]
    ratios = limit_trace_p_to_m(P, params["ps"], params["exponent"], params["restarts"], seed)
    rows, checks = [], []
    expected = params["expected"]
    for i, (p, r) in enumerate(zip(params["ps"], ratios)):
        row = {"cell": f"p={p!r}", "p": p, "ratio": r, "expected": None, "pass": None}
        if expected is not None:
            row["expected"] = expected[i]
            row["pass"] = abs(r - expected[i]) <= tol["ratio"]
            checks.append(_check(f"ratio_p{p!r}", row["pass"], f"|{r!r} - {expected[i]!r}|"))
        rows.append(row)
    return Outcome(["cell", "p", "ratio", "expected", "pass"], rows, checks, [(r["cell"], seed) for r in rows])


def _run_interchange_check(params, seed, tol):
    rows, cells = [], []
    for k in range(params["count"]):
        s = cell_seed(seed, k)
        A = MultilinearForm(np.random.default_rng(s).standard_normal((params["size"], params["size"])))
        lhs, rhs, holds = minkowski_interchange_check(A, params["lam"], tol["interchange"])
        rows.append({"cell": k, "seed": s, "lhs": lhs, "rhs": rhs, "holds": holds})
        cells.append((k, s))
    failures = sum(not r["holds"] for r in rows)
    return Outcome(["cell", "seed", "lhs", "rhs", "holds"], rows,
                   [_check("interchange", failures == 0, f"{failures} failures")], cells)


def _run_interpolation_check(params, seed, tol):
    rows = []
    for p, q in params["pq"]:
        lam = bilinear_mixed_exponents(p, q).outer
        mid = interpolate_exponent_pairs(ExponentPair(2.0, lam), ExponentPair(lam, 2.0), 0.5)
        mu = symmetric_exponent(p, q)
        err = max(abs(mid.inner - mu), abs(mid.outer - mu))
        between = min(2.0, lam) - tol["exponent"] <= mu <= max(2.0, lam) + tol["exponent"]
        rows.append({"cell": f"p={p!r},q={q!r}", "p": p, "q": q, "lambda": lam, "interpolated": mid.inner,
                     "symmetric": mu, "abs_err": err, "pass": err <= tol["exponent"] and between})
    failures = sum(not r["pass"] for r in rows)
    return Outcome(["cell", "p", "q", "lambda", "interpolated", "symmetric", "abs_err", "pass"], rows,
                   [_check("interpolation_identity", failures == 0, f"{failures} failures over {len(rows)} points")],
                   [(r["cell"], None) for r in rows])


def _default_pq_grid():
    # 1/p + 1/q <= 1/2
    grid = []
    for p in (4, 5, 6, 8, 12):
        for q in (4, 6, 8, 16):
            grid.append([float(p), float(q)])
    return grid


EXPERIMENTS: dict[str, Experiment] = {}


def _register(label, description, defaults, schema, tolerances, runner):
    EXPERIMENTS[label] = Experiment(label, description, defaults, schema, tolerances, runner)


_register(
    "exponent-table", "optimal exponents and constant bounds over (m, p) grids",
    {"ms": [2, 3], "ps": [2, 2.5, 3, 4, 5, 6, 8, "inf"]},
    {"ms": _list_of(_int), "ps": _list_of(_real)},
    {"exponent": 1e-12}, _run_exponent_table,
)
_register(
    "norm", "lower/upper bracket of a polynomial sup norm on ell_p balls",
    {"polynomial": X1X2, "ps": [2], "restarts": 32, "expected": [0.5]},
    {"polynomial": _polynomial, "ps": _list_of(_real), "restarts": _int, "expected": _optional(_list_of(_real))},
    {"sandwich": 1e-12, "value": 1e-8}, _run_norm,
)
_register(
    "verify-inequality", "bilinear Hardy-Littlewood inequality with constant sqrt(2) on random forms",
    {"n": 8, "p": 3, "count": 200, "restarts": 32},
    {"n": _int, "p": _real, "count": _int, "restarts": _int},
    {"min_verified_fraction": 0.95}, _run_verify_inequality,
)
_register(
    "search-constant", "seeded search for lower bounds on the optimal polynomial constant",
    {"m": 2, "n": 2, "p": 2, "field": "real", "exponent": "inf", "budget": 10000, "min_ratio": 1.999},
    {"m": _int, "n": _int, "p": _real, "field": _string, "exponent": _real, "budget": _int,
     "min_ratio": _optional(_real)},
    {"ratio": 0.0}, _run_search_constant,
)
_register(
    "choi-kim-scan", "coefficient/norm ratio over the extreme points of the unit ball of P(2 l_2^2)",
    {"c_step": 1e-3, "restarts": 8},
    {"c_step": _real, "restarts": _int},
    {"ratio": 1e-4, "norm": 1e-6}, _run_choi_kim_scan,
)
_register(
    "diagonal-sharpness", "norms of diagonal bilinear forms and ratio growth below the optimal exponent",
    {"pq": [[4, 4], [3, 3], [6, 3]], "ns": [2, 4, 8, 16, 32], "test_exponent": None, "restarts": 32},
    {"pq": _list_of(_list_of(_real)), "ns": _list_of(_int), "test_exponent": _optional(_real), "restarts": _int},
    {"rel_norm": 1e-6, "slope": 0.05}, _run_diagonal_sharpness,
)
_register(
    "ksz-sharpness", "norm growth of random +-1 bilinear forms against the KSZ exponent",
    {"cases": [{"ps": ["inf", "inf"], "exponent_pair": [4 / 3, 4 / 3], "slope_band": [1.40, 1.65]},
               {"ps": [3, 3], "exponent_pair": [2, 3], "slope_band": None}],
     "Ns": [4, 8, 16, 32], "seeds_per_N": 5, "restarts": 16},
    {"cases": _list_of(_case), "Ns": _list_of(_int), "seeds_per_N": _int, "restarts": _int},
    {"slope": 0.1}, _run_ksz_sharpness,
)
_register(
    "limit-trace", "coefficient/norm ratio along p decreasing to m",
    {"polynomial": X1X2, "ps": [3, 2.5, 2.1], "exponent": "inf", "restarts": 32,
     "expected": [2 ** (2 / 3), 2 ** (2 / 2.5), 2 ** (2 / 2.1)]},
    {"polynomial": _polynomial, "ps": _list_of(_real), "exponent": _real, "restarts": _int,
     "expected": _optional(_list_of(_real))},
    {"ratio": 1e-6}, _run_limit_trace,
)
_register(
    "interchange-check", "Minkowski interchange of mixed-norm exponents on random matrices",
    {"count": 1000, "size": 5, "lam": 1.5},
    {"count": _int, "size": _int, "lam": _real},
    {"interchange": 1e-12}, _run_interchange_check,
)
_register(
    "interpolation-check", "theta=1/2 interpolation of (2, lambda) and (lambda, 2) against 4pq/(3pq-2p-2q)",
    {"pq": _default_pq_grid()},
    {"pq": _list_of(_list_of(_real))},
    {"exponent": 1e-12}, _run_interpolation_check,
)


def list_experiments() -> list[tuple[str, str]]:
    return [(e.label, e.description) for e in EXPERIMENTS.values()]


# -- configs -------------------------------------------------------------------

_CONFIG_KEYS = {"schema", "experiment", "parameters", "seed", "output_path", "tolerance_overrides"}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    parameters: dict = field(default_factory=dict)
    seed: int = 0
    output_path: str = "results"
    tolerance_overrides: dict | None = None

    def to_dict(self) -> dict:
        out = {"schema": SCHEMA_VERSION, "experiment": self.experiment, "parameters": self.parameters,
               "seed": self.seed, "output_path": self.output_path}
        if self.tolerance_overrides is not None:
            out["tolerance_overrides"] = self.tolerance_overrides
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise SchemaError("config must be a JSON object")
        unknown = set(data) - _CONFIG_KEYS
        if unknown:
            raise SchemaError(f"unknown config keys: {sorted(unknown)}")
        if data.get("schema") != SCHEMA_VERSION:
            raise SchemaError(f"unsupported schema version {data.get('schema')!r}")
        if "experiment" not in data:
            raise SchemaError("config needs an 'experiment' label")
        params = data.get("parameters", {})
        overrides = data.get("tolerance_overrides")
        if not isinstance(params, dict) or not (overrides is None or isinstance(overrides, dict)):
            raise SchemaError("'parameters' and 'tolerance_overrides' must be objects")
        config = cls(
            experiment=_string(data["experiment"]),
            parameters=params,
            seed=_int(data.get("seed", 0)),
            output_path=_string(data.get("output_path", "results")),
            tolerance_overrides=overrides,
        )
        config.validate()
        return config

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def validate(self):
        """Coerced ``(parameters, tolerances)``; raises :class:`SchemaError`."""
        exp = EXPERIMENTS.get(self.experiment)
        if exp is None:
            raise SchemaError(f"unknown experiment {self.experiment!r}")
        unknown = set(self.parameters) - set(exp.schema)
        if unknown:
            raise SchemaError(f"unknown parameters for {exp.label}: {sorted(unknown)}")
        merged = {**exp.defaults, **self.parameters}
        params = {k: exp.schema[k](v) for k, v in merged.items()}
        tol = dict(exp.tolerances)
        for k, v in (self.tolerance_overrides or {}).items():
            if k not in tol:
                raise SchemaError(f"unknown tolerance {k!r} for {exp.label}")
            tol[k] = _real(v)
        return params, tol


@dataclass
class RunManifest:
    config: dict
    started: str
    finished: str
    wall_time_s: float
    cells: list
    checks: list
    passed: bool
    csv: str
    versions: dict

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "started": self.started,
            "finished": self.finished,
            "wall_time_s": self.wall_time_s,
            "versions": self.versions,
            "cells": self.cells,
            "checks": self.checks,
            "passed": self.passed,
            "csv": self.csv,
        }


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "inf" if v == math.inf else repr(v)
    return v


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def execute(config: ExperimentConfig) -> tuple[Outcome, dict]:
    """Run without writing anything; returns the outcome and the coerced parameters."""
    params, tol = config.validate()
    return EXPERIMENTS[config.experiment].runner(params, config.seed, tol), params


def run(config: ExperimentConfig, output_dir=None) -> RunManifest:
    """Validate, compute, then write ``<label>.csv`` and ``<label>.manifest.json``.

    Nothing is written when validation fails.
    """
    config.validate()
    started, t0 = _now(), time.perf_counter()
    outcome, params = execute(config)
    finished = _now()
    out = Path(output_dir if output_dir is not None else config.output_path)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{config.experiment}.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(outcome.columns)
        for row in outcome.rows:
            writer.writerow([_csv_value(row.get(c)) for c in outcome.columns])
    manifest = RunManifest(
        config={**config.to_dict(), "resolved_parameters": _jsonable(params)},
        started=started,
        finished=finished,
        wall_time_s=time.perf_counter() - t0,
        cells=[{"cell": c, "seed": s} for c, s in outcome.cells],
        checks=[{"name": n, "passed": ok, "detail": d} for n, ok, d in outcome.checks],
        passed=all(ok for _, ok, _ in outcome.checks),
        csv=csv_path.name,
        versions={"hlineq": __version__, "numpy": np.__version__, "python": platform.python_version()},
    )
    with open(out / f"{config.experiment}.manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest.to_dict(), fh, indent=2)
    return manifest

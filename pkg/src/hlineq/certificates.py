"""Sharpness and optimality experiments.

Diagonal forms, random-sign (KSZ) forms with log-log growth fits, the
Choi-Kim extreme points of the unit ball of 2-homogeneous polynomials on
``ell_2^2``, searches for lower bounds on the optimal constant, limit traces
``p -> m`` and Minkowski interchange checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .algebra import (
    HomogeneousPolynomial,
    MultilinearForm,
    ScalarField,
    coeff_norm,
    enumerate_multi_indices,
    eval_poly,
    lp_norm,
    mixed_norm_bilinear,
)
from .config import DEFAULT_RESTARTS, TOL
from .normopt import BallSpec, NormEstimate, form_norm_lower, poly_norm_lower, poly_norm_lower_many
from .theory import ExponentPair, bilinear_mixed_exponents, ksz_exponent

__all__ = [
    "SharpnessReport",
    "RatioSearchResult",
    "Ratio",
    "cell_seed",
    "diagonal_form",
    "diagonal_norm_exact",
    "ratio",
    "search_constant_lower",
    "choi_kim_family",
    "choi_kim_scan",
    "ksz_random_form",
    "fit_growth",
    "sharpness_experiment",
    "diagonal_sharpness",
    "limit_trace_p_to_m",
    "minkowski_interchange_check",
]

INF = math.inf


def cell_seed(master: int, *keys: int) -> int:
    """Per-cell seed: ``SeedSequence([master, *keys])`` hashed down to 32 bits.

    Keys are cell coordinates, not positions, so a sub-grid reproduces the
    corresponding cells of the full grid.
    """
    words = [int(master)] + [int(k) for k in keys]
    return int(np.random.SeedSequence(words).generate_state(1)[0])


# -- growth fits -------------------------------------------------------------


def fit_growth(sizes: Sequence[float], values: Sequence[float]):
    """Least-squares line through ``(log size, log value)``.

    Returns ``(slope, intercept, residual)`` with ``residual`` the largest
    absolute log-residual.
    """
    x = np.asarray(sizes, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.size < 3 or x.size != y.size:
        raise ValueError("need at least 3 (size, value) pairs")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("sizes and values must be positive")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = float(np.max(np.abs(ly - (slope * lx + intercept))))
    return float(slope), float(intercept), residual


@dataclass(frozen=True)
class SharpnessReport:
    sizes: tuple
    observed: tuple
    slope: float
    intercept: float
    residual: float
    implied_bound: float
    theoretical_target: float
    theoretical_slope: float
    rows: tuple = field(default=(), compare=False)


# -- diagonal forms ----------------------------------------------------------


def diagonal_form(n: int) -> MultilinearForm:
    """``A_n(x, y) = sum_j x_j y_j``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return MultilinearForm(np.eye(n))


def diagonal_norm_exact(n: int, p: float, q: float) -> float:
    """``||A_n||`` on ``ell_p x ell_q``: ``n^(1/lambda)`` with ``1/p + 1/q + 1/lambda = 1``."""
    inv_lam = 1.0 - (0.0 if math.isinf(p) else 1 / p) - (0.0 if math.isinf(q) else 1 / q)
    if inv_lam <= 0:
        raise ValueError(f"need 1/p + 1/q < 1, got ({p}, {q})")
    return float(n) ** inv_lam


def diagonal_sharpness(
    pq: tuple,
    ns: Sequence[int],
    test_exponent: float | None = None,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
) -> dict:
    """Measure ``||A_n||`` on ``ell_p x ell_q`` and the growth of ``coeff_norm(A_n, r) / ||A_n||``.

    For ``r < lambda`` the ratio grows like ``n^(1/r - 1/lambda)``; at
    ``r = lambda`` it stays at 1.
    """
    p, q = pq
    lam = 1.0 / (1.0 - (0.0 if math.isinf(p) else 1 / p) - (0.0 if math.isinf(q) else 1 / q))
    r = lam / 2 if test_exponent is None else float(test_exponent)
    rows = []
    for n in ns:
        A = diagonal_form(n)
        est = form_norm_lower(A, (p, q), restarts=restarts, seed=seed)
        exact = diagonal_norm_exact(n, p, q)
        rows.append(
            {
                "n": n,
                "measured": est.value,
                "closed_form": exact,
                "rel_err": abs(est.value - exact) / exact,
                "ratio_lambda": coeff_norm(A, lam) / est.value,
                "ratio_r": coeff_norm(A, r) / est.value,
            }
        )
    slope, intercept, residual = fit_growth([row["n"] for row in rows], [row["ratio_r"] for row in rows])
    return {
        "p": p,
        "q": q,
        "lambda": lam,
        "test_exponent": r,
        "rows": rows,
        "slope": slope,
        "target_slope": 1 / r - 1 / lam,
        "residual": residual,
    }


# -- ratios and constant searches --------------------------------------------


@dataclass(frozen=True)
class Ratio:
    """``coeff_norm / norm_lower``; an upper estimate of the true ratio."""

    value: float
    numerator: float
    denominator: NormEstimate

    def __float__(self):
        return self.value


def _norm_estimate(obj, p, restarts: int, seed: int) -> NormEstimate:
    if isinstance(obj, HomogeneousPolynomial):
        ps = set(p.p_values if isinstance(p, BallSpec) else np.atleast_1d(p).astype(float).tolist())
        if len(ps) != 1:
            raise ValueError("a polynomial lives on a single ell_p ball")
        return poly_norm_lower(obj, ps.pop(), restarts=restarts, seed=seed)
    if isinstance(obj, MultilinearForm):
        return form_norm_lower(obj, BallSpec.coerce(p, obj.m), restarts=restarts, seed=seed)
    raise TypeError(f"expected a polynomial or a multilinear form, got {type(obj).__name__}")


def _unit_scaled(obj):
    # divide by max|coefficient| so scaling by a power of two leaves the ratio bit-identical
    if isinstance(obj, HomogeneousPolynomial):
        top = float(np.max(np.abs(obj.values))) if obj.coeffs else 0.0
        return obj.scaled(1.0 / top) if top > 0 else obj
    if isinstance(obj, MultilinearForm):
        top = float(np.max(np.abs(obj.entries)))
        return MultilinearForm(obj.entries / top, obj.field) if top > 0 else obj
    raise TypeError(f"expected a polynomial or a multilinear form, got {type(obj).__name__}")


def ratio(obj, p, exponent: float, restarts: int = DEFAULT_RESTARTS, seed: int = 0) -> Ratio:
    """``coeff_norm(obj, exponent) / norm_lower(obj)``, computed on ``obj / max|coefficient|``."""
    unit = _unit_scaled(obj)
    est = _norm_estimate(unit, p, restarts, seed)
    if not est.value > 0:
        raise ValueError("ratio of a zero object is undefined")
    num = coeff_norm(unit, exponent)
    return Ratio(num / est.value, num, est)


@dataclass(frozen=True)
class RatioSearchResult:
    best_ratio: float
    best_object: HomogeneousPolynomial
    evaluations: int
    seed: int
    denominator: float = 0.0


_PLANE_GRID = 2048


def _plane_norm(P: HomogeneousPolynomial, p: float) -> float:
    """``||P||`` for real P on ``ell_p^2``: angular grid plus bounded 1-D refinement.

    Homogeneity reduces the sup to ``max_theta |P(u)| / ||u||_p^m`` over
    ``u = (cos theta, sin theta)``, ``theta in [0, pi)``.
    """
    E, c, m = P.exponents, P.values, P.m

    def g(theta):
        th = np.atleast_1d(theta)
        u = np.stack([np.cos(th), np.sin(th)], axis=1)
        if math.isinf(p):
            nrm = np.max(np.abs(u), axis=1)
        else:
            nrm = np.sum(np.abs(u) ** p, axis=1) ** (1.0 / p)
        vals = (np.prod(u[:, None, :] ** E[None], axis=2) * c).sum(axis=1)
        return np.abs(vals) / nrm**m

    h = math.pi / _PLANE_GRID
    grid = np.arange(_PLANE_GRID) * h
    vals = g(grid)
    k = int(np.argmax(vals))
    res = minimize_scalar(
        lambda t: -float(g(t)[0]),
        bounds=(grid[k] - h, grid[k] + h),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return max(float(vals[k]), -float(res.fun))


def _poly_from_vector(v: np.ndarray, alphas, n: int, m: int, field: ScalarField) -> HomogeneousPolynomial:
    if field is ScalarField.COMPLEX:
        k = len(alphas)
        coeffs = v[:k] + 1j * v[k:]
    else:
        coeffs = v
    return HomogeneousPolynomial(n, m, dict(zip(alphas, coeffs)), field)


def search_constant_lower(
    m: int,
    n: int,
    p: float,
    field=ScalarField.REAL,
    exponent: float = INF,
    budget: int = 10_000,
    seed: int = 0,
    inner_restarts: int = 8,
) -> RatioSearchResult:
    """Maximize ``coeff_norm(P, exponent) / ||P||_p`` over m-homogeneous P on ``K^n``.

    Coefficient vectors live on the unit Euclidean sphere (the ratio is
    scale invariant). A quarter of the budget goes to seeded random samples,
    the rest to coordinate polishing from the best samples. Each
    denominator evaluation counts against ``budget``.

    The reported ratio divides by the largest available norm estimate for
    the winner, so it errs low.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    field = ScalarField.coerce(field)
    p = float(p)
    rng = np.random.default_rng(seed)
    alphas = enumerate_multi_indices(n, m)
    dim = len(alphas) * (2 if field is ScalarField.COMPLEX else 1)
    plane = n == 2 and field is ScalarField.REAL

    evaluations = 0

    def score(v):
        nonlocal evaluations
        evaluations += 1
        P = _poly_from_vector(v, alphas, n, m, field)
        if not P.coeffs:
            return -INF
        if n == 1:
            den = float(np.max(np.abs(P.values)))
        elif plane:
            den = _plane_norm(P, p)
        else:
            den = poly_norm_lower(P, p, restarts=inner_restarts, seed=evaluations).value
        return coeff_norm(P, exponent) / den if den > 0 else -INF

    def unit(v):
        return v / np.linalg.norm(v)

    n_random = max(1, budget // 4)
    samples = []
    for _ in range(n_random):
        v = unit(rng.standard_normal(dim))
        samples.append((score(v), v))
    samples.sort(key=lambda s: -s[0])
    best_val, best_v = samples[0]

    for start_val, v in samples[:4]:
        delta = 0.1
        cur = start_val
        while evaluations < budget and delta > 1e-10:
            improved = False
            for i in range(dim):
                for sgn in (1.0, -1.0):
                    if evaluations >= budget:
                        break
                    w = v.copy()
                    w[i] += sgn * delta
                    w = unit(w)
                    s = score(w)
                    if s > cur:
                        cur, v, improved = s, w, True
            if not improved:
                delta *= 0.5
        if cur > best_val:
            best_val, best_v = cur, v
        if evaluations >= budget:
            break

    P = _poly_from_vector(best_v, alphas, n, m, field)
    den = poly_norm_lower(P, p, restarts=DEFAULT_RESTARTS, seed=seed).value
    if n == 1:
        den = max(den, float(np.max(np.abs(P.values))))
    elif plane:
        den = max(den, _plane_norm(P, p))
    return RatioSearchResult(coeff_norm(P, exponent) / den, P, evaluations, seed, den)


# -- Choi-Kim extreme points -------------------------------------------------


def choi_kim_family(c: float, sign: int = 1) -> HomogeneousPolynomial:
    """``a x^2 - a y^2 + c xy`` with ``a = sign * sqrt(4 - c^2) / 2``; norm 1 on ``ell_2^2``."""
    if abs(c) > 2:
        raise ValueError(f"need |c| <= 2, got {c}")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    a = sign * math.sqrt(4 - c * c) / 2
    return HomogeneousPolynomial(2, 2, {(2, 0): a, (0, 2): -a, (1, 1): c})


def choi_kim_scan(step: float = 1e-3, restarts: int = 8, seed: int = 0) -> list[dict]:
    """Ratio ``max|coeff| / ||P||_2`` over the extreme points of the unit ball.

    Covers case (ii) on a c-grid of ``[-2, 2]`` with both signs of ``a``, and
    the four case-(i) polynomials ``+-x^2 +- y^2`` explicitly.
    """
    count = int(round(4 / step))
    cs = np.linspace(-2.0, 2.0, count + 1)
    polys = []
    for s1 in (1, -1):
        for s2 in (1, -1):
            label = f"{s1:+d},{s2:+d}"
            polys.append(("i", 0.0, label, HomogeneousPolynomial(2, 2, {(2, 0): float(s1), (0, 2): float(s2)})))
    for c in cs:
        for sign in (1, -1):
            if c == 0.0:
                continue
            polys.append(("ii", float(c), f"{sign:+d}", choi_kim_family(float(c), sign)))
    estimates = poly_norm_lower_many([P for *_, P in polys], 2.0, restarts=restarts, seed=seed)
    rows = []
    for (case, c, sign, P), est in zip(polys, estimates):
        top = coeff_norm(P, INF)
        rows.append({"case": case, "c": c, "sign": sign, "coeff_max": top, "norm": est.value, "ratio": top / est.value})
    return rows


# -- random-sign forms -------------------------------------------------------


def ksz_random_form(m: int, N: int, seed: int) -> MultilinearForm:
    """m-linear form on ``K^N`` with independent uniform +-1 entries."""
    if N < 1 or m < 1:
        raise ValueError("need m, N >= 1")
    rng = np.random.default_rng(seed)
    signs = rng.integers(0, 2, size=(N,) * m) * 2 - 1
    return MultilinearForm(signs.astype(np.float64))


def sharpness_experiment(
    m: int,
    ps,
    exponent_pair: ExponentPair | None,
    Ns: Sequence[int],
    seed: int = 0,
    seeds_per_N: int = 5,
    restarts: int = DEFAULT_RESTARTS,
) -> SharpnessReport:
    """Growth of ``||A||`` for random-sign forms against the KSZ exponent.

    The median norm estimate over ``seeds_per_N`` forms is fitted per N. The
    implied outer exponent ``s`` solves the coefficient-side growth
    ``N^(1/inner + 1/s) <= C N^slope`` (mixed reading), or
    ``N^(m/s) <= C N^slope`` when ``inner == outer`` (single-exponent
    reading). It uses only the fitted slope.
    """
    ps = BallSpec.coerce(ps, m).p_values
    Ns = [int(N) for N in Ns]
    if len(Ns) < 3 or any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ValueError("Ns must be increasing with at least 3 sizes")
    if exponent_pair is None:
        if m != 2:
            raise ValueError("default exponent pair is defined for bilinear forms only")
        exponent_pair = bilinear_mixed_exponents(*ps)
    single = exponent_pair.inner == exponent_pair.outer
    if m != 2 and not single:
        raise ValueError("mixed exponent pairs are defined for bilinear forms only")

    rows = []
    medians = []
    for N in Ns:
        values = []
        for rep in range(seeds_per_N):
            s = cell_seed(seed, N, rep)
            A = ksz_random_form(m, N, s)
            if single:
                measured = coeff_norm(A, exponent_pair.outer)
                closed = float(N) ** (m / exponent_pair.outer)
            else:
                measured = mixed_norm_bilinear(A, exponent_pair.inner, exponent_pair.outer)
                closed = float(N) ** (1 / exponent_pair.inner + 1 / exponent_pair.outer)
            est = form_norm_lower(A, ps, restarts=restarts, seed=s)
            values.append(est.value)
            rows.append({"size": N, "rep": rep, "seed": s, "measured": measured, "closed_form": closed, "norm": est.value})
        medians.append(float(np.median(values)))

    slope, intercept, residual = fit_growth(Ns, medians)
    if single:
        implied = m / slope if slope > 0 else INF
    else:
        excess = slope - 1 / exponent_pair.inner
        implied = 1 / excess if excess > 0 else INF
    return SharpnessReport(
        sizes=tuple(Ns),
        observed=tuple(medians),
        slope=slope,
        intercept=intercept,
        residual=residual,
        implied_bound=implied,
        theoretical_target=exponent_pair.outer,
        theoretical_slope=ksz_exponent(m, ps),
        rows=tuple(rows),
    )


# -- limit traces and interchange --------------------------------------------


def limit_trace_p_to_m(
    P: HomogeneousPolynomial,
    p_sequence: Sequence[float],
    exponent: float = INF,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
) -> list[float]:
    """``ratio(P, p_i, exponent)`` along ``p_i`` decreasing to ``m``."""
    ps = [float(p) for p in p_sequence]
    m = P.m
    for p in ps:
        if not m < p < 2 * m:
            raise ValueError(f"p={p} outside ({m}, {2 * m})")
    if any(b >= a for a, b in zip(ps, ps[1:])):
        raise ValueError("p_sequence must be strictly decreasing")
    return [ratio(P, p, exponent, restarts=restarts, seed=seed).value for p in ps]


def minkowski_interchange_check(A: MultilinearForm, lam: float, tol: float = TOL.interchange):
    """Minkowski: ``||(||A_{.k}||_2)_k||_lam >= ||(||A_{j.}||_lam)_j||_2`` for ``lam <= 2``.

    Returns ``(lhs, rhs, holds)``; the right side swaps the nesting order
    while each index keeps its exponent.
    """
    if not 0 < lam <= 2:
        raise ValueError(f"interchange is only guaranteed for 0 < lambda <= 2, got {lam}")
    lhs = mixed_norm_bilinear(A, 2.0, lam)
    rhs = mixed_norm_bilinear(A.transposed(), lam, 2.0)
    return lhs, rhs, bool(lhs >= rhs - tol)

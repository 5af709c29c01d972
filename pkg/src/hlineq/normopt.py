"""Sup norms over ell_p unit balls.

Lower bounds come with witnesses (alternating maximization for forms,
projected gradient ascent for polynomials); upper bounds come from the
recursive Hoelder/triangle estimate. Every ``NormEstimate.value`` is the
objective re-evaluated at its normalized witness, so it is a genuine lower
bound.
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import (
    HomogeneousPolynomial,
    MultilinearForm,
    ScalarField,
    contract,
    eval_form,
    eval_poly,
    lp_norm,
    polarize,
)
from .config import DEFAULT_RESTARTS, TOL

__all__ = [
    "BallSpec",
    "NormEstimate",
    "dual_exponent",
    "norming_vector",
    "form_norm_lower",
    "form_norm_upper",
    "poly_norm_lower",
    "poly_norm_lower_many",
    "poly_norm_bracket",
]

INF = math.inf


@dataclass(frozen=True)
class BallSpec:
    """One ``p`` per argument slot; ``inf`` is the sup-norm (c_0) ball."""

    p_values: tuple

    def __post_init__(self):
        ps = tuple(float(p) for p in self.p_values)
        if not ps:
            raise ValueError("BallSpec needs at least one exponent")
        for p in ps:
            if not p >= 1:
                raise ValueError(f"ball exponent must be >= 1, got {p}")
        object.__setattr__(self, "p_values", ps)

    @classmethod
    def coerce(cls, balls, m: int) -> "BallSpec":
        if isinstance(balls, BallSpec):
            spec = balls
        elif np.ndim(balls) == 0:
            spec = cls((float(balls),) * m)
        else:
            spec = cls(tuple(balls))
        if len(spec.p_values) != m:
            raise ValueError(f"form has {m} slots but {len(spec.p_values)} ball exponents were given")
        return spec

    def __len__(self):
        return len(self.p_values)

    def __iter__(self):
        return iter(self.p_values)


@dataclass(frozen=True, eq=False)
class NormEstimate:
    value: float
    witness: tuple
    restarts_used: int
    iterations: int
    converged: bool
    method: str
    params: dict = field(default_factory=dict)
    best_restart: int = 0
    # per-restart objective sequences; exposed for ascent checks
    traces: tuple = ()

    def to_dict(self) -> dict:
        def vec(x):
            x = np.asarray(x)
            if np.iscomplexobj(x):
                return {"re": x.real.tolist(), "im": x.imag.tolist()}
            return x.tolist()

        return {
            "value": self.value,
            "witness": [vec(w) for w in self.witness],
            "restarts_used": self.restarts_used,
            "iterations": self.iterations,
            "converged": self.converged,
            "method": self.method,
            "params": self.params,
            "best_restart": self.best_restart,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def dual_exponent(p: float) -> float:
    p = float(p)
    if not p >= 1:
        raise ValueError(f"exponent must be >= 1, got {p}")
    if p == 1.0:
        return INF
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def _phase(phi: np.ndarray) -> np.ndarray:
    """Unit multiplier ``u`` with ``phi * u = |phi|``; zero entries get +1."""
    mag = np.abs(phi)
    safe = np.where(mag > 0, mag, 1.0)
    u = np.where(mag > 0, np.conj(phi) / safe, 1.0)
    if not np.iscomplexobj(phi):
        u = u.real
    return u


def norming_vector(phi, p: float):
    """Unit vector ``x`` in ell_p maximizing ``sum phi_j x_j``; returns ``(x, ||phi||_{p'})``."""
    phi = np.asarray(phi)
    p = float(p)
    if not p >= 1:
        raise ValueError(f"exponent must be >= 1, got {p}")
    mag = np.abs(phi)
    top = float(mag.max()) if mag.size else 0.0
    if top == 0.0:
        raise ValueError("norming vector of the zero functional is undefined")
    u = _phase(phi)
    q = dual_exponent(p)
    if math.isinf(p):
        x = u
    elif math.isinf(q):
        j = int(np.argmax(mag))
        x = np.zeros_like(u)
        x[j] = u[j]
    else:
        w = (mag / top) ** (q - 1.0)
        w = w / lp_norm(w, p)
        x = u * w
    return x, lp_norm(phi, q)


def _normalize(x: np.ndarray, p: float) -> np.ndarray:
    return x / lp_norm(x, p)


def _random_point(rng: np.random.Generator, n: int, field: ScalarField, p: float) -> np.ndarray:
    x = rng.standard_normal(n)
    if field is ScalarField.COMPLEX:
        x = x + 1j * rng.standard_normal(n)
    return _normalize(x, p)


def _pmap(fn, items, workers: int):
    if workers <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _best(results):
    # max value, lowest restart index on ties
    best = 0
    for i, r in enumerate(results):
        if r[0] > results[best][0]:
            best = i
    return best


# -- multilinear forms -----------------------------------------------------


def _alternating_run(T: MultilinearForm, ps, seed: int, tol):
    rng = np.random.default_rng(seed)
    xs = [_random_point(rng, T.n, T.field, p) for p in ps]
    current = float(abs(contract(T, xs)))
    trace = [current]
    converged = False
    sweeps = 0
    for sweeps in range(1, tol.alt_max_sweeps + 1):
        start = current
        for k, p in enumerate(ps):
            phi = contract(T, xs, skip=k)
            if not np.any(phi):
                continue
            x, val = norming_vector(phi, p)
            # rounding can make the closed-form value dip by an ulp; keep the old point then
            if val >= current:
                xs[k] = x
                current = val
            trace.append(current)
        if current == 0.0 or current - start <= tol.alt_rel_change * current:
            converged = True
            break
    xs = [_normalize(x, p) for x, p in zip(xs, ps)]
    value = float(abs(contract(T, xs)))
    return value, tuple(xs), sweeps, converged, tuple(trace)


def form_norm_lower(
    T: MultilinearForm,
    balls,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    workers: int = 1,
    tol=TOL,
) -> NormEstimate:
    """Lower bound on ``||T||`` over ``B_{p_1} x ... x B_{p_m}``.

    Each restart alternates exact slot maximizations (closed-form norming
    vectors), so its objective sequence never decreases. Restart ``i`` is
    seeded with ``seed + i``.
    """
    ps = BallSpec.coerce(balls, T.m).p_values
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    results = _pmap(lambda i: _alternating_run(T, ps, seed + i, tol), range(restarts), workers)
    b = _best(results)
    value, witness, sweeps, converged, _ = results[b]
    return NormEstimate(
        value=value,
        witness=witness,
        restarts_used=restarts,
        iterations=sweeps,
        converged=converged,
        method="alternating",
        params={
            "balls": list(ps),
            "restarts": restarts,
            "seed": seed,
            "rel_change": tol.alt_rel_change,
            "max_sweeps": tol.alt_max_sweeps,
        },
        best_restart=b,
        traces=tuple(r[4] for r in results),
    )


def _upper_in_order(a: np.ndarray, ps) -> float:
    if a.ndim == 1:
        return lp_norm(a, dual_exponent(ps[0]))
    rows = [_upper_in_order(a[j], ps[1:]) for j in range(a.shape[0])]
    return lp_norm(rows, dual_exponent(ps[0]))


def form_norm_upper(T: MultilinearForm, balls) -> float:
    """``||T|| <= || (||T(e_j, .)||)_j ||_{p_1'}`` applied slot by slot.

    The bound depends on which slot is peeled first; every order is tried
    for ``m <= 4`` and the smallest value returned.
    """
    ps = BallSpec.coerce(balls, T.m).p_values
    orders = itertools.permutations(range(T.m)) if T.m <= 4 else [tuple(range(T.m))]
    return min(
        _upper_in_order(np.transpose(T.entries, order), [ps[k] for k in order]) for order in orders
    )


# -- homogeneous polynomials -----------------------------------------------


class _PolyKernel:
    """Value and gradient over a batch of points; row ``r`` uses coefficient row ``C[r]``.

    All rows share one exponent list ``E``.
    """

    def __init__(self, E: np.ndarray, C: np.ndarray):
        self.E = E
        self.C = C
        shifted = []
        for j in range(E.shape[1]):
            Ej = E.copy()
            Ej[:, j] = np.maximum(Ej[:, j] - 1, 0)
            shifted.append((Ej, E[:, j]))
        self.shifted = shifted

    def value(self, X: np.ndarray, rows) -> np.ndarray:
        return (np.prod(X[:, None, :] ** self.E[None], axis=2) * self.C[rows]).sum(axis=1)

    def grad(self, X: np.ndarray, rows) -> np.ndarray:
        G = np.empty(X.shape, dtype=np.result_type(X, self.C))
        for j, (Ej, aj) in enumerate(self.shifted):
            G[:, j] = (np.prod(X[:, None, :] ** Ej[None], axis=2) * (self.C[rows] * aj)).sum(axis=1)
        return G


def _row_norms(X: np.ndarray, p: float) -> np.ndarray:
    a = np.abs(X)
    top = a.max(axis=1)
    if math.isinf(p):
        return top
    safe = np.where(top > 0, top, 1.0)
    return top * np.sum((a / safe[:, None]) ** p, axis=1) ** (1.0 / p)


def _project(Y: np.ndarray, p: float) -> np.ndarray:
    if math.isinf(p):
        mag = np.abs(Y)
        Y = np.where(mag > 1.0, Y / np.where(mag > 0, mag, 1.0), Y)
    return Y / _row_norms(Y, p)[:, None]


def poly_norm_lower_many(
    polys: Sequence[HomogeneousPolynomial],
    p: float,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    tol=TOL,
    keep_traces: bool = False,
) -> list[NormEstimate]:
    """``poly_norm_lower`` for several polynomials in one vectorized ascent.

    The polynomials must share ``n``, ``m`` and field. Restart ``i`` of every
    polynomial starts from the point seeded by ``seed + i``.
    """
    p = float(p)
    if not p >= 1:
        raise ValueError(f"exponent must be >= 1, got {p}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if not polys:
        return []
    P0 = polys[0]
    for P in polys:
        if (P.n, P.m, P.field) != (P0.n, P0.m, P0.field):
            raise ValueError("batched polynomials must share n, m and field")
    params = {
        "p": p,
        "restarts": restarts,
        "seed": seed,
        "initial_step": tol.pga_initial_step,
        "min_step": tol.pga_min_step,
        "max_iter": tol.pga_max_iter,
        "sufficient_increase": tol.pga_sufficient_increase,
    }
    starts = np.array([_random_point(np.random.default_rng(seed + i), P0.n, P0.field, p) for i in range(restarts)])

    keys = sorted({alpha for P in polys for alpha in P.coeffs}, reverse=True)
    E = np.array(keys, dtype=np.int64).reshape(len(keys), P0.n)
    coeff_rows = np.zeros((len(polys), len(keys)), dtype=P0.field.dtype)
    col = {k: i for i, k in enumerate(keys)}
    for r, P in enumerate(polys):
        if P.coeffs:
            # scale-free: optimize P / max|a_alpha|
            scale = float(np.max(np.abs(P.values)))
            for alpha, a in P.coeffs.items():
                coeff_rows[r, col[alpha]] = a / scale
    total = len(polys) * restarts
    owner = np.repeat(np.arange(len(polys)), restarts)
    kernel = _PolyKernel(E, coeff_rows)

    X = np.tile(starts, (len(polys), 1))
    f = np.abs(kernel.value(X, owner))
    step = np.full(total, tol.pga_initial_step)
    iters = np.zeros(total, dtype=int)
    active = f > 0
    traces = [[v] for v in f] if keep_traces else None
    for _ in range(tol.pga_max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Xa, rows = X[idx], owner[idx]
        vals = kernel.value(Xa, rows)
        direction = _phase(np.conj(vals))[:, None] * np.conj(kernel.grad(Xa, rows))
        if not math.isinf(p):
            # gradient of |P(x)| / ||x||_p^m at ||x||_p = 1; the plain gradient of
            # |P| need not ascend after rescaling when p != 2
            mag = np.abs(Xa)
            weight = np.where(mag > 0, mag ** (p - 2.0) if p != 2.0 else 1.0, 0.0)
            direction = direction - P0.m * np.abs(vals)[:, None] * weight * Xa
        if not np.iscomplexobj(X):
            direction = direction.real
        Y = _project(Xa + step[idx, None] * direction, p)
        fy = np.abs(kernel.value(Y, rows))
        # sufficient increase; a bare increase lets a step that overshoots the
        # maximizer by as much as it undershoots creep forever
        moved = np.sum(np.abs(Y - Xa) ** 2, axis=1)
        better = fy > f[idx] + tol.pga_sufficient_increase * moved / step[idx]
        X[idx[better]] = Y[better]
        f[idx[better]] = fy[better]
        step[idx[~better]] *= 0.5
        iters[idx] += 1
        if keep_traces:
            for i in idx[better]:
                traces[i].append(f[i])
        active[idx[step[idx] < tol.pga_min_step]] = False

    W = X / _row_norms(X, p)[:, None]
    out = []
    for r, P in enumerate(polys):
        lo = r * restarts
        values = [float(abs(eval_poly(P, w))) for w in W[lo : lo + restarts]]
        b = _best([(v,) for v in values])
        out.append(
            NormEstimate(
                value=values[b],
                witness=(W[lo + b],),
                restarts_used=restarts,
                iterations=int(iters[lo + b]),
                converged=bool(not active[lo + b]),
                method="projected-gradient",
                params=dict(params),
                best_restart=b,
                traces=tuple(tuple(t) for t in traces[lo : lo + restarts]) if keep_traces else (),
            )
        )
    return out


def poly_norm_lower(
    P: HomogeneousPolynomial,
    p: float,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    tol=TOL,
) -> NormEstimate:
    """Lower bound on ``sup_{||x||_p <= 1} |P(x)|`` by multi-start projected gradient ascent.

    Points move along ``phase(P(x)) * conj(grad P(x))`` and are rescaled back
    to the unit sphere (homogeneity makes ball and sphere maxima equal). The
    step halves whenever it fails to improve ``|P|``; a restart stops once
    the step drops below ``tol.pga_min_step`` or after ``tol.pga_max_iter``
    iterations. Complex polynomials are optimized over the ``2n`` real
    coordinates of ``z``.
    """
    return poly_norm_lower_many([P], p, restarts=restarts, seed=seed, tol=tol, keep_traces=True)[0]


def poly_norm_bracket(P: HomogeneousPolynomial, p: float, restarts: int = DEFAULT_RESTARTS, seed: int = 0):
    """``(lower, upper)`` with ``lower <= ||P|| <= ||L|| <= upper``, ``L`` the polarization of ``P``."""
    lower = poly_norm_lower(P, p, restarts=restarts, seed=seed).value
    upper = form_norm_upper(polarize(P), (p,) * P.m)
    return lower, upper

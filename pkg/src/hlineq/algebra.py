"""Multi-index algebra for homogeneous polynomials and multilinear forms.

Polynomials are stored sparsely as ``{alpha: a_alpha}`` maps, multilinear
forms densely as ``n x ... x n`` arrays. Polarization goes both ways through
the identity ``a_alpha = C(m, alpha) * L(e^alpha)`` where ``e^alpha`` repeats
each basis vector ``e_j`` exactly ``alpha_j`` times.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
from dataclasses import dataclass
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .config import TOL

__all__ = [
    "ScalarField",
    "MultiIndex",
    "HomogeneousPolynomial",
    "MultilinearForm",
    "enumerate_multi_indices",
    "multinomial",
    "eval_poly",
    "eval_form",
    "polarize",
    "restrict",
    "symmetrize",
    "coeff_norm",
    "lp_norm",
    "mixed_norm_bilinear",
    "poly_to_json",
    "poly_from_json",
    "form_to_json",
    "form_from_json",
]


class ScalarField(enum.Enum):
    REAL = "real"
    COMPLEX = "complex"

    @property
    def dtype(self):
        return np.float64 if self is ScalarField.REAL else np.complex128

    @classmethod
    def coerce(cls, value) -> "ScalarField":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


class MultiIndex(tuple):
    """Exponent vector ``alpha``; ``degree()`` is ``|alpha|``."""

    def __new__(cls, exponents: Iterable[int]):
        exps = tuple(int(a) for a in exponents)
        if any(a < 0 for a in exps):
            raise ValueError(f"negative exponent in {exps}")
        return super().__new__(cls, exps)

    def degree(self) -> int:
        return sum(self)

    def __repr__(self) -> str:
        return f"MultiIndex({tuple(self)})"


def _compositions(total: int, parts: int):
    # descending lexicographic order == graded lex within a fixed degree
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def enumerate_multi_indices(n: int, m: int) -> list[MultiIndex]:
    """All ``alpha`` in ``N^n`` with ``|alpha| = m``, in graded lex order."""
    if n < 1 or m < 1:
        raise ValueError(f"need n >= 1 and m >= 1, got n={n}, m={m}")
    return [MultiIndex(c) for c in _compositions(m, n)]


def multinomial(m: int, alpha: Sequence[int]) -> int:
    if sum(alpha) != m:
        raise ValueError(f"multi-index {tuple(alpha)} has degree {sum(alpha)}, expected {m}")
    out = math.factorial(m)
    for a in alpha:
        out //= math.factorial(a)
    return out


def _coerce_scalar(value, field: ScalarField):
    z = complex(value)
    if field is ScalarField.REAL:
        if z.imag != 0.0:
            raise ValueError(f"complex coefficient {value!r} for a real polynomial")
        return float(z.real)
    return z


@dataclass(frozen=True, eq=False)
class HomogeneousPolynomial:
    """``P(x) = sum_{|alpha| = m} a_alpha x^alpha`` on ``K^n``.

    Zero coefficients are dropped; keys are kept in graded lex order.
    """

    n: int
    m: int
    coeffs: Mapping[MultiIndex, complex]
    field: ScalarField = ScalarField.REAL

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension n must be >= 1")
        if self.m < 1:
            raise ValueError("degree m must be >= 1")
        field = ScalarField.coerce(self.field)
        clean = {}
        for key, value in dict(self.coeffs).items():
            alpha = MultiIndex(key)
            if len(alpha) != self.n:
                raise ValueError(f"multi-index {tuple(alpha)} has length {len(alpha)}, expected {self.n}")
            if alpha.degree() != self.m:
                raise ValueError(f"multi-index {tuple(alpha)} has degree {alpha.degree()}, expected {self.m}")
            a = _coerce_scalar(value, field)
            if a != 0:
                clean[alpha] = a
        ordered = {k: clean[k] for k in sorted(clean, reverse=True)}
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "coeffs", MappingProxyType(ordered))

    @classmethod
    def from_terms(cls, terms: Mapping[Sequence[int], complex], field=ScalarField.REAL):
        """Build from ``{alpha: a}``; ``n`` and ``m`` are read off the keys."""
        if not terms:
            raise ValueError("cannot infer n and m from an empty term map")
        first = next(iter(terms))
        return cls(len(first), sum(first), terms, field)

    @classmethod
    def zero(cls, n: int, m: int, field=ScalarField.REAL):
        return cls(n, m, {}, field)

    @cached_property
    def exponents(self) -> np.ndarray:
        if not self.coeffs:
            return np.zeros((0, self.n), dtype=np.int64)
        return np.array(list(self.coeffs), dtype=np.int64)

    @cached_property
    def values(self) -> np.ndarray:
        return np.array(list(self.coeffs.values()), dtype=self.field.dtype)

    def coefficient(self, alpha: Sequence[int]):
        return self.coeffs.get(MultiIndex(alpha), 0.0)

    def scaled(self, t) -> "HomogeneousPolynomial":
        return HomogeneousPolynomial(self.n, self.m, {k: t * v for k, v in self.coeffs.items()}, self.field)

    def __call__(self, x):
        return eval_poly(self, x)

    def __eq__(self, other):
        if not isinstance(other, HomogeneousPolynomial):
            return NotImplemented
        return (self.n, self.m, self.field, dict(self.coeffs)) == (other.n, other.m, other.field, dict(other.coeffs))

    def __repr__(self) -> str:
        terms = ", ".join(f"{tuple(k)}: {v!r}" for k, v in self.coeffs.items())
        return f"HomogeneousPolynomial(n={self.n}, m={self.m}, field={self.field.value}, {{{terms}}})"


class MultilinearForm:
    """Dense m-linear form ``T(e_{j1}, ..., e_{jm}) = entries[j1, ..., jm]``."""

    __slots__ = ("entries", "field")

    def __init__(self, entries, field=None):
        arr = np.array(entries)
        if arr.ndim < 1:
            raise ValueError("a multilinear form needs at least one slot")
        if len(set(arr.shape)) != 1 or arr.shape[0] < 1:
            raise ValueError(f"entries must have shape n x ... x n, got {arr.shape}")
        if field is None:
            field = ScalarField.COMPLEX if np.iscomplexobj(arr) else ScalarField.REAL
        field = ScalarField.coerce(field)
        if field is ScalarField.REAL:
            if np.iscomplexobj(arr):
                if np.any(arr.imag != 0):
                    raise ValueError("complex entries for a real form")
                arr = arr.real
        arr = np.ascontiguousarray(arr, dtype=field.dtype)
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)
        object.__setattr__(self, "field", field)

    def __setattr__(self, name, value):
        raise AttributeError("MultilinearForm is immutable")

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.ndim

    def __call__(self, *xs):
        return eval_form(self, *xs)

    def asymmetry(self) -> float:
        """Largest entry change under an index permutation."""
        a = self.entries
        return max(
            (float(np.max(np.abs(a - np.transpose(a, perm)))) for perm in itertools.permutations(range(self.m))),
            default=0.0,
        )

    def is_symmetric(self, tol: float = TOL.symmetry) -> bool:
        return self.asymmetry() <= tol

    def transposed(self, perm=None) -> "MultilinearForm":
        return MultilinearForm(np.transpose(self.entries, perm), self.field)

    def __eq__(self, other):
        if not isinstance(other, MultilinearForm):
            return NotImplemented
        return self.field is other.field and np.array_equal(self.entries, other.entries)

    def __repr__(self) -> str:
        return f"MultilinearForm(n={self.n}, m={self.m}, field={self.field.value})"


def _as_point(x, n: int) -> np.ndarray:
    arr = np.asarray(x)
    if arr.shape != (n,):
        raise ValueError(f"point of shape {arr.shape}, expected ({n},)")
    return arr


def eval_poly(P: HomogeneousPolynomial, x):
    x = _as_point(x, P.n)
    if not P.coeffs:
        return 0.0
    monomials = np.prod(x[None, :] ** P.exponents, axis=1)
    return (monomials * P.values).sum()


def contract(T: MultilinearForm, xs: Sequence, skip: int | None = None) -> np.ndarray:
    """Contract ``T`` with ``xs[k]`` in every slot ``k != skip``.

    Returns a scalar array when ``skip`` is None, else the vector left in slot ``skip``.
    """
    t = T.entries
    # last axis first, so the remaining axes keep their positions
    for k in range(T.m - 1, -1, -1):
        if k != skip:
            t = np.tensordot(t, xs[k], axes=([k], [0]))
    return t


def eval_form(T: MultilinearForm, *xs):
    if len(xs) != T.m:
        raise ValueError(f"form has {T.m} slots, got {len(xs)} points")
    pts = [_as_point(x, T.n) for x in xs]
    return contract(T, pts)[()]


def _index_counts(n: int, m: int) -> np.ndarray:
    """Row ``r`` holds the multi-index of the r-th row-major entry of an n^m tensor."""
    idx = np.indices((n,) * m).reshape(m, -1)
    counts = np.zeros((idx.shape[1], n), dtype=np.int64)
    rows = np.arange(idx.shape[1])
    for slot in range(m):
        np.add.at(counts, (rows, idx[slot]), 1)
    return counts


def polarize(P: HomogeneousPolynomial) -> MultilinearForm:
    """Symmetric m-linear form ``L`` with ``L(x, ..., x) = P(x)``."""
    n, m = P.n, P.m
    scaled = {alpha: a / multinomial(m, alpha) for alpha, a in P.coeffs.items()}
    counts = _index_counts(n, m)
    flat = np.zeros(counts.shape[0], dtype=P.field.dtype)
    for r, row in enumerate(map(tuple, counts)):
        a = scaled.get(row)
        if a is not None:
            flat[r] = a
    return MultilinearForm(flat.reshape((n,) * m), P.field)


def restrict(L: MultilinearForm) -> HomogeneousPolynomial:
    """Polynomial ``P(x) = L(x, ..., x)`` of a symmetric form."""
    asym = L.asymmetry()
    if asym > TOL.symmetry:
        raise ValueError(f"form is not symmetric (max asymmetry {asym:.3e})")
    coeffs = {}
    for alpha in enumerate_multi_indices(L.n, L.m):
        index = tuple(j for j, a in enumerate(alpha) for _ in range(a))
        coeffs[alpha] = multinomial(L.m, alpha) * L.entries[index]
    return HomogeneousPolynomial(L.n, L.m, coeffs, L.field)


def symmetrize(T: MultilinearForm) -> MultilinearForm:
    perms = list(itertools.permutations(range(T.m)))
    acc = np.zeros_like(T.entries)
    for perm in perms:
        acc = acc + np.transpose(T.entries, perm)
    return MultilinearForm(acc / len(perms), T.field)


def lp_norm(values, r: float) -> float:
    """``(sum |v|^r)^(1/r)``, or ``max |v|`` for ``r = inf``; defined for every r > 0."""
    if not r > 0:
        raise ValueError(f"exponent must be positive, got {r}")
    a = np.abs(np.asarray(values)).ravel()
    if a.size == 0:
        return 0.0
    top = float(a.max())
    if top == 0.0 or math.isinf(r):
        return top
    return top * float(np.sum((a / top) ** r)) ** (1.0 / r)


def coeff_norm(obj, r: float) -> float:
    """ell_r norm of the coefficients: ``a_alpha`` for polynomials, every entry for forms."""
    if isinstance(obj, HomogeneousPolynomial):
        return lp_norm(obj.values, r)
    if isinstance(obj, MultilinearForm):
        return lp_norm(obj.entries, r)
    raise TypeError(f"expected a polynomial or a multilinear form, got {type(obj).__name__}")


def mixed_norm_bilinear(A: MultilinearForm, r_inner: float, r_outer: float) -> float:
    """``(sum_k (sum_j |A(e_j, e_k)|^r_inner)^(r_outer/r_inner))^(1/r_outer)``.

    The inner norm always runs over the first index ``j``.
    """
    if A.m != 2:
        raise ValueError(f"mixed norms are defined for bilinear forms only, got m={A.m}")
    if not (r_inner > 0 and r_outer > 0):
        raise ValueError("mixed-norm exponents must be positive")
    inner = [lp_norm(A.entries[:, k], r_inner) for k in range(A.n)]
    return lp_norm(inner, r_outer)


# -- serialization ---------------------------------------------------------


def poly_to_json(P: HomogeneousPolynomial) -> str:
    coeffs = []
    for alpha, a in P.coeffs.items():
        z = complex(a)
        coeffs.append({"alpha": list(alpha), "re": z.real, "im": z.imag})
    return json.dumps({"field": P.field.value, "n": P.n, "m": P.m, "coeffs": coeffs})


def poly_from_dict(data: Mapping) -> HomogeneousPolynomial:
    field = ScalarField.coerce(data["field"])
    terms = {}
    for c in data["coeffs"]:
        re, im = float(c["re"]), float(c.get("im", 0.0))
        terms[tuple(c["alpha"])] = complex(re, im) if field is ScalarField.COMPLEX else re
    return HomogeneousPolynomial(int(data["n"]), int(data["m"]), terms, field)


def poly_from_json(text: str) -> HomogeneousPolynomial:
    return poly_from_dict(json.loads(text))


def form_to_json(T: MultilinearForm) -> str:
    flat = T.entries.ravel(order="C")
    data = {"field": T.field.value, "n": T.n, "m": T.m, "shape": list(T.entries.shape), "re": flat.real.tolist()}
    if T.field is ScalarField.COMPLEX:
        data["im"] = flat.imag.tolist()
    return json.dumps(data)


def form_from_json(text: str) -> MultilinearForm:
    data = json.loads(text)
    field = ScalarField.coerce(data["field"])
    shape = tuple(data["shape"])
    if shape != (data["n"],) * data["m"]:
        raise ValueError(f"shape {shape} inconsistent with n={data['n']}, m={data['m']}")
    flat = np.array(data["re"], dtype=np.float64)
    if field is ScalarField.COMPLEX:
        flat = flat + 1j * np.array(data["im"], dtype=np.float64)
    return MultilinearForm(flat.reshape(shape, order="C"), field)

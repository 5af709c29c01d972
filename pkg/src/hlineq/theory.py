"""Closed-form exponents, regimes and constant bounds for Hardy-Littlewood inequalities.

``math.inf`` is a first-class exponent value throughout (``1/inf == 0``).
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .algebra import ScalarField

__all__ = [
    "Regime",
    "ExponentPair",
    "ConstantBound",
    "UnsupportedRegime",
    "classify",
    "multilinear_exponent",
    "polynomial_exponent",
    "bilinear_mixed_exponents",
    "symmetric_exponent",
    "interpolate_exponent_pairs",
    "ksz_alpha",
    "ksz_exponent",
    "constant_upper_bound",
    "exponent_table",
    "write_exponent_table",
]

INF = math.inf


class UnsupportedRegime(ValueError):
    pass


class Regime(enum.Enum):
    SUP_NORM_AT_P_EQUALS_M = "p=m"
    SUBQUADRATIC = "m<p<2m"
    HIGH_P = "p>=2m"
    UNSUPPORTED = "p<m"


@dataclass(frozen=True)
class ExponentPair:
    """Mixed exponents: ``inner`` over the first index, ``outer`` over the second."""

    inner: float
    outer: float

    def __post_init__(self):
        if not (self.inner > 0 and self.outer > 0):
            raise ValueError(f"exponents must be positive, got ({self.inner}, {self.outer})")

    def __iter__(self):
        return iter((self.inner, self.outer))


@dataclass(frozen=True)
class ConstantBound:
    value: float
    field: ScalarField
    provenance: str  # multilinear | lemma-factor | harris | p-equals-m


def _inv(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


def _from_inv(s: float) -> float:
    return INF if s == 0 else 1.0 / s


def classify(m: int, p: float) -> Regime:
    if m < 2:
        raise ValueError(f"regimes are defined for m >= 2, got {m}")
    p = float(p)
    if p < m:
        return Regime.UNSUPPORTED
    if p == m:
        return Regime.SUP_NORM_AT_P_EQUALS_M
    if p < 2 * m:
        return Regime.SUBQUADRATIC
    return Regime.HIGH_P


def multilinear_exponent(m: int, p: float) -> float:
    """Optimal coefficient exponent for m-linear forms on ``ell_p^n``.

    ``2mp/(mp+p-2m)`` for ``p >= 2m``, ``p/(p-m)`` for ``m < p < 2m`` and
    ``inf`` (sup norm) at ``p = m``.
    """
    regime = classify(m, p)
    if regime is Regime.UNSUPPORTED:
        raise UnsupportedRegime(f"no Hardy-Littlewood exponent for p={p} < m={m}")
    if regime is Regime.SUP_NORM_AT_P_EQUALS_M:
        return INF
    if regime is Regime.SUBQUADRATIC:
        return p / (p - m)
    # 2mp/(mp+p-2m) == 2m / (m + 1 - 2m/p), which also covers p = inf
    return 2 * m / (m + 1 - 2 * m * _inv(p))


def polynomial_exponent(m: int, p: float) -> float:
    # same optimal exponents as the m-linear case; for m = 2 this is
    # 4p/(3p-4) on [4, inf] and p/(p-2) on (2, 4)
    return multilinear_exponent(m, p)


def _check_pq(p: float, q: float):
    if not (p >= 2 and q >= 2):
        raise ValueError(f"need p, q >= 2, got ({p}, {q})")


def bilinear_mixed_exponents(p: float, q: float) -> ExponentPair:
    """``(2, lambda)`` with ``lambda = pq/(pq-p-q)``, i.e. ``1/lambda = 1 - 1/p - 1/q``."""
    _check_pq(p, q)
    s = 1.0 - _inv(p) - _inv(q)
    if s <= 0:
        raise ValueError(f"need 1/p + 1/q < 1, got ({p}, {q})")
    return ExponentPair(2.0, 1.0 / s)


def symmetric_exponent(p: float, q: float) -> float:
    """``4pq/(3pq-2p-2q)`` for ``1/p + 1/q <= 1/2``."""
    s = _inv(p) + _inv(q)
    if s > 0.5:
        raise ValueError(f"need 1/p + 1/q <= 1/2, got ({p}, {q})")
    return 4.0 / (3.0 - 2.0 * s)


def interpolate_exponent_pairs(a: ExponentPair, b: ExponentPair, theta: float) -> ExponentPair:
    """Componentwise ``1/out = theta/a + (1-theta)/b``."""
    if not 0 <= theta <= 1:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    inner = _from_inv(theta * _inv(a.inner) + (1 - theta) * _inv(b.inner))
    outer = _from_inv(theta * _inv(a.outer) + (1 - theta) * _inv(b.outer))
    return ExponentPair(inner, outer)


def ksz_alpha(p: float) -> float:
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return 0.5 - _inv(p) if p >= 2 else 0.0


def ksz_exponent(m: int, ps: Sequence[float]) -> float:
    """Growth exponent ``1/2 + sum alpha(p_i)`` of the random-sign form norms."""
    if len(ps) != m:
        raise ValueError(f"expected {m} exponents, got {len(ps)}")
    return 0.5 + sum(ksz_alpha(p) for p in ps)


def _is_power_of_two(m: int) -> bool:
    return m >= 1 and m & (m - 1) == 0


def constant_upper_bound(m: int, p: float, field=ScalarField.REAL, method: str = "general") -> ConstantBound:
    """Upper bound on the polynomial Hardy-Littlewood constant.

    ``method``:

    * ``"multilinear"`` -- the multilinear base ``sqrt(2)^(m-1)`` (real) or
      ``(2/sqrt(pi))^(m-1)`` (complex).
    * ``"general"`` -- ``base * (m!)^(1-1/r) * m^m/m!`` with ``r`` the optimal
      exponent; equals ``base * m^m / (m!)^((p-m)/p)`` for ``m <= p < 2m``.
    * ``"harris"`` -- as general with the polarization factor
      ``(m^m/m!)^(|p-2|/p)``; complex scalars and ``m`` a power of 2 only.
    """
    field = ScalarField.coerce(field)
    p = float(p)
    r = polynomial_exponent(m, p)
    base = math.sqrt(2) ** (m - 1) if field is ScalarField.REAL else (2 / math.sqrt(math.pi)) ** (m - 1)
    if method == "multilinear":
        return ConstantBound(base, field, "multilinear")
    fact = math.factorial(m)
    bookkeeping = fact ** (1.0 - _inv(r))
    if method == "general":
        factor = m**m / fact
        provenance = "p-equals-m" if p == m else "lemma-factor"
    elif method == "harris":
        if field is not ScalarField.COMPLEX or not _is_power_of_two(m):
            raise ValueError("the Harris polarization bound needs complex scalars and m a power of 2")
        exponent = 1.0 if math.isinf(p) else abs(p - 2) / p
        factor = (m**m / fact) ** exponent
        provenance = "harris"
    else:
        raise ValueError(f"unknown method {method!r}")
    return ConstantBound(base * bookkeeping * factor, field, provenance)


TABLE_COLUMNS = ("m", "p", "regime", "multilinear_exp", "polynomial_exp", "constant_real", "constant_complex")


def exponent_table(ms: Iterable[int], ps: Iterable[float]) -> list[dict]:
    rows = []
    for m in ms:
        for p in ps:
            regime = classify(m, p)
            row = {"m": m, "p": float(p), "regime": regime.value}
            if regime is Regime.UNSUPPORTED:
                row.update(multilinear_exp=None, polynomial_exp=None, constant_real=None, constant_complex=None)
            else:
                row.update(
                    multilinear_exp=multilinear_exponent(m, p),
                    polynomial_exp=polynomial_exponent(m, p),
                    constant_real=constant_upper_bound(m, p, ScalarField.REAL).value,
                    constant_complex=constant_upper_bound(m, p, ScalarField.COMPLEX).value,
                )
            rows.append(row)
    return rows


def write_exponent_table(path, ms: Iterable[int], ps: Iterable[float]) -> list[dict]:
    rows = exponent_table(ms, ps)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=TABLE_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if v is None else repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return rows

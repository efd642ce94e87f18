"""Determinant, adjugate and inverse of matrices of uncertain values.

Elements are treated as independent.  The determinant is multilinear in
its elements, so its exact variance is a sum over every partial matching
of rows to columns: the squared complementary minor times the product of
the matched element variances.  All minors and all variance permanents
are tabulated once by a dynamic program over (row subset, column subset)
pairs, which costs O(C(2n, n) * n).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .core import UncertainValue

__all__ = [
    "UncertainMatrix",
    "DimensionTooLarge",
    "SingularMatrix",
    "IllConditioned",
    "determinant",
    "determinant_first_order",
    "adjugate",
    "inverse_first_order",
    "matmul",
    "MAX_DIMENSION",
]

MAX_DIMENSION = 8
ILL_CONDITIONED_PRECISION = 0.2


class DimensionTooLarge(ValueError):
    pass


class SingularMatrix(ArithmeticError):
    pass


class IllConditioned(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class UncertainMatrix:
    values: np.ndarray
    variances: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        var = np.zeros_like(v) if self.variances is None else np.array(self.variances, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"matrix must be square, got shape {v.shape}")
        if var.shape != v.shape:
            raise ValueError("variance shape does not match values")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(var))) or np.any(var < 0):
            raise ValueError("elements must be finite with non-negative variance")
        v.setflags(write=False)
        var.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "variances", var)

    @classmethod
    def precise(cls, values) -> UncertainMatrix:
        v = np.asarray(values, dtype=float)
        return cls(v, np.zeros_like(v))

    @classmethod
    def from_elements(cls, rows: Sequence[Sequence[UncertainValue]]) -> UncertainMatrix:
        return cls(
            np.array([[e.value for e in r] for r in rows]),
            np.array([[e.variance for e in r] for r in rows]),
        )

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, ij: tuple[int, int]) -> UncertainValue:
        return UncertainValue(float(self.values[ij]), float(self.variances[ij]))

    def transpose(self) -> UncertainMatrix:
        return UncertainMatrix(self.values.T, self.variances.T)

    @property
    def deviations(self) -> np.ndarray:
        return np.sqrt(self.variances)

    def to_text(self) -> str:
        return "\n".join(
            " ".join(str(self[i, j]) for j in range(self.n)) for i in range(self.n)
        ) + "\n"

    @classmethod
    def from_text(cls, text: str) -> UncertainMatrix:
        rows = [line.split() for line in text.strip().splitlines() if line.strip()]
        return cls.from_elements([[UncertainValue.parse(tok) for tok in r] for r in rows])

    @cached_property
    def _tables(self) -> _MinorTables:
        if self.n > MAX_DIMENSION:
            raise DimensionTooLarge(f"dimension {self.n} exceeds {MAX_DIMENSION}")
        return _MinorTables(_as_exact(self.values), self.variances.tolist())


def _as_exact(values: np.ndarray) -> list[list[int | float]]:
    """Integer-valued matrices are handled in exact integer arithmetic."""
    if np.all(values == np.round(values)) and np.all(np.abs(values) < 2**53):
        return [[int(x) for x in row] for row in values]
    return values.tolist()


def _bits(mask: int) -> list[int]:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


class _MinorTables:
    """Every square minor and every variance permanent, keyed by (rows, cols) bitmasks."""

    def __init__(self, a: list[list], v: list[list[float]]):
        n = len(a)
        self.n = n
        self.full = (1 << n) - 1
        det: dict[tuple[int, int], int | float] = {(0, 0): 1}
        perm: dict[tuple[int, int], float] = {(0, 0): 1.0}
        subsets = [[s for s in range(1 << n) if s.bit_count() == k] for k in range(n + 1)]
        for k in range(1, n + 1):
            for rows in subsets[k]:
                r0 = (rows & -rows).bit_length() - 1
                rest = rows & ~(1 << r0)
                ar, vr = a[r0], v[r0]
                for cols in subsets[k]:
                    d = 0
                    p = 0.0
                    for t, c in enumerate(_bits(cols)):
                        sub = (rest, cols & ~(1 << c))
                        term = ar[c] * det[sub]
                        d = d - term if t & 1 else d + term
                        if vr[c]:
                            p += vr[c] * perm[sub]
                    det[(rows, cols)] = d
                    perm[(rows, cols)] = p
        self.det = det
        self.perm = perm

    def variance(self, rows: int, cols: int) -> float:
        """Exact variance of the minor on ``rows`` x ``cols``."""
        total = 0.0
        r_list, c_list = _bits(rows), _bits(cols)
        for k in range(len(r_list)):
            for kr in itertools.combinations(r_list, k):
                km = sum(1 << i for i in kr)
                rp = rows & ~km
                for kc in itertools.combinations(c_list, k):
                    cm = sum(1 << j for j in kc)
                    p = self.perm[(rp, cols & ~cm)]
                    if p:
                        d = float(self.det[(km, cm)])
                        total += d * d * p
        return total


def determinant(m: UncertainMatrix) -> UncertainValue:
    t = m._tables
    value = float(t.det[(t.full, t.full)])
    return UncertainValue(value, t.variance(t.full, t.full))


def _minor_value(t: _MinorTables, i: int, j: int) -> float:
    return float(t.det[(t.full & ~(1 << i), t.full & ~(1 << j))])


def determinant_first_order(m: UncertainMatrix) -> UncertainValue:
    """Determinant with the cofactor-only (linear) variance."""
    t = m._tables
    var = 0.0
    for i in range(m.n):
        for j in range(m.n):
            if m.variances[i, j]:
                c = _minor_value(t, i, j)
                var += c * c * m.variances[i, j]
    return UncertainValue(float(t.det[(t.full, t.full)]), var)


def adjugate(m: UncertainMatrix) -> UncertainMatrix:
    """Element ``(j, i)`` is ``(-1)**(i+j)`` times the minor without row i, column j."""
    t = m._tables
    n = m.n
    vals = np.zeros((n, n))
    vars_ = np.zeros((n, n))
    if n == 1:
        return UncertainMatrix(np.ones((1, 1)), np.zeros((1, 1)))
    for i in range(n):
        for j in range(n):
            rows, cols = t.full & ~(1 << i), t.full & ~(1 << j)
            sign = -1.0 if (i + j) & 1 else 1.0
            vals[j, i] = sign * float(t.det[(rows, cols)])
            vars_[j, i] = t.variance(rows, cols)
    return UncertainMatrix(vals, vars_)


def inverse_first_order(
    m: UncertainMatrix, max_precision: float = ILL_CONDITIONED_PRECISION
) -> UncertainMatrix:
    """Inverse values from the adjugate; variances from ``dV = -V dM V`` to first order.

    Rejected when the determinant precision reaches ``max_precision``, the
    point where the ``1/x`` expansion of the determinant stops converging.
    """
    det = determinant(m)
    if det.value == 0:
        raise SingularMatrix("determinant is zero")
    if det.precision >= max_precision:
        raise IllConditioned(f"determinant precision {det.precision:.3g} too coarse")
    adj = adjugate(m)
    inv = adj.values / det.value
    sq = inv * inv
    return UncertainMatrix(inv, sq @ m.variances @ sq)


def matmul(a: UncertainMatrix, b: UncertainMatrix) -> UncertainMatrix:
    """Product assuming all elements independent.

    Precise integer-valued operands are multiplied in exact integer
    arithmetic so identities such as ``M @ adj(M) == det(M) I`` hold exactly.
    """
    n = a.n
    if b.n != n:
        raise ValueError("dimension mismatch")
    ea, eb = _as_exact(a.values), _as_exact(b.values)
    exact_int = (
        not a.variances.any()
        and not b.variances.any()
        and all(isinstance(x, int) for r in ea + eb for x in r)
    )
    vals = np.zeros((n, n))
    vars_ = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if exact_int:
                vals[i, j] = float(sum(ea[i][k] * eb[k][j] for k in range(n)))
                continue
            acc = UncertainValue(0.0, 0.0)
            for k in range(n):
                acc = acc + a[i, k] * b[k, j]
            vals[i, j], vars_[i, j] = acc.value, acc.variance
    return UncertainMatrix(vals, vars_)



def _is_exact_int(m: UncertainMatrix) -> bool:
    return not m.variances.any() and all(isinstance(x, int) for r in _as_exact(m.values) for x in r)


def _exact_adjugate(t: _MinorTables) -> list[list[int]]:
    n = t.n
    adj = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            d = t.det[(t.full & ~(1 << i), t.full & ~(1 << j))]
            adj[j][i] = -d if (i + j) & 1 else d
    return adj


def forward_residual(m: UncertainMatrix) -> UncertainMatrix:
    """``M @ adj(M) - det(M) I``; exactly zero for precise integer input."""
    n = m.n
    if n > 1 and _is_exact_int(m):
        t = m._tables
        a, adj, det = _as_exact(m.values), _exact_adjugate(t), t.det[(t.full, t.full)]
        res = [
            [sum(a[i][k] * adj[k][j] for k in range(n)) - (det if i == j else 0) for j in range(n)]
            for i in range(n)
        ]
        return UncertainMatrix.precise(np.array(res, dtype=float))
    prod = matmul(m, adjugate(m))
    det = determinant(m)
    vals = prod.values - det.value * np.eye(n)
    return UncertainMatrix(vals, prod.variances + det.variance * np.eye(n))


def roundtrip_residual(m: UncertainMatrix) -> UncertainMatrix:
    """``det(M) adj(adj(M)) - det(adj(M)) M``; exactly zero for precise integer input."""
    n = m.n
    if n > 1 and _is_exact_int(m):
        t = m._tables
        a, adj, det = _as_exact(m.values), _exact_adjugate(t), t.det[(t.full, t.full)]
        ta = _MinorTables(adj, [[0.0] * n for _ in range(n)])
        adj2, dadj = _exact_adjugate(ta), ta.det[(ta.full, ta.full)]
        res = [[det * adj2[i][j] - dadj * a[i][j] for j in range(n)] for i in range(n)]
        return UncertainMatrix.precise(np.array(res, dtype=float))
    adj = adjugate(m)
    adj2 = adjugate(adj)
    det = determinant(m)
    dadj = determinant(adj)
    vals = det.value * adj2.values - dadj.value * m.values
    var = det.value**2 * adj2.variances + dadj.value**2 * m.variances
    return UncertainMatrix(vals, var)

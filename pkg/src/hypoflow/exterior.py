"""Pointwise exterior algebra on an oriented 5- or 6-dimensional space.

Forms live in Λ^k T*, multivectors in Λ^k T. Both store a dense coefficient
vector over lexicographically ordered increasing multi-indices (1-based in
the public API). A ``density`` tag counts factors of the top form e^{1..n}
so that values of the volume-weighted operators ``big_a`` / ``big_a_star``
stay honest: ``big_a`` adds one factor of Λ^n T*, ``big_a_star`` removes one.

Coefficients are float64 by default; ``exact()`` switches to an object
array of ``fractions.Fraction`` behind the same interface.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import comb, factorial
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "Form", "MultiVector", "VolumeElement", "basis", "perm_sign",
    "wedge", "contract", "pairing", "big_a", "big_a_star", "form", "vector",
]


def perm_sign(seq: Iterable[int]) -> int:
    """Sign of the permutation sorting ``seq``; 0 if an entry repeats."""
    s = list(seq)
    if len(set(s)) != len(s):
        return 0
    inv = sum(1 for i in range(len(s)) for j in range(i + 1, len(s)) if s[i] > s[j])
    return -1 if inv % 2 else 1


@lru_cache(maxsize=None)
def basis(dim: int, k: int) -> tuple[tuple[int, ...], ...]:
    """Increasing 0-based multi-indices of length k, in lexicographic order."""
    return tuple(combinations(range(dim), k))


@lru_cache(maxsize=None)
def _position(dim: int, k: int) -> dict[tuple[int, ...], int]:
    return {idx: n for n, idx in enumerate(basis(dim, k))}


@lru_cache(maxsize=None)
def _wedge_table(dim: int, p: int, q: int):
    rows = []
    pos = _position(dim, p + q)
    for i, a in enumerate(basis(dim, p)):
        for j, b in enumerate(basis(dim, q)):
            if set(a) & set(b):
                continue
            merged = a + b
            rows.append((i, j, pos[tuple(sorted(merged))], perm_sign(merged)))
    arr = np.array(rows, dtype=np.int64).reshape(-1, 4)
    return arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]


@lru_cache(maxsize=None)
def _contract_table(dim: int, k: int):
    # e_m ⌟ e^{i_1..i_k} = (-1)^s e^{..î_s..} when m = i_s
    rows = []
    pos = _position(dim, k - 1)
    for src, idx in enumerate(basis(dim, k)):
        for s, m in enumerate(idx):
            rest = idx[:s] + idx[s + 1:]
            rows.append((m, src, pos[rest], -1 if s % 2 else 1))
    arr = np.array(rows, dtype=np.int64).reshape(-1, 4)
    return arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]


@lru_cache(maxsize=None)
def _complement_table(dim: int, k: int):
    pos = _position(dim, dim - k)
    dst, sign = [], []
    for idx in basis(dim, k):
        rest = tuple(i for i in range(dim) if i not in idx)
        dst.append(pos[rest])
        sign.append(perm_sign(idx + rest))
    return np.array(dst, dtype=np.int64), np.array(sign, dtype=np.int64)


def _is_exact(arr: np.ndarray) -> bool:
    return arr.dtype == object


def _scatter(dst: np.ndarray, vals: np.ndarray, n: int, exact: bool) -> np.ndarray:
    if exact:
        out = np.array([Fraction(0)] * n, dtype=object)
        for d, v in zip(dst.tolist(), vals.tolist()):
            out[d] += v
        return out
    if len(dst) == 0:
        return np.zeros(n)
    return np.bincount(dst, weights=vals, minlength=n).astype(float)


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(x).limit_denominator(10**12) if isinstance(x, float) else Fraction(x)


@dataclass(frozen=True, eq=False)
class _Graded:
    dim: int
    grade: int
    coeffs: np.ndarray
    density: int = 0

    def __post_init__(self):
        if self.dim not in (5, 6):
            raise ValueError(f"dimension must be 5 or 6, got {self.dim}")
        if not 0 <= self.grade <= self.dim:
            raise ValueError(f"grade {self.grade} outside 0..{self.dim}")
        c = np.asarray(self.coeffs)
        if c.dtype != object:
            c = c.astype(float)
        if c.shape != (comb(self.dim, self.grade),):
            raise ValueError(
                f"expected {comb(self.dim, self.grade)} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # construction -------------------------------------------------------
    @classmethod
    def zero(cls, dim: int, grade: int, density: int = 0):
        return cls(dim, grade, np.zeros(comb(dim, grade)), density)

    @classmethod
    def from_terms(cls, dim: int, terms: Mapping[tuple[int, ...], object], density: int = 0,
                   exact: bool = False):
        """Build from {1-based index tuple: coefficient}; unsorted tuples pick up their sign."""
        grades = {len(k) for k in terms}
        if len(grades) > 1:
            raise ValueError("mixed grades in terms")
        grade = grades.pop() if grades else 0
        pos = _position(dim, grade)
        out = [Fraction(0) if exact else 0.0] * comb(dim, grade)
        for idx, c in terms.items():
            z = tuple(i - 1 for i in idx)
            if any(i < 0 or i >= dim for i in z):
                raise ValueError(f"index {idx} out of range for dim {dim}")
            s = perm_sign(z)
            if s == 0:
                continue
            out[pos[tuple(sorted(z))]] += s * (_as_fraction(c) if exact else float(c))
        arr = np.array(out, dtype=object) if exact else np.array(out, dtype=float)
        return cls(dim, grade, arr, density)

    def _like(self, coeffs, grade=None, density=None):
        return type(self)(self.dim, self.grade if grade is None else grade, coeffs,
                          self.density if density is None else density)

    # conversions --------------------------------------------------------
    @property
    def is_exact(self) -> bool:
        return _is_exact(self.coeffs)

    def exact(self):
        return self._like(np.array([_as_fraction(x) for x in self.coeffs], dtype=object))

    def numeric(self):
        return self._like(np.array([float(x) for x in self.coeffs], dtype=float))

    def terms(self) -> dict[tuple[int, ...], object]:
        return {tuple(i + 1 for i in idx): c
                for idx, c in zip(basis(self.dim, self.grade), self.coeffs) if c != 0}

    # arithmetic ---------------------------------------------------------
    def _check_same(self, other):
        if type(self) is not type(other):
            raise TypeError(f"cannot combine {type(self).__name__} and {type(other).__name__}")
        if (self.dim, self.grade) != (other.dim, other.grade):
            raise ValueError("dimension/grade mismatch")
        if self.density != other.density:
            raise ValueError("volume density mismatch")

    def __add__(self, other):
        self._check_same(other)
        return self._like(self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check_same(other)
        return self._like(self.coeffs - other.coeffs)

    def __neg__(self):
        return self._like(-self.coeffs)

    def __mul__(self, c):
        if isinstance(c, _Graded):
            return NotImplemented
        return self._like(self.coeffs * c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self._like(self.coeffs / c)

    def with_density(self, density: int):
        return self._like(self.coeffs, density=density)

    def norm(self) -> float:
        return float(np.max(np.abs(self.coeffs.astype(float)))) if len(self.coeffs) else 0.0

    def is_zero(self, tol: float = 0.0) -> bool:
        if self.is_exact:
            return all(c == 0 for c in self.coeffs)
        return self.norm() <= tol

    def allclose(self, other, tol: float = 1e-12) -> bool:
        self._check_same(other)
        return (self - other).norm() <= tol

    def __repr__(self):
        if not self.terms():
            return f"{type(self).__name__}(0, grade={self.grade})"
        sym = "e^" if isinstance(self, Form) else "e_"
        parts = [f"{c}*{sym}{''.join(map(str, idx))}" for idx, c in self.terms().items()]
        tag = f", density={self.density}" if self.density else ""
        return f"{type(self).__name__}({' + '.join(parts)}{tag})"


class Form(_Graded):
    """Element of Λ^grade T*."""

    def __and__(self, other):
        return wedge(self, other)


class MultiVector(_Graded):
    """Element of Λ^grade T."""

    def __and__(self, other):
        return wedge(self, other)


@dataclass(frozen=True)
class VolumeElement:
    """Multiple of the standard top form; records orientation explicitly."""
    scale: float
    orientation: int = field(init=False)

    def __post_init__(self):
        if self.scale == 0:
            raise ValueError("volume element must be nonzero")
        object.__setattr__(self, "orientation", 1 if self.scale > 0 else -1)


def form(terms, dim: int = 5, exact: bool = False) -> Form:
    """Shorthand: ``form({"12": 1, "34": 1})`` or ``form("12")`` for a basis form."""
    if isinstance(terms, str):
        terms = {terms: 1}
    terms = {tuple(int(ch) for ch in key) if isinstance(key, str) else tuple(key): c
             for key, c in terms.items()}
    if not terms:
        raise ValueError("use Form.zero for the zero form")
    return Form.from_terms(dim, terms, exact=exact)


def vector(terms, dim: int = 5, exact: bool = False) -> MultiVector:
    if isinstance(terms, str):
        terms = {terms: 1}
    terms = {tuple(int(ch) for ch in key) if isinstance(key, str) else tuple(key): c
             for key, c in terms.items()}
    return MultiVector.from_terms(dim, terms, exact=exact)


def _dtype_pair(a: _Graded, b: _Graded):
    if a.is_exact != b.is_exact:
        return (a.exact(), b.exact()) if not a.is_exact else (a, b.exact())
    return a, b


def wedge(a: _Graded, b: _Graded) -> _Graded:
    if type(a) is not type(b):
        raise TypeError("wedge needs two Forms or two MultiVectors")
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    p, q = a.grade, b.grade
    if p + q > a.dim:
        raise ValueError(f"grade overflow: {p}+{q} > {a.dim}")
    a, b = _dtype_pair(a, b)
    i, j, k, s = _wedge_table(a.dim, p, q)
    vals = a.coeffs[i] * b.coeffs[j] * s
    out = _scatter(k, vals, comb(a.dim, p + q), a.is_exact)
    return type(a)(a.dim, p + q, out, a.density + b.density)


def contract(x: _Graded, a: _Graded) -> _Graded:
    """Interior product of a degree-one element into the first slot.

    A vector contracts into a form, and a 1-form into a multivector.
    """
    if x.grade != 1:
        raise ValueError("contraction needs a grade-1 element")
    if type(x) is type(a):
        raise TypeError("contract pairs a vector with a form (or a 1-form with a multivector)")
    if a.grade < 1:
        raise ValueError("cannot contract into a grade-0 element")
    if x.dim != a.dim:
        raise ValueError("dimension mismatch")
    x, a = _dtype_pair(x, a)
    m, src, dst, s = _contract_table(a.dim, a.grade)
    vals = x.coeffs[m] * a.coeffs[src] * s
    out = _scatter(dst, vals, comb(a.dim, a.grade - 1), a.is_exact)
    return type(a)(a.dim, a.grade - 1, out, a.density + x.density)


def pairing(a: _Graded, m: _Graded):
    """⟨a, m⟩ = (1/k!) det(η_i(v_j)) on decomposables, extended bilinearly."""
    if type(a) is type(m):
        raise TypeError("pairing needs one Form and one MultiVector")
    if (a.dim, a.grade) != (m.dim, m.grade):
        raise ValueError("pairing needs equal dimension and grade")
    a, m = _dtype_pair(a, m)
    total = np.dot(a.coeffs, m.coeffs) if not a.is_exact else sum(
        (x * y for x, y in zip(a.coeffs, m.coeffs)), Fraction(0))
    return total / factorial(a.grade) if not a.is_exact else total / Fraction(factorial(a.grade))


def _complement(a: _Graded, target: type, ddensity: int) -> _Graded:
    dst, sign = _complement_table(a.dim, a.grade)
    n = comb(a.dim, a.dim - a.grade)
    if a.is_exact:
        out = np.array([Fraction(0)] * n, dtype=object)
    else:
        out = np.zeros(n)
    out[dst] = a.coeffs * sign
    return target(a.dim, a.dim - a.grade, out, a.density + ddensity)


def big_a(a: Form) -> MultiVector:
    """A: Λ^k T* → Λ^{5-k} T ⊗ Λ^5 T*, fixed by k!⟨γ,η⟩ = η ∧ Aγ.

    With the identification (η, v) ↦ 5!⟨η, v⟩ of Λ^5T* ⊗ Λ^5T with ℝ this
    reads A(e^I) = sign(I, I^c) e_{I^c} ⊗ e^{12345}.
    """
    if not isinstance(a, Form):
        raise TypeError("big_a takes a Form")
    if a.dim != 5:
        raise ValueError("big_a is defined in dimension 5")
    return _complement(a, MultiVector, +1)


def big_a_star(m: MultiVector) -> Form:
    """A*: Λ^k T → Λ^{5-k} T* ⊗ Λ^5 T, fixed by k!⟨γ,η⟩ = γ ∧ A*η."""
    if not isinstance(m, MultiVector):
        raise TypeError("big_a_star takes a MultiVector")
    if m.dim != 5:
        raise ValueError("big_a_star is defined in dimension 5")
    return _complement(m, Form, -1)


def top_scalar(a: _Graded):
    """Coefficient of the standard top element e^{1..n} (or e_{1..n})."""
    if a.grade != a.dim:
        raise ValueError("not a top-degree element")
    return a.coeffs[0]


def scalar(x, dim: int = 5, density: int = 0, cls=Form) -> _Graded:
    arr = np.array([x], dtype=object) if isinstance(x, Fraction) else np.array([float(x)])
    return cls(dim, 0, arr, density)

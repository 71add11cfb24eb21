"""Framed 5-dimensional Lie algebras as points d of the variety {d̂∘d = 0}.

A ``LieDifferential`` stores d e^1, …, d e^5. Internally this is a 10×5
matrix whose i-th column holds the coefficients of d e^i in the lexicographic
e^{jk} basis. GL(5) acts on the right by (μ(g)d)(β) = g⁻¹ d(gβ), where g acts
on the coefficient column of a 1-form and through Λ²g on 2-forms.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import comb

import numpy as np
import sympy

from .exterior import Form, basis, wedge

__all__ = [
    "LieDifferential", "GLTransform", "StructureFingerprint", "extend_d", "jacobi_residual",
    "mu_action", "mu_star", "fingerprint", "iso_class", "lambda2", "derivation2",
    "m1_point", "m2_point", "m3_point", "m2_rank_ok", "CLASS_LABELS", "NotJacobiError",
    "NotNilpotentError",
]

JACOBI_TOL = 1e-9


class NotJacobiError(ValueError):
    pass


class NotNilpotentError(ValueError):
    pass


def _frac_array(values) -> np.ndarray:
    return np.array([v if isinstance(v, Fraction) else Fraction(v) for v in values], dtype=object)


@dataclass(frozen=True, eq=False)
class LieDifferential:
    images: tuple[Form, ...]

    def __post_init__(self):
        imgs = tuple(self.images)
        if len(imgs) != 5 or any((f.dim, f.grade) != (5, 2) for f in imgs):
            raise ValueError("a LieDifferential needs five 2-forms in dimension 5")
        exact = any(f.is_exact for f in imgs)
        if exact:
            imgs = tuple(f if f.is_exact else f.exact() for f in imgs)
        object.__setattr__(self, "images", imgs)

    @classmethod
    def from_matrix(cls, mat) -> "LieDifferential":
        mat = np.asarray(mat)
        if mat.shape != (10, 5):
            raise ValueError("matrix must be 10x5")
        return cls(tuple(Form(5, 2, mat[:, i].copy()) for i in range(5)))

    @classmethod
    def from_terms(cls, rows, exact: bool = False) -> "LieDifferential":
        """rows: five dicts {"12": coeff, ...} (or tuple keys), one per d e^i."""
        out = []
        for r in rows:
            terms = {tuple(int(c) for c in k) if isinstance(k, str) else tuple(k): v
                     for k, v in r.items()}
            out.append(Form.from_terms(5, terms, exact=exact) if terms
                       else (Form(5, 2, _frac_array([0] * 10)) if exact else Form.zero(5, 2)))
        return cls(tuple(out))

    @classmethod
    def zero(cls, exact: bool = False) -> "LieDifferential":
        return cls.from_terms([{}] * 5, exact=exact)

    @property
    def is_exact(self) -> bool:
        return self.images[0].is_exact

    @cached_property
    def matrix(self) -> np.ndarray:
        m = np.stack([f.coeffs for f in self.images], axis=1)
        m.setflags(write=False)
        return m

    def exact(self) -> "LieDifferential":
        return LieDifferential(tuple(f.exact() for f in self.images))

    def numeric(self) -> "LieDifferential":
        return LieDifferential(tuple(f.numeric() for f in self.images))

    def __add__(self, other):
        return LieDifferential(tuple(a + b for a, b in zip(self.images, other.images)))

    def __sub__(self, other):
        return LieDifferential(tuple(a - b for a, b in zip(self.images, other.images)))

    def __mul__(self, c):
        return LieDifferential(tuple(a * c for a in self.images))

    __rmul__ = __mul__

    def norm(self) -> float:
        return max(f.norm() for f in self.images)

    def __repr__(self):
        return "LieDifferential(" + ", ".join(repr(f) for f in self.images) + ")"

    @cached_property
    def _hat(self) -> dict[int, np.ndarray]:
        return {}

    def hat_matrix(self, k: int) -> np.ndarray:
        """Matrix of d̂ : Λ^k → Λ^{k+1} in the lexicographic bases."""
        cache = self._hat
        if k not in cache:
            cache[k] = _build_hat(self, k)
        return cache[k]

    @cached_property
    def brackets(self) -> np.ndarray:
        """c[k, i, j] = e^k([e_i, e_j]), from dα(X, Y) = −α([X, Y])."""
        zero = Fraction(0) if self.is_exact else 0.0
        c = np.array([[[zero] * 5 for _ in range(5)] for _ in range(5)],
                     dtype=object if self.is_exact else float)
        for n, (i, j) in enumerate(basis(5, 2)):
            for k in range(5):
                v = self.matrix[n, k]
                c[k, i, j] = -v
                c[k, j, i] = v
        return c


def _build_hat(d: LieDifferential, k: int) -> np.ndarray:
    exact = d.is_exact
    rows = comb(5, k + 1) if k < 5 else 0
    cols = comb(5, k)
    zero = Fraction(0) if exact else 0.0
    out = np.array([[zero] * cols for _ in range(rows)], dtype=object if exact else float)
    if k == 0 or k >= 5:
        return out
    for col, idx in enumerate(basis(5, k)):
        for s, i in enumerate(idx):
            rest = idx[:s] + idx[s + 1:]
            if rest:
                mono = Form.from_terms(5, {tuple(r + 1 for r in rest): 1}, exact=exact)
                term = wedge(d.images[i], mono)
            else:
                term = d.images[i]
            out[:, col] = out[:, col] + (term.coeffs if s % 2 == 0 else -term.coeffs)
    return out


def extend_d(d: LieDifferential, a: Form) -> Form:
    """The derivation d̂ induced by d, applied to a."""
    if a.dim != 5:
        raise ValueError("extend_d acts on forms in dimension 5")
    k = a.grade
    if k == 5:
        raise ValueError("d̂ of a top-degree form would have degree 6")
    if k == 0:
        return Form(5, 1, _frac_array([0] * 5)) if a.is_exact else Form.zero(5, 1)
    dd, aa = d, a
    if d.is_exact != a.is_exact:
        dd = d.exact() if not d.is_exact else d
        aa = a.exact() if not a.is_exact else a
    mat = dd.hat_matrix(k)
    return Form(5, k + 1, mat.dot(aa.coeffs), aa.density)


def jacobi_residual(d: LieDifferential) -> float:
    r = d.hat_matrix(2).dot(d.matrix)
    if d.is_exact:
        return float(max(abs(x) for x in r.ravel()))
    return float(np.max(np.abs(r)))


@dataclass(frozen=True, eq=False)
class GLTransform:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.shape != (5, 5):
            raise ValueError("GLTransform needs a 5x5 matrix")
        if m.dtype == object:
            det = sympy.Matrix(m.tolist()).det()
        else:
            m = m.astype(float)
            det = np.linalg.det(m)
        if det == 0 or (m.dtype != object and abs(det) < 1e-300):
            raise ValueError("GLTransform must be invertible")
        object.__setattr__(self, "matrix", m)

    @property
    def is_exact(self) -> bool:
        return self.matrix.dtype == object

    def inverse(self) -> "GLTransform":
        if self.is_exact:
            inv = sympy.Matrix(self.matrix.tolist()).inv()
            return GLTransform(np.array([[Fraction(int(x.p), int(x.q)) for x in row]
                                         for row in inv.tolist()], dtype=object))
        return GLTransform(np.linalg.inv(self.matrix))


def lambda2(g: np.ndarray) -> np.ndarray:
    """Induced action of g on 2-forms: e^i∧e^j ↦ g e^i ∧ g e^j."""
    idx = basis(5, 2)
    exact = g.dtype == object
    out = np.empty((10, 10), dtype=object if exact else float)
    for c, (i, j) in enumerate(idx):
        for r, (a, b) in enumerate(idx):
            out[r, c] = g[a, i] * g[b, j] - g[b, i] * g[a, j]
    return out


def derivation2(b: np.ndarray) -> np.ndarray:
    """Degree-0 derivation extension of b to 2-forms."""
    idx = basis(5, 2)
    exact = b.dtype == object
    zero = Fraction(0) if exact else 0.0
    out = np.array([[zero] * 10 for _ in range(10)], dtype=object if exact else float)
    pos = {p: n for n, p in enumerate(idx)}
    for c, (i, j) in enumerate(idx):
        for a in range(5):
            # (b e^i) ∧ e^j
            if a != j:
                key, sgn = ((a, j), 1) if a < j else ((j, a), -1)
                out[pos[key], c] += sgn * b[a, i]
            # e^i ∧ (b e^j)
            if a != i:
                key, sgn = ((i, a), 1) if i < a else ((a, i), -1)
                out[pos[key], c] += sgn * b[a, j]
    return out


def mu_action(g, d: LieDifferential) -> LieDifferential:
    if not isinstance(g, GLTransform):
        g = GLTransform(np.asarray(g))
    gm = g.matrix
    if d.is_exact and not g.is_exact:
        raise TypeError("exact differential needs an exact transform")
    if g.is_exact and not d.is_exact:
        d = d.exact()
    ginv = g.inverse().matrix
    return LieDifferential.from_matrix(lambda2(ginv).dot(d.matrix).dot(gm))


def mu_star(b, d: LieDifferential) -> LieDifferential:
    """Infinitesimal action: (μ_{*e}(B)d)(β) = d(Bβ) − B̂(dβ)."""
    b = np.asarray(b)
    if d.is_exact and b.dtype != object:
        b = np.array([[Fraction(x) for x in row] for row in b], dtype=object)
    if b.dtype == object and not d.is_exact:
        b = b.astype(float)
    return LieDifferential.from_matrix(d.matrix.dot(b) - derivation2(b).dot(d.matrix))


# --------------------------------------------------------------------------
# isomorphism invariants


@dataclass(frozen=True)
class StructureFingerprint:
    b1: int
    lower_central: tuple[int, ...]
    center: int
    derived: int
    square_rank: int

    def __post_init__(self):
        if not 0 <= self.b1 <= 5:
            raise ValueError("b1 out of range")
        if any(a < b for a, b in zip(self.lower_central, self.lower_central[1:])):
            raise ValueError("lower central series must be weakly decreasing")


def _rank(m: np.ndarray, exact: bool, scale: float = 1.0) -> int:
    if m.size == 0:
        return 0
    if exact:
        return sympy.Matrix(m.tolist()).rank()
    s = np.linalg.svd(m.astype(float), compute_uv=False)
    return int(np.sum(s > 1e-9 * max(scale, 1.0)))


def _span_basis(vectors: np.ndarray, exact: bool, scale: float) -> np.ndarray:
    """Columns spanning the same space as the columns of ``vectors``."""
    if vectors.size == 0:
        return vectors.reshape(5, 0)
    if exact:
        cols = sympy.Matrix(vectors.tolist()).columnspace()
        if not cols:
            return np.zeros((5, 0), dtype=object)
        return np.array([[Fraction(int(x.p), int(x.q)) for x in c] for c in cols],
                        dtype=object).T
    u, s, _ = np.linalg.svd(vectors.astype(float), full_matrices=False)
    r = int(np.sum(s > 1e-9 * max(scale, 1.0)))
    return u[:, :r]


def fingerprint(d: LieDifferential, tol: float = JACOBI_TOL) -> StructureFingerprint:
    exact = d.is_exact
    scale = max(d.norm(), 1.0)
    res = jacobi_residual(d)
    if (exact and res != 0) or (not exact and res > tol * scale * scale):
        raise NotJacobiError(f"d̂∘d ≠ 0 (residual {res:.3g})")
    c = d.brackets
    r = _rank(d.matrix, exact, scale)
    # lower central series g ⊃ [g,g] ⊃ [g,[g,g]] ...
    series = [5]
    current = np.eye(5) if not exact else np.array(
        [[Fraction(int(i == j)) for j in range(5)] for i in range(5)], dtype=object)
    for _ in range(6):
        if current.shape[1] == 0:
            break
        vecs = [np.tensordot(c[:, i, :], current[:, n], axes=([1], [0]))
                for i in range(5) for n in range(current.shape[1])]
        stacked = np.stack(vecs, axis=1)
        current = _span_basis(stacked, exact, scale)
        series.append(current.shape[1])
        if series[-1] == series[-2]:
            break
    # center: kernel of X ↦ ([X, e_j])_j
    ad = np.concatenate([c[:, :, j] for j in range(5)], axis=0)
    center = 5 - _rank(ad, exact, scale)
    # polarised square map β ↦ (dβ)²
    sq = [wedge(d.images[i], d.images[j]).coeffs for i in range(5) for j in range(i, 5)]
    square_rank = _rank(np.stack(sq, axis=1), exact, scale * scale)
    return StructureFingerprint(b1=5 - r, lower_central=tuple(series), center=center,
                                derived=r, square_rank=square_rank)


# The nine real nilpotent Lie algebras of dimension five.
_REPRESENTATIVES = {
    "abelian": [{}, {}, {}, {}, {}],
    "(0,0,0,0,12)": [{}, {}, {}, {}, {"12": 1}],
    "(0,0,0,0,12+34)": [{}, {}, {}, {}, {"12": 1, "34": 1}],
    "(0,0,0,12,13)": [{}, {}, {}, {"12": 1}, {"13": 1}],
    "(0,0,0,12,14)": [{}, {}, {}, {"12": 1}, {"14": 1}],
    "(0,0,0,12,13+24)": [{}, {}, {}, {"12": 1}, {"13": 1, "24": 1}],
    "(0,0,12,13,23)": [{}, {}, {"12": 1}, {"13": 1}, {"23": 1}],
    "(0,0,12,13,14)": [{}, {}, {"12": 1}, {"13": 1}, {"14": 1}],
    "(0,0,12,13,14+23)": [{}, {}, {"12": 1}, {"13": 1}, {"14": 1, "23": 1}],
}
CLASS_LABELS = tuple(_REPRESENTATIVES)
HYPO_CLASSES = ("abelian", "(0,0,0,0,12)", "(0,0,0,0,12+34)", "(0,0,0,12,13)",
                "(0,0,0,12,13+24)", "(0,0,12,13,14)")

_TABLE: dict[StructureFingerprint, str] | None = None


def _table() -> dict[StructureFingerprint, str]:
    global _TABLE
    if _TABLE is None:
        table = {}
        for label, rows in _REPRESENTATIVES.items():
            fp = fingerprint(LieDifferential.from_terms(rows, exact=True))
            if fp in table:
                raise RuntimeError(f"fingerprint collision between {label} and {table[fp]}")
            table[fp] = label
        _TABLE = table
    return _TABLE


def iso_class(d: LieDifferential) -> str:
    fp = fingerprint(d)
    if fp.lower_central[-1] != 0:
        raise NotNilpotentError(f"lower central series stalls at {fp.lower_central}")
    try:
        return _table()[fp]
    except KeyError:
        raise NotNilpotentError(f"no nilpotent class has fingerprint {fp}") from None


# --------------------------------------------------------------------------
# the three families of hypo differentials


def _num(vals, exact):
    return [Fraction(v) if exact else float(v) for v in vals]


def m1_point(lam, mu, h, k, exact: bool = False) -> LieDifferential:
    lam, mu, h, k = _num((lam, mu, h, k), exact)
    return LieDifferential.from_terms([
        {"35": lam},
        {"35": h, "15": k},
        {},
        {"25": -lam, "15": h, "35": mu},
        {},
    ], exact=exact)


def m2_point(x, y, h, k, lam, mu, exact: bool = False) -> LieDifferential:
    x, y, h, k, lam, mu = _num((x, y, h, k, lam, mu), exact)
    return LieDifferential.from_terms([
        {},
        {"34": x, "35": lam},
        {},
        {"14": x, "23": -x, "34": -y, "15": lam, "35": -mu},
        {"14": -h, "23": h, "34": k, "15": -x, "35": y},
    ], exact=exact)


def m3_point(lam, mu, exact: bool = False) -> LieDifferential:
    lam, mu = _num((lam, mu), exact)
    return LieDifferential.from_terms([{}, {}, {}, {}, {"12": lam + mu, "34": lam - mu}],
                                      exact=exact)


def m2_rank_ok(x, y, h, k, lam, mu, tol: float = 1e-9) -> bool:
    """rk((x,y,λ,μ),(h,k,x,y)) < 2, via all 2×2 minors."""
    rows = np.array([[x, y, lam, mu], [h, k, x, y]], dtype=object)
    scale = max(1.0, max(abs(float(v)) for v in rows.ravel()))
    for i in range(4):
        for j in range(i + 1, 4):
            minor = rows[0, i] * rows[1, j] - rows[0, j] * rows[1, i]
            if isinstance(minor, Fraction):
                if minor != 0:
                    return False
            elif abs(minor) > tol * scale * scale:
                return False
    return True

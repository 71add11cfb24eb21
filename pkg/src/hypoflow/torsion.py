"""Intrinsic torsion of hypo structures and the gauge matrix it assembles into.

All extraction happens in an adapted coframe. For a quadruple other than the
standard one, d is first rewritten in the adapted coframe through the μ action.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction

import numpy as np

from .exterior import Form, contract, form, vector, wedge
from .liealg import LieDifferential, extend_d, mu_action, mu_star
from .su2 import SU2Quadruple, is_hypo, metric_and_j, standard_quadruple

__all__ = ["HypoTorsion", "GaugeMatrix", "TorsionError", "hypo_torsion", "gauge_matrix",
           "flow_rhs", "gauge_of", "gauge_operator", "gauge_from_matrix", "ASD_BASIS", "j1_standard"]

HYPO_TOL = 1e-9


class TorsionError(ValueError):
    pass


def _basis_forms(exact: bool):
    return {
        "w1": form({"12": 1, "34": 1}, exact=exact),
        "w2": form({"13": 1, "42": 1}, exact=exact),
        "w3": form({"14": 1, "23": 1}, exact=exact),
        "n1": form({"12": 1, "34": -1}, exact=exact),
        "n2": form({"13": 1, "42": -1}, exact=exact),
        "n3": form({"14": 1, "23": -1}, exact=exact),
    }


ASD_BASIS = ("e12-e34", "e13-e42", "e14-e23")


def _coef(a: Form, b: Form):
    """Coefficient of b in a, for b from the mutually orthogonal basis above."""
    return a.coeffs.dot(b.coeffs) / b.coeffs.dot(b.coeffs)


@dataclass(frozen=True)
class HypoTorsion:
    beta: Form
    f: float
    g: float
    omega_minus: Form
    sigma2_minus: Form
    sigma3_minus: Form

    @staticmethod
    def components(a: Form) -> tuple:
        """(a, b, c) with a = 2·a_a(e12−e34) + 2·a_b(e13−e42) + 2·a_c(e14−e23)."""
        b = _basis_forms(a.is_exact)
        return tuple(_coef(a, b[n]) / 2 for n in ("n1", "n2", "n3"))

    @property
    def omega_abc(self):
        return self.components(self.omega_minus)

    @property
    def sigma2_abc(self):
        return self.components(self.sigma2_minus)

    @property
    def sigma3_abc(self):
        return self.components(self.sigma3_minus)

    def beta_vector(self) -> np.ndarray:
        return np.asarray(self.beta.coeffs[:4])


@dataclass(frozen=True, eq=False)
class GaugeMatrix:
    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q)
        if q.shape != (5, 5):
            raise ValueError("gauge matrix is 5x5")
        if not all(q[i, j] == q[j, i] for i in range(5) for j in range(5)):
            raise ValueError("gauge matrix must be symmetric")
        object.__setattr__(self, "q", q)

    @property
    def weingarten(self) -> np.ndarray:
        return -self.q

    def trace(self):
        return sum(self.q[i, i] for i in range(5))


def _adapted(d: LieDifferential, q: SU2Quadruple | None) -> LieDifferential:
    if q is None:
        return d
    std = standard_quadruple()
    if all(a.numeric().allclose(b, 0.0) for a, b in
           zip((q.alpha, q.omega1, q.omega2, q.omega3),
               (std.alpha, std.omega1, std.omega2, std.omega3))):
        return d
    frame = metric_and_j(q)
    return mu_action(frame.coframe, d.numeric())


def hypo_torsion(d: LieDifferential, q: SU2Quadruple | None = None,
                 tol: float = HYPO_TOL, strict: bool = True) -> HypoTorsion:
    """Torsion components of (d, q); q defaults to the standard structure.

    With strict=False the hypo and structure-equation checks are skipped and the
    components are plain projections, which makes the map linear in d.
    """
    d = _adapted(d, q)
    exact = d.is_exact
    scale = max(d.norm(), 1.0)
    res = is_hypo(d) if strict else 0.0
    if (exact and res != 0) or (not exact and res > tol * scale):
        raise TorsionError(f"structure is not hypo (residual {res:.3g})")
    b = _basis_forms(exact)
    e5 = form("5", exact=exact)
    zero = Fraction(0) if exact else 0.0

    def check(name, value):
        if not strict:
            return
        if (exact and value != 0) or (not exact and abs(float(value)) > tol * scale):
            raise TorsionError(f"structure equations violated: {name} = {float(value):.3g}")

    # dα = α∧β + fω₁ + ω⁻, with α∧β = −Σ β_i e^{i5}
    da = extend_d(d, e5)
    beta_c = [-da.coeffs[_pos15(i)] for i in range(4)] + [zero]
    beta = Form(5, 1, np.array(beta_c, dtype=object if exact else float))
    f = _coef(da, b["w1"])
    check("ω₂-part of dα", _coef(da, b["w2"]))
    check("ω₃-part of dα", _coef(da, b["w3"]))
    omega_minus = sum((b[n] * _coef(da, b[n]) for n in ("n2", "n3")), b["n1"] * _coef(da, b["n1"]))
    rebuilt = wedge(e5, beta) + b["w1"] * f + omega_minus
    check("dα remainder", (da - rebuilt).norm())

    e5v = vector("5", exact=exact)

    def split(dw: Form, w: Form):
        r = dw - wedge(beta, w)
        tau = contract(e5v, r)
        check("α-free part", (r - wedge(e5, tau)).norm())
        return tau

    tau2 = split(extend_d(d, b["w2"]), b["w2"])
    tau3 = split(extend_d(d, b["w3"]), b["w3"])
    g = _coef(tau2, b["w3"])
    check("g consistency", g + _coef(tau3, b["w2"]))
    for name, tau in (("dω₂", tau2), ("dω₃", tau3)):
        check(f"ω₁-part of {name}", _coef(tau, b["w1"]))
    check("ω₂-part of dω₂", _coef(tau2, b["w2"]))
    check("ω₃-part of dω₃", _coef(tau3, b["w3"]))
    s2 = sum((b[n] * _coef(tau2, b[n]) for n in ("n2", "n3")), b["n1"] * _coef(tau2, b["n1"]))
    s3 = sum((b[n] * _coef(tau3, b[n]) for n in ("n2", "n3")), b["n1"] * _coef(tau3, b["n1"]))
    return HypoTorsion(beta, f, g, omega_minus, s2, s3)


def _pos15(i: int) -> int:
    # lexicographic position of e^{i5} (0-based i in 0..3) among 2-indices
    from .exterior import _position
    return _position(5, 2)[(i, 4)]


def j1_standard(exact: bool = False) -> np.ndarray:
    """J₁ on 1-forms of the standard structure, restricted to span(e¹..e⁴)."""
    one = Fraction(1) if exact else 1.0
    zero = Fraction(0) if exact else 0.0
    # γ∧ω₂ = (J₁γ)∧ω₃ gives e¹→e², e²→−e¹, e³→e⁴, e⁴→−e³
    m = np.array([[zero] * 4 for _ in range(4)], dtype=object if exact else float)
    m[1, 0], m[0, 1], m[3, 2], m[2, 3] = one, -one, one, -one
    return m


def gauge_matrix(t: HypoTorsion, j1: np.ndarray | None = None) -> GaugeMatrix:
    """Q_P = [[−f/2·id + Q̃, J₁β], [(J₁β)ᵀ, f+g]]."""
    exact = t.beta.is_exact
    if j1 is None:
        j1 = j1_standard(exact)
    s2a, s2b, s2c = t.sigma2_abc
    s3a, s3b, s3c = t.sigma3_abc
    wa, wb, wc = t.omega_abc
    upper = [
        [s2c - s3b - wa, s2b + s3c, -s2a - wc, -s3a + wb],
        [None, -s2c + s3b - wa, -s3a - wb, s2a - wc],
        [None, None, -s2c - s3b + wa, s2b - s3c],
        [None, None, None, s2c + s3b + wa],
    ]
    jb = j1.dot(t.beta_vector())
    q = np.empty((5, 5), dtype=object if exact else float)
    half_f = t.f / 2
    for i in range(4):
        for j in range(i, 4):
            v = upper[i][j] - (half_f if i == j else 0)
            q[i, j] = q[j, i] = v
        q[i, 4] = q[4, i] = jb[i]
    q[4, 4] = t.f + t.g
    return GaugeMatrix(q)


def gauge_of(d: LieDifferential) -> GaugeMatrix:
    """X̂_d: the gauge matrix of d with respect to the standard structure."""
    return gauge_matrix(hypo_torsion(d))


@lru_cache(maxsize=1)
def gauge_operator() -> np.ndarray:
    """25×50 matrix of d ↦ X̂_d (standard structure), on row-major vec(D)."""
    cols = []
    for n in range(50):
        unit = np.zeros(50)
        unit[n] = 1.0
        d = LieDifferential.from_matrix(unit.reshape(10, 5))
        cols.append(gauge_matrix(hypo_torsion(d, strict=False)).q.ravel())
    op = np.array(cols).T
    op.setflags(write=False)
    return op


def gauge_from_matrix(dmat: np.ndarray) -> np.ndarray:
    """X̂ from the raw 10×5 matrix of a hypo d; agrees with gauge_of on hypo input."""
    return (gauge_operator() @ np.asarray(dmat, dtype=float).ravel()).reshape(5, 5)


def flow_rhs(d: LieDifferential) -> LieDifferential:
    """X̃_d = μ_{*e}(X̂ᵀ) d."""
    xhat = gauge_of(d).q
    return mu_star(xhat.T, d)

"""SU(2)-structures on a 5-dimensional vector space.

Volume-weighted quantities are returned with their ``density`` tag: X_ω and
α_ψ carry one factor of Λ⁵T*, V² is the scalar coefficient of (e^{12345})².
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import sqrt

import numpy as np

from .exterior import Form, MultiVector, big_a, big_a_star, contract, form, pairing, wedge
from .liealg import LieDifferential, extend_d

__all__ = [
    "SU2Triple", "SU2Quadruple", "HamiltonianPoint", "AdaptedFrame", "TripleReport",
    "InvalidStructure", "DegenerateVolume",
    "x_of", "x_of4", "alpha_of", "v_squared", "v_squared4", "volume",
    "check_triple", "validate", "metric_and_j", "is_hypo", "dv", "dv4", "skew_gradient",
    "standard_triple", "standard_quadruple", "hypo_operator", "hypo_residual_matrix",
]

EQ_RTOL = 1e-9
SIGN_TOL = 1e-10
DEGENERATE_V2 = 1e-18


class InvalidStructure(ValueError):
    def __init__(self, report: "TripleReport"):
        self.report = report
        failed = ", ".join(f"{k} ({v:.3g})" for k, (ok, v) in report.checks.items() if not ok)
        super().__init__(f"not an SU(2)-structure: {failed}")


class DegenerateVolume(ValueError):
    pass


@dataclass(frozen=True)
class SU2Triple:
    omega1: Form
    psi2: Form
    psi3: Form
    orientation: int = 1

    def __post_init__(self):
        if (self.omega1.grade, self.psi2.grade, self.psi3.grade) != (2, 3, 3):
            raise ValueError("triple needs grades (2, 3, 3)")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be ±1")

    def pulled_back(self, g: np.ndarray) -> "SU2Triple":
        """Express the forms in the coframe e'^i = Σ_j g_{ji} e^j."""
        return SU2Triple(*(pull_back(f, g) for f in (self.omega1, self.psi2, self.psi3)),
                         orientation=self.orientation)


@dataclass(frozen=True)
class SU2Quadruple:
    alpha: Form
    omega1: Form
    omega2: Form
    omega3: Form

    def triple(self) -> SU2Triple:
        return SU2Triple(self.omega1, wedge(self.omega2, self.alpha), wedge(self.omega3, self.alpha))


@dataclass(frozen=True)
class HamiltonianPoint:
    omega1: Form
    psi2: Form
    psi3: Form
    upsilon: Form

    def __post_init__(self):
        if v_squared(self.omega1, self.psi2) <= 0 or v_squared4(self.psi3, self.upsilon) <= 0:
            raise ValueError("point lies outside {V²(ω₁,ψ₂) > 0, V²(ψ₃,υ) > 0}")

    @classmethod
    def from_triple(cls, t: SU2Triple) -> "HamiltonianPoint":
        return cls(t.omega1, t.psi2, t.psi3, wedge(t.omega1, t.omega1) * 0.5)


def standard_triple(exact: bool = False) -> SU2Triple:
    return SU2Triple(form({"12": 1, "34": 1}, exact=exact), form({"135": 1, "425": 1}, exact=exact),
                     form({"145": 1, "235": 1}, exact=exact))


def standard_quadruple(exact: bool = False) -> SU2Quadruple:
    return SU2Quadruple(form("5", exact=exact), form({"12": 1, "34": 1}, exact=exact),
                        form({"13": 1, "42": 1}, exact=exact), form({"14": 1, "23": 1}, exact=exact))


def pull_back(a: Form, g: np.ndarray) -> Form:
    """Coefficients of ``a`` in the coframe whose i-th member has coefficients g[:, i].

    Inverse of push-forward by g: a' = Λ^k(g)ᵀ-solve. Uses a ↦ Λ^k(g⁻¹) a.
    """
    from .exterior import basis
    ginv = np.linalg.inv(np.asarray(g, dtype=float))
    k = a.grade
    idx = basis(5, k)
    mat = np.empty((len(idx), len(idx)))
    for c, I in enumerate(idx):
        for r, J in enumerate(idx):
            mat[r, c] = np.linalg.det(ginv[np.ix_(J, I)]) if k else 1.0
    return Form(5, k, mat.dot(a.numeric().coeffs), a.density)


# --------------------------------------------------------------------------
# pointwise operators


def x_of(omega: Form) -> MultiVector:
    return big_a(wedge(omega, omega))


def x_of4(upsilon: Form) -> MultiVector:
    if upsilon.grade != 4:
        raise ValueError("x_of4 takes a 4-form")
    return big_a(upsilon) * 2


def alpha_of(psi: Form) -> Form:
    if psi.grade != 3:
        raise ValueError("alpha_of takes a 3-form")
    ap = big_a(psi)
    return big_a_star(wedge(ap, ap))


def _evaluate(alpha: Form, x: MultiVector):
    return pairing(alpha, x)  # k = 1, so no factorial


def v_squared(omega: Form, psi: Form):
    return _evaluate(alpha_of(psi), x_of(omega))


def v_squared4(psi: Form, upsilon: Form):
    return _evaluate(alpha_of(psi), x_of4(upsilon))


def volume(v2, orientation: int = 1, scale: float = 1.0) -> float:
    """Positively oriented square root of V², as a multiple of e^{12345}."""
    v2 = float(v2)
    if v2 <= 0:
        raise DegenerateVolume(f"V² = {v2:.3g} admits no square root")
    if v2 < DEGENERATE_V2 * scale * scale:
        raise DegenerateVolume(f"V² = {v2:.3g} is numerically degenerate")
    return orientation * sqrt(v2)


# --------------------------------------------------------------------------
# validity of a triple


@dataclass
class TripleReport:
    checks: dict[str, tuple[bool, float]] = field(default_factory=dict)
    quadruple: SU2Quadruple | None = None
    sign_eigenvalues: np.ndarray | None = None

    @property
    def accepted(self) -> bool:
        return all(ok for ok, _ in self.checks.values()) and self.quadruple is not None


def _contraction_matrix(a: Form) -> np.ndarray:
    """Columns: e_i ⌟ a, for i = 1..5."""
    cols = [contract(MultiVector.from_terms(5, {(i + 1,): 1}), a).numeric().coeffs for i in range(5)]
    return np.stack(cols, axis=1)


def _sign_form(t: SU2Triple, scale: float) -> np.ndarray:
    """Eigenvalues of q(Y,Z) = ω₁(Y,Z) on L = {(Y,Z): Y⌟ψ₂ = Z⌟ψ₃}."""
    m = np.concatenate([_contraction_matrix(t.psi2), -_contraction_matrix(t.psi3)], axis=1)
    _, s, vt = np.linalg.svd(m)
    tol = 1e-9 * max(s[0], 1e-300)
    null = vt[np.sum(s > tol):].T  # orthonormal basis of L in R^10
    if null.shape[1] == 0:
        return np.zeros(0)
    w = _two_form_matrix(t.omega1)
    q = null[:5].T @ w @ null[5:]
    q = 0.5 * (q + q.T)
    return np.linalg.eigvalsh(q)


def _two_form_matrix(a: Form) -> np.ndarray:
    """W[i, j] = a(e_i, e_j)."""
    from .exterior import basis
    w = np.zeros((5, 5))
    for (i, j), c in zip(basis(5, 2), a.numeric().coeffs):
        w[i, j] = c
        w[j, i] = -c
    return w


def check_triple(t: SU2Triple) -> TripleReport:
    rep = TripleReport()
    s = max(t.omega1.norm(), t.psi2.norm(), t.psi3.norm(), 1e-300)
    sw, sp = max(t.omega1.norm(), 1e-300), max(t.psi2.norm(), t.psi3.norm(), 1e-300)

    def eq(name, value: float, ref: float):
        rep.checks[name] = (value <= EQ_RTOL * ref, value)

    a2, a3 = alpha_of(t.psi2), alpha_of(t.psi3)
    eq("alpha_psi2 = alpha_psi3", (a2 - a3).norm(), sp * sp)
    eq("omega1 ^ psi2 = 0", wedge(t.omega1, t.psi2).norm(), sw * sp)
    eq("omega1 ^ psi3 = 0", wedge(t.omega1, t.psi3).norm(), sw * sp)
    xw = x_of(t.omega1)
    eq("(X ⌟ psi2) ^ psi3 = 0", wedge(contract(xw, t.psi2), t.psi3).norm(), sw * sw * sp * sp)
    v2 = float(_evaluate(a2, xw))
    scale2 = sw * sw * sp * sp
    rep.checks["V^2 > 0"] = (v2 > DEGENERATE_V2 * scale2, v2)
    eig = _sign_form(t, s)
    rep.sign_eigenvalues = eig
    lo = float(eig.min()) if eig.size else 0.0
    hi = float(eig.max()) if eig.size else 0.0
    rep.checks["omega1(Y,Z) >= 0 on L"] = (
        eig.size > 0 and lo >= -SIGN_TOL * sw * t.orientation ** 2 and hi > SIGN_TOL * sw, lo)
    if all(ok for ok, _ in rep.checks.values()):
        v = volume(v2, t.orientation, sqrt(scale2))
        alpha = (a2 / v).with_density(0)
        x = (xw / v).with_density(0)
        rep.quadruple = SU2Quadruple(alpha, t.omega1, contract(x, t.psi2), contract(x, t.psi3))
    return rep


def validate(t: SU2Triple) -> SU2Quadruple:
    rep = check_triple(t)
    if not rep.accepted:
        if not rep.checks["V^2 > 0"][0] and rep.checks["V^2 > 0"][1] > 0:
            raise DegenerateVolume(f"V² = {rep.checks['V^2 > 0'][1]:.3g} is numerically degenerate")
        raise InvalidStructure(rep)
    return rep.quadruple


# --------------------------------------------------------------------------
# metric and almost complex structures


@dataclass(frozen=True)
class AdaptedFrame:
    metric: np.ndarray          # g(e_i, e_j) on vectors
    j_vectors: tuple[np.ndarray, np.ndarray, np.ndarray]   # J_i on vectors of ker α, 0 on X
    j_forms: tuple[np.ndarray, np.ndarray, np.ndarray]     # J_i on 1-forms vanishing on X
    frame: np.ndarray           # columns: adapted frame e_1..e_5
    coframe: np.ndarray         # columns: adapted coframe e^1..e^5 (coefficient vectors)
    reeb: np.ndarray            # X with α(X) = 1, X ⌟ ω_i = 0


_CYCLIC = ((1, 2, 3), (2, 3, 1), (3, 1, 2))


def metric_and_j(q: SU2Quadruple) -> AdaptedFrame:
    alpha = q.alpha.numeric().coeffs
    om = {1: q.omega1, 2: q.omega2, 3: q.omega3}
    w = {i: _two_form_matrix(om[i]) for i in om}
    # Reeb vector: α(X) = 1 and X ⌟ ω₁ = 0
    sys_ = np.vstack([alpha[None, :], w[1].T])
    rhs = np.zeros(6)
    rhs[0] = 1.0
    reeb, *_ = np.linalg.lstsq(sys_, rhs, rcond=None)
    if np.linalg.norm(sys_ @ reeb - rhs) > 1e-8 * max(1.0, np.abs(sys_).max()):
        raise InvalidStructure(TripleReport({"reeb vector": (False, float(np.linalg.norm(sys_ @ reeb - rhs)))}))

    jv, jf = [], []
    for i, j, k in _CYCLIC:
        # Y ⌟ ω_j = (J_i Y) ⌟ ω_k with α(J_i Y) = 0; J_i X = 0
        lhs = np.vstack([w[k].T, alpha[None, :]])
        rhs = np.vstack([w[j].T, np.zeros((1, 5))])
        jmat, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
        jmat = jmat - np.outer(jmat @ reeb, alpha)  # kill the Reeb direction
        jv.append(jmat)
        # γ ∧ ω_j = (J_i γ) ∧ ω_k with (J_i γ)(X) = 0, for γ(X) = 0
        wedge_k = np.stack([wedge(Form.from_terms(5, {(n + 1,): 1}), om[k]).numeric().coeffs
                            for n in range(5)], axis=1)
        wedge_j = np.stack([wedge(Form.from_terms(5, {(n + 1,): 1}), om[j]).numeric().coeffs
                            for n in range(5)], axis=1)
        lhs_f = np.vstack([wedge_k, reeb[None, :]])
        rhs_f = np.vstack([wedge_j, np.zeros((1, 5))])
        fmat, *_ = np.linalg.lstsq(lhs_f, rhs_f, rcond=None)
        proj = np.eye(5) - np.outer(alpha, reeb)  # project γ onto forms vanishing on X
        jf.append(fmat @ proj)

    # adapted frame: e_1, J_1 e_1, J_2 e_1, J_3 e_1, X with e_1 a unit vector in ker α
    projected = np.eye(5) - np.outer(reeb, alpha)  # columns: e_n projected into ker α along X
    seed = projected[:, int(np.argmax(np.linalg.norm(projected, axis=0)))]
    g_seed = seed @ w[1] @ jv[0] @ seed          # ω₁(Y, J₁Y) = g(Y, Y)
    if g_seed <= 0:
        raise InvalidStructure(TripleReport({"orientation": (False, float(g_seed))}))
    e1 = seed / np.sqrt(g_seed)
    frame = np.stack([e1, jv[0] @ e1, jv[1] @ e1, jv[2] @ e1, reeb], axis=1)
    coframe = np.linalg.inv(frame).T
    metric = coframe @ coframe.T
    return AdaptedFrame(metric, tuple(jv), tuple(jf), frame, coframe, reeb)


# --------------------------------------------------------------------------
# hypo condition and the Hamiltonian picture


def is_hypo(d: LieDifferential, t: SU2Triple | None = None) -> float:
    """max |d̂| over (ω₁, ψ₂, ψ₃); 0 exactly when the structure is hypo."""
    t = t or standard_triple(exact=d.is_exact)
    return max(float(extend_d(d, f).norm()) for f in (t.omega1, t.psi2, t.psi3))


@lru_cache(maxsize=1)
def hypo_operator() -> np.ndarray:
    """Linear map vec(D) ↦ (d̂ω₁, d̂ψ₂, d̂ψ₃) for the standard triple, 20×50.

    vec is the row-major flattening of the 10×5 matrix of d.
    """
    t = standard_triple()
    cols = []
    for n in range(50):
        unit = np.zeros(50)
        unit[n] = 1.0
        d = LieDifferential.from_matrix(unit.reshape(10, 5))
        cols.append(np.concatenate([extend_d(d, f).coeffs for f in (t.omega1, t.psi2, t.psi3)]))
    op = np.array(cols).T
    op.setflags(write=False)
    return op


def hypo_residual_matrix(dmat: np.ndarray) -> float:
    """Same value as is_hypo for the standard triple, from the raw 10×5 matrix."""
    return float(np.max(np.abs(hypo_operator() @ np.asarray(dmat, dtype=float).ravel())))


def dv(omega: Form, psi: Form, sigma: Form, phi: Form) -> float:
    """dV_{(ω,ψ)}(σ, φ) = ω̂∧σ + ψ̂∧φ as a multiple of e^{12345}."""
    v = volume(v_squared(omega, psi))
    omega_hat = wedge((alpha_of(psi) / v).with_density(0), omega)
    psi_hat = contract((x_of(omega) / v).with_density(0), psi)
    return float(wedge(omega_hat, sigma).coeffs[0] + wedge(psi_hat, phi).coeffs[0])


def dv4(psi: Form, upsilon: Form, phi: Form, sigma4: Form) -> float:
    """dV_{(ψ,υ)}(φ, σ) = ψ̌∧φ + (V⁻¹α_ψ)∧σ."""
    v = volume(v_squared4(psi, upsilon))
    psi_check = contract((x_of4(upsilon) / v).with_density(0), psi)
    return float(wedge(psi_check, phi).coeffs[0]
                 + wedge((alpha_of(psi) / v).with_density(0), sigma4).coeffs[0])


def derived_forms(p: HamiltonianPoint) -> dict[str, Form]:
    v12 = volume(v_squared(p.omega1, p.psi2))
    v3u = volume(v_squared4(p.psi3, p.upsilon))
    return {
        "alpha2": (alpha_of(p.psi2) / v12).with_density(0),
        "alpha3": (alpha_of(p.psi3) / v3u).with_density(0),
        "omega2": contract((x_of(p.omega1) / v12).with_density(0), p.psi2),
        "omega3": contract((x_of4(p.upsilon) / v3u).with_density(0), p.psi3),
    }


def skew_gradient(p: HamiltonianPoint, d: LieDifferential) -> tuple[Form, Form, Form, Form]:
    """(−d̂α₃, −d̂ω₃, d̂ω₂, −ω₁∧d̂α₂) on invariant forms of the algebra d."""
    if d.is_exact:
        d = d.numeric()
    f = derived_forms(p)
    return (-extend_d(d, f["alpha3"]), -extend_d(d, f["omega3"]), extend_d(d, f["omega2"]),
            -wedge(p.omega1, extend_d(d, f["alpha2"])))

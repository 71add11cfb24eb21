"""Riemannian geometry of left-invariant metrics and of the generalized cylinder.

Conventions: c[k,i,j] = e^k([e_i,e_j]); Γ[i,j,k] is the e_k component of ∇_{e_i} e_j;
R[i,j,k,l] = ⟨R(e_i,e_j)e_k, e_l⟩ with R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_{[X,Y]};
Ric(Y,Z) = tr(X ↦ R(X,Y)Z).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import RK45

from .exterior import basis
from .flow import FAMILY_PARAMS, FamilyPoint, IntegratorConfig, _RHS, family_differential
from .liealg import LieDifferential, mu_action
from .torsion import GaugeMatrix, flow_rhs, gauge_from_matrix

__all__ = [
    "MetricError", "LeftInvariantMetric", "CurvatureForm", "HolonomyReport", "ObstructionReport",
    "ObstructionError", "koszul", "levi_civita", "curvature5", "tangential_curvature",
    "holonomy_rank", "m3_span_generators", "m3_irreducible", "m3_generators_independent", "subspace_distance",
    "cylinder_ricci", "cylinder_curvature", "cylinder_curvature_exact", "trace_integral",
]

_PAIRS = basis(5, 2)


class MetricError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LeftInvariantMetric:
    d: LieDifferential
    gram: np.ndarray = field(default_factory=lambda: np.eye(5))

    def __post_init__(self):
        g = np.array(self.gram, dtype=float)
        if g.shape != (5, 5) or not np.allclose(g, g.T, atol=1e-13 * max(1.0, np.abs(g).max())):
            raise MetricError("gram must be a symmetric 5×5 matrix")
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError as exc:
            raise MetricError("gram is not positive definite") from exc
        object.__setattr__(self, "gram", (g + g.T) / 2)
        object.__setattr__(self, "d", self.d.numeric())

    @property
    def structure(self) -> np.ndarray:
        return np.asarray(self.d.brackets, dtype=float)


def koszul(c: np.ndarray, gram: np.ndarray) -> np.ndarray:
    """Γ from 2⟨∇_x y, z⟩ = ⟨[x,y],z⟩ − ⟨[y,z],x⟩ + ⟨[z,x],y⟩ on a frame with constant gram."""
    low = np.einsum("mij,ml->ijl", c, gram)  # ⟨[e_i,e_j], e_l⟩
    two = low - np.einsum("jli->ijl", low) + np.einsum("lij->ijl", low)
    return 0.5 * np.einsum("ijl,lk->ijk", two, np.linalg.inv(gram))


def levi_civita(m: LeftInvariantMetric) -> np.ndarray:
    return koszul(m.structure, m.gram)


def _riemann(c: np.ndarray, gamma: np.ndarray, dgamma: np.ndarray | None = None,
             time_index: int | None = None) -> np.ndarray:
    """R[i,j,k,l] with l still an upper index; dgamma is the derivative along frame
    vector ``time_index`` (the only direction in which Γ varies)."""
    r = (np.einsum("jkm,iml->ijkl", gamma, gamma) - np.einsum("ikm,jml->ijkl", gamma, gamma)
         - np.einsum("mij,mkl->ijkl", c, gamma))
    if dgamma is not None:
        r[time_index] += dgamma
        r[:, time_index] -= dgamma
    return r


@dataclass(frozen=True, eq=False)
class CurvatureForm:
    """Ω: Λ² → so(n), as R[i,j,k,l]; ``matrix`` is its (ij),(kl) block for i<j, k<l."""
    tensor: np.ndarray

    @property
    def dim(self) -> int:
        return self.tensor.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        pairs = basis(self.dim, 2)
        idx = np.array(pairs)
        return self.tensor[idx[:, 0], idx[:, 1]][:, idx[:, 0], idx[:, 1]]

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.matrix, compute_uv=False)

    def rank(self, rtol: float = 1e-9) -> int:
        s = self.singular_values()
        if s.size == 0 or s[0] <= 1e-300:
            return 0
        return int(np.sum(s > rtol * s[0]))

    def image(self, rtol: float = 1e-9) -> np.ndarray:
        """Orthonormal basis (rows, in the e^{kl} basis) of the image 2-forms."""
        u, s, vt = np.linalg.svd(self.matrix)
        return vt[: self.rank(rtol)]

    def pair_symmetry_residual(self) -> float:
        return float(np.max(np.abs(self.tensor - np.einsum("ijkl->klij", self.tensor))))

    def antisymmetry_residual(self) -> float:
        t = self.tensor
        return float(max(np.max(np.abs(t + np.einsum("ijkl->jikl", t))),
                         np.max(np.abs(t + np.einsum("ijkl->ijlk", t)))))

    def bianchi_residual(self) -> float:
        t = self.tensor
        cyc = t + np.einsum("ijkl->jkil", t) + np.einsum("ijkl->kijl", t)
        return float(np.max(np.abs(cyc)))

    def ricci(self) -> np.ndarray:
        return np.einsum("ajka->jk", self.tensor)


def curvature5(m: LeftInvariantMetric) -> CurvatureForm:
    c = m.structure
    r = _riemann(c, koszul(c, m.gram))
    return CurvatureForm(np.einsum("ijkm,ml->ijkl", r, m.gram))


def _second_fundamental(m: LeftInvariantMetric, q) -> np.ndarray:
    qm = q.q if isinstance(q, GaugeMatrix) else np.asarray(q, dtype=float)
    weingarten = -np.asarray(qm, dtype=float)
    return weingarten.T @ m.gram  # II[i,j] = ⟨S e_i, e_j⟩


def tangential_curvature(m: LeftInvariantMetric, q) -> CurvatureForm:
    """Gauss equation: R^tang(X,Y,Z,W) = R⁵ − II(X,W)II(Y,Z) + II(X,Z)II(Y,W)."""
    ii = _second_fundamental(m, q)
    r5 = curvature5(m).tensor
    gauss = np.einsum("il,jk->ijkl", ii, ii) - np.einsum("ik,jl->ijkl", ii, ii)
    return CurvatureForm(r5 - gauss)


def m3_span_generators(lam: float, mu: float) -> np.ndarray:
    """The eight image generators of Ω^tang on ℳ₃, rows in the e^{ij} basis."""
    pos = {p: n for n, p in enumerate(_PAIRS)}
    a, b, cp, cm = lam ** 2 - mu ** 2, (lam + mu) ** 2, 3 * lam ** 2 + 4 * mu * lam + mu ** 2, \
        3 * lam ** 2 - 4 * mu * lam + mu ** 2
    gens = [
        {(2, 3): a / 2, (0, 1): b},
        {(1, 3): a, (0, 2): a},
        {(0, 3): -a, (1, 2): a},
        {(0, 4): cp},
        {(1, 4): cp},
        {(0, 1): a / 2, (2, 3): (lam - mu) ** 2},
        {(2, 4): cm},
        {(3, 4): cm},
    ]
    out = np.zeros((8, 10))
    for r, g in enumerate(gens):
        for key, v in g.items():
            out[r, pos[key]] = v
    return out


def m3_irreducible(lam: float, mu: float, tol: float = 1e-12) -> bool:
    """3λ²+μ² ≠ ±4μλ and λμ(λ²−μ²) ≠ 0."""
    s = max(abs(lam), abs(mu), 1e-300) ** 2
    return (abs(3 * lam ** 2 + mu ** 2 - 4 * mu * lam) > tol * s
            and abs(3 * lam ** 2 + mu ** 2 + 4 * mu * lam) > tol * s
            and abs(lam * mu * (lam ** 2 - mu ** 2)) > tol * s * s)


def m3_generators_independent(lam: float, mu: float, tol: float = 1e-12) -> bool:
    """Rank 8 of the listed generators: (λ²−μ²)(3λ²+4λμ+μ²)(3λ²−4λμ+μ²) ≠ 0.

    The e¹²/e³⁴ pair has determinant ¾(λ²−μ²)², the remaining six are independent
    monomials, so λμ = 0 alone does not drop the rank.
    """
    s = max(abs(lam), abs(mu), 1e-300) ** 2
    return (abs(lam ** 2 - mu ** 2) > tol * s
            and abs(3 * lam ** 2 + mu ** 2 - 4 * mu * lam) > tol * s
            and abs(3 * lam ** 2 + mu ** 2 + 4 * mu * lam) > tol * s)


def subspace_distance(a: np.ndarray, b: np.ndarray, rtol: float = 1e-9) -> float:
    """Spectral norm of the difference of orthogonal projectors onto the row spaces."""
    def proj(x):
        u, s, vt = np.linalg.svd(np.atleast_2d(x), full_matrices=False)
        r = int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0 else 0
        v = vt[:r]
        return v.T @ v
    return float(np.linalg.norm(proj(a) - proj(b), 2))


@dataclass(frozen=True)
class HolonomyReport:
    rank: int
    image: np.ndarray
    singular_values: np.ndarray
    irreducible: bool
    verdict: str
    closed_form: bool | None = None
    ricci_norm: float | None = None

    def to_dict(self) -> dict:
        return {"rank": self.rank, "singular_values": [float(s) for s in self.singular_values],
                "image": [[float(v) for v in row] for row in self.image],
                "irreducible": self.irreducible, "verdict": self.verdict,
                "closed_form_irreducible": self.closed_form, "ricci_norm": self.ricci_norm}


def holonomy_rank(m: LeftInvariantMetric, q, m3_params: tuple | None = None,
                  ricci_norm: float | None = None) -> HolonomyReport:
    omega = tangential_curvature(m, q)
    rank = omega.rank()
    closed = m3_irreducible(*m3_params) if m3_params is not None else None
    verdict = ("holonomy = SU(3) by rank criterion" if rank == 8
               else f"rank {rank} < 8 at this time: no SU(3) verdict from this sample")
    return HolonomyReport(rank, omega.image(), omega.singular_values(), rank == 8, verdict,
                          closed, ricci_norm)


# --------------------------------------------------------------------------
# generalized cylinder g_t + dt²


def cylinder_curvature(c5: np.ndarray, a: np.ndarray, dc5: np.ndarray, da: np.ndarray) -> CurvatureForm:
    """Curvature of g_t + dt² in the orthonormal frame (E_1..E_5, ∂_t).

    c5: structure constants of the slice frame; a[j,i]: [∂_t, E_i] = Σ_j a[j,i] E_j;
    dc5, da: their t-derivatives.
    """
    def full(cc, aa):
        out = np.zeros((6, 6, 6))
        out[:5, :5, :5] = cc
        out[:5, 5, :5] = aa
        out[:5, :5, 5] = -aa
        return out

    c, dc = full(c5, a), full(dc5, da)
    gamma, dgamma = koszul(c, np.eye(6)), koszul(dc, np.eye(6))
    return CurvatureForm(_riemann(c, gamma, dgamma, time_index=5))


def cylinder_curvature_exact(d: LieDifferential) -> CurvatureForm:
    """Same quantity along the hypo flow, using ė = X̂e and ḋ = X̃_d instead of differences."""
    d = d.numeric()
    xhat = gauge_from_matrix(d.matrix)
    ddot = flow_rhs(d)
    return cylinder_curvature(np.asarray(d.brackets, float), -xhat,
                              np.asarray(ddot.brackets, float), -gauge_from_matrix(ddot.matrix))


def _frame_data(d_ref: LieDifferential, u: np.ndarray, udot: np.ndarray):
    c5 = np.asarray(mu_action(u.T.copy(), d_ref).brackets, float)
    return c5, -udot @ np.linalg.inv(u)


# central stencils as weights on v[j+o] − v[j−o], o = 1..half, so constants differentiate to exactly 0
_STENCILS = {
    2: (np.array([1.0]) / 2, 1),
    4: (np.array([8.0, -1.0]) / 12, 2),
}


def cylinder_ricci(series, index: int, order: int = 4) -> np.ndarray:
    """6×6 Ricci matrix of g_t + dt² at series.times[index], by central differences.

    ``series`` carries coframes e(t) = U(t)η on a uniform time grid (e.g. a
    CoframeSeries) and ``d_ref``, the differential in the η coframe. Both t-derivatives
    (of U, then of the frame data) use the same central stencil of the given order,
    so 2·order+1 samples centred on ``index`` are needed.
    """
    if order not in _STENCILS:
        raise ValueError("order must be 2 or 4")
    weights, half = _STENCILS[order]
    ts, us = np.asarray(series.times, float), np.asarray(series.coframes, float)
    reach = 2 * half
    if index - reach < 0 or index + reach >= len(ts):
        raise ValueError(f"cylinder_ricci (order {order}) needs {reach} samples on each side")
    steps = np.diff(ts[index - reach:index + reach + 1])
    h = steps[0]
    if not np.allclose(steps, h, rtol=1e-9, atol=0):
        raise ValueError("cylinder_ricci needs uniformly spaced samples")

    def deriv(values, j):
        return sum(w * (values[j + o] - values[j - o]) for w, o in zip(weights, range(1, half + 1))) / h

    near = range(index - half, index + half + 1)
    data = {j: _frame_data(series.d_ref, us[j], deriv(us, j)) for j in near}
    cs = {j: v[0] for j, v in data.items()}
    as_ = {j: v[1] for j, v in data.items()}
    return cylinder_curvature(cs[index], as_[index], deriv(cs, index), deriv(as_, index)).ricci()


# --------------------------------------------------------------------------
# trace integrals toward the boundary of the maximal interval


class ObstructionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ObstructionReport:
    family: str
    params0: tuple
    subspace: np.ndarray
    direction: int
    tau: np.ndarray
    times: np.ndarray
    integrand: np.ndarray
    partial: np.ndarray
    boundary_time: float
    verdict: str
    criterion: str
    threshold: float

    def to_dict(self) -> dict:
        return {"family": self.family, "params0": [float(v) for v in self.params0],
                "subspace": self.subspace.tolist(), "direction": self.direction,
                "boundary_time": self.boundary_time, "verdict": self.verdict,
                "criterion": self.criterion, "threshold": self.threshold,
                "final_integral": float(self.partial[-1]),
                "samples": [{"tau": float(a), "t": float(b), "trace": float(c), "integral": float(d)}
                            for a, b, c, d in zip(self.tau, self.times, self.integrand, self.partial)]}


def trace_integral(p0: FamilyPoint, subspace=None, direction: int = 1, threshold: float = 1e3,
                   config: IntegratorConfig | None = None, tau_max: float = 1e6,
                   invariance_tol: float = 1e-8) -> ObstructionReport:
    """∫_{t0}^{t} tr(X̂|_W) dt along the maximal integral curve, toward its boundary.

    Integrates in the projective time τ with dτ = |y| dt, writing y = e^ρ u with
    |u| = 1. The family flows are homogeneous quadratic, so u, ρ, t and the integral
    obey a regular system; the trace integrand becomes tr(X̂(u)|_W) dτ, which turns
    the logarithmic divergence in t into a linear one in τ.

    Verdict: "-inf"/"+inf" when the partial integrals are monotone past ±threshold
    with the τ-integrand bounded away from 0 on that tail; "finite" when the run ends
    (τ_max, or the boundary time has converged) below the threshold with a vanishing
    integrand; "indeterminate" otherwise.
    """
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    config = config or IntegratorConfig()
    fam = p0.family
    f = _RHS[fam]
    n = len(FAMILY_PARAMS[fam])
    gauges = np.array([gauge_from_matrix(row.reshape(10, 5)) for row in family_differential(fam)])
    w = np.eye(5) if subspace is None else np.atleast_2d(np.asarray(subspace, float))
    if w.shape[0] != 5:
        w = w.T
    if w.shape[0] != 5 or np.linalg.matrix_rank(w) != w.shape[1]:
        raise ObstructionError("subspace must be given by independent vectors in R^5")
    pinv = np.linalg.pinv(w)
    proj = w @ pinv
    trw = np.array([np.trace(pinv @ g @ w) for g in gauges])

    y0 = p0.array()
    r0 = float(np.linalg.norm(y0))
    if r0 == 0:
        raise ObstructionError("the origin is a critical point: the curve is defined on all of R")
    sigma = float(direction)

    def rhs(_tau, z):
        u, rho = z[:n], z[n]
        fu = np.array(f(u), dtype=float)
        rr = float(u @ fu)
        return np.concatenate([sigma * (fu - rr * u), [sigma * rr, sigma * math.exp(-rho),
                                                       sigma * float(trw @ u)]])

    def check_invariant(u):
        xh = np.tensordot(u, gauges, axes=1)
        off = (np.eye(5) - proj) @ xh @ proj
        if np.max(np.abs(off)) > invariance_tol * max(1.0, np.max(np.abs(xh))):
            raise ObstructionError("subspace is not invariant under X̂ along the trajectory")

    z = np.concatenate([y0 / r0, [math.log(r0), 0.0, 0.0]])
    t0 = 0.0
    check_invariant(z[:n])
    taus, ts, integrand, partial = [0.0], [t0], [sigma * float(trw @ z[:n])], [0.0]
    solver = RK45(rhs, 0.0, z, tau_max, rtol=config.rtol, atol=config.atol)
    stop = "tau_max"
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            raise ObstructionError(f"integration failed: {msg}")
        zz = solver.y
        u = zz[:n] / np.linalg.norm(zz[:n])
        check_invariant(u)
        taus.append(solver.t)
        ts.append(t0 + zz[n + 1])
        integrand.append(sigma * float(trw @ u))
        partial.append(zz[n + 2])
        if abs(zz[n + 2]) > 2 * threshold:
            stop = "threshold"
            break
        if zz[n] < -700:
            stop = "origin"  # the curve approaches the critical point; t runs to infinity
            break
    taus, ts, integrand, partial = map(np.array, (taus, ts, integrand, partial))
    verdict, criterion = _verdict(integrand, partial, threshold, stop)
    return ObstructionReport(fam, tuple(p0.params), w, direction, taus, ts, integrand, partial,
                             float(ts[-1]), verdict, criterion, threshold)


def _verdict(integrand, partial, threshold, stop):
    crossed = np.nonzero(np.abs(partial) > threshold)[0]
    if crossed.size:
        start = max(int(np.nonzero(np.abs(partial) > threshold / 2)[0][0]), 0)
        tail, tail_f = partial[start:], integrand[start:]
        sign = np.sign(partial[crossed[0]])
        monotone = bool(np.all(sign * np.diff(tail) >= 0))
        bounded = bool(np.min(sign * tail_f) > 1e-3 * np.max(np.abs(tail_f)))
        crit = (f"partial integrals monotone past {'+' if sign > 0 else '-'}{threshold:g} "
                f"with integrand bounded away from 0 (in projective time)")
        if monotone and bounded:
            return ("+inf" if sign > 0 else "-inf"), crit
        return "indeterminate", "threshold crossed without a monotone, non-vanishing tail"
    if stop in ("tau_max", "origin") and abs(integrand[-1]) < 1e-6:
        return "finite", f"|integral| stayed below {threshold:g}; integrand decayed to 0"
    return "indeterminate", f"run ended ({stop}) below the threshold with a non-vanishing integrand"

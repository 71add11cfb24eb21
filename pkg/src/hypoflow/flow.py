"""Hypo evolution on 𝒟 and on the three invariant families ℳ₁, ℳ₂, ℳ₃.

Family coordinates, in the order used everywhere in this module:

    m1: (λ, μ, h, k)
    m2: (x, y, h, k, λ, μ)
    m3: (λ, μ)
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Callable

import numpy as np
from scipy.integrate import RK45
from scipy.interpolate import CubicHermiteSpline
from scipy.linalg import null_space

from .liealg import LieDifferential, derivation2, m1_point, m2_point, m2_rank_ok, m3_point, mu_action, mu_star
from .su2 import hypo_operator
from .torsion import flow_rhs, gauge_from_matrix

__all__ = [
    "FAMILY_PARAMS", "FamilyPoint", "FamilyError", "random_point", "family_rhs", "family_differential",
    "reduced_velocity", "ReducedVelocity", "su2_algebra",
    "FirstIntegralSet", "first_integrals", "integral_table",
    "IntegratorConfig", "IntegrationError", "Trajectory", "integrate",
    "OrbitLabel", "classify_orbit", "ORBIT_TAXONOMY",
    "CoframeSeries", "coframe_evolve",
]

FAMILY_PARAMS = {
    "m1": ("lambda", "mu", "h", "k"),
    "m2": ("x", "y", "h", "k", "lambda", "mu"),
    "m3": ("lambda", "mu"),
}
_BUILDERS = {"m1": m1_point, "m2": m2_point, "m3": m3_point}


class FamilyError(ValueError):
    pass


def _family_name(family: str) -> str:
    f = str(family).lower()
    if f not in FAMILY_PARAMS:
        raise FamilyError(f"unknown family {family!r}; expected one of m1, m2, m3")
    return f


@dataclass(frozen=True)
class FamilyPoint:
    family: str
    params: tuple

    def __post_init__(self):
        fam = _family_name(self.family)
        params = tuple(self.params)
        n = len(FAMILY_PARAMS[fam])
        if len(params) != n:
            raise FamilyError(f"{fam} takes {n} parameters {FAMILY_PARAMS[fam]}, got {len(params)}")
        for v in params:
            if not isinstance(v, Fraction) and not math.isfinite(float(v)):
                raise FamilyError("parameters must be finite")
        if fam == "m2" and not m2_rank_ok(*params):
            raise FamilyError("rk((x,y,λ,μ),(h,k,x,y)) < 2 fails: not a point of ℳ₂")
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "params", params)

    @classmethod
    def named(cls, family: str, **values) -> "FamilyPoint":
        fam = _family_name(family)
        names = FAMILY_PARAMS[fam]
        missing = set(names) - set(values)
        if missing or set(values) - set(names):
            raise FamilyError(f"{fam} needs exactly {names}")
        return cls(fam, tuple(values[n] for n in names))

    @property
    def is_exact(self) -> bool:
        return any(isinstance(v, Fraction) for v in self.params)

    def as_dict(self) -> dict:
        return dict(zip(FAMILY_PARAMS[self.family], self.params))

    def array(self) -> np.ndarray:
        return np.array([float(v) for v in self.params])

    def differential(self, exact: bool | None = None) -> LieDifferential:
        exact = self.is_exact if exact is None else exact
        return _BUILDERS[self.family](*self.params, exact=exact)

    def is_origin(self) -> bool:
        return all(v == 0 for v in self.params)


def random_point(family: str, rng: np.random.Generator, scale: float = 1.0) -> FamilyPoint:
    """A generic point of the family; ℳ₂ points are drawn on the branch (h,k,x,y) ∥ (x,y,λ,μ)."""
    fam = _family_name(family)
    if fam == "m2":
        a, b, c = rng.normal(size=3) * scale
        c /= scale
        return FamilyPoint(fam, (a * c, b * c, a, b, a * c * c, b * c * c))
    return FamilyPoint(fam, tuple(rng.normal(size=len(FAMILY_PARAMS[fam])) * scale))


# --------------------------------------------------------------------------
# reduced ODEs


def _rhs_m1(y):
    lam, mu, h, k = y
    return (-mu * lam,
            -3 * mu * mu / 2 - 2 * h * h - 2 * lam * lam - mu * k / 2,
            -mu * h - 2 * h * k,
            -mu * k / 2 - 3 * k * k / 2)


def _rhs_m2(y):
    x, yy, h, k, lam, mu = y
    s, t = mu + k, h + lam
    return (x * s,
            2 * x * t + 3 * yy * s / 2,
            h * s,
            2 * h * t + 3 * k * s / 2,
            lam * s,
            2 * lam * t + 3 * mu * s / 2)


def _rhs_m3(y):
    lam, mu = y
    return (mu * mu + 2 * lam * lam, 3 * lam * mu)


_RHS = {"m1": _rhs_m1, "m2": _rhs_m2, "m3": _rhs_m3}


def family_rhs(p: FamilyPoint) -> np.ndarray:
    """Parameter velocity of the reduced hypo flow at p (exact for Fraction input)."""
    out = _RHS[p.family](p.params)
    if p.is_exact:
        return np.array([Fraction(v) for v in out], dtype=object)
    return np.array([float(v) for v in out])


@lru_cache(maxsize=None)
def family_differential(family: str) -> np.ndarray:
    """n×50 matrix whose row j is vec(∂d/∂p_j); every family is linear in its parameters."""
    fam = _family_name(family)
    n = len(FAMILY_PARAMS[fam])
    rows = []
    for j in range(n):
        unit = [0.0] * n
        unit[j] = 1.0
        rows.append(_BUILDERS[fam](*unit).matrix.ravel())
    out = np.array(rows)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _hypo_on_family(family: str) -> np.ndarray:
    return hypo_operator() @ family_differential(family).T


@lru_cache(maxsize=1)
def su2_algebra() -> tuple[np.ndarray, ...]:
    """Basis of the stabilizer of (α, ω₁, ω₂, ω₃) = (e⁵, e¹²+e³⁴, e¹³+e⁴², e¹⁴+e²³) in gl(5)."""
    from .su2 import standard_quadruple
    q = standard_quadruple()
    omegas = [q.omega1.coeffs, q.omega2.coeffs, q.omega3.coeffs]
    cols = []
    for n in range(25):
        b = np.zeros(25)
        b[n] = 1.0
        b = b.reshape(5, 5)
        der = derivation2(b)
        cols.append(np.concatenate([b[:, 4]] + [der.dot(w) for w in omegas]))
    basis = null_space(np.array(cols).T)
    if basis.shape[1] != 3:
        raise RuntimeError(f"stabilizer has dimension {basis.shape[1]}, expected 3")
    return tuple(basis[:, i].reshape(5, 5) for i in range(3))


@dataclass(frozen=True)
class ReducedVelocity:
    velocity: np.ndarray
    gauge: np.ndarray
    residual: float


def reduced_velocity(p: FamilyPoint, project: bool | None = None) -> ReducedVelocity:
    """Write X̃_d as a family tangent vector, plus μ_{*e}(su(2))·d when projecting.

    Projection is needed on ℳ₁ and ℳ₂, where the flow on 𝒟 leaves the family and
    is only tangent to it modulo the SU(2) action; ℳ₃ is invariant as it stands.
    The residual of the least-squares decomposition is returned so callers can
    assert it vanishes.
    """
    if project is None:
        project = p.family != "m3"
    d = p.differential(exact=False)
    target = flow_rhs(d).matrix.ravel()
    cols = list(family_differential(p.family))
    if project:
        cols += [mu_star(xi, d).matrix.ravel() for xi in su2_algebra()]
    m = np.array(cols).T
    coef, *_ = np.linalg.lstsq(m, target, rcond=None)
    resid = float(np.max(np.abs(m @ coef - target))) if target.size else 0.0
    n = len(FAMILY_PARAMS[p.family])
    return ReducedVelocity(coef[:n], coef[n:], resid)


# --------------------------------------------------------------------------
# first integrals


@dataclass(frozen=True)
class _Integral:
    name: str
    formula: str
    expr: Callable
    domain: Callable
    cube_root: bool = False

    def evaluate(self, y):
        if not self.domain(y):
            return None
        v = self.expr(y)
        if self.cube_root:
            return float(np.cbrt(float(v)))
        return v


def _m1_table():
    def N(l, m, h, k):
        return h * h - l * l - k * m

    def Q(l, m, h, k):
        return 6 * h * h - 2 * l * l - 3 * m * k + 3 * k * k

    def B4(l, m, h, k):
        return (3 * k * m + 2 * l * l - 3 * k * k) / (k * k * l)

    return (
        _Integral("A", "(h²−λ²−kμ)/(hλ)", lambda y: N(*y) / (y[2] * y[0]),
                  lambda y: y[2] != 0 and y[0] != 0),
        _Integral("B", "k⁴λ/h³", lambda y: y[3] ** 4 * y[0] / y[2] ** 3, lambda y: y[2] != 0),
        _Integral("C", "k²(6h²−2λ²−3μk+3k²)/h³", lambda y: y[3] ** 2 * Q(*y) / y[2] ** 3,
                  lambda y: y[2] != 0),
        _Integral("A_alt", "(h²−λ²−kμ)/(kλ)^{4/3}", lambda y: N(*y) ** 3 / (y[3] * y[0]) ** 4,
                  lambda y: y[3] != 0 and y[0] != 0, cube_root=True),
        _Integral("B_alt", "h³/(k⁴λ)", lambda y: y[2] ** 3 / (y[3] ** 4 * y[0]),
                  lambda y: y[3] != 0 and y[0] != 0),
        _Integral("C_alt", "(6h²−2λ²−3μk+3k²)/(k²λ)", lambda y: Q(*y) / (y[3] ** 2 * y[0]),
                  lambda y: y[3] != 0 and y[0] != 0),
        _Integral("B_h0", "(3kμ+2λ²−3k²)/(k²λ) on h=0", lambda y: B4(*y),
                  lambda y: y[2] == 0 and y[3] != 0 and y[0] != 0),
        _Integral("A_h0", "(λ²+3k²+Bk²λ)³/(k⁴λ⁴) on h=0",
                  lambda y: (y[0] ** 2 + 3 * y[3] ** 2 + B4(*y) * y[3] ** 2 * y[0]) ** 3
                  / (y[3] ** 4 * y[0] ** 4),
                  lambda y: y[2] == 0 and y[3] != 0 and y[0] != 0),
        _Integral("A_lambda0", "k⁴(μk−h²)/h⁴ on λ=0",
                  lambda y: y[3] ** 4 * (y[1] * y[3] - y[2] ** 2) / y[2] ** 4,
                  lambda y: y[0] == 0 and y[2] != 0),
        _Integral("B_lambda0", "−k²(2h²−μk+k²)/h³ on λ=0",
                  lambda y: -y[3] ** 2 * (2 * y[2] ** 2 - y[1] * y[3] + y[3] ** 2) / y[2] ** 3,
                  lambda y: y[0] == 0 and y[2] != 0),
        _Integral("A_k0", "(μ²+4(h²+λ²))²/(h²+λ²)³ on k=0",
                  lambda y: (y[1] ** 2 + 4 * (y[2] ** 2 + y[0] ** 2)) ** 2
                  / (y[2] ** 2 + y[0] ** 2) ** 3,
                  lambda y: y[3] == 0 and (y[2] != 0 or y[0] != 0)),
        _Integral("P_k0", "h/λ on k=0", lambda y: y[2] / y[0], lambda y: y[3] == 0 and y[0] != 0),
        _Integral("A_hl0", "(μ−k)⁴/(μk)³ on h=λ=0",
                  lambda y: (y[1] - y[3]) ** 4 / (y[1] * y[3]) ** 3,
                  lambda y: y[2] == 0 and y[0] == 0 and y[1] * y[3] != 0),
    )


def _m2_table():
    def den(y):
        return (y[5] + y[3]) ** 2 + 4 * (y[2] + y[4]) ** 2

    return (_Integral("A", "(h+λ)³/((μ+k)²+4(h+λ)²)", lambda y: (y[2] + y[4]) ** 3 / den(y),
                      lambda y: den(y) != 0),)


def _m3_table():
    return (_Integral("A", "(λ²−μ²)³/μ⁴", lambda y: (y[0] ** 2 - y[1] ** 2) ** 3 / y[1] ** 4,
                      lambda y: y[1] != 0),)


_TABLES = {"m1": _m1_table(), "m2": _m2_table(), "m3": _m3_table()}


def integral_table(family: str) -> tuple[_Integral, ...]:
    """The first integrals of a family; each has a rational ``expr`` usable symbolically."""
    return _TABLES[_family_name(family)]


@dataclass(frozen=True)
class FirstIntegralSet:
    family: str
    values: dict

    def defined(self) -> dict:
        return {k: v for k, v in self.values.items() if v is not None}


def first_integrals(p: FamilyPoint) -> FirstIntegralSet:
    return FirstIntegralSet(p.family, {i.name: i.evaluate(p.params) for i in integral_table(p.family)})


def _integral_row(family: str, y) -> np.ndarray:
    out = []
    for i in integral_table(family):
        v = i.evaluate(y)
        out.append(np.nan if v is None else float(v))
    return np.array(out)


# --------------------------------------------------------------------------
# integration


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-10
    atol: float = 1e-10
    ceiling: float = 1e8
    max_step: float = math.inf
    first_step: float | None = None
    max_steps: int = 200_000

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")
        if not self.ceiling > 0 or not self.max_step > 0 or self.max_steps < 1:
            raise ValueError("ceiling, max_step and max_steps must be positive")

    def as_dict(self) -> dict:
        d = asdict(self)
        if math.isinf(d["max_step"]):
            d["max_step"] = None
        return d


class IntegrationError(RuntimeError):
    """Carries whatever was computed before the failure (Trajectory or CoframeSeries)."""

    def __init__(self, message: str, partial):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Samples at accepted steps; times are strictly monotone in the integration direction."""
    family: str
    params0: tuple
    config: dict
    times: np.ndarray
    states: np.ndarray
    integrals: np.ndarray
    hypo_residual: np.ndarray
    stats: dict

    @property
    def integral_names(self) -> tuple[str, ...]:
        return tuple(i.name for i in integral_table(self.family))

    @property
    def param_names(self) -> tuple[str, ...]:
        return FAMILY_PARAMS[self.family]

    @property
    def blowup(self) -> bool:
        return bool(self.stats.get("blowup"))

    def dense(self, t) -> np.ndarray:
        """Cubic Hermite interpolant through the samples, with the exact vector field as slopes."""
        order = np.argsort(self.times)
        ts = self.times[order]
        ys = self.states[order]
        dys = np.array([[float(v) for v in _RHS[self.family](y)] for y in ys])
        return CubicHermiteSpline(ts, ys, dys, axis=0)(t)

    def drift(self) -> dict[str, float]:
        """Max relative drift of every integral defined at all samples."""
        out = {}
        for j, name in enumerate(self.integral_names):
            col = self.integrals[:, j]
            if np.any(np.isnan(col)):
                continue
            ref = col[0]
            out[name] = float(np.max(np.abs(col - ref)) / max(abs(ref), 1e-300)) if ref != 0 \
                else float(np.max(np.abs(col)))
        return out

    def membership_residual(self) -> float:
        if self.family != "m2":
            return 0.0
        worst = 0.0
        for x, y, h, k, lam, mu in self.states:
            rows = np.array([[x, y, lam, mu], [h, k, x, y]])
            for i, j in combinations(range(4), 2):
                worst = max(worst, abs(rows[0, i] * rows[1, j] - rows[0, j] * rows[1, i]))
        return worst

    def to_dict(self, extra: dict | None = None) -> dict:
        def clean(v):
            return None if v is None or (isinstance(v, float) and not math.isfinite(v)) else v

        out = {
            "family": self.family,
            "param_names": list(self.param_names),
            "params0": [float(v) for v in self.params0],
            "config": self.config,
            "integral_names": list(self.integral_names),
            "stats": self.stats,
            "samples": [
                {"t": float(t), "state": [float(v) for v in s],
                 "integrals": [clean(float(v)) for v in ints], "hypo_residual": float(r)}
                for t, s, ints, r in zip(self.times, self.states, self.integrals, self.hypo_residual)
            ],
        }
        if extra:
            out.update(extra)
        return out

    def to_json(self, extra: dict | None = None) -> str:
        return json.dumps(self.to_dict(extra), indent=1, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", *self.param_names, *self.integral_names, "hypo_residual"])
        for t, s, ints, r in zip(self.times, self.states, self.integrals, self.hypo_residual):
            w.writerow([repr(float(t)), *(repr(float(v)) for v in s),
                        *("" if np.isnan(v) else repr(float(v)) for v in ints), repr(float(r))])
        return buf.getvalue()


class _Recorder:
    def __init__(self, family: str):
        self.family = family
        self.hyp = _hypo_on_family(family)
        self.t, self.y, self.ints, self.res = [], [], [], []

    def add(self, t, y):
        y = np.array(y, dtype=float)
        self.t.append(float(t))
        self.y.append(y)
        self.ints.append(_integral_row(self.family, y))
        self.res.append(float(np.max(np.abs(self.hyp @ y))) if self.hyp.size else 0.0)

    def build(self, p0, config, stats) -> Trajectory:
        return Trajectory(self.family, tuple(p0.params), config.as_dict(), np.array(self.t),
                          np.array(self.y), np.array(self.ints), np.array(self.res), stats)


def integrate(p0: FamilyPoint, tspan, config: IntegratorConfig | None = None) -> Trajectory:
    """Adaptive RK 4(5) solution of the reduced flow from p0 over tspan = (t0, t1).

    Stops early, with stats["blowup"] set, once max|state| exceeds config.ceiling.
    """
    config = config or IntegratorConfig()
    t0, t1 = (float(v) for v in tspan)
    if not (math.isfinite(t0) and math.isfinite(t1)):
        raise ValueError("tspan must be finite")
    f = _RHS[p0.family]
    calls = [0]

    def fun(_t, y):
        calls[0] += 1
        return np.array(f(y), dtype=float)

    rec = _Recorder(p0.family)
    y0 = p0.array()
    rec.add(t0, y0)
    stats = {"steps": 0, "rejected": 0, "nfev": 0, "status": "finished", "blowup": False,
             "t_end": t0}
    if t0 == t1:
        return rec.build(p0, config, stats)
    solver = RK45(fun, t0, y0, t1, rtol=config.rtol, atol=config.atol,
                  max_step=config.max_step, first_step=config.first_step)
    while solver.status == "running":
        before = calls[0]
        msg = solver.step()
        used = calls[0] - before
        stats["nfev"] = calls[0]
        if solver.status == "failed":
            stats["status"] = f"failed: {msg}"
            raise IntegrationError(msg or "integration failed", rec.build(p0, config, stats))
        stats["steps"] += 1
        stats["rejected"] += max(used // 6 - 1, 0)
        stats["t_end"] = float(solver.t)
        rec.add(solver.t, solver.y)
        if np.max(np.abs(solver.y)) > config.ceiling:
            stats["blowup"] = True
            stats["status"] = "blowup"
            break
        if stats["steps"] >= config.max_steps and solver.status == "running":
            stats["status"] = "step budget exhausted"
            raise IntegrationError("step budget exhausted", rec.build(p0, config, stats))
    return rec.build(p0, config, stats)


# --------------------------------------------------------------------------
# orbit classification

ORBIT_TAXONOMY = {
    "m1": {
        "O1": "{h=0=k=λ, μ>0}",
        "O2_A0": "{μ=k>0, h=0=λ}",
        "O2_A+": "O₂^A ∩ {μ>k, ±k>0}, A>0",
        "O2_A-": "O₂^A ∩ {μ>k}, A<0",
        "O3_AP": "O₃^{AP} ∩ {h,λ≥0}, A>0",
        "O4_AB": "O₄^{AB} ∩ {k>0, λ>0}",
        "O5_AB": "O₅^{AB} ∩ {h>0, k>0}, (A,B)≠(0,0)",
        "O6_ABC": "connected component of O₆^{ABC}, B,C>0",
    },
    "m2": {
        "O_Al": "O_{Al}: (h+λ)³=A((μ+k)²+4(h+λ)²), x,y,h,λ,k,μ>0, A>0",
        "O_l": "O_l: x=0=h=λ, y,k,μ≥0, (k,μ)≠(0,0)",
    },
    "m3": {
        "mu0": "{μ=0, λ>0}",
        "A>=0": "{(λ²−μ²)³=Aμ⁴, λ,μ>0}, A≥0",
        "A<0": "{(λ²−μ²)³=Aμ⁴, μ>0}, A<0",
    },
}

# sign generators in the listed order, acting on the family coordinates
_GENERATORS = {
    "m1": (("lambda->-lambda", (-1, 1, 1, 1)),
           ("h->-h", (1, 1, -1, 1)),
           ("(mu,k)->-(mu,k)", (1, -1, 1, -1))),
    "m2": (("(x,h,lambda)->-", (-1, 1, -1, 1, -1, 1)),
           ("(y,k,mu)->-", (1, -1, 1, -1, 1, -1)),
           ("(x,y)->-", (-1, -1, 1, 1, 1, 1))),
    "m3": (("lambda->-lambda", (-1, 1)),
           ("mu->-mu", (1, -1))),
}


def _group(family: str):
    gens = _GENERATORS[family]
    n = len(FAMILY_PARAMS[family])
    for r in range(len(gens) + 1):
        for combo in combinations(gens, r):
            sign = [1] * n
            for _, s in combo:
                sign = [a * b for a, b in zip(sign, s)]
            yield tuple(name for name, _ in combo), tuple(sign)


@dataclass(frozen=True)
class OrbitLabel:
    family: str
    orbit: str | None
    constants: dict = field(default_factory=dict)
    symmetry: tuple = ()
    normalized: tuple = ()
    residuals: dict = field(default_factory=dict)
    reason: str | None = None

    @property
    def classified(self) -> bool:
        return self.orbit is not None

    @property
    def description(self) -> str:
        if self.orbit == "critical":
            return "critical point (origin)"
        if self.orbit is None:
            return f"unclassified: {self.reason}"
        return ORBIT_TAXONOMY[self.family][self.orbit]

    def to_dict(self) -> dict:
        def conv(v):
            if isinstance(v, (tuple, list)):
                return [conv(x) for x in v]
            if isinstance(v, Fraction):
                return str(v)
            return float(v) if isinstance(v, (int, float, np.floating)) and not isinstance(v, bool) else v

        return {"family": self.family, "orbit": self.orbit, "description": self.description,
                "constants": {k: conv(v) for k, v in self.constants.items()},
                "symmetry": list(self.symmetry), "normalized": conv(self.normalized),
                "residuals": {k: conv(v) for k, v in self.residuals.items()},
                "reason": self.reason}


class _Gap(Exception):
    """The point satisfies an invariant condition with no entry in the listed taxonomy."""


class _Tol:
    def __init__(self, tol: float, scale: float):
        self.tol, self.scale = tol, scale

    def eps(self, deg: int) -> float:
        return self.tol * self.scale ** deg

    def zero(self, v, deg: int = 1) -> bool:
        return abs(v) <= self.eps(deg)

    def pos(self, v, deg: int = 1) -> bool:
        return v > self.eps(deg)

    def neg(self, v, deg: int = 1) -> bool:
        return v < -self.eps(deg)


def _m1_match(q, T: _Tol):
    l, m, h, k = q
    zl, zh, zk = T.zero(l), T.zero(h), T.zero(k)
    if zh and zl and zk:
        return ("O1", {}) if T.pos(m) else None
    if zh and zl:
        if T.zero(m):
            raise _Gap("k-axis orbit {h=λ=μ=0, k≠0} is not in the listed taxonomy")
        diff = m - k
        if T.zero(diff):
            return ("O2_A0", {"A": 0}) if T.pos(k) else None
        if not T.pos(diff):
            return None
        prod = m * k
        if T.pos(prod, 2):
            return "O2_A+", {"A": diff ** 4 / prod ** 3, "sign_k": 1 if k > 0 else -1}
        if T.neg(prod, 2):
            return "O2_A-", {"A": diff ** 4 / prod ** 3}
        return None
    if zk:
        if T.neg(h) or T.neg(l):
            return None
        s = h * h + l * l
        norm = math.sqrt(float(s))
        return "O3_AP", {"A": (m * m + 4 * s) ** 2 / s ** 3, "P": (float(h) / norm, float(l) / norm)}
    if zh:
        if not (T.pos(k) and T.pos(l)):
            return None
        b = (3 * k * m + 2 * l * l - 3 * k * k) / (k * k * l)
        a = (l * l + 3 * k * k + b * k * k * l) ** 3 / (k ** 4 * l ** 4)
        return "O4_AB", {"A": a, "B": b}
    if zl:
        if not (T.pos(h) and T.pos(k)):
            return None
        a = k ** 4 * (m * k - h * h) / h ** 4
        b = (a * h ** 4 - h * h * k ** 4 - k ** 6) / (h ** 3 * k * k)
        return "O5_AB", {"A": a, "B": b}
    a = 3 * (h * h - l * l - k * m) / (h * l)
    b = 3 * k ** 4 * l / h ** 3
    c = k * k * (6 * h * h - 2 * l * l - 3 * m * k + 3 * k * k) / h ** 3
    if T.zero(c):
        raise _Gap("O6 level set C=0 is not in the listed taxonomy (needs B,C>0)")
    if not (T.pos(k) and T.pos(b, 2) and T.pos(c)):
        return None
    z = float(h) / (float(b) * float(l))
    af, bf, cf, lf = float(a), float(b), float(c), float(l)

    def lam_of(s):
        return s ** 3 * bf ** 2 / (s ** 4 * bf ** 2 + 3 + af * bf * s ** 2 + bf * cf * s ** 3)

    cands = [math.sqrt(3 * z), -math.sqrt(3 * z)]
    errs = [abs(lam_of(s) - lf) for s in cands]
    best = int(np.argmin(errs))
    return "O6_ABC", {"A": a, "B": b, "C": c, "s": cands[best], "_lambda_residual": errs[best]}


def _m2_match(q, T: _Tol):
    x, y, h, k, l, m = q
    if any(T.neg(v) for v in q):
        return None
    if T.zero(h) and T.zero(l) and T.zero(x):
        if T.zero(k) and T.zero(m):
            return None
        n = math.sqrt(float(y * y + k * k + m * m))
        return "O_l", {"l": (float(y) / n, float(k) / n, float(m) / n)}
    if all(T.pos(v) for v in q):
        a = (h + l) ** 3 / ((m + k) ** 2 + 4 * (h + l) ** 2)
        n = math.sqrt(float(x * x + h * h + l * l))
        return "O_Al", {"A": a, "l": (float(x) / n, float(h) / n, float(l) / n)}
    raise _Gap("boundary of O_Al (h+λ>0 with a vanishing coordinate) is not in the listed taxonomy")


def _m3_match(q, T: _Tol):
    l, m = q
    if T.zero(m):
        return ("mu0", {}) if T.pos(l) else None
    if not T.pos(m):
        return None
    diff = l * l - m * m
    if T.zero(diff, 2):
        return ("A>=0", {"A": 0}) if T.pos(l) else None
    a = diff ** 3 / m ** 4
    if diff > 0:
        return ("A>=0", {"A": a}) if T.pos(l) else None
    return "A<0", {"A": a}


_MATCHERS = {"m1": _m1_match, "m2": _m2_match, "m3": _m3_match}


def classify_orbit(p: FamilyPoint, tol: float = 1e-8) -> OrbitLabel:
    """Label the orbit through p, normalising with the family's sign symmetries.

    Group elements are tried in the listed generator order; the first image that
    satisfies a listed orbit's defining conditions wins. Points within the tolerance
    band of an inequality, or on invariant sets the taxonomy omits, are unclassified.
    """
    if p.is_origin():
        return OrbitLabel(p.family, "critical", normalized=tuple(p.params))
    scale = max(abs(float(v)) for v in p.params)
    T = _Tol(tol, scale)
    reason = "no listed orbit condition holds within tolerance"
    for names, sign in _group(p.family):
        q = tuple(s * v for s, v in zip(sign, p.params))
        try:
            hit = _MATCHERS[p.family](q, T)
        except _Gap as gap:
            reason = str(gap)
            continue
        if hit is None:
            continue
        orbit, consts = hit
        resid = {k[1:]: v for k, v in consts.items() if k.startswith("_")}
        consts = {k: v for k, v in consts.items() if not k.startswith("_")}
        return OrbitLabel(p.family, orbit, consts, names, q, resid)
    return OrbitLabel(p.family, None, normalized=tuple(p.params),
                      residuals={"tolerance": tol * scale}, reason=reason)


# --------------------------------------------------------------------------
# coframe evolution on 𝒟


@dataclass(frozen=True, eq=False)
class CoframeSeries:
    """Coframes e^i(t) = Σ_a U[t]_{ia} η^a, with η the coframe at the first sample.

    ``differentials`` are the co-integrated d(t); ``d_ref`` is d in the η coframe.
    """
    d_ref: LieDifferential
    times: np.ndarray
    coframes: np.ndarray
    differentials: np.ndarray

    @property
    def metrics(self) -> np.ndarray:
        """g_t in the η basis: the metric making e(t) orthonormal."""
        return np.einsum("tia,tib->tab", self.coframes, self.coframes)

    def differential(self, i: int) -> LieDifferential:
        return LieDifferential.from_matrix(self.differentials[i])

    def compatibility_residual(self) -> float:
        """max_t |d(t) − d_ref rewritten in the coframe e(t)|."""
        worst = 0.0
        for u, dm in zip(self.coframes, self.differentials):
            moved = mu_action(u.T.copy(), self.d_ref).matrix
            worst = max(worst, float(np.max(np.abs(moved - dm))))
        return worst


def _coframe_rhs(_t, state):
    dm = state[:50].reshape(10, 5)
    u = state[50:].reshape(5, 5)
    xhat = gauge_from_matrix(dm)
    b = xhat.T
    ddot = dm.dot(b) - derivation2(b).dot(dm)
    return np.concatenate([ddot.ravel(), (xhat @ u).ravel()])


def coframe_evolve(d0: LieDifferential, times, config: IntegratorConfig | None = None) -> CoframeSeries:
    """Co-integrate d' = X̃_d and u' = u∘X̂_d, sampling exactly at ``times``.

    times[0] is the start; each later sample is the endpoint of its own RK45 segment,
    so no interpolation error enters finite differences of the samples.
    """
    from .torsion import hypo_torsion
    config = config or IntegratorConfig(rtol=1e-12, atol=1e-13)
    hypo_torsion(d0.numeric())  # raises on non-hypo input
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1 or not np.all(np.isfinite(times)):
        raise ValueError("times must be a non-empty finite 1-d sequence")
    state = np.concatenate([np.asarray(d0.numeric().matrix, float).ravel(), np.eye(5).ravel()])
    out = [state.copy()]
    for a, b in zip(times[:-1], times[1:]):
        if a == b:
            out.append(state.copy())
            continue
        solver = RK45(_coframe_rhs, a, state, b, rtol=config.rtol, atol=config.atol,
                      max_step=config.max_step)
        steps = 0
        while solver.status == "running":
            msg = solver.step()
            steps += 1
            if solver.status == "failed" or steps > config.max_steps:
                partial = _series(d0, times[:len(out)], out)
                raise IntegrationError(msg or "step budget exhausted", partial)
            if np.max(np.abs(solver.y)) > config.ceiling:
                raise IntegrationError("coframe blow-up", _series(d0, times[:len(out)], out))
        state = solver.y.copy()
        out.append(state.copy())
    return _series(d0, times, out)


def _series(d0, times, states) -> CoframeSeries:
    st = np.array(states)
    return CoframeSeries(d0.numeric(), np.asarray(times, float), st[:, 50:].reshape(-1, 5, 5),
                         st[:, :50].reshape(-1, 10, 5))

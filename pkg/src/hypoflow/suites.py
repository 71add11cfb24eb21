"""Seeded self-checks run by ``hypoflow verify``.

Each suite returns a list of Check records; a suite passes when all of them do.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

import numpy as np

from .exterior import Form, MultiVector, basis, big_a, big_a_star, contract, pairing, perm_sign, wedge
from .exterior import top_scalar
from .flow import FamilyPoint, random_point
from .reference import gauge_m1, gauge_m2, gauge_m3, trace_formula
from .torsion import gauge_of

__all__ = ["Check", "SUITES", "run_suite"]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    bound: float

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.value:.3g} (bound {self.bound:g})"


def _check(name, value, bound) -> Check:
    value = float(value)
    return Check(name, value <= bound, value, bound)


def _rand_form(rng, k, dim=5):
    return Form(dim, k, rng.normal(size=comb(dim, k)))


def hodge_oracle(k: int) -> np.ndarray:
    """Standard Hodge star on Λ^k of ℝ⁵ as a matrix, from e^I ↦ sign(I, I^c) e^{I^c}."""
    src, dst = basis(5, k), basis(5, 5 - k)
    pos = {I: n for n, I in enumerate(dst)}
    m = np.zeros((len(dst), len(src)))
    for c, I in enumerate(src):
        comp = tuple(i for i in range(5) if i not in I)
        m[pos[comp], c] = perm_sign(I + comp)
    return m


def exterior_identities(rng, n: int = 200) -> list[Check]:
    worst = {"pair": 0.0, "sym": 0.0, "odd": 0.0, "right": 0.0, "def": 0.0, "anti": 0.0}
    for _ in range(n):
        k = int(rng.integers(0, 6))
        g, b = _rand_form(rng, k), _rand_form(rng, 5 - k)
        bw = top_scalar(wedge(b, g))
        s = max(1.0, abs(bw), np.abs(g.coeffs).max() * np.abs(b.coeffs).max())
        worst["pair"] = max(worst["pair"], abs(factorial(k) * pairing(g, big_a(b)) - bw) / s)
        worst["sym"] = max(worst["sym"], abs(factorial(5 - k) * pairing(b, big_a(g))
                                             - factorial(k) * pairing(g, big_a(b))) / s)
        m = MultiVector(5, k, rng.normal(size=comb(5, k)))
        ref = factorial(k) * pairing(g, m)
        worst["def"] = max(worst["def"], abs(top_scalar(wedge(m, big_a(g))) - ref) / s,
                           abs(top_scalar(wedge(g, big_a_star(m))) - ref) / s)
        if k >= 1:
            y = MultiVector(5, 1, rng.normal(size=5))
            rhs = big_a(contract(y, g)).coeffs
            sc = max(1.0, np.abs(rhs).max())
            worst["right"] = max(worst["right"], np.abs(wedge(big_a(g), y).coeffs - rhs).max() / sc)
            if k % 2 == 1:
                worst["odd"] = max(worst["odd"], np.abs(wedge(y, big_a(g)).coeffs - rhs).max() / sc)
        # contraction is an anti-derivation
        k2 = int(rng.integers(0, 5 - k + 1)) if k < 5 else 0
        a, c = _rand_form(rng, k), _rand_form(rng, k2)
        if k + k2 >= 1 and k + k2 <= 5:
            x = MultiVector(5, 1, rng.normal(size=5))
            lhs = contract(x, wedge(a, c)).coeffs
            parts = []
            if k >= 1:
                parts.append(wedge(contract(x, a), c).coeffs)
            if k2 >= 1:
                parts.append((-1) ** k * wedge(a, contract(x, c)).coeffs)
            rhs2 = sum(parts) if parts else 0 * lhs
            worst["anti"] = max(worst["anti"], np.abs(lhs - rhs2).max() / max(1.0, np.abs(lhs).max()))
    star = 0.0
    for k in range(6):
        ora = hodge_oracle(k)
        for c, I in enumerate(basis(5, k)):
            e = Form.from_terms(5, {tuple(i + 1 for i in I): 1})
            star = max(star, np.abs(big_a(e).coeffs - ora[:, c]).max())
    return [
        _check("k!<g, h> = h ^ A g = g ^ A* h", worst["def"], 1e-12),
        _check("k!<g, A b> = b ^ g", worst["pair"], 1e-12),
        _check("(5-k)!<A g, b> = k!<g, A b>", worst["sym"], 1e-12),
        _check("Y ^ A(psi) = A(Y contract psi), odd k", worst["odd"], 1e-12),
        _check("A(psi) ^ Y = A(Y contract psi), all k", worst["right"], 1e-12),
        _check("contraction is an anti-derivation", worst["anti"], 1e-12),
        _check("A equals the Hodge star on basis forms", star, 0.0),
    ]


_REFERENCE = {"m1": gauge_m1, "m2": gauge_m2, "m3": gauge_m3}


def gauge_matrices(rng, n: int = 50) -> list[Check]:
    out = []
    for fam, ref in _REFERENCE.items():
        worst = 0.0
        for _ in range(n):
            p = random_point(fam, rng)
            worst = max(worst, np.abs(gauge_of(p.differential()).q - ref(*p.params)).max())
        out.append(_check(f"gauge matrix on {fam}, {n} random points", worst, 1e-10))
    return out


def trace_identities(rng, n: int = 50) -> list[Check]:
    out = []
    for fam in _REFERENCE:
        worst = 0.0
        for _ in range(n):
            p = random_point(fam, rng)
            worst = max(worst, abs(gauge_of(p.differential()).trace() - trace_formula(fam, p.params)))
        out.append(_check(f"tr X^ on {fam}, {n} random points", worst, 1e-12))
        # exact arithmetic at small rational points
        bad = 0
        for _ in range(5):
            if fam == "m2":
                a, b, c = (Fraction(int(v), int(w)) for v, w in zip(rng.integers(-5, 6, 3), rng.integers(1, 4, 3)))
                params = (a * c, b * c, a, b, a * c * c, b * c * c)
            else:
                params = tuple(Fraction(int(v), int(w)) for v, w in
                               zip(rng.integers(-5, 6, 6), rng.integers(1, 4, 6)))[:2 if fam == "m3" else 4]
            p = FamilyPoint(fam, params)
            bad += gauge_of(p.differential(exact=True)).trace() != trace_formula(fam, params)
        out.append(_check(f"tr X^ on {fam}, exact rational points (mismatches)", bad, 0))
    return out


SUITES = {
    "exterior-identities": exterior_identities,
    "gauge-matrices": gauge_matrices,
    "trace-identities": trace_identities,
}


def run_suite(name: str, seed: int = 0) -> list[Check]:
    names = list(SUITES) if name == "all" else [name]
    out = []
    for s in names:
        out.extend(SUITES[s](np.random.default_rng([seed, list(SUITES).index(s)])))
    return out

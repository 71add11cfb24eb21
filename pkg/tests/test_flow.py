from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import assume, given
from hypothesis import strategies as st

from hypoflow.flow import (FAMILY_PARAMS, FamilyError, FamilyPoint, IntegrationError,
                           IntegratorConfig, classify_orbit, coframe_evolve, family_rhs,
                           first_integrals, integral_table, integrate, random_point,
                           reduced_velocity, su2_algebra)
from hypoflow.liealg import m3_point, mu_star
from hypoflow.reference import flow_m1_unprojected, gauge_m1
from hypoflow.su2 import is_hypo
from hypoflow.torsion import flow_rhs, gauge_from_matrix
from strategies import params


# -- reduced vector fields ------------------------------------------------------

@pytest.mark.parametrize("fam", ["m1", "m2", "m3"])
def test_reduced_velocity_matches_closed_form(fam, rng):
    for _ in range(20):
        p = random_point(fam, rng)
        rv = reduced_velocity(p)
        assert rv.residual < 1e-12
        assert np.allclose(rv.velocity, family_rhs(p), atol=1e-12)


def test_m3_needs_no_projection(rng):
    p = random_point("m3", rng)
    rv = reduced_velocity(p, project=False)
    assert rv.residual < 1e-13 and rv.gauge.size == 0


def test_m1_leaves_family_without_projection(rng):
    p = random_point("m1", rng)
    assert reduced_velocity(p, project=False).residual > 1e-3


def test_m1_unprojected_flow_against_reference(rng):
    for _ in range(10):
        p = random_point("m1", rng)
        assert np.allclose(flow_rhs(p.differential()).matrix,
                           flow_m1_unprojected(*p.params).matrix, atol=1e-12)


def test_su2_algebra_is_skew_and_closed():
    basis = su2_algebra()
    m = np.array([b.ravel() for b in basis]).T
    for a in basis:
        assert np.allclose(a, -a.T, atol=1e-12)
        assert np.allclose(a[:, 4], 0) and np.allclose(a[4], 0)
        for b in basis:
            c = a @ b - b @ a
            coef, *_ = np.linalg.lstsq(m, c.ravel(), rcond=None)
            assert np.allclose(m @ coef, c.ravel(), atol=1e-12)


@pytest.mark.parametrize("fam", ["m1", "m2", "m3"])
def test_rhs_is_quadratic(fam, rng):
    p = random_point(fam, rng)
    c = 1.7
    scaled = FamilyPoint(fam, tuple(c * v for v in p.params))
    assert np.allclose(family_rhs(scaled), c * c * family_rhs(p))


def test_rhs_exact_mode():
    v = family_rhs(FamilyPoint("m3", (Fraction(1), Fraction(2))))
    assert list(v) == [Fraction(6), Fraction(6)]


def test_family_point_validation():
    with pytest.raises(FamilyError):
        FamilyPoint("m4", (1, 2))
    with pytest.raises((FamilyError, ValueError)):
        FamilyPoint("m3", (1, 2, 3))


# -- first integrals --------------------------------------------------------------

_RESTRICTIONS = {"h0": {"h": 0}, "lambda0": {"lambda": 0}, "k0": {"k": 0}, "hl0": {"h": 0, "lambda": 0}}


@pytest.mark.parametrize("fam", ["m1", "m2", "m3"])
def test_integrals_are_conserved_symbolically(fam):
    names = FAMILY_PARAMS[fam]
    syms = sp.symbols(" ".join(n if n != "lambda" else "lam" for n in names))
    from hypoflow.flow import _RHS
    field = _RHS[fam](syms)
    for integral in integral_table(fam):
        expr = sp.sympify(integral.expr(syms))
        deriv = sum(sp.diff(expr, s) * f for s, f in zip(syms, field))
        suffix = integral.name.split("_", 1)[1] if "_" in integral.name else ""
        subs = {syms[names.index(k)]: v for k, v in _RESTRICTIONS.get(suffix, {}).items()}
        assert sp.simplify(sp.together(deriv).subs(subs)) == 0, integral.name


def test_restricted_sets_are_invariant():
    from hypoflow.flow import _RHS
    lam, mu, h, k = sp.symbols("lam mu h k")
    f = _RHS["m1"]((lam, mu, h, k))
    assert sp.expand(f[2].subs(h, 0)) == 0
    assert sp.expand(f[0].subs(lam, 0)) == 0
    assert sp.expand(f[3].subs(k, 0)) == 0


def test_m2_integral_value():
    p = FamilyPoint("m2", tuple(Fraction(v) for v in (0, 0, 1, 0, 0, 0)))
    assert first_integrals(p).values["A"] == Fraction(1, 4)


def test_m3_integral_value():
    p = FamilyPoint("m3", (Fraction(1), Fraction(2)))
    assert first_integrals(p).values["A"] == Fraction(-27, 16)


def test_integral_domains():
    vals = first_integrals(FamilyPoint("m1", (1.0, 0.5, 0.0, 1.0))).defined()
    assert "A" not in vals and "B_h0" in vals and "A_h0" in vals


# -- integration ---------------------------------------------------------------------

@pytest.mark.parametrize("fam, p0, t1", [
    ("m1", (0.3, 0.8, 0.5, 0.6), 0.5),
    ("m2", (0.6, 0.3, 1.0, 0.5, 0.36, 0.18), 0.2),
    ("m3", (1.0, 2.0), 0.05),
])
def test_integrals_drift_small(fam, p0, t1):
    tr = integrate(FamilyPoint(fam, p0), (0, t1))
    assert tr.drift() and max(tr.drift().values()) < 1e-7
    assert np.max(tr.hypo_residual) < 1e-9
    if fam == "m2":
        assert tr.membership_residual() < 1e-9


def test_m3_axis_closed_form():
    lam0 = 0.5
    tr = integrate(FamilyPoint("m3", (lam0, 0.0)), (0, 0.9))
    t = tr.times
    assert np.allclose(tr.states[:, 0], lam0 / (1 - 2 * lam0 * t), rtol=1e-8)
    assert np.allclose(tr.states[:, 1], 0)


def test_o_l_blowup_time():
    # on x = h = λ = 0, s = μ + k obeys s' = 3s²/2, so s₀ = 2 blows up at t = 1/3
    tr = integrate(FamilyPoint("m2", (0, 1, 0, 1, 0, 1)), (0, 1),
                   IntegratorConfig(ceiling=1e8))
    assert tr.blowup
    assert tr.stats["t_end"] == pytest.approx(1 / 3, abs=1e-7)


def test_backward_integration_and_dense():
    p = FamilyPoint("m1", (0.3, 0.8, 0.5, 0.6))
    tr = integrate(p, (0, -0.4))
    assert np.all(np.diff(tr.times) < 0)
    mid = integrate(p, (0, -0.2)).states[-1]
    assert np.allclose(tr.dense(-0.2), mid, atol=1e-8)


def test_step_budget_keeps_partial():
    with pytest.raises(IntegrationError) as exc:
        integrate(FamilyPoint("m1", (0.3, 0.8, 0.5, 0.6)), (0, 1), IntegratorConfig(max_steps=3))
    assert len(exc.value.partial.times) == 4


def test_zero_span_and_config_validation():
    tr = integrate(FamilyPoint("m3", (1.0, 0.0)), (0, 0))
    assert len(tr.times) == 1
    with pytest.raises(ValueError):
        IntegratorConfig(rtol=0)
    with pytest.raises(ValueError):
        integrate(FamilyPoint("m3", (1.0, 0.0)), (0, float("inf")))


def test_critical_point_is_stationary():
    tr = integrate(FamilyPoint("m1", (0, 0, 0, 0)), (0, 1))
    assert np.all(tr.states == 0)


def test_serialisation_is_deterministic():
    p = FamilyPoint("m3", (1.0, 2.0))
    a, b = integrate(p, (0, 0.05)), integrate(p, (0, 0.05))
    assert a.to_json() == b.to_json() and a.to_csv() == b.to_csv()


# -- orbit classification ----------------------------------------------------------

@pytest.mark.parametrize("fam, p, orbit", [
    ("m1", (0, 1, 0, 0), "O1"),
    ("m1", (0, 1, 0, 1), "O2_A0"),
    ("m1", (1, 0, 0, 1), "O4_AB"),
    ("m1", (0, 0, 0, 1), None),
    ("m1", (0, 0, 0, 0), "critical"),
    ("m3", (1, 2), "A<0"),
    ("m3", (1, 0), "mu0"),
    ("m2", (1, 1, 1, 1, 1, 1), "O_Al"),
    ("m2", (0, 1, 0, 1, 0, 1), "O_l"),
])
def test_classification_examples(fam, p, orbit):
    assert classify_orbit(FamilyPoint(fam, p)).orbit == orbit


def test_o4_constants():
    lab = classify_orbit(FamilyPoint("m1", tuple(Fraction(v) for v in (1, 0, 0, 1))))
    assert lab.constants == {"A": 27, "B": -1}


def test_m3_constant():
    lab = classify_orbit(FamilyPoint("m3", (Fraction(1), Fraction(2))))
    assert lab.constants["A"] == Fraction(-27, 16)


@given(params(4, -2, 2), st.sampled_from(range(8)))
def test_classification_is_symmetry_invariant(p, g):
    assume(min(abs(v) for v in p) > 1e-2)
    from hypoflow.flow import _group
    sign = list(_group("m1"))[g][1]
    a = classify_orbit(FamilyPoint("m1", p))
    b = classify_orbit(FamilyPoint("m1", tuple(s * v for s, v in zip(sign, p))))
    assert a.orbit == b.orbit


@given(params(4, 0.1, 2))
def test_orbit_constant_is_conserved(p):
    lab0 = classify_orbit(FamilyPoint("m1", p))
    assume(lab0.orbit == "O6_ABC")
    tr = integrate(FamilyPoint("m1", p), (0, 0.05))
    lab1 = classify_orbit(FamilyPoint("m1", tuple(tr.states[-1])))
    assert lab1.orbit == "O6_ABC"
    for key in ("A", "B", "C"):
        assert float(lab1.constants[key]) == pytest.approx(float(lab0.constants[key]), rel=1e-6)


# -- coframe evolution ----------------------------------------------------------------

def test_coframe_m3_matches_reduced_flow():
    p = FamilyPoint("m3", (1.0, 2.0))
    times = np.linspace(0, 0.05, 6)
    cf = coframe_evolve(p.differential(), times)
    for i, t in enumerate(times):
        lam, mu = integrate(p, (0, t)).states[-1] if t else p.params
        assert np.allclose(cf.differentials[i], m3_point(lam, mu).matrix, atol=1e-8)
    assert cf.compatibility_residual() < 1e-9


def test_coframe_m1_matches_up_to_su2(rng):
    p = FamilyPoint("m1", (0.3, 0.8, 0.5, 0.6))
    times = np.linspace(0, 0.3, 4)
    cf = coframe_evolve(p.differential(), times)
    for i, t in enumerate(times):
        params_t = integrate(p, (0, t)).states[-1] if t else p.params
        ev_cf = np.linalg.eigvalsh(gauge_from_matrix(cf.differentials[i]))
        ev_red = np.linalg.eigvalsh(gauge_m1(*params_t))
        assert np.allclose(ev_cf, ev_red, atol=1e-7)
        assert is_hypo(cf.differential(i)) < 1e-8
    assert cf.compatibility_residual() < 1e-8


def test_coframe_metric_derivative():
    p = FamilyPoint("m3", (1.0, 2.0))
    h = 1e-4
    cf = coframe_evolve(p.differential(), [0, h, 2 * h])
    g = cf.metrics
    fd = (g[2] - g[0]) / (2 * h)
    u, q = cf.coframes[1], gauge_from_matrix(cf.differentials[1])
    assert np.allclose(fd, 2 * u.T @ q @ u, atol=1e-6)


def test_coframe_rejects_non_hypo():
    from hypoflow.liealg import LieDifferential
    from hypoflow.torsion import TorsionError
    with pytest.raises(TorsionError):
        coframe_evolve(LieDifferential.from_terms([{}, {}, {}, {}, {"13": 1}]), [0, 1])


def test_su2_directions_stay_hypo(rng):
    # the hypo condition is linear in d and SU(2)-invariant
    for fam in ("m1", "m2"):
        d = random_point(fam, rng).differential()
        for xi in su2_algebra():
            assert is_hypo(mu_star(xi, d)) < 1e-12

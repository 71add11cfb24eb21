import numpy as np
import pytest
from hypothesis import given

from hypoflow.exterior import Form, form, wedge
from hypoflow.liealg import LieDifferential, m1_point, m2_point, m3_point
from hypoflow.su2 import (DegenerateVolume, HamiltonianPoint, InvalidStructure, SU2Triple,
                          alpha_of, check_triple, dv, dv4, hypo_residual_matrix, is_hypo,
                          metric_and_j, skew_gradient, standard_quadruple, standard_triple,
                          v_squared, v_squared4, validate, volume, x_of, x_of4)
from strategies import params

STD = standard_triple()


def rand_pos_gl(rng):
    while True:
        g = rng.normal(size=(5, 5)) + 2.5 * np.eye(5)
        if np.linalg.det(g) > 0.1:
            return g


def coframe_form(cof, terms):
    """Σ c · e'^{i}∧e'^{j}∧… with e'^i the i-th column of ``cof``."""
    out = None
    for idx, c in terms.items():
        w = Form(5, 1, cof[:, int(idx[0]) - 1])
        for ch in idx[1:]:
            w = wedge(w, Form(5, 1, cof[:, int(ch) - 1]))
        w = w * c
        out = w if out is None else out + w
    return out


# -- pointwise quantities -----------------------------------------------------

def test_standard_values():
    assert np.allclose(x_of(STD.omega1).coeffs, [0, 0, 0, 0, 2])
    assert x_of(STD.omega1).density == 1
    assert np.allclose(alpha_of(STD.psi2).coeffs, [0, 0, 0, 0, 2])
    assert np.allclose(alpha_of(STD.psi3).coeffs, [0, 0, 0, 0, 2])
    assert v_squared(STD.omega1, STD.psi2) == pytest.approx(4.0)
    ups = wedge(STD.omega1, STD.omega1) * 0.5
    assert np.allclose(x_of4(ups).coeffs, x_of(STD.omega1).coeffs)
    assert v_squared4(STD.psi3, ups) == pytest.approx(4.0)


def test_v_squared_bidegree(rng):
    t, s = 1.7, -0.6
    base = v_squared(STD.omega1, STD.psi2)
    assert v_squared(STD.omega1 * t, STD.psi2 * s) == pytest.approx(base * t * t * s * s)


def test_volume_errors():
    assert volume(4.0) == 2.0 and volume(4.0, -1) == -2.0
    for bad in (0.0, -1.0, 1e-30):
        with pytest.raises(DegenerateVolume):
            volume(bad)


def test_grade_guards():
    with pytest.raises(ValueError):
        SU2Triple(STD.psi2, STD.psi2, STD.psi3)
    with pytest.raises(ValueError):
        alpha_of(STD.omega1)
    with pytest.raises(ValueError):
        x_of4(STD.psi2)


# -- validity -------------------------------------------------------------------

def test_standard_validates_to_standard_quadruple():
    q = validate(STD)
    ref = standard_quadruple()
    for a, b in zip((q.alpha, q.omega1, q.omega2, q.omega3),
                    (ref.alpha, ref.omega1, ref.omega2, ref.omega3)):
        assert a.allclose(b, 1e-14)
    assert check_triple(standard_triple(exact=True)).accepted


@pytest.mark.parametrize("triple", [
    SU2Triple(STD.omega1, STD.psi3, STD.psi2),
    SU2Triple(STD.omega1 * -1, STD.psi2, STD.psi3),
])
def test_orientation_flips_are_rejected(triple):
    rep = check_triple(triple)
    assert not rep.accepted
    ok, lo = rep.checks["omega1(Y,Z) >= 0 on L"]
    assert not ok and lo < 0
    # the algebraic equations still hold
    assert all(ok for name, (ok, _) in rep.checks.items() if name != "omega1(Y,Z) >= 0 on L")
    with pytest.raises(InvalidStructure):
        validate(triple)


def test_incompatible_forms_rejected():
    t = SU2Triple(form({"12": 1, "34": 1, "14": 1}), STD.psi2, STD.psi3)
    rep = check_triple(t)
    assert rep.checks["omega1 ^ psi2 = 0"][0]
    assert not rep.checks["omega1 ^ psi3 = 0"][0]
    assert not rep.accepted


def test_degenerate_psi():
    t = SU2Triple(STD.omega1, form("123"), form("123"))
    with pytest.raises((DegenerateVolume, InvalidStructure)):
        validate(t)


def test_random_pullbacks_validate_to_pulled_back_quadruple(rng):
    ref = standard_quadruple()
    for _ in range(100):
        g = rand_pos_gl(rng)
        q = validate(STD.pulled_back(g))
        pulled = [ref.alpha, ref.omega1, ref.omega2, ref.omega3]
        from hypoflow.su2 import pull_back
        for got, want in zip((q.alpha, q.omega1, q.omega2, q.omega3), pulled):
            want = pull_back(want, g)
            assert np.allclose(got.coeffs, want.coeffs, atol=1e-9 * max(1, np.abs(want.coeffs).max()))


# -- metric and complex structures ---------------------------------------------

def test_metric_and_j_standard():
    fr = metric_and_j(standard_quadruple())
    assert np.allclose(fr.metric, np.eye(5))
    assert np.allclose(fr.reeb, [0, 0, 0, 0, 1])


def test_metric_and_j_properties(rng):
    for _ in range(20):
        g = rand_pos_gl(rng)
        q = validate(STD.pulled_back(g))
        fr = metric_and_j(q)
        assert np.all(np.linalg.eigvalsh(fr.metric) > 0)
        # the adapted coframe rebuilds every form of the quadruple
        cof = fr.coframe
        assert np.allclose(coframe_form(cof, {"5": 1}).coeffs, q.alpha.coeffs, atol=1e-9)
        for w, terms in ((q.omega1, {"12": 1, "34": 1}), (q.omega2, {"13": 1, "42": 1}),
                         (q.omega3, {"14": 1, "23": 1})):
            assert np.allclose(coframe_form(cof, terms).coeffs, w.coeffs, atol=1e-9)
        # adapted frame is orthonormal for the metric on vectors
        gv = fr.metric
        assert np.allclose(fr.frame.T @ gv @ fr.frame, np.eye(5), atol=1e-9)
        proj = np.eye(5) - np.outer(fr.reeb, q.alpha.coeffs)
        j1, j2, j3 = fr.j_vectors
        for j in (j1, j2, j3):
            assert np.allclose(j @ j, -proj, atol=1e-9)
            assert np.allclose(j.T @ gv @ j, proj.T @ gv @ proj, atol=1e-9)
        assert np.allclose(j1 @ j2, j3, atol=1e-9) or np.allclose(j1 @ j2, -j3, atol=1e-9)


# -- hypo condition --------------------------------------------------------------

@given(params(4))
def test_m1_is_hypo(p):
    d = m1_point(*p)
    assert is_hypo(d) < 1e-12
    assert hypo_residual_matrix(d.matrix) < 1e-12


@given(params(2))
def test_m3_is_hypo(p):
    assert is_hypo(m3_point(*p)) < 1e-12


def test_m2_is_hypo():
    a, b, c = 0.7, -0.4, 1.3
    assert is_hypo(m2_point(a * c, b * c, a, b, a * c * c, b * c * c)) < 1e-12


def test_non_hypo_detected(rng):
    d = LieDifferential.from_terms([{}, {}, {}, {}, {"13": 1}])
    assert is_hypo(d) == pytest.approx(1.0)
    m = rng.normal(size=(10, 5))
    assert hypo_residual_matrix(m) == pytest.approx(is_hypo(LieDifferential.from_matrix(m)))


# -- variations of the volume ---------------------------------------------------

def _fd(f, h=1e-6):
    return (f(h) - f(-h)) / (2 * h)


def test_dv_matches_finite_difference(rng):
    V = lambda w, p: np.sqrt(float(v_squared(w, p)))
    for _ in range(10):
        sigma = Form(5, 2, rng.normal(size=10))
        phi = Form(5, 3, rng.normal(size=10))
        fd = _fd(lambda h: V(STD.omega1 + sigma * h, STD.psi2 + phi * h))
        assert dv(STD.omega1, STD.psi2, sigma, phi) == pytest.approx(fd, rel=1e-6, abs=1e-8)


def test_dv_euler_relation():
    # V has bidegree (1, 1), so dV(ω, ψ) = 2V
    assert dv(STD.omega1, STD.psi2, STD.omega1, STD.psi2) == pytest.approx(4.0)


def test_dv4_matches_finite_difference(rng):
    ups = wedge(STD.omega1, STD.omega1) * 0.5
    V = lambda p, u: np.sqrt(float(v_squared4(p, u)))
    for _ in range(10):
        phi = Form(5, 3, rng.normal(size=10))
        sig = Form(5, 4, rng.normal(size=5))
        fd = _fd(lambda h: V(STD.psi3 + phi * h, ups + sig * h))
        assert dv4(STD.psi3, ups, phi, sig) == pytest.approx(fd, rel=1e-6, abs=1e-8)


def test_hamiltonian_point_domain():
    with pytest.raises(ValueError):
        HamiltonianPoint(STD.omega1, STD.psi2, STD.psi3, Form(5, 4, np.zeros(5)))


@given(params(2))
def test_skew_gradient_on_m3(p):
    lam, mu = p
    pt = HamiltonianPoint.from_triple(STD)
    a, b, c, e = skew_gradient(pt, m3_point(lam, mu))
    # only dα ≠ 0: dα = (λ+μ)e12 + (λ−μ)e34 and ω₁∧dα = 2λ e1234
    assert a.allclose(form({"12": -(lam + mu), "34": -(lam - mu)}), 1e-12)
    assert b.is_zero(1e-12) and c.is_zero(1e-12)
    assert e.allclose(form({"1234": -2 * lam}), 1e-12)

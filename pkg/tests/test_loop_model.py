import math

import numpy as np
import pytest

from rfobkit.design import EnvClass
from rfobkit.loop_model import (
    PhiPoly,
    Polynomial,
    RationalTf,
    asymptote_angles,
    closed_loop_char_poly,
    closed_loop_force_tf,
    gain_root_locus,
    open_loop_general,
    poles,
    rhp_zero_check,
    step_response,
)
from rfobkit.observers import DobConfig, RfobConfig
from rfobkit.plant import EnvImpedance, PlantParams

PP = PlantParams(M_m=3.02, K_F=0.5)
ENV = EnvImpedance(D_env=2.0, K_env=6500.0)


def dob(M_mn=3.02, g=500.0):
    return DobConfig(M_mn=M_mn, K_Fn=0.5, g_dob=g, g_v=1000.0)


def rfob(M_hat=3.02, K_hat=0.5, g=500.0):
    return RfobConfig(M_hat=M_hat, K_F_hat=K_hat, g_rfob=g)


# ---------------------------------------------------------------------------
# polynomial plumbing
# ---------------------------------------------------------------------------

def test_polynomial_mul_add():
    p = Polynomial.of(1.0, 2.0).mul(Polynomial.of(1.0, 3.0))
    assert p.coeffs == (1.0, 5.0, 6.0)
    q = p.add(Polynomial.of(1.0, 0.0, 0.0))
    assert q.coeffs == (2.0, 5.0, 6.0)


def test_polynomial_eval_and_monic():
    p = Polynomial.of(2.0, -4.0, 2.0)
    assert p(1.0) == 0.0
    assert p.monic().coeffs == (1.0, -2.0, 1.0)


def test_poles_simple():
    assert poles(Polynomial.of(1.0, 2.0, 1.0)) == pytest.approx([-1.0, -1.0])
    got = sorted(z.real for z in poles(Polynomial.of(1.0, -6.0, 11.0, -6.0)))
    assert got == pytest.approx([1.0, 2.0, 3.0], abs=1e-9)
    assert poles(Polynomial.of(2.0, 4.0)) == [pytest.approx(-2.0)]
    with pytest.raises(ValueError):
        poles(Polynomial.of(1.0, 0.0, 0.0, 0.0, 1.0))


def test_poles_random_cubic_vs_companion():
    rng = np.random.default_rng(3)
    for _ in range(200):
        c = rng.uniform(-2.0, 2.0, size=4)
        c[0] = c[0] if abs(c[0]) > 0.3 else 1.0
        mine = sorted(poles(Polynomial.of(*c)), key=lambda z: (z.real, z.imag))
        ref = sorted((complex(z) for z in np.roots(c)), key=lambda z: (z.real, z.imag))
        for a, b in zip(mine, ref):
            assert abs(a - b) < 1e-8


def test_poles_invariant_under_scaling():
    p = Polynomial.of(1.0, 4.0, 5.0, 6.0)
    r1 = sorted(poles(p), key=lambda z: (z.real, z.imag))
    r2 = sorted(poles(p.scaled(37.5)), key=lambda z: (z.real, z.imag))
    for a, b in zip(r1, r2):
        assert abs(a - b) < 1e-9


# ---------------------------------------------------------------------------
# closed-loop characteristic polynomials
# ---------------------------------------------------------------------------

def test_char_poly_damping_reference():
    env = EnvImpedance(D_env=2.0)
    p = closed_loop_char_poly(EnvClass.PURE_DAMPING, 0.81, 500.0, 126.24, env)
    assert p.coeffs[0] == 1.0
    assert p.coeffs[1] == pytest.approx(502.469, rel=1e-5)
    assert p.coeffs[2] == pytest.approx(126240.0, rel=1e-4)


def test_char_poly_stiffness_cf_zero_limit():
    env = EnvImpedance(K_env=6500.0)
    p = closed_loop_char_poly(EnvClass.PURE_STIFFNESS, 3.02, 100.0, 1e-12, env)
    roots = sorted(poles(p), key=lambda z: abs(z))
    assert abs(roots[0]) < 1e-6  # root at the origin when the force gain vanishes


def test_char_poly_case_env_mismatch():
    with pytest.raises(ValueError):
        closed_loop_char_poly(EnvClass.PURE_DAMPING, 1.0, 100.0, 1.0, ENV)
    with pytest.raises(ValueError):
        closed_loop_char_poly(EnvClass.PURE_STIFFNESS, 1.0, 100.0, 1.0, ENV)


def test_closed_loop_dc_gain_is_one():
    for case, env in (
        (EnvClass.PURE_DAMPING, EnvImpedance(D_env=2.0)),
        (EnvClass.PURE_STIFFNESS, EnvImpedance(K_env=6500.0)),
        (EnvClass.DAMPING_STIFFNESS, ENV),
    ):
        tf = closed_loop_force_tf(case, 3.02, 80.0, 0.05, env)
        assert abs(tf(0.0) - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# open loop structure
# ---------------------------------------------------------------------------

def test_open_loop_perfect_identification_relative_degree_two():
    L = open_loop_general(PP, dob(), rfob(), ENV, C_f=1.0)
    assert L.relative_degree == 2
    assert asymptote_angles(L) == (-90.0, 90.0)


def test_open_loop_perfect_identification_different_cutoffs():
    L = open_loop_general(PP, dob(g=500.0), rfob(g=800.0), ENV, C_f=1.0)
    assert L.relative_degree == 2
    assert asymptote_angles(L) == (-90.0, 90.0)


def test_open_loop_mismatch_relative_degree_one():
    L = open_loop_general(PP, dob(), rfob(M_hat=4.0), ENV, C_f=1.0)
    assert L.relative_degree == 1
    assert asymptote_angles(L) == (180.0,)


def test_open_loop_rejects_empty_environment():
    with pytest.raises(ValueError):
        open_loop_general(PP, dob(), rfob(), EnvImpedance(), C_f=1.0)


def test_open_loop_single_origin_pole():
    for env in (ENV, EnvImpedance(D_env=2.0), EnvImpedance(K_env=6500.0)):
        for m_hat in (3.02, 4.0):
            L = open_loop_general(PP, dob(), rfob(M_hat=m_hat), env, C_f=1.0)
            den = L.den.coeffs
            assert den[-1] == 0.0 and den[-2] != 0.0  # exactly one integrator


def test_open_loop_matches_reduced_form_when_perfect():
    # perfect identification and equal cutoffs: L = C_f g M alpha (D s + K) / (s (M s (s+alpha g) + D s + K))
    alpha = 2.0
    d = dob(M_mn=alpha * 3.02, g=500.0)
    L = open_loop_general(PP, d, rfob(M_hat=3.02 / 1.0), ENV, C_f=1.25)
    # beta = M_mn K_hat / (M_hat K_Fn) = 2 when M_hat = M_m: perfect ratio match
    for w in (1.0, 10.0, 100.0, 1000.0):
        s = 1j * w
        expected = 1.25 * 500.0 * 3.02 * alpha * (2.0 * s + 6500.0) / (
            s * (3.02 * s * (s + alpha * 500.0) + 2.0 * s + 6500.0)
        )
        assert L(s) == pytest.approx(expected, rel=1e-9)


def test_closed_loop_from_open_matches_char_poly():
    # with equal cutoffs and perfect identification the closed loop denominator
    # reproduces the combined-case characteristic polynomial
    alpha = 1.0
    L = open_loop_general(PP, dob(g=80.0), rfob(g=80.0), ENV, C_f=0.05)
    cl = L.closed_loop()
    char = closed_loop_char_poly(EnvClass.DAMPING_STIFFNESS, 3.02, alpha * 80.0, 0.05, ENV)
    got = cl.den.monic().coeffs
    want = char.coeffs
    assert len(got) == len(want)
    for a, b in zip(got, want):
        assert a == pytest.approx(b, rel=1e-9)


# ---------------------------------------------------------------------------
# right-half-plane zero diagnostics
# ---------------------------------------------------------------------------

def test_rhp_zero_perfect_identification():
    phi = PhiPoly.from_params(PP, rfob(), ENV)
    assert phi.c2 == 0.0
    rep = rhp_zero_check(phi)
    assert not rep.has_rhp
    assert rep.roots[0].real == pytest.approx(-6500.0 / 2.0, rel=1e-9)


def test_rhp_zero_overestimated_inertia():
    # M_hat = 4 > M_m: leading coefficient negative while others positive
    phi = PhiPoly.from_params(PP, rfob(M_hat=4.0), ENV)
    assert phi.c2 == pytest.approx(0.5 * (3.02 - 4.0), rel=1e-12)
    rep = rhp_zero_check(phi)
    assert rep.has_rhp
    pos = [r for r in rep.roots if r.real > 0]
    assert len(pos) == 1 and abs(pos[0].imag) < 1e-9


def test_rhp_zero_underestimated_inertia_safe():
    rep = rhp_zero_check(PhiPoly.from_params(PP, rfob(M_hat=1.51), ENV))
    assert not rep.has_rhp


def test_rhp_zero_origin_is_marginal_not_rhp():
    phi = PhiPoly(c2=1.0, c1=2.0, c0=0.0)
    rep = rhp_zero_check(phi)
    assert not rep.has_rhp
    assert rep.marginal


def test_rhp_zero_safe_region_random():
    # M_hat <= M_m with K_hat = K_F never produces a right-half-plane zero
    rng = np.random.default_rng(5)
    for _ in range(300):
        m_m = float(rng.uniform(0.5, 10.0))
        m_hat = float(rng.uniform(0.05, 1.0)) * m_m
        env = EnvImpedance(D_env=float(rng.uniform(0.0, 50.0)), K_env=float(rng.uniform(1.0, 1e5)))
        pp = PlantParams(M_m=m_m, K_F=0.5)
        rep = rhp_zero_check(PhiPoly.from_params(pp, rfob(M_hat=m_hat), env))
        assert not rep.has_rhp


# ---------------------------------------------------------------------------
# asymptotes / step response
# ---------------------------------------------------------------------------

def test_asymptote_angles_general():
    tf1 = RationalTf(num=Polynomial.of(1.0), den=Polynomial.of(1.0, 1.0))
    assert asymptote_angles(tf1) == (180.0,)
    tf2 = RationalTf(num=Polynomial.of(1.0), den=Polynomial.of(1.0, 1.0, 1.0))
    assert asymptote_angles(tf2) == (-90.0, 90.0)
    improper = RationalTf(num=Polynomial.of(1.0, 0.0, 0.0), den=Polynomial.of(1.0, 1.0))
    with pytest.raises(ValueError):
        asymptote_angles(improper)


def _rk4_step_response(tf: RationalTf, t: np.ndarray, substeps: int = 60) -> np.ndarray:
    """Independent oracle: dense RK4 on the controllable canonical realization."""
    den = tf.den.monic().coeffs
    lead = tf.den.coeffs[0]
    num = tuple(c / lead for c in tf.num.coeffs)
    n = len(den) - 1
    A = np.zeros((n, n))
    A[0, :] = [-c for c in den[1:]]
    for i in range(1, n):
        A[i, i - 1] = 1.0
    B = np.zeros(n)
    B[0] = 1.0
    C = np.zeros(n)
    C[n - len(num):] = num
    h = (t[1] - t[0]) / substeps
    x = np.zeros(n)
    y = np.empty_like(t)
    y[0] = 0.0
    for i in range(1, t.size):
        for _ in range(substeps):
            k1 = A @ x + B
            k2 = A @ (x + 0.5 * h * k1) + B
            k3 = A @ (x + 0.5 * h * k2) + B
            k4 = A @ (x + h * k3) + B
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        y[i] = C @ x
    return y


def test_step_response_matches_rk4_oracle():
    tf = closed_loop_force_tf(EnvClass.DAMPING_STIFFNESS, 3.02, 80.65, 0.03584, ENV)
    t = np.linspace(0.0, 0.6, 601)
    mine = step_response(tf, t)
    ref = _rk4_step_response(tf, t)
    assert np.max(np.abs(mine - ref)) < 1e-9
    assert mine[-1] == pytest.approx(1.0, abs=1e-3)


def test_step_response_second_order_analytic():
    # critically damped (s + w)^2 with unit DC gain: y = 1 - (1 + w t) e^{-w t}
    w = 30.0
    tf = RationalTf(num=Polynomial.of(w * w), den=Polynomial.of(1.0, 2.0 * w, w * w))
    t = np.linspace(0.0, 0.5, 256)
    got = step_response(tf, t)
    want = 1.0 - (1.0 + w * t) * np.exp(-w * t)
    assert np.max(np.abs(got - want)) < 1e-12


def test_gain_root_locus_poles_move():
    gains = np.logspace(-3, 1, 8)
    data = gain_root_locus(PP, dob(g=100.0), rfob(g=100.0), ENV, gains)
    assert len(data) == 8
    for c_f, pls in data:
        assert len(pls) == 3
    with pytest.raises(ValueError):
        gain_root_locus(PP, dob(g=100.0), rfob(g=200.0), ENV, gains)

"""Open/closed-loop transfer functions of the force loop and stability diagnostics.

Builds the loop gain seen by the proportional force controller (observer inner
loop plus spring-damper environment), the closed-loop characteristic
polynomials for the three environment classes, and the structural stability
checks: right-half-plane zero of the mismatch polynomial, root-locus asymptote
angles, and pole computation for degrees up to three.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .design import EnvClass, solve_cubic, solve_quadratic
from .observers import DobConfig, RfobConfig
from .plant import EnvImpedance, PlantParams

_TRIM_REL = 1e-12


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial, coefficients in descending degree, leading coefficient nonzero."""

    coeffs: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.coeffs) == 0:
            raise ValueError("empty coefficient list")

    @classmethod
    def of(cls, *coeffs: float) -> "Polynomial":
        return cls._trim(tuple(float(c) for c in coeffs))

    @classmethod
    def _trim(cls, coeffs: tuple[float, ...]) -> "Polynomial":
        top = max(abs(c) for c in coeffs) if coeffs else 0.0
        i = 0
        while i < len(coeffs) - 1 and abs(coeffs[i]) <= _TRIM_REL * top:
            i += 1
        return cls(coeffs=coeffs[i:])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, s: complex) -> complex:
        acc = 0.0 + 0.0j
        for c in self.coeffs:
            acc = acc * s + c
        return acc

    def monic(self) -> "Polynomial":
        lead = self.coeffs[0]
        if lead == 0.0:
            raise ValueError("cannot normalize: leading coefficient is zero")
        return Polynomial(tuple(c / lead for c in self.coeffs))

    def scaled(self, c: float) -> "Polynomial":
        if c == 0.0:
            raise ValueError("scale factor must be nonzero")
        return Polynomial(tuple(c * x for x in self.coeffs))

    def mul(self, other: "Polynomial") -> "Polynomial":
        out = [0.0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Polynomial(tuple(out))

    def add(self, other: "Polynomial") -> "Polynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        a = (0.0,) * (n - len(self.coeffs)) + self.coeffs
        b = (0.0,) * (n - len(other.coeffs)) + other.coeffs
        return Polynomial._trim(tuple(x + y for x, y in zip(a, b)))

    def trailing_zeros(self) -> int:
        n = 0
        for c in reversed(self.coeffs):
            if c == 0.0:
                n += 1
            else:
                break
        return min(n, len(self.coeffs) - 1)

    def shift_down(self, m: int) -> "Polynomial":
        """Divide by s^m (requires m trailing zero coefficients)."""
        if m == 0:
            return self
        if self.trailing_zeros() < m:
            raise ValueError(f"polynomial has no s^{m} factor")
        return Polynomial(self.coeffs[:-m])


@dataclass(frozen=True)
class RationalTf:
    """Rational transfer function num(s) / den(s)."""

    num: Polynomial
    den: Polynomial

    @property
    def relative_degree(self) -> int:
        return self.den.degree - self.num.degree

    def __call__(self, s: complex) -> complex:
        return self.num(s) / self.den(s)

    def closed_loop(self) -> "RationalTf":
        """Unity negative feedback: L / (1 + L)."""
        return RationalTf(num=self.num, den=self.den.add(self.num))


@dataclass(frozen=True)
class PhiPoly:
    """Model-mismatch quadratic of the force loop numerator.

    phi(s) = (M_m*K_F_hat - M_hat*K_F) s^2 + K_F_hat*D_env s + K_F_hat*K_env.
    A sign flip of the leading coefficient against the others puts a zero in
    the right half plane.
    """

    c2: float
    c1: float
    c0: float

    @classmethod
    def from_params(cls, pp: PlantParams, rfob: RfobConfig, env: EnvImpedance) -> "PhiPoly":
        return cls(
            c2=pp.M_m * rfob.K_F_hat - rfob.M_hat * pp.K_F,
            c1=rfob.K_F_hat * env.D_env,
            c0=rfob.K_F_hat * env.K_env,
        )

    def as_polynomial(self) -> Polynomial:
        return Polynomial.of(self.c2, self.c1, self.c0)


def open_loop_general(
    pp: PlantParams,
    dob: DobConfig,
    rfob: RfobConfig,
    env: EnvImpedance,
    C_f: float,
) -> RationalTf:
    """Loop gain of the outer force loop with possibly imperfect identification.

    L(s) = C_f * [(s + g_dob)/(s + g_rfob)] * g_rfob * (M_mn/K_Fn) * phi(s)
           / ( s * [M_m s (s + alpha*g_dob) + D_env s + K_env] )

    The lead-lag factor is dropped when g_dob == g_rfob.  Common s factors
    (pure-damping environments) are cancelled so exactly one integrator
    remains.
    """
    if env.D_env == 0.0 and env.K_env == 0.0:
        raise ValueError("environment has neither damping nor stiffness: no force loop exists")
    if C_f <= 0.0:
        raise ValueError(f"C_f must be > 0, got {C_f}")
    alpha = dob.M_mn * pp.K_F / (pp.M_m * dob.K_Fn)
    inner = Polynomial.of(pp.M_m, pp.M_m * alpha * dob.g_dob + env.D_env, env.K_env)
    den = Polynomial.of(1.0, 0.0).mul(inner)
    phi = PhiPoly.from_params(pp, rfob, env).as_polynomial()
    num = phi.scaled(C_f * rfob.g_rfob * dob.M_mn / dob.K_Fn)
    if dob.g_dob != rfob.g_rfob:
        num = num.mul(Polynomial.of(1.0, dob.g_dob))
        den = den.mul(Polynomial.of(1.0, rfob.g_rfob))
    m = min(num.trailing_zeros(), den.trailing_zeros())
    return RationalTf(num=num.shift_down(m), den=den.shift_down(m))


def closed_loop_char_poly(
    case: EnvClass,
    M_m: float,
    alpha_g: float,
    C_f: float,
    env: EnvImpedance,
) -> Polynomial:
    """Monic closed-loop characteristic polynomial of the force loop.

    damping:            s^2 + (alpha_g + D/M) s + C_f*alpha_g*D
    stiffness:          s^3 + alpha_g s^2 + (K/M) s + alpha_g*C_f*K
    damping+stiffness:  s^3 + (alpha_g + D/M) s^2 + (C_f*alpha_g*D + K/M) s + C_f*alpha_g*K
    """
    _check_case_env(case, env)
    d, k = env.D_env, env.K_env
    if case is EnvClass.PURE_DAMPING:
        return Polynomial.of(1.0, alpha_g + d / M_m, C_f * alpha_g * d)
    if case is EnvClass.PURE_STIFFNESS:
        return Polynomial.of(1.0, alpha_g, k / M_m, alpha_g * C_f * k)
    return Polynomial.of(1.0, alpha_g + d / M_m, C_f * alpha_g * d + k / M_m, C_f * alpha_g * k)


def closed_loop_force_tf(
    case: EnvClass,
    M_m: float,
    alpha_g: float,
    C_f: float,
    env: EnvImpedance,
) -> RationalTf:
    """Closed-loop transfer from force reference to estimated load force (unit DC gain)."""
    den = closed_loop_char_poly(case, M_m, alpha_g, C_f, env)
    d, k = env.D_env, env.K_env
    if case is EnvClass.PURE_DAMPING:
        num = Polynomial.of(C_f * alpha_g * d)
    elif case is EnvClass.PURE_STIFFNESS:
        num = Polynomial.of(alpha_g * C_f * k)
    else:
        num = Polynomial.of(C_f * alpha_g * d, C_f * alpha_g * k)
    return RationalTf(num=num, den=den)


def _check_case_env(case: EnvClass, env: EnvImpedance) -> None:
    if case is EnvClass.PURE_DAMPING and not (env.D_env > 0.0 and env.K_env == 0.0):
        raise ValueError("pure-damping case requires D_env > 0 and K_env == 0")
    if case is EnvClass.PURE_STIFFNESS and not (env.K_env > 0.0 and env.D_env == 0.0):
        raise ValueError("pure-stiffness case requires K_env > 0 and D_env == 0")
    if case is EnvClass.DAMPING_STIFFNESS and not (env.D_env > 0.0 and env.K_env > 0.0):
        raise ValueError("combined case requires both D_env > 0 and K_env > 0")


def poles(p: Polynomial) -> list[complex]:
    """Roots of a degree 1..3 polynomial via the analytic formulas."""
    c = p.coeffs
    deg = p.degree
    if deg == 1:
        return [complex(-c[1] / c[0])]
    if deg == 2:
        return list(solve_quadratic(c[0], c[1], c[2]))
    if deg == 3:
        return list(solve_cubic(c[0], c[1], c[2], c[3]).roots)
    raise ValueError(f"degree {deg} unsupported: analytic pole computation covers degrees 1..3")


def asymptote_angles(tf: RationalTf) -> tuple[float, ...]:
    """Root-locus asymptote angles in degrees, normalized to (-180, 180]."""
    r = tf.relative_degree
    if r < 0:
        raise ValueError("improper transfer function: relative degree < 0")
    if r == 0:
        return ()
    angles = []
    for q in range(r):
        a = (2.0 * q + 1.0) * 180.0 / r
        a = ((a + 180.0) % 360.0) - 180.0
        if a == -180.0:
            a = 180.0
        angles.append(a)
    return tuple(sorted(angles))


@dataclass(frozen=True)
class RhpZeroReport:
    """Roots of the mismatch polynomial and the right-half-plane flag."""

    roots: tuple[complex, ...]
    has_rhp: bool
    marginal: bool


def rhp_zero_check(phi: PhiPoly) -> RhpZeroReport:
    """Solve phi(s) = 0 and flag strictly right-half-plane roots.

    Roots on the imaginary axis (within tolerance) are reported as marginal,
    not as right-half-plane.
    """
    if phi.c2 != 0.0 and abs(phi.c2) > _TRIM_REL * max(abs(phi.c1), abs(phi.c0), abs(phi.c2)):
        roots = solve_quadratic(phi.c2, phi.c1, phi.c0)
    elif phi.c1 != 0.0:
        roots = (complex(-phi.c0 / phi.c1),)
    else:
        roots = ()
    has_rhp = False
    marginal = False
    for r in roots:
        tol = 1e-9 * (1.0 + abs(r))
        if r.real > tol:
            has_rhp = True
        elif abs(r.real) <= tol:
            marginal = True
    return RhpZeroReport(roots=tuple(roots), has_rhp=has_rhp, marginal=marginal)


def step_response(tf: RationalTf, t: np.ndarray) -> np.ndarray:
    """Unit step response on a uniform time grid.

    The transfer function is realized in controllable canonical form and
    discretized exactly (matrix exponential of the augmented system), so the
    only approximation is the grid itself.
    """
    t = np.asarray(t, dtype=float)
    if t.size < 2:
        raise ValueError("need at least two time points")
    dt = t[1] - t[0]
    if not np.allclose(np.diff(t), dt, rtol=1e-9, atol=1e-12):
        raise ValueError("time grid must be uniform")
    if tf.relative_degree < 1:
        raise ValueError("step response requires a strictly proper transfer function")
    den = tf.den.monic().coeffs
    lead = tf.den.coeffs[0]
    num = tuple(c / lead for c in tf.num.coeffs)
    n = len(den) - 1
    a = np.zeros((n, n))
    a[0, :] = [-c for c in den[1:]]
    for i in range(1, n):
        a[i, i - 1] = 1.0
    b = np.zeros((n, 1))
    b[0, 0] = 1.0
    cvec = np.zeros(n)
    cvec[n - len(num):] = num
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = a
    aug[:n, n:] = b
    m = expm(aug * dt)
    ad, bd = m[:n, :n], m[:n, n]
    x = np.zeros(n)
    y = np.empty_like(t)
    y[0] = cvec @ x
    for i in range(1, t.size):
        x = ad @ x + bd
        y[i] = cvec @ x
    return y


def gain_root_locus(
    pp: PlantParams,
    dob: DobConfig,
    rfob: RfobConfig,
    env: EnvImpedance,
    gains: np.ndarray,
) -> list[tuple[float, list[complex]]]:
    """Closed-loop poles of the force loop for a sweep of C_f values.

    Only configurations with g_dob == g_rfob are supported (the closed-loop
    characteristic polynomial stays at degree three there).
    """
    if dob.g_dob != rfob.g_rfob:
        raise ValueError("root locus sweep requires g_dob == g_rfob")
    out = []
    for c_f in np.asarray(gains, dtype=float):
        loop = open_loop_general(pp, dob, rfob, env, float(c_f))
        char = loop.den.add(loop.num)
        out.append((float(c_f), poles(char)))
    return out

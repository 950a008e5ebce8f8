"""Recursive least-squares identification of plant and environment parameters.

Plant parameters (mass, viscous/Coulomb friction, constant disturbance) are
identified from non-contact motion; environmental impedance (damping,
stiffness, offset) from contact motion.  The two estimators are mutually
exclusive, gated by a hysteresis contact detector, and every estimate is
box-projected so it cannot leave its configured convex set.
"""
from __future__ import annotations

import math
from enum import Enum

import numpy as np

from .plant import smooth_sign


class ContactMode(Enum):
    NON_CONTACT = "non_contact"
    TRANSITION = "transition"
    CONTACT = "contact"


class RlmsEstimator:
    """Recursive least-squares with forgetting factor and box projection.

    One update:
        K     = Gamma @ rho / (mu + rho' Gamma rho)
        delta = clip(delta + K * (u - rho' delta), bounds)
        Gamma = (I - K rho') Gamma / mu

    The covariance is re-symmetrized each step; if it loses positive
    definiteness to rounding (checked periodically by Cholesky) it is reset to
    the configured initial diagonal so the estimator stays alive.
    """

    def __init__(
        self,
        delta0: np.ndarray,
        bounds_min: np.ndarray,
        bounds_max: np.ndarray,
        gamma0: float | np.ndarray = 1e4,
        mu: float = 0.999,
        pd_check_period: int = 50,
    ):
        self.delta = np.array(delta0, dtype=float)
        self.n = self.delta.size
        self.bounds_min = np.array(bounds_min, dtype=float)
        self.bounds_max = np.array(bounds_max, dtype=float)
        if self.bounds_min.shape != self.delta.shape or self.bounds_max.shape != self.delta.shape:
            raise ValueError("bounds must match the estimate dimension")
        if np.any(self.bounds_min > self.bounds_max):
            raise ValueError("bounds_min must be <= bounds_max componentwise")
        if np.any(self.delta < self.bounds_min) or np.any(self.delta > self.bounds_max):
            raise ValueError("initial estimate lies outside the projection box")
        if not (0.0 < mu <= 1.0):
            raise ValueError(f"forgetting factor mu must be in (0, 1], got {mu}")
        self.mu = mu
        if np.isscalar(gamma0):
            self._gamma0_diag = np.full(self.n, float(gamma0))
        else:
            self._gamma0_diag = np.array(gamma0, dtype=float)
        if np.any(self._gamma0_diag <= 0.0):
            raise ValueError("gamma0 must be positive")
        self.Gamma = np.diag(self._gamma0_diag.copy())
        self._pd_check_period = max(1, pd_check_period)
        self._steps = 0
        self.reset_count = 0

    def update(self, rho: np.ndarray, u: float) -> float:
        """One recursion step; returns the prediction error u - rho' delta."""
        rho = np.asarray(rho, dtype=float)
        if rho.shape != self.delta.shape:
            raise ValueError(f"regressor dimension {rho.shape} != estimate dimension {self.delta.shape}")
        if not (math.isfinite(u) and np.all(np.isfinite(rho))):
            raise ValueError("non-finite regressor or measurement")
        g_rho = self.Gamma @ rho
        denom = self.mu + float(rho @ g_rho)
        innovation = u - float(rho @ self.delta)
        gain = g_rho / denom
        np.clip(self.delta + gain * innovation, self.bounds_min, self.bounds_max, out=self.delta)
        self.Gamma -= np.outer(gain, g_rho)
        self.Gamma /= self.mu
        self.Gamma += self.Gamma.T
        self.Gamma *= 0.5
        self._steps += 1
        if self._steps % self._pd_check_period == 0:
            self._guard_positive_definite()
        return innovation

    def _guard_positive_definite(self) -> None:
        ok = np.all(np.isfinite(self.Gamma)) and np.all(np.diag(self.Gamma) > 0.0)
        if ok:
            try:
                np.linalg.cholesky(self.Gamma)
                return
            except np.linalg.LinAlgError:
                ok = False
        if not ok:
            self.Gamma = np.diag(self._gamma0_diag.copy())
            self.reset_count += 1

    def covariance_contraction(self) -> np.ndarray:
        """Eigenvalues of Gamma divided by the initial diagonal scale (identifiability probe)."""
        eig = np.linalg.eigvalsh(self.Gamma)
        return eig / float(np.max(self._gamma0_diag))


def rlms_update(est: RlmsEstimator, rho: np.ndarray, u: float) -> tuple[RlmsEstimator, float]:
    """Functional wrapper around RlmsEstimator.update (mutates and returns the estimator)."""
    innovation = est.update(rho, u)
    return est, innovation


def build_regressor_nc(
    xddot_des: float,
    F_dis_hat: float,
    xdot: float,
    xddot: float,
    M_mn: float,
    eps: float,
) -> tuple[float, np.ndarray]:
    """Non-contact regression: u = M_mn*xddot_des + F_dis_hat against [xddot, xdot, zeta(xdot), 1].

    With delta = [M_m, k_vsc, k_clmb, F_d] this reproduces the motor force
    balance when no external load acts.
    """
    u = M_mn * xddot_des + F_dis_hat
    rho = np.array([xddot, xdot, smooth_sign(xdot, eps), 1.0])
    return u, rho


def build_regressor_c(F_load_hat: float, xdot: float, x: float) -> tuple[float, np.ndarray]:
    """Contact regression: u = F_load_hat against [xdot, x, 1].

    With delta = [D_env, K_env, offset] the constant column absorbs
    -(D_env*xdot_env + K_env*x_env).
    """
    return F_load_hat, np.array([xdot, x, 1.0])


class NonContactRegressorBank:
    """Produces filtered, time-aligned non-contact regressors from raw loop signals.

    Every channel (measurement and regressor columns) passes through the same
    first-order low-pass so the regression equality is preserved exactly; the
    acceleration column is the backward difference of the filtered velocity,
    i.e. a filtered differentiation, which avoids needing an accelerometer.
    The emitted pair is delayed by one sample to keep all columns aligned.
    """

    def __init__(self, g_filter: float, dt: float, M_mn: float, eps: float):
        if g_filter <= 0.0 or dt <= 0.0:
            raise ValueError("g_filter and dt must be > 0")
        if g_filter * dt >= 1.0:
            raise ValueError(f"g_filter*dt = {g_filter * dt:g} >= 1")
        self._c = math.exp(-g_filter * dt)
        self.dt = dt
        self.M_mn = M_mn
        self.eps = eps
        self._f = np.zeros(4)      # filtered [u, xdot, zeta, 1]
        self._warm = 0

    def step(self, xddot_des: float, F_dis_hat: float, xdot: float) -> tuple[float, np.ndarray] | None:
        u_raw = self.M_mn * xddot_des + F_dis_hat
        raw = np.array([u_raw, xdot, smooth_sign(xdot, self.eps), 1.0])
        new = self._c * self._f + (1.0 - self._c) * raw
        out = None
        if self._warm >= 2:
            xddot_f = (new[1] - self._f[1]) / self.dt
            rho = np.array([xddot_f, self._f[1], self._f[2], self._f[3]])
            out = (float(self._f[0]), rho)
        self._f = new
        self._warm += 1
        return out

    def reset(self) -> None:
        self._f = np.zeros(4)
        self._warm = 0


class ContactRegressorBank:
    """Filters the contact regressor columns with the observer's own low-pass.

    The measured load estimate is already a low-passed version of the true
    contact force, so running [xdot, x, 1] through the matching filter keeps
    the regression consistent.
    """

    def __init__(self, g_filter: float, dt: float):
        if g_filter <= 0.0 or dt <= 0.0:
            raise ValueError("g_filter and dt must be > 0")
        if g_filter * dt >= 1.0:
            raise ValueError(f"g_filter*dt = {g_filter * dt:g} >= 1")
        self.dt = dt
        self._c = math.exp(-g_filter * dt)
        self._f = np.zeros(3)

    def step(self, F_load_hat: float, xdot: float, x: float) -> tuple[float, np.ndarray]:
        raw = np.array([xdot, x, 1.0])
        self._f = self._c * self._f + (1.0 - self._c) * raw
        return F_load_hat, self._f.copy()

    def retune(self, g_filter: float) -> None:
        """Track an observer cutoff change; the filter state carries over."""
        if g_filter <= 0.0 or g_filter * self.dt >= 1.0:
            raise ValueError(f"invalid cutoff g = {g_filter} for dt = {self.dt}")
        self._c = math.exp(-g_filter * self.dt)

    def reset(self) -> None:
        self._f = np.zeros(3)


class ContactDetector:
    """Hysteresis + dwell classifier over the estimated load force.

    NON_CONTACT -> TRANSITION once |F| > threshold_on; TRANSITION -> CONTACT
    after `dwell` consecutive steps; CONTACT (or TRANSITION) -> NON_CONTACT
    after `dwell` consecutive steps with |F| < threshold_off.
    """

    def __init__(self, threshold_on: float, threshold_off: float, dwell: int = 20):
        if not (threshold_on > threshold_off >= 0.0):
            raise ValueError(f"need threshold_on > threshold_off >= 0, got on={threshold_on}, off={threshold_off}")
        if dwell < 1:
            raise ValueError(f"dwell must be >= 1, got {dwell}")
        self.threshold_on = threshold_on
        self.threshold_off = threshold_off
        self.dwell = dwell
        self.mode = ContactMode.NON_CONTACT
        self._count = 0
        self._release = 0

    def update(self, F_load_hat: float) -> ContactMode:
        f = abs(F_load_hat)
        if self.mode is ContactMode.NON_CONTACT:
            if f > self.threshold_on:
                self.mode = ContactMode.TRANSITION
                self._count = 1
                self._release = 0
        elif self.mode is ContactMode.TRANSITION:
            if f < self.threshold_off:
                self._release += 1
                if self._release >= self.dwell:
                    self.mode = ContactMode.NON_CONTACT
                    self._release = 0
                    self._count = 0
            else:
                self._release = 0
                self._count += 1
                if self._count >= self.dwell:
                    self.mode = ContactMode.CONTACT
                    self._count = 0
        else:  # CONTACT
            if f < self.threshold_off:
                self._release += 1
                if self._release >= self.dwell:
                    self.mode = ContactMode.NON_CONTACT
                    self._release = 0
            else:
                self._release = 0
        return self.mode

    def reset(self) -> None:
        self.mode = ContactMode.NON_CONTACT
        self._count = 0
        self._release = 0

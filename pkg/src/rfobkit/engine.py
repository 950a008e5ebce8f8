"""Fixed-step closed-loop simulation: plant, observer inner loop, force outer loop.

One step runs, in order: sensor read (plus optional velocity noise), velocity
filter, phase controller, observer compensation current, exact observer filter
updates, semi-implicit Euler plant integration, contact detection, mode-gated
estimator updates, and the periodic adaptive re-design.  Everything is
deterministic for a fixed scenario and seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .design import (
    DesignResult,
    DesignSpecA,
    DesignSpecB,
    DesignSpecC,
    EnvClass,
    InfeasibleDesignError,
    classify_environment,
    design_for_env,
    split_alpha_g,
)
from .identify import (
    ContactDetector,
    ContactMode,
    ContactRegressorBank,
    NonContactRegressorBank,
    RlmsEstimator,
)
from .observers import (
    DisturbanceObserver,
    DobConfig,
    ReactionForceObserver,
    RfobConfig,
    VelocityFilter,
)
from .plant import EnvImpedance, FrictionParams, PlantParams, PlantState, contact_force, plant_accel


class ControlMode(Enum):
    FORCE = "force"
    POSITION = "position"


class AdaptationMode(Enum):
    OFF = "off"
    ONLINE = "online"
    OFFLINE = "offline"


class ContactHint(Enum):
    AUTO = "auto"        # use the hysteresis detector
    FREE = "free"        # scripted non-contact phase
    CONTACT = "contact"  # scripted contact phase


@dataclass(frozen=True)
class Reference:
    """Scalar reference signal for one phase.

    kind 'const': value.  kind 'sine': offset + amp*sin(2*pi*freq_hz*t + phase).
    kind 'multisine': offset + sum of components (amp, freq_hz, phase).
    kind 'ramp': linear from start to end over the phase duration.
    """

    kind: str = "const"
    value: float = 0.0
    offset: float = 0.0
    amp: float = 0.0
    freq_hz: float = 0.0
    phase: float = 0.0
    components: tuple[tuple[float, float, float], ...] = ()
    start: float = 0.0
    end: float = 0.0
    duration: float = 1.0

    def __call__(self, t: float) -> float:
        if self.kind == "const":
            return self.value
        if self.kind == "sine":
            return self.offset + self.amp * math.sin(2.0 * math.pi * self.freq_hz * t + self.phase)
        if self.kind == "multisine":
            out = self.offset
            for amp, freq, ph in self.components:
                out += amp * math.sin(2.0 * math.pi * freq * t + ph)
            return out
        if self.kind == "ramp":
            frac = min(max(t / self.duration, 0.0), 1.0)
            return self.start + (self.end - self.start) * frac
        raise ValueError(f"unknown reference kind {self.kind!r}")


@dataclass(frozen=True)
class Phase:
    """One contiguous segment of the schedule."""

    mode: ControlMode
    duration: float
    reference: Reference
    contact_hint: ContactHint = ContactHint.AUTO
    F_d_override: float | None = None

    def __post_init__(self) -> None:
        if self.duration < 0.0:
            raise ValueError(f"phase duration must be >= 0, got {self.duration}")


@dataclass(frozen=True)
class AdaptationConfig:
    """Re-design policy applied while the loop runs.

    Online re-design fires at most every period_steps while in contact, and
    only when the identified impedance has moved past the deadband since the
    last applied design; retuning the observers mid-run perturbs the estimate
    channel, so gain churn feeds back into the estimator if left unchecked.
    """

    mode: AdaptationMode = AdaptationMode.OFF
    period_steps: int = 100
    design_alpha: float = 1.0
    deadband: float = 0.05
    spec_a: DesignSpecA = field(default_factory=DesignSpecA)
    spec_b: DesignSpecB = field(default_factory=DesignSpecB)
    spec_c: DesignSpecC = field(default_factory=DesignSpecC)

    def __post_init__(self) -> None:
        if self.period_steps < 1:
            raise ValueError("period_steps must be >= 1")
        if self.design_alpha <= 0.0:
            raise ValueError("design_alpha must be > 0")
        if self.deadband < 0.0:
            raise ValueError("deadband must be >= 0")


@dataclass(frozen=True)
class IdentConfig:
    """Estimator wiring: which estimators run and their tuning."""

    enable_plant: bool = False
    enable_env: bool = False
    mu_nc: float = 0.999
    mu_c: float = 0.999
    gamma0_nc: float = 1e4
    gamma0_c: float = 1e4
    delta0_nc: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)
    delta0_c: tuple[float, float, float] = (1.0, 1000.0, 0.0)
    bounds_nc_min: tuple[float, float, float, float] = (0.05, 0.0, 0.0, -100.0)
    bounds_nc_max: tuple[float, float, float, float] = (50.0, 200.0, 100.0, 100.0)
    bounds_c_min: tuple[float, float, float] = (0.0, 1.0, -100.0)
    bounds_c_max: tuple[float, float, float] = (1000.0, 1e6, 100.0)
    threshold_on: float = 0.5
    threshold_off: float = 0.2
    dwell: int = 20
    g_filter_nc: float | None = None  # defaults to the velocity-filter cutoff
    apply_to_rfob: bool = True


@dataclass(frozen=True)
class Scenario:
    """Complete description of one simulation run."""

    plant: PlantParams
    friction: FrictionParams
    env: EnvImpedance
    dob: DobConfig
    rfob: RfobConfig
    phases: tuple[Phase, ...]
    dt: float
    C_f: float = 1.0
    K_P: float = 1200.0
    K_V: float = 90.0
    always_in_contact: bool = False
    velocity_filter_on: bool = True
    noise_std: float = 0.0
    seed: int = 0
    adaptation: AdaptationConfig = field(default_factory=AdaptationConfig)
    ident: IdentConfig = field(default_factory=IdentConfig)
    x0: float = 0.0
    v0: float = 0.0
    x_limit: float = 100.0
    v_limit: float = 1e4
    dist_limit: float = 1e6

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise ValueError("dt must be > 0")
        cutoffs = [self.dob.g_dob, self.rfob.g_rfob]
        if self.velocity_filter_on:
            cutoffs.append(self.dob.g_v)
        if max(cutoffs) * self.dt >= 0.5:
            raise ValueError(f"dt*max(filter cutoff) = {max(cutoffs) * self.dt:g} >= 0.5")
        if self.C_f <= 0.0 and any(p.mode is ControlMode.FORCE for p in self.phases):
            raise ValueError("C_f must be > 0 when a force phase is scheduled")
        if self.noise_std < 0.0:
            raise ValueError("noise_std must be >= 0")

    @property
    def duration(self) -> float:
        return sum(p.duration for p in self.phases)


def force_controller(F_ref: float, F_load_hat: float, C_f: float) -> float:
    """Proportional force control: desired acceleration C_f * (F_ref - F_load_hat)."""
    return C_f * (F_ref - F_load_hat)


def pd_position_controller(x_ref: float, x_m: float, xdot_m: float, K_P: float, K_V: float) -> float:
    """PD position control with derivative on measurement: K_P*(x_ref - x) - K_V*xdot."""
    return K_P * (x_ref - x_m) - K_V * xdot_m


@dataclass
class DesignEvent:
    """One applied (or rejected) re-design."""

    t: float
    applied: bool
    alpha_g: float
    C_f: float
    g: float
    note: str = ""


_MODE_CODE = {ContactMode.NON_CONTACT: 0, ContactMode.TRANSITION: 1, ContactMode.CONTACT: 2}
_CTRL_CODE = {ControlMode.FORCE: 0, ControlMode.POSITION: 1}
CONTACT_MODE_NAMES = ("non_contact", "transition", "contact")
CTRL_MODE_NAMES = ("force", "position")

TIMESERIES_COLUMNS = (
    "t_s",
    "x_m_m",
    "xdot_m_mps",
    "xddot_des_mps2",
    "i_m_A",
    "F_ref_N",
    "x_ref_m",
    "F_load_N",
    "F_hat_load_N",
    "F_hat_dis_N",
    "ctrl_mode",
    "contact_mode",
    "alpha_g_radps",
    "C_f",
    "delta_M_m_kg",
    "delta_k_vsc_Nspm",
    "delta_k_clmb_N",
    "delta_F_d_N",
    "innov_nc_N",
    "delta_D_env_Nspm",
    "delta_K_env_Npm",
    "delta_c_offset_N",
    "innov_c_N",
)


@dataclass
class PhaseSummary:
    mode: str
    t_start: float
    t_end: float
    ss_error: float
    settling_time: float
    max_rfob_error: float


@dataclass
class SimResult:
    """Recorded time series plus the run summary."""

    ts: dict[str, np.ndarray]
    n_steps: int
    diverged: bool
    diverged_step: int | None
    phase_summaries: list[PhaseSummary]
    design_events: list[DesignEvent]
    final_delta_nc: np.ndarray | None
    final_delta_c: np.ndarray | None
    unidentifiable_nc: bool
    unidentifiable_c: bool

    def summary_dict(self) -> dict:
        return {
            "n_steps": self.n_steps,
            "diverged": self.diverged,
            "diverged_step": self.diverged_step,
            "phases": [
                {
                    "mode": p.mode,
                    "t_start": p.t_start,
                    "t_end": p.t_end,
                    "ss_error": p.ss_error,
                    "settling_time": p.settling_time,
                    "max_rfob_error": p.max_rfob_error,
                }
                for p in self.phase_summaries
            ],
            "design_events": [
                {
                    "t": e.t,
                    "applied": e.applied,
                    "alpha_g": e.alpha_g,
                    "C_f": e.C_f,
                    "g": e.g,
                    "note": e.note,
                }
                for e in self.design_events
            ],
            "final_delta_nc": None if self.final_delta_nc is None else [float(v) for v in self.final_delta_nc],
            "final_delta_c": None if self.final_delta_c is None else [float(v) for v in self.final_delta_c],
            "unidentifiable_nc": self.unidentifiable_nc,
            "unidentifiable_c": self.unidentifiable_c,
        }


class Simulator:
    """Owns all mutable loop state for one scenario run."""

    def __init__(self, scenario: Scenario):
        self.sc = scenario
        self.dt = scenario.dt
        self.state = PlantState(x_m=scenario.x0, xdot_m=scenario.v0)
        self.dob = DisturbanceObserver(scenario.dob, self.dt)
        self.rfob = ReactionForceObserver(scenario.rfob, self.dt)
        self.vel_filter = VelocityFilter(scenario.dob.g_v, self.dt) if scenario.velocity_filter_on else None
        self.C_f = scenario.C_f
        self.g_dob = scenario.dob.g_dob
        self.g_rfob = scenario.rfob.g_rfob
        self.alpha_true = scenario.dob.M_mn * scenario.plant.K_F / (scenario.plant.M_m * scenario.dob.K_Fn)
        self._mn_over_kfn = scenario.dob.M_mn / scenario.dob.K_Fn
        self.rng = np.random.default_rng(scenario.seed)
        self.design_events: list[DesignEvent] = []

        ident = scenario.ident
        self.detector = ContactDetector(ident.threshold_on, ident.threshold_off, ident.dwell)
        self.est_nc: RlmsEstimator | None = None
        self.bank_nc: NonContactRegressorBank | None = None
        self.est_c: RlmsEstimator | None = None
        self.bank_c: ContactRegressorBank | None = None

        # measurement available at t_0
        self._xdot_meas = scenario.v0 + (
            self.rng.standard_normal() * scenario.noise_std if scenario.noise_std > 0.0 else 0.0
        )
        self._xdot_f = self.vel_filter.y if self.vel_filter is not None else self._xdot_meas

        if scenario.adaptation.mode is AdaptationMode.OFFLINE:
            self._apply_design(0.0, scenario.env, scenario.rfob.M_hat)

        if ident.enable_plant:
            self.est_nc = RlmsEstimator(
                delta0=np.array(ident.delta0_nc),
                bounds_min=np.array(ident.bounds_nc_min),
                bounds_max=np.array(ident.bounds_nc_max),
                gamma0=ident.gamma0_nc,
                mu=ident.mu_nc,
            )
            g_f = ident.g_filter_nc if ident.g_filter_nc is not None else scenario.dob.g_v
            self.bank_nc = NonContactRegressorBank(g_f, self.dt, scenario.dob.M_mn, scenario.friction.eps)
        if ident.enable_env:
            self.est_c = RlmsEstimator(
                delta0=np.array(ident.delta0_c),
                bounds_min=np.array(ident.bounds_c_min),
                bounds_max=np.array(ident.bounds_c_max),
                gamma0=ident.gamma0_c,
                mu=ident.mu_c,
            )
            self.bank_c = ContactRegressorBank(self.g_rfob, self.dt)

        # phase schedule in steps
        self.n_steps = int(round(scenario.duration / self.dt))
        bounds = [0]
        acc = 0.0
        for p in scenario.phases:
            acc += p.duration
            bounds.append(int(round(acc / self.dt)))
        self._phase_bounds = bounds
        self._phase_idx = 0
        self._bank_nc_last_k = -10
        self._last_design_env: tuple[float, float] | None = None

        self._alloc(self.n_steps)
        self._k = 0
        self.diverged = False
        self.diverged_step: int | None = None

    # ------------------------------------------------------------------
    def _alloc(self, n: int) -> None:
        self.ts = {name: np.zeros(n) for name in TIMESERIES_COLUMNS if name not in ("ctrl_mode", "contact_mode")}
        self.ts["ctrl_mode"] = np.zeros(n, dtype=np.int8)
        self.ts["contact_mode"] = np.zeros(n, dtype=np.int8)
        for name in ("F_ref_N", "x_ref_m", "innov_nc_N", "innov_c_N"):
            self.ts[name].fill(np.nan)
        if self.est_nc is None:
            for name in ("delta_M_m_kg", "delta_k_vsc_Nspm", "delta_k_clmb_N", "delta_F_d_N"):
                self.ts[name].fill(np.nan)
        if self.est_c is None:
            for name in ("delta_D_env_Nspm", "delta_K_env_Npm", "delta_c_offset_N"):
                self.ts[name].fill(np.nan)

    def _phase_at(self, k: int) -> int:
        while self._phase_idx + 1 < len(self._phase_bounds) - 1 and k >= self._phase_bounds[self._phase_idx + 1]:
            self._phase_idx += 1
            self._on_phase_start(self._phase_idx)
        return self._phase_idx

    def _on_phase_start(self, idx: int) -> None:
        prev = self.sc.phases[idx - 1] if idx > 0 else None
        if (
            prev is not None
            and prev.contact_hint is ContactHint.FREE
            and self.sc.ident.apply_to_rfob
            and self.est_nc is not None
        ):
            # fold the identified plant model into the reaction force observer
            d = self.est_nc.delta
            old = self.rfob.cfg
            new_cfg = RfobConfig(
                M_hat=max(float(d[0]), 1e-6),
                K_F_hat=old.K_F_hat,
                g_rfob=old.g_rfob,
                friction=FrictionParams(k_vsc=max(float(d[1]), 0.0), k_clmb=max(float(d[2]), 0.0),
                                        eps=old.friction.eps),
                F_d_hat=float(d[3]),
            )
            self.rfob.cfg = new_cfg

    def _outside_deadband(self, d_env: float, k_env: float) -> bool:
        if self._last_design_env is None:
            return True
        band = self.sc.adaptation.deadband
        d0, k0 = self._last_design_env
        return (
            abs(d_env - d0) > band * max(abs(d0), 1e-2)
            or abs(k_env - k0) > band * max(abs(k0), 1e-2)
        )

    def _apply_design(self, t: float, env: EnvImpedance, m_design: float) -> None:
        ad = self.sc.adaptation
        try:
            result = design_for_env(m_design, env, self.sc.dob.g_v, ad.spec_a, ad.spec_b, ad.spec_c)
            if not result.feasible:
                raise InfeasibleDesignError("design degenerate", "; ".join(result.notes))
            g, _ = split_alpha_g(result, ad.design_alpha)
            if g * self.dt >= 0.5:
                raise InfeasibleDesignError("designed cutoff too fast for the sample time",
                                            f"g*dt = {g * self.dt:g}")
        except (InfeasibleDesignError, ValueError) as exc:
            self.design_events.append(
                DesignEvent(t=t, applied=False, alpha_g=float("nan"), C_f=self.C_f, g=float("nan"), note=str(exc))
            )
            return
        # bumpless retune: filter states shift so the estimates stay continuous
        self.C_f = result.C_f
        self.g_dob = g
        self.g_rfob = g
        self.dob.retune(g, self._xdot_f)
        self.rfob.retune(g, self._xdot_f)
        if self.bank_c is not None:
            self.bank_c.retune(g)
        self.design_events.append(
            DesignEvent(t=t, applied=True, alpha_g=result.alpha_g, C_f=result.C_f, g=g)
        )

    # ------------------------------------------------------------------
    def step(self) -> bool:
        """Advance one step; returns False once the run is over or diverged."""
        k = self._k
        if k >= self.n_steps or self.diverged:
            return False
        sc = self.sc
        t = k * self.dt
        pidx = self._phase_at(k)
        phase = sc.phases[pidx]
        t_local = t - self._phase_bounds[pidx] * self.dt

        x = self.state.x_m
        xdot_meas = self._xdot_meas  # measurement taken at t_k
        xdot_f = self._xdot_f

        F_ref = math.nan
        x_ref = math.nan
        if phase.mode is ControlMode.FORCE:
            F_ref = phase.reference(t_local)
            xddot_des = force_controller(F_ref, self.rfob.F_load_hat, self.C_f)
        else:
            x_ref = phase.reference(t_local)
            xddot_des = pd_position_controller(x_ref, x, xdot_f, sc.K_P, sc.K_V)

        F_dis_used = self.dob.F_dis_hat
        i_m = self._mn_over_kfn * xddot_des + F_dis_used / sc.dob.K_Fn

        a = plant_accel(i_m, self.state, sc.plant, sc.friction, sc.env,
                        sc.always_in_contact, phase.F_d_override)
        self.state.xdot_m = self.state.xdot_m + a * self.dt
        self.state.x_m = x + self.state.xdot_m * self.dt

        # fresh measurement at t_{k+1}: observers integrate the interval just applied
        xdot_meas_new = self.state.xdot_m + (
            self.rng.standard_normal() * sc.noise_std if sc.noise_std > 0.0 else 0.0
        )
        xdot_f_new = self.vel_filter.step(xdot_meas_new) if self.vel_filter is not None else xdot_meas_new
        F_hat_dis = self.dob.step(i_m, xdot_f_new)
        F_hat_load = self.rfob.step(i_m, xdot_f_new)
        self._xdot_meas = xdot_meas_new
        self._xdot_f = xdot_f_new

        if (
            not self.state.is_finite()
            or abs(self.state.x_m) > sc.x_limit
            or abs(self.state.xdot_m) > sc.v_limit
            or abs(F_hat_load) > sc.dist_limit
        ):
            self.diverged = True
            self.diverged_step = k

        if phase.contact_hint is ContactHint.AUTO:
            mode = self.detector.update(F_hat_load)
        elif phase.contact_hint is ContactHint.FREE:
            mode = ContactMode.NON_CONTACT
        else:
            mode = ContactMode.CONTACT

        innov_nc = math.nan
        innov_c = math.nan
        if self.est_c is not None and not self.diverged:
            # the bank filter tracks the observer filter every step; only the
            # estimator update is gated by the contact mode
            u_c, rho_c = self.bank_c.step(F_hat_load, xdot_meas, x)
            if mode is ContactMode.CONTACT:
                innov_c = self.est_c.update(rho_c, u_c)
                if (
                    sc.adaptation.mode is AdaptationMode.ONLINE
                    and (k + 1) % sc.adaptation.period_steps == 0
                ):
                    d = self.est_c.delta
                    d_env, k_env = max(float(d[0]), 0.0), max(float(d[1]), 0.0)
                    if self._outside_deadband(d_env, k_env):
                        self._apply_design(t, EnvImpedance(D_env=d_env, K_env=k_env),
                                           self.rfob.cfg.M_hat)
                        self._last_design_env = (d_env, k_env)
        if mode is ContactMode.NON_CONTACT and self.est_nc is not None and not self.diverged:
            if self._bank_nc_last_k != k - 1:
                self.bank_nc.reset()  # gap in the fed samples: restart the filter history
            self._bank_nc_last_k = k
            emitted = self.bank_nc.step(xddot_des, F_dis_used, xdot_meas)
            if emitted is not None:
                innov_nc = self.est_nc.update(emitted[1], emitted[0])

        ts = self.ts
        ts["t_s"][k] = t + self.dt
        ts["x_m_m"][k] = self.state.x_m
        ts["xdot_m_mps"][k] = self.state.xdot_m
        ts["xddot_des_mps2"][k] = xddot_des
        ts["i_m_A"][k] = i_m
        ts["F_ref_N"][k] = F_ref
        ts["x_ref_m"][k] = x_ref
        ts["F_load_N"][k] = contact_force(self.state, sc.env, sc.always_in_contact)
        ts["F_hat_load_N"][k] = F_hat_load
        ts["F_hat_dis_N"][k] = F_hat_dis
        ts["ctrl_mode"][k] = _CTRL_CODE[phase.mode]
        ts["contact_mode"][k] = _MODE_CODE[mode]
        ts["alpha_g_radps"][k] = self.alpha_true * self.g_dob
        ts["C_f"][k] = self.C_f
        if self.est_nc is not None:
            d = self.est_nc.delta
            ts["delta_M_m_kg"][k] = d[0]
            ts["delta_k_vsc_Nspm"][k] = d[1]
            ts["delta_k_clmb_N"][k] = d[2]
            ts["delta_F_d_N"][k] = d[3]
            ts["innov_nc_N"][k] = innov_nc
        if self.est_c is not None:
            d = self.est_c.delta
            ts["delta_D_env_Nspm"][k] = d[0]
            ts["delta_K_env_Npm"][k] = d[1]
            ts["delta_c_offset_N"][k] = d[2]
            ts["innov_c_N"][k] = innov_c

        self._k = k + 1
        return not self.diverged and self._k < self.n_steps

    # ------------------------------------------------------------------
    def run(self) -> SimResult:
        while self.step():
            pass
        n = self._k
        ts = {name: arr[:n] for name, arr in self.ts.items()}
        phase_summaries = self._summarize_phases(ts)
        unident_nc = self._unidentifiable(self.est_nc)
        unident_c = self._unidentifiable(self.est_c)
        return SimResult(
            ts=ts,
            n_steps=n,
            diverged=self.diverged,
            diverged_step=self.diverged_step,
            phase_summaries=phase_summaries,
            design_events=self.design_events,
            final_delta_nc=None if self.est_nc is None else self.est_nc.delta.copy(),
            final_delta_c=None if self.est_c is None else self.est_c.delta.copy(),
            unidentifiable_nc=unident_nc,
            unidentifiable_c=unident_c,
        )

    @staticmethod
    def _unidentifiable(est: RlmsEstimator | None) -> bool:
        if est is None:
            return False
        return bool(np.any(est.covariance_contraction() > 0.5))

    def _summarize_phases(self, ts: dict[str, np.ndarray]) -> list[PhaseSummary]:
        out: list[PhaseSummary] = []
        n = self._k
        t = ts["t_s"]
        for i, phase in enumerate(self.sc.phases):
            k0 = self._phase_bounds[i]
            k1 = min(self._phase_bounds[i + 1], n)
            if k1 <= k0:
                continue
            if phase.mode is ControlMode.FORCE:
                err = np.abs(ts["F_hat_load_N"][k0:k1] - ts["F_ref_N"][k0:k1])
                ref_scale = max(np.nanmax(np.abs(ts["F_ref_N"][k0:k1])), 1e-12)
            else:
                err = np.abs(ts["x_m_m"][k0:k1] - ts["x_ref_m"][k0:k1])
                ref_scale = max(np.nanmax(np.abs(ts["x_ref_m"][k0:k1])), 1e-12)
            tail = max(1, int(0.2 * (k1 - k0)))
            ss_error = float(np.mean(err[-tail:]))
            outside = np.flatnonzero(~(err < 0.01 * ref_scale))
            j = 0 if outside.size == 0 else int(outside[-1]) + 1
            settle = float("nan") if j >= err.size else float(t[k0 + j] - k0 * self.dt)
            rfob_err = float(np.max(np.abs(ts["F_hat_load_N"][k0:k1] - ts["F_load_N"][k0:k1])))
            out.append(
                PhaseSummary(
                    mode=phase.mode.value,
                    t_start=k0 * self.dt,
                    t_end=k1 * self.dt,
                    ss_error=ss_error,
                    settling_time=settle,
                    max_rfob_error=rfob_err,
                )
            )
        return out


def run_scenario(scenario: Scenario) -> SimResult:
    """Build a simulator for the scenario and run it to completion."""
    return Simulator(scenario).run()

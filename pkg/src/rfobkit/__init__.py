"""Toolkit for observer-based robust force control.

Gain design for damping/stiffness environments under the observer bandwidth
bound, loop-level stability diagnostics, recursive least-squares plant and
environment identification, and a deterministic fixed-step closed-loop
simulator with a CSV-emitting command line.
"""

from .design import (
    CubicRoots,
    DesignResult,
    DesignSpecA,
    DesignSpecB,
    DesignSpecC,
    EnvClass,
    InfeasibleDesignError,
    classify_environment,
    design_damping,
    design_damping_stiffness,
    design_for_env,
    design_stiffness,
    eta_feasibility,
    solve_cubic,
    solve_quadratic,
    split_alpha_g,
)
from .engine import (
    AdaptationConfig,
    AdaptationMode,
    ContactHint,
    ControlMode,
    IdentConfig,
    Phase,
    Reference,
    Scenario,
    SimResult,
    Simulator,
    force_controller,
    pd_position_controller,
    run_scenario,
)
from .identify import (
    ContactDetector,
    ContactMode,
    ContactRegressorBank,
    NonContactRegressorBank,
    RlmsEstimator,
    build_regressor_c,
    build_regressor_nc,
    rlms_update,
)
from .loop_model import (
    PhiPoly,
    Polynomial,
    RationalTf,
    RhpZeroReport,
    asymptote_angles,
    closed_loop_char_poly,
    closed_loop_force_tf,
    gain_root_locus,
    open_loop_general,
    poles,
    rhp_zero_check,
    step_response,
)
from .observers import (
    BoundCheck,
    DisturbanceObserver,
    DobConfig,
    FirstOrderLpf,
    RatioReport,
    ReactionForceObserver,
    RfobConfig,
    VelocityFilter,
    robustness_bound_check,
    sensitivity_response,
    sensitivity_second_order_params,
)
from .plant import (
    EnvImpedance,
    FrictionParams,
    PlantParams,
    PlantState,
    contact_force,
    friction_force,
    plant_accel,
    smooth_sign,
)

__version__ = "0.1.0"

"""Command line: design gains, analyze stability, run simulations, run identification.

Subcommands: design | analyze | simulate | identify.  Reports print as text;
--out writes the machine-readable variant (JSON for design/analyze, CSV plus a
JSON summary for simulate/identify).  Exit codes: 0 success, 2 configuration
error, 3 infeasible design, 4 divergence.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .config import ConfigDocument, ConfigError, parse_config
from .design import (
    DesignResult,
    EnvClass,
    InfeasibleDesignError,
    classify_environment,
    design_for_env,
    split_alpha_g,
)
from .engine import CONTACT_MODE_NAMES, CTRL_MODE_NAMES, TIMESERIES_COLUMNS, SimResult, run_scenario
from .loop_model import PhiPoly, asymptote_angles, closed_loop_char_poly, open_loop_general, poles, rhp_zero_check
from .observers import RatioReport, robustness_bound_check
from .plant import EnvImpedance

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_DIVERGED = 4

CSV_SCHEMA_VERSION = "timeseries-v1"
TRACE_COLUMNS = (
    "t_s",
    "contact_mode",
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


def _fmt(v: float) -> str:
    return f"{v:.10g}"


def _sanitize(obj):
    """Non-finite floats -> None recursively, keeping emitted JSON strict."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    return obj


def _load_config(path: str) -> ConfigDocument:
    text = Path(path).read_text(encoding="utf-8")
    return parse_config(text)


def _design_case(doc: ConfigDocument, env: EnvImpedance) -> EnvClass:
    case = doc.get("design", "case")
    if case == "auto":
        return classify_environment(env)
    return EnvClass(case)


def _run_design(doc: ConfigDocument, env: EnvImpedance) -> DesignResult:
    case = _design_case(doc, env)
    spec_a, spec_b, spec_c = cfgmod.build_design_specs(doc)
    m = doc.get("plant", "M_m_kg")
    g_v = doc.get("dob", "g_v_rad_per_s")
    if case is EnvClass.PURE_DAMPING:
        return design_for_env(m, EnvImpedance(D_env=env.D_env), g_v, spec_a=spec_a)
    if case is EnvClass.PURE_STIFFNESS:
        return design_for_env(m, EnvImpedance(K_env=env.K_env), g_v, spec_b=spec_b)
    return design_for_env(m, env, g_v, spec_c=spec_c)


def _design_report(doc: ConfigDocument, result: DesignResult) -> dict:
    alpha = doc.get("design", "alpha")
    g_dob, g_rfob = split_alpha_g(result, alpha)
    env = cfgmod.build_env(doc)
    case_env = {
        EnvClass.PURE_DAMPING: EnvImpedance(D_env=env.D_env),
        EnvClass.PURE_STIFFNESS: EnvImpedance(K_env=env.K_env),
        EnvClass.DAMPING_STIFFNESS: env,
    }[result.case]
    achieved = closed_loop_char_poly(result.case, doc.get("plant", "M_m_kg"),
                                     result.alpha_g, result.C_f, case_env)
    if result.case is EnvClass.PURE_DAMPING:
        target = (1.0, 2.0 * result.xi * result.w_n, result.w_n ** 2)
    else:
        target = (
            1.0,
            2.0 * result.xi * result.w_n + result.p,
            result.w_n ** 2 + 2.0 * result.xi * result.w_n * result.p,
            result.w_n ** 2 * result.p,
        )
    max_rel = max(
        abs(a - b) / max(abs(a), abs(b), 1e-30) for a, b in zip(achieved.coeffs, target)
    )
    out = result.as_dict()
    out.update({
        "alpha": alpha,
        "g_dob": g_dob,
        "g_rfob": g_rfob,
        "char_poly_achieved": list(achieved.coeffs),
        "char_poly_target": list(target),
        "char_poly_max_rel_dev": max_rel,
    })
    return out


def _print_design_report(rep: dict) -> None:
    print(f"design case: {rep['case']}   feasible: {rep['feasible']}   degenerate: {rep['degenerate']}")
    for name in ("xi", "w_n", "p", "k", "eta", "psi", "alpha_g", "C_f", "alpha", "g_dob", "g_rfob"):
        v = rep.get(name)
        if v is None:
            continue
        print(f"  {name:10s} = {_fmt(v)}")
    for name, v in sorted(rep["report"].items()):
        print(f"  {name:24s} = {_fmt(v)}")
    print(f"  char poly achieved = [{', '.join(_fmt(c) for c in rep['char_poly_achieved'])}]")
    print(f"  char poly target   = [{', '.join(_fmt(c) for c in rep['char_poly_target'])}]")
    print(f"  max relative deviation = {rep['char_poly_max_rel_dev']:.3e}")
    for note in rep["notes"]:
        print(f"  note: {note}")


def _parse_sweep(spec: str) -> tuple[str, str, np.ndarray]:
    try:
        key_part, rng = spec.split("=", 1)
        section, key = key_part.strip().split(".", 1)
        parts = rng.split(":")
        if len(parts) not in (3, 4):
            raise ValueError
        start, stop, n = float(parts[0]), float(parts[1]), int(parts[2])
        scale = parts[3] if len(parts) == 4 else "lin"
        if scale not in ("lin", "log") or n < 1:
            raise ValueError
    except ValueError:
        raise ConfigError(
            f"bad --sweep {spec!r}: expected section.key=START:STOP:N[:lin|log]"
        ) from None
    if scale == "log":
        if start <= 0 or stop <= 0:
            raise ConfigError("log sweep requires positive endpoints")
        values = np.geomspace(start, stop, n)
    else:
        values = np.linspace(start, stop, n)
    return section, key, values


def cmd_design(args) -> int:
    doc = _load_config(args.config)
    env = cfgmod.build_env(doc)
    if args.sweep:
        section, key, values = _parse_sweep(args.sweep)
        if section not in cfgmod.SCHEMA or key not in cfgmod.SCHEMA[section]:
            raise ConfigError(f"--sweep target [{section}] {key} is not a known key")
        if section not in doc.sections:
            missing = [k for k, s in cfgmod.SCHEMA[section].items() if s.required and k != key]
            if missing:
                raise ConfigError(f"--sweep needs section [{section}] in the config "
                                  f"(required keys: {', '.join(missing)})")
            doc.sections[section] = {k: s.default for k, s in cfgmod.SCHEMA[section].items()}
        rows = []
        for v in values:
            doc.sections[section][key] = float(v)
            rep = _design_report(doc, _run_design(doc, cfgmod.build_env(doc)))
            rep["sweep_value"] = float(v)
            rows.append(_sanitize(rep))
            print(f"{key} = {_fmt(v)}: alpha_g = {_fmt(rep['alpha_g'])}, C_f = {_fmt(rep['C_f'])}, "
                  f"w_n = {_fmt(rep['w_n'])}, feasible = {rep['feasible']}")
        if args.out:
            Path(args.out).write_text(json.dumps(rows, indent=2, sort_keys=True), encoding="utf-8")
        return EXIT_OK
    rep = _design_report(doc, _run_design(doc, env))
    _print_design_report(rep)
    if args.out:
        Path(args.out).write_text(json.dumps(_sanitize(rep), indent=2, sort_keys=True), encoding="utf-8")
    return EXIT_OK


def cmd_analyze(args) -> int:
    doc = _load_config(args.config)
    pp = cfgmod.build_plant(doc)
    dob = cfgmod.build_dob(doc)
    rfob = cfgmod.build_rfob(doc)
    env = cfgmod.build_env(doc)
    c_f = doc.get("scenario", "C_f")
    ratios = RatioReport.from_configs(pp, dob, rfob)
    phi = PhiPoly.from_params(pp, rfob, env)
    rhp = rhp_zero_check(phi)
    loop = open_loop_general(pp, dob, rfob, env, c_f)
    angles = asymptote_angles(loop)
    bound = robustness_bound_check(ratios.alpha, dob.g_dob, dob.g_v)
    char = loop.den.add(loop.num)
    cl_poles: list[complex] | None = None
    if char.degree <= 3:
        cl_poles = poles(char)
    rep = {
        "alpha": ratios.alpha,
        "beta": ratios.beta,
        "beta_below_alpha": ratios.beta < ratios.alpha,
        "phi_coeffs": [phi.c2, phi.c1, phi.c0],
        "phi_roots": [[z.real, z.imag] for z in rhp.roots],
        "rhp_zero": rhp.has_rhp,
        "rhp_marginal": rhp.marginal,
        "asymptote_angles_deg": list(angles),
        "relative_degree": loop.relative_degree,
        "closed_loop_poles": None if cl_poles is None else [[z.real, z.imag] for z in cl_poles],
        "closed_loop_stable": None if cl_poles is None else bool(all(z.real < 0 for z in cl_poles)),
        "bandwidth_bound_passed": bound.passed,
        "bandwidth_bound_margin": bound.margin,
    }
    print(f"alpha = {_fmt(ratios.alpha)}   beta = {_fmt(ratios.beta)}")
    if rep["beta_below_alpha"]:
        print("WARNING: beta < alpha: overestimated identified inertia, right-half-plane zero risk")
    print(f"mismatch zeros: {', '.join(_fmt(z.real) + ('%+gj' % z.imag) for z in rhp.roots) or 'none'}")
    print(f"right-half-plane zero: {rhp.has_rhp}   marginal: {rhp.marginal}")
    print(f"relative degree: {loop.relative_degree}   asymptote angles: {angles} deg")
    if cl_poles is not None:
        for z in sorted(cl_poles, key=lambda z: z.real):
            print(f"  closed-loop pole: {_fmt(z.real)} {z.imag:+.6g}j")
        print(f"closed-loop stable: {rep['closed_loop_stable']}")
    else:
        print("closed-loop poles: degree > 3, analytic pole listing unsupported")
    print(f"bandwidth bound alpha*g_dob <= g_v/2: {'pass' if bound.passed else 'FAIL'} "
          f"(margin {_fmt(bound.margin)} rad/s)")
    if args.out:
        Path(args.out).write_text(json.dumps(_sanitize(rep), indent=2, sort_keys=True), encoding="utf-8")
    return EXIT_OK


def write_timeseries_csv(res: SimResult, path: str, columns=TIMESERIES_COLUMNS) -> None:
    """Fixed column order, >= 10 significant digits, deterministic text."""
    lines = [",".join(columns)]
    n = res.n_steps
    cols = []
    for name in columns:
        arr = res.ts[name]
        if name == "contact_mode":
            cols.append([CONTACT_MODE_NAMES[int(v)] for v in arr])
        elif name == "ctrl_mode":
            cols.append([CTRL_MODE_NAMES[int(v)] for v in arr])
        else:
            cols.append([_fmt(float(v)) for v in arr])
    for i in range(n):
        lines.append(",".join(col[i] for col in cols))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_summary(res: SimResult, out_path: str) -> None:
    summary = _sanitize(res.summary_dict())
    summary["csv_schema"] = CSV_SCHEMA_VERSION
    Path(out_path).write_text(json.dumps(summary, indent=2, sort_keys=True),
                              encoding="utf-8")


def cmd_simulate(args) -> int:
    doc = _load_config(args.config)
    if args.seed is not None:
        doc.sections.setdefault("scenario", {})
        doc.sections["scenario"]["seed"] = args.seed
    scenario = cfgmod.build_scenario(doc)
    res = run_scenario(scenario)
    if args.out:
        write_timeseries_csv(res, args.out)
        _write_summary(res, args.out + ".summary.json")
    print(f"steps: {res.n_steps}   diverged: {res.diverged}"
          + (f" at step {res.diverged_step}" if res.diverged else ""))
    for p in res.phase_summaries:
        print(f"  phase {p.mode} [{_fmt(p.t_start)}, {_fmt(p.t_end)}] s: "
              f"steady error {_fmt(p.ss_error)}, settling {_fmt(p.settling_time)} s, "
              f"max observer error {_fmt(p.max_rfob_error)}")
    for e in res.design_events:
        status = "applied" if e.applied else f"rejected ({e.note})"
        print(f"  design event t = {_fmt(e.t)} s: {status}"
              + (f", alpha_g = {_fmt(e.alpha_g)}, C_f = {_fmt(e.C_f)}, g = {_fmt(e.g)}" if e.applied else ""))
    return EXIT_DIVERGED if res.diverged else EXIT_OK


def cmd_identify(args) -> int:
    doc = _load_config(args.config)
    if args.seed is not None:
        doc.sections.setdefault("scenario", {})
        doc.sections["scenario"]["seed"] = args.seed
    scenario = cfgmod.build_scenario(doc)
    if not (scenario.ident.enable_plant or scenario.ident.enable_env):
        raise ConfigError("[identify] enable_plant or enable_env must be on for the identify command")
    res = run_scenario(scenario)
    if args.out:
        write_timeseries_csv(res, args.out, columns=TRACE_COLUMNS)
        _write_summary(res, args.out + ".summary.json")
    print(f"steps: {res.n_steps}   diverged: {res.diverged}")
    if res.final_delta_nc is not None:
        truth = [scenario.plant.M_m, scenario.friction.k_vsc, scenario.friction.k_clmb,
                 scenario.plant.F_d]
        names = ["M_m_kg", "k_vsc_Ns_per_m", "k_clmb_N", "F_d_N"]
        print("plant estimates (value, truth, relative error):")
        for name, got, want in zip(names, res.final_delta_nc, truth):
            rel = abs(got - want) / max(abs(want), 1e-12)
            print(f"  {name:16s} {_fmt(got):>14s} {_fmt(want):>12s} {rel:.3%}")
        print(f"  unidentifiable directions: {res.unidentifiable_nc}")
    if res.final_delta_c is not None:
        env = scenario.env
        truth = [env.D_env, env.K_env, -(env.D_env * env.xdot_env + env.K_env * env.x_env)]
        names = ["D_env_Ns_per_m", "K_env_N_per_m", "offset_N"]
        print("environment estimates (value, truth, relative error):")
        for name, got, want in zip(names, res.final_delta_c, truth):
            rel = abs(got - want) / max(abs(want), 1e-12)
            print(f"  {name:16s} {_fmt(got):>14s} {_fmt(want):>12s} {rel:.3%}")
        print(f"  unidentifiable directions: {res.unidentifiable_c}")
    return EXIT_DIVERGED if res.diverged else EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rfobkit",
        description="Observer-based robust force control: gain design, stability analysis, "
                    "simulation and identification",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("design", cmd_design), ("analyze", cmd_analyze),
                     ("simulate", cmd_simulate), ("identify", cmd_identify)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="configuration file path")
        p.add_argument("--out", default=None, help="output path (JSON report or CSV)")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        if name == "design":
            p.add_argument("--sweep", default=None,
                           help="section.key=START:STOP:N[:lin|log] one design per grid point")
        p.set_defaults(fn=fn)
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleDesignError as exc:
        print(f"infeasible design: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

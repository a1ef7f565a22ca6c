"""Batch front-end: parse configs, dispatch experiments, emit artifacts.

Every run writes into its output directory: the resolved configuration
(``config.resolved.json``), the documented CSV artifacts, a machine
readable ``verdict.json`` with one pass/fail entry per enabled check,
and command-specific JSON reports.  Exit codes: 0 all checks pass,
2 configuration error, 3 solver failure, 4 monitor violation,
5 non-convergence.
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import tomli

from . import __version__, kernels
from .errors import ConfigError, ConvergenceError, SolverError
from .filtering import AlphaParam
from .grids import (
    Field,
    make_grid,
    make_time_grid,
    read_field_csv,
    write_trajectory_csv,
)
from .parabolic import approx_control_stage, local_exact_to_constant
from .pipeline import (
    alpha_limit_study,
    global_viscous_control,
    inviscid_refinement_study,
    loglog_fit,
    uniformity_report,
)
from .transport import (
    ControlTriple,
    global_inviscid_control,
    verify_global_inviscid,
    write_controls_csv,
)
from .viscous import simulate_viscous, smoothing_monitor

COMMANDS = (
    "simulate",
    "control-inviscid",
    "control-viscous",
    "smooth",
    "approx",
    "local-exact",
    "pipeline",
    "alpha-limit",
    "sweep",
)

_KEYS = {
    "L": float,
    "T": float,
    "n": int,
    "m": int,
    "alpha": float,
    "alphas": list,
    "eta": float,
    "margin": float,
    "tau": float,
    "taus": list,
    "N": float,
    "profile": str,
    "target_profile": str,
    "out": str,
    "epsilon": float,
    "tol_factor": float,
    "refine": list,
    "v_const": float,
    "seed": int,
    "command": str,
}

_DEFAULTS = {
    "L": 1.0,
    "T": 1.0,
    "n": 101,
    "m": None,
    "alpha": 0.1,
    "alphas": None,
    "eta": None,  # resolved to L/4
    "margin": 0.1,
    "tau": None,  # resolved to T/20
    "taus": None,
    "N": 0.0,
    "profile": "zero",
    "target_profile": "zero",
    "out": "out",
    "epsilon": 1e-8,
    "tol_factor": 1.0,
    "refine": None,
    "v_const": None,
    "seed": 0,
}


def resolve_profile(spec: str, grid):
    """Named analytic profiles: zero | const:c | sin:k:amp |
    bump:center:width:amp | csv:path."""
    xs = grid.nodes
    parts = spec.split(":")
    kind = parts[0]
    try:
        if kind == "zero":
            return np.zeros(grid.n)
        if kind == "const":
            (c,) = map(float, parts[1:])
            return np.full(grid.n, c)
        if kind == "sin":
            k, amp = float(parts[1]), float(parts[2])
            return amp * np.sin(k * np.pi * (xs - grid.x_left) / grid.length)
        if kind == "bump":
            c, w, amp = map(float, parts[1:])
            u = np.abs(xs - c) / w
            vals = amp * np.cos(0.5 * np.pi * np.clip(u, 0.0, 1.0)) ** 4
            return np.where(u < 1.0, vals, 0.0)
        if kind == "csv":
            f = read_field_csv(parts[1])
            if f.grid.n != grid.n or abs(f.grid.x_left - grid.x_left) > 1e-12:
                raise ConfigError(
                    f"profile CSV grid ({f.grid.n} nodes) does not match n={grid.n}"
                )
            return np.array(f.values)
    except (IndexError, ValueError) as e:
        raise ConfigError(f"malformed profile spec {spec!r}: {e}") from e
    raise ConfigError(
        f"unknown profile kind {kind!r}; expected zero|const|sin|bump|csv"
    )


def _load_config_file(path):
    with open(path, "rb") as fh:
        data = tomli.load(fh)
    for key in data:
        if key not in _KEYS:
            raise ConfigError(
                f"unknown config key {key!r}; valid keys: {sorted(_KEYS)}"
            )
    return data


def parse_config(argv):
    """Merge defaults, config file and flags (flags win; conflicts recorded)."""
    parser = argparse.ArgumentParser(
        prog="balpha",
        description="control-synthesis laboratory for filtered Burgers systems",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=str, default=None)
    parser.add_argument("--L", type=float)
    parser.add_argument("--T", type=float)
    parser.add_argument("--n", type=int)
    parser.add_argument("--m", type=int)
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--alphas", type=str, help="comma separated")
    parser.add_argument("--eta", type=float)
    parser.add_argument("--margin", type=float)
    parser.add_argument("--tau", type=float)
    parser.add_argument("--taus", type=str, help="comma separated")
    parser.add_argument("--N", type=float)
    parser.add_argument("--profile", type=str)
    parser.add_argument("--target-profile", dest="target_profile", type=str)
    parser.add_argument("--out", type=str)
    parser.add_argument("--epsilon", type=float)
    parser.add_argument("--tol-factor", dest="tol_factor", type=float)
    parser.add_argument("--refine", type=str, help="comma separated node counts")
    parser.add_argument("--v-const", dest="v_const", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--sweep-command", dest="sweep_command", type=str,
                        choices=[c for c in COMMANDS if c != "sweep"])
    args = parser.parse_args(argv)

    cfg = dict(_DEFAULTS)
    file_vals = {}
    if args.config:
        file_vals = _load_config_file(args.config)
        cfg.update(file_vals)

    conflicts = []
    for key in _DEFAULTS:
        flag_val = getattr(args, key, None)
        if flag_val is None:
            continue
        if key in ("alphas", "taus", "refine") and isinstance(flag_val, str):
            flag_val = [float(v) for v in flag_val.split(",") if v]
        if key in file_vals and file_vals[key] != flag_val:
            conflicts.append(
                {"key": key, "file": file_vals[key], "flag": flag_val}
            )
        cfg[key] = flag_val

    cfg["command"] = args.command
    cfg["sweep_command"] = getattr(args, "sweep_command", None)
    if cfg["eta"] is None:
        cfg["eta"] = cfg["L"] / 4.0
    if cfg["tau"] is None:
        cfg["tau"] = cfg["T"] / 20.0
    for key in ("L", "T", "eta", "margin", "tau", "epsilon", "tol_factor"):
        if cfg[key] is not None and cfg[key] <= 0:
            raise ConfigError(f"parameter {key} must be positive, got {cfg[key]}")
    if cfg["n"] < 3:
        raise ConfigError(f"grid needs at least 3 nodes, got n={cfg['n']}")
    if cfg["alpha"] < 0:
        raise ConfigError(f"alpha must be nonnegative, got {cfg['alpha']}")
    cfg["conflicts"] = conflicts
    cfg["version"] = __version__
    cfg["kernel_backend"] = kernels.backend_name()
    return cfg


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)}")


def write_json(path, obj):
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _outdir(cfg):
    root = os.environ.get("BALPHA_OUT_ROOT", ".")
    out = Path(root) / cfg["out"]
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(cfg, out):
    echo = {k: v for k, v in cfg.items() if k != "sweep_command" or v}
    write_json(out / "config.resolved.json", echo)


def _verdict(out, checks):
    ok = all(c["passed"] for c in checks)
    write_json(out / "verdict.json", {"pass": ok, "checks": checks})
    return ok


def _check(name, passed, value=None, tol=None):
    c = {"name": name, "passed": bool(passed)}
    if value is not None:
        c["value"] = float(value)
    if tol is not None:
        c["tol"] = float(tol)
    # fault-injection hook for exercising the monitor-violation exit path
    # in CI: BALPHA_FORCE_MONITOR_VIOLATION=<check name>
    if os.environ.get("BALPHA_FORCE_MONITOR_VIOLATION") == name:
        c["passed"] = False
        c["injected"] = True
    return c


def _grid(cfg):
    return make_grid(0.0, cfg["L"], cfg["n"])


def _default_m(cfg, span, speed=1.0):
    if cfg["m"]:
        return cfg["m"]
    dx = cfg["L"] / (cfg["n"] - 1)
    return max(2, int(math.ceil(span * max(2.0, 2.0 * speed) / dx)))


def cmd_simulate(cfg, out):
    grid = _grid(cfg)
    y0 = Field(grid, resolve_profile(cfg["profile"], grid))
    m = _default_m(cfg, cfg["T"], max(1.0, float(np.max(np.abs(y0.values)))))
    tg = make_time_grid(0.0, cfg["T"], m)
    if cfg["v_const"] is not None:
        v = np.full(m + 1, cfg["v_const"])
        controls = ControlTriple(tg, np.zeros(m + 1), v, v.copy())
    else:
        z = np.zeros(m + 1)
        controls = ControlTriple(tg, z, z.copy(), z.copy())
    y, zf, rep = simulate_viscous(y0, controls, AlphaParam(cfg["alpha"]), tg)
    write_trajectory_csv(y, out / "y.csv")
    write_trajectory_csv(zf, out / "z.csv")
    write_controls_csv(out / "controls.csv", tg.nodes, controls.p,
                       controls.v_l, controls.v_r)
    write_json(out / "report.json", rep)
    checks = [
        _check("max_principle", rep["max_principle"]["passed"],
               rep["max_principle"]["worst_excess"], 1e-8),
        _check("filter_consistency", rep["filter_consistency"]["passed"],
               rep["filter_consistency"]["residual"], 1e-10),
    ]
    if rep["energy"]["asserted"]:
        checks.append(_check("energy_ledger", rep["energy"]["passed"],
                             rep["energy"]["worst_excess"], 1e-8))
    return checks


def cmd_control_inviscid(cfg, out):
    grid = _grid(cfg)
    alpha = AlphaParam(cfg["alpha"])
    y0_fn = lambda g: resolve_profile(cfg["profile"], g)
    yT_fn = lambda g: resolve_profile(cfg["target_profile"], g)
    checks = []
    if cfg["refine"]:
        study = inviscid_refinement_study(
            y0_fn, yT_fn, [int(v) for v in cfg["refine"]], cfg["L"], cfg["T"],
            alpha, eta_frac=cfg["eta"] / cfg["L"], margin=cfg["margin"],
        )
        lines = ["n,dx,dt,terminal_c0_error"]
        for r in study["rows"]:
            lines.append(
                f"{r['n']},{r['dx']!r},{r['dt']!r},{r['terminal_c0_error']!r}"
            )
        (out / "refinement.csv").write_text("\n".join(lines) + "\n")
        if study["fit"]:
            write_json(out / "refinement.fit.json", study["fit"])
            checks.append(_check("refinement_slope",
                                 study["fit"]["slope"] >= 0.8,
                                 study["fit"]["slope"], 0.8))
        rows = study["rows"]
        res = rows[-1]["result"]
        terminal = rows[-1]["terminal_c0_error"]
        dx, dt = rows[-1]["dx"], rows[-1]["dt"]
    else:
        y0 = Field(grid, y0_fn(grid))
        yT = Field(grid, yT_fn(grid))
        res = global_inviscid_control(y0, yT, alpha, cfg["T"],
                                      eta=cfg["eta"], margin=cfg["margin"])
        ver = verify_global_inviscid(res, y0, yT, alpha)
        terminal = ver["terminal_c0_error"]
        dx, dt = grid.dx, cfg["T"] / ver["m_sim"]
    write_controls_csv(out / "controls.csv", res.times, res.p, res.v_l, res.v_r)
    report = {
        "gamma0": res.gamma0,
        "gammaT": res.gammaT,
        "eta": cfg["eta"],
        "delta_hat": res.delta_hat,
        "iterations": {"forward": res.tilde.iterations,
                       "backward": res.hat.iterations},
        "residuals": {
            "forward_terminal": res.tilde.diagnostics["terminal_sup"],
            "backward_terminal": res.hat.diagnostics["terminal_sup"],
            "flow_deviation": res.tilde.diagnostics["flow_deviation"],
        },
        "terminal_c0_error": terminal,
    }
    write_json(out / "run_report.json", report)
    tol = cfg["tol_factor"] * 10.0 * (dx + dt)
    checks.append(_check("terminal_c0_error", terminal <= tol, terminal, tol))
    return checks


def cmd_smooth(cfg, out):
    grid = _grid(cfg)
    y0 = Field(grid, resolve_profile(cfg["profile"], grid))
    rep, y, z = smoothing_monitor(y0, AlphaParam(cfg["alpha"]), cfg["T"],
                                  m=cfg["m"])
    write_json(out / "smoothing.json", rep.as_json_dict())
    lines = ["t,h1,h2,h3,c2"]
    for j in range(rep.times.size):
        lines.append(
            f"{float(rep.times[j])!r},{float(rep.h1_history[j])!r},"
            f"{float(rep.h2_history[j])!r},{float(rep.h3_history[j])!r},"
            f"{float(rep.c2_history[j])!r}"
        )
    (out / "smoothing_history.csv").write_text("\n".join(lines) + "\n")
    checks = [
        _check("selectors_ordered", 0 < rep.t1 < rep.t2 < cfg["T"] / 2 + 1e-12),
        _check("c2_below_lambda2", rep.c2_at_Tstar <= rep.lambda2 + 1e-12,
               rep.c2_at_Tstar, rep.lambda2),
    ]
    return checks


def cmd_approx(cfg, out):
    grid = _grid(cfg)
    alpha = AlphaParam(cfg["alpha"])
    y0 = Field(grid, resolve_profile(cfg["profile"], grid))
    yf = Field(grid, resolve_profile(cfg["target_profile"], grid))
    checks = []
    taus = cfg["taus"] or [cfg["tau"]]
    alphas = cfg["alphas"] or [cfg["alpha"]]
    from .grids import norms as _norms

    M_data = max(_norms(y0).c2, _norms(yf).c2, 1e-12)
    A_unit = 4.0 * (cfg["L"] + 2.0 * cfg["eta"]) * (1.0 + cfg["margin"])
    rows = []
    for tau in taus:
        # the compressed pulse fixes the window resolution
        m_w = int(math.ceil(
            1.2 * (A_unit + tau * (M_data + 1.0)) * (grid.n - 1) / cfg["L"]
        ))
        m_w += m_w % 2
        for a in alphas:
            res = approx_control_stage(
                y0, yf, AlphaParam(a), float(tau), eta=cfg["eta"],
                margin=cfg["margin"], m_window=m_w,
            )
            rows.append((float(tau), float(a), res.terminal_h1, res))
    lines = ["tau,alpha,h1_terminal"]
    for tau, a, h1, _ in rows:
        lines.append(f"{tau!r},{a!r},{h1!r}")
    (out / "tau_sweep.csv").write_text("\n".join(lines) + "\n")
    last = rows[-1][3]
    write_controls_csv(out / "controls.csv", last.y.tgrid.nodes,
                       last.controls.p, last.controls.v_l, last.controls.v_r)
    write_json(out / "report.json", {
        "tau": rows[-1][0],
        "terminal_h1": rows[-1][2],
        "corner_residual": last.remainder.corner_residual,
        "bridge_c2_bound": last.bridge.c2_bound,
        "tau0": last.bridge.tau0,
    })
    if len(taus) >= 2:
        fit = loglog_fit([r[0] for r in rows if r[1] == alphas[0]],
                         [r[2] for r in rows if r[1] == alphas[0]])
        write_json(out / "tau_law.fit.json", fit)
        checks.append(_check("tau_law_exponent", fit["slope"] >= 0.45,
                             fit["slope"], 0.45))
    if len(alphas) >= 2:
        for tau in taus:
            vals = [r[2] for r in rows if r[0] == tau]
            spread = max(vals) / max(min(vals), 1e-300)
            checks.append(_check(f"alpha_spread_tau_{tau}", spread <= 3.0,
                                 spread, 3.0))
    if not checks:
        checks.append(_check("terminal_h1_finite",
                             np.isfinite(rows[-1][2]), rows[-1][2]))
    return checks


def cmd_local_exact(cfg, out):
    grid = _grid(cfg)
    y0 = Field(grid, resolve_profile(cfg["profile"], grid))
    res = local_exact_to_constant(
        y0, cfg["N"], AlphaParam(cfg["alpha"]), cfg["T"], eta=cfg["eta"],
        m_steps=cfg["m"], epsilon=cfg["epsilon"],
    )
    hum = res.hum
    write_json(out / "hum_report.json", {
        "iterations": hum.iterations,
        "terminal_l2": hum.terminal_l2,
        "cost": hum.cost,
        "epsilon": hum.epsilon,
        "residual": hum.residual,
    })
    write_controls_csv(out / "controls.csv", res.y.tgrid.nodes,
                       res.controls.p, res.controls.v_l, res.controls.v_r)
    write_trajectory_csv(res.y, out / "y.csv")
    dx = grid.dx
    dt = res.y.tgrid.dt
    tol = cfg["tol_factor"] * 10.0 * (dx + dt)
    return [
        _check("terminal_error", res.terminal_error <= tol,
               res.terminal_error, tol),
        _check("outer_converged", res.outer_iterations <= 50,
               res.outer_iterations, 50),
    ]


def cmd_control_viscous(cfg, out, alpha=None, write_uniformity=True):
    grid = _grid(cfg)
    a = cfg["alpha"] if alpha is None else alpha
    y0 = Field(grid, resolve_profile(cfg["profile"], grid))
    res = global_viscous_control(
        y0, cfg["N"], cfg["T"], AlphaParam(a), eta=cfg["eta"],
        margin=cfg["margin"], tau_init=cfg["tau"],
    )
    write_controls_csv(out / "controls.csv", res.times, res.p, res.v_l, res.v_r)
    write_controls_csv(out / "p.csv", res.times, res.p,
                       np.zeros_like(res.p), np.zeros_like(res.p))
    for st in res.stages:
        write_trajectory_csv(st["y"], out / f"y_{st['name']}.csv")
    report = {
        "alpha": a,
        "plan": {"T": res.plan.T, "tau": res.plan.tau,
                 "T_star": res.plan.T_star, "N": res.plan.N,
                 "boundaries": list(res.plan.boundaries)},
        "terminal_error": res.terminal_error,
        "terminal_error_resim": res.terminal_error_resim,
        "monitors": res.monitors,
        "meta": {k: v for k, v in res.meta.items()},
        "smoothing": res.smoothing,
    }
    write_json(out / "report.json", report)
    dx = grid.dx
    dt_max = max(st["y"].tgrid.dt for st in res.stages)
    tol = cfg["tol_factor"] * 20.0 * (dx + dt_max)
    checks = [
        _check("terminal_error", res.terminal_error <= tol,
               res.terminal_error, tol),
        _check("terminal_error_resim",
               (not np.isfinite(res.terminal_error_resim))
               or res.terminal_error_resim <= tol,
               res.terminal_error_resim, tol),
    ]
    return checks, res


def cmd_pipeline(cfg, out):
    alphas = cfg["alphas"] or [cfg["alpha"]]
    checks = []
    runs = []
    p_files = []
    for a in alphas:
        sub = out / f"alpha_{a:g}"
        sub.mkdir(parents=True, exist_ok=True)
        sub_checks, res = cmd_control_viscous(cfg, sub, alpha=float(a))
        for c in sub_checks:
            c["name"] = f"alpha_{a:g}/{c['name']}"
        checks.extend(sub_checks)
        p_files.append(sub / "p.csv")
        runs.append(
            {
                "alpha": float(a),
                "p_c0": float(np.max(np.abs(res.p))),
                "traces_c1": float(
                    max(
                        st["controls"].traces_c1
                        for st in res.stages
                    )
                ),
                "terminal_error": res.terminal_error,
            }
        )
    rep = uniformity_report(runs)
    lines = ["alpha,p_c0,traces_c1,terminal_error"]
    for r in runs:
        lines.append(
            f"{r['alpha']!r},{r['p_c0']!r},{r['traces_c1']!r},"
            f"{r['terminal_error']!r}"
        )
    (out / "uniformity.csv").write_text("\n".join(lines) + "\n")
    write_json(out / "uniformity.json", {
        "alphas": rep.alphas,
        "spreads": rep.spreads,
        "flagged": rep.flagged,
    })
    if len(alphas) >= 2:
        same = all(
            p_files[0].read_bytes() == pf.read_bytes() for pf in p_files[1:]
        )
        checks.append(_check("p_identical_across_alpha", same))
        checks.append(_check("uniformity_spread", not rep.flagged,
                             max(rep.spreads.values()), 3.0))
    return checks


def cmd_alpha_limit(cfg, out):
    grid = _grid(cfg)
    y0 = Field(grid, resolve_profile(cfg["profile"], grid))
    m = _default_m(cfg, cfg["T"], max(1.0, float(np.max(np.abs(y0.values)))))
    tg = make_time_grid(0.0, cfg["T"], m)
    z = np.zeros(m + 1)
    controls = ControlTriple(tg, z, z.copy(), z.copy())
    alphas = cfg["alphas"] or [0.4, 0.2, 0.1, 0.05]
    study = alpha_limit_study(y0, controls, alphas)
    lines = ["alpha,distance"]
    for r in study["rows"]:
        lines.append(f"{r['alpha']!r},{r['distance']!r}")
    (out / "alpha_limit.csv").write_text("\n".join(lines) + "\n")
    if study["fit"]:
        write_json(out / "alpha_limit.fit.json", study["fit"])
    dists = [r["distance"] for r in study["rows"]]
    ordered = sorted(range(len(alphas)), key=lambda i: -alphas[i])
    decreasing = all(
        dists[ordered[i]] > dists[ordered[i + 1]]
        for i in range(len(ordered) - 1)
    ) if any(d > 0 for d in dists) else True
    return [_check("distances_decrease_with_alpha", decreasing)]


def cmd_sweep(cfg, out):
    target = cfg.get("sweep_command") or "simulate"
    alphas = cfg["alphas"] or [cfg["alpha"]]
    results = {}

    def run_one(a):
        sub_cfg = dict(cfg)
        sub_cfg["alpha"] = float(a)
        sub_cfg["alphas"] = None
        sub = out / f"alpha_{a:g}"
        sub.mkdir(parents=True, exist_ok=True)
        _echo_config(sub_cfg, sub)
        checks = _DISPATCH[target](sub_cfg, sub)
        _verdict(sub, checks)
        return a, checks

    with ThreadPoolExecutor(max_workers=min(4, len(alphas))) as pool:
        for a, checks in pool.map(run_one, alphas):
            results[a] = checks
    checks = []
    for a, sub_checks in sorted(results.items()):
        for c in sub_checks:
            checks.append(
                _check(f"alpha_{a:g}/{c['name']}", c["passed"],
                       c.get("value"), c.get("tol"))
            )
    return checks


def _control_viscous_entry(cfg, out):
    checks, _ = cmd_control_viscous(cfg, out)
    return checks


_DISPATCH = {
    "simulate": cmd_simulate,
    "control-inviscid": cmd_control_inviscid,
    "control-viscous": _control_viscous_entry,
    "smooth": cmd_smooth,
    "approx": cmd_approx,
    "local-exact": cmd_local_exact,
    "pipeline": cmd_pipeline,
    "alpha-limit": cmd_alpha_limit,
    "sweep": cmd_sweep,
}


def run(cfg) -> int:
    out = _outdir(cfg)
    _echo_config(cfg, out)
    try:
        checks = _DISPATCH[cfg["command"]](cfg, out)
    except ConvergenceError as e:
        write_json(out / "verdict.json",
                   {"pass": False, "error": str(e), "kind": "non-convergence"})
        print(f"error: {e}", file=sys.stderr)
        return 5
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except SolverError as e:
        write_json(out / "verdict.json",
                   {"pass": False, "error": str(e), "kind": "solver-failure"})
        print(f"solver error: {e}", file=sys.stderr)
        return 3
    ok = _verdict(out, checks)
    for c in checks:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"[{status}] {c['name']}" + (
            f" value={c['value']:.6g} tol={c['tol']:.6g}"
            if "value" in c and "tol" in c else ""))
    return 0 if ok else 4


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv if argv is not None else sys.argv[1:])
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())

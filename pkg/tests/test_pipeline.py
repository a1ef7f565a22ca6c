import numpy as np
import pytest

from balpha.errors import ConfigError
from balpha.filtering import AlphaParam
from balpha.grids import Field, make_grid, make_time_grid
from balpha.pipeline import (
    StagePlan,
    alpha_limit_study,
    global_viscous_control,
    loglog_fit,
    uniformity_report,
)
from balpha.transport import ControlTriple

L = 1.0


def test_loglog_fit_exact_power():
    xs = np.array([0.32, 0.16, 0.08, 0.04])
    ys = 3.0 * xs ** 0.5
    fit = loglog_fit(xs, ys)
    assert fit["slope"] == pytest.approx(0.5, abs=1e-12)
    assert fit["intercept"] == pytest.approx(np.log(3.0), abs=1e-12)
    assert fit["band95"] == pytest.approx(0.0, abs=1e-12)


def test_stage_plan_invariant():
    with pytest.raises(ConfigError):
        StagePlan(T=1.0, tau=0.05, T_star=0.46, N=0.0)
    plan = StagePlan(T=1.0, tau=0.05, T_star=0.2, N=0.3)
    assert plan.boundaries == (0.0, 0.45, 0.5, 1.0)


def test_pipeline_trivial_constant():
    grid = make_grid(0.0, L, 51)
    res = global_viscous_control(
        Field(grid, np.full(51, 0.3)), 0.3, 1.0, AlphaParam(0.1)
    )
    assert res.terminal_error == 0.0
    assert np.max(np.abs(res.p)) == 0.0
    assert np.all(res.v_l == 0.3)


def test_pipeline_end_to_end_small():
    grid = make_grid(0.0, L, 101)
    y0 = Field(grid, np.sin(2 * np.pi * grid.nodes))
    res = global_viscous_control(y0, 0.3, 1.0, AlphaParam(0.1))
    dx = grid.dx
    dt_max = max(
        s["y"].tgrid.dt for s in res.stages
    )
    assert res.terminal_error <= 20.0 * (dx + dt_max)
    assert res.terminal_error_resim <= 20.0 * (dx + dt_max)
    # control continuity at the stage joints
    assert res.monitors["joint_p_jump"] <= 1e-9
    assert res.monitors["joint_trace_jump"] <= 1e-9
    # emitted arrays are time-sorted and aligned
    assert np.all(np.diff(res.times) > 0)
    assert res.times.size == res.p.size == res.v_l.size == res.v_r.size
    # distributed control vanishes outside the middle window
    t1, t2 = res.plan.boundaries[1], res.plan.boundaries[2]
    outside = (res.times < t1 - 1e-12) | (res.times > t2 + 1e-12)
    assert np.max(np.abs(res.p[outside])) == 0.0


def test_alpha_limit_study_zero_case():
    grid = make_grid(0.0, L, 51)
    tg = make_time_grid(0.0, 0.2, 40)
    z = np.zeros(41)
    controls = ControlTriple(tg, z, z.copy(), z.copy())
    out = alpha_limit_study(
        Field(grid, np.zeros(51)), controls, [0.4, 0.2], alpha_ref=1e-3
    )
    assert all(r["distance"] == 0.0 for r in out["rows"])
    assert out["fit"] is None


def test_alpha_limit_study_monotone():
    grid = make_grid(0.0, L, 101)
    tg = make_time_grid(0.0, 0.3, 150)
    z = np.zeros(151)
    controls = ControlTriple(tg, z, z.copy(), z.copy())
    y0 = Field(grid, np.sin(np.pi * grid.nodes))
    out = alpha_limit_study(y0, controls, [0.4, 0.2, 0.1, 0.05])
    d = [r["distance"] for r in out["rows"]]
    assert d[0] > d[1] > d[2] > d[3] > 0
    assert out["fit"]["slope"] > 0


def test_uniformity_report_cases():
    single = uniformity_report(
        [{"alpha": 0.1, "p_c0": 2.0, "traces_c1": 1.0, "terminal_error": 0.0}]
    )
    assert single.spreads["p_c0"] == 1.0 and not single.flagged
    double = uniformity_report(
        [
            {"alpha": 0.1, "p_c0": 2.0, "traces_c1": 1.0},
            {"alpha": 1.0, "p_c0": 2.0, "traces_c1": 1.4},
        ]
    )
    assert double.spreads["p_c0"] == 1.0
    assert double.spreads["traces_c1"] == pytest.approx(1.4)
    flagged = uniformity_report(
        [
            {"alpha": 0.1, "p_c0": 1.0, "traces_c1": 1.0},
            {"alpha": 1.0, "p_c0": 4.0, "traces_c1": 1.0},
        ]
    )
    assert flagged.flagged

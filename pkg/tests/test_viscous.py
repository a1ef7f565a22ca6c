import numpy as np
import pytest

from balpha.errors import ConfigError
from balpha.filtering import AlphaParam
from balpha.grids import Field, l2_values, make_grid, make_time_grid
from balpha.transport import ControlTriple
from balpha.viscous import (
    ViscousState,
    filter_consistency_residual,
    m_t_bound,
    make_viscous_state,
    simulate_viscous,
    smoothing_monitor,
    step_viscous,
)

L = 1.0


def zero_controls(tgrid):
    z = np.zeros(tgrid.m + 1)
    return ControlTriple(tgrid, z, z.copy(), z.copy())


def const_controls(tgrid, c):
    z = np.zeros(tgrid.m + 1)
    v = np.full(tgrid.m + 1, c)
    return ControlTriple(tgrid, z, v, v.copy())


def test_constant_state_is_steady():
    grid = make_grid(0.0, L, 51)
    state = make_viscous_state(0.0, Field(grid, np.full(51, 2.0)), AlphaParam(0.1))
    for _ in range(20):
        state = step_viscous(state, 0.0, 2.0, 2.0, 0.01)
    assert np.max(np.abs(state.y.values - 2.0)) <= 1e-12
    assert np.max(np.abs(state.z.values - 2.0)) <= 1e-12
    assert filter_consistency_residual(state) <= 1e-12


def test_small_amplitude_heat_decay():
    # oracle: the linearized problem is the heat equation, whose first
    # Dirichlet mode decays like exp(-pi^2 t)
    grid = make_grid(0.0, L, 201)
    eps = 1e-3
    y0 = Field(grid, eps * np.sin(np.pi * grid.nodes))
    tg = make_time_grid(0.0, 0.1, 400)
    y, z, rep = simulate_viscous(y0, zero_controls(tg), AlphaParam(0.1), tg)
    ratio = np.max(np.abs(y.values[-1])) / eps
    assert ratio == pytest.approx(np.exp(-np.pi ** 2 * 0.1), rel=0.02)


def test_max_principle_on_free_runs():
    grid = make_grid(0.0, L, 101)
    tg = make_time_grid(0.0, 0.5, 200)
    y0 = Field(grid, np.sin(2 * np.pi * grid.nodes))
    y, z, rep = simulate_viscous(y0, zero_controls(tg), AlphaParam(0.05), tg)
    assert rep["max_principle"]["passed"]
    assert np.max(np.abs(y.values)) <= 1.0 + 1e-8


def test_max_principle_randomized_runs():
    rng = np.random.default_rng(17)
    grid = make_grid(0.0, L, 101)
    xs = grid.nodes
    tg = make_time_grid(0.0, 0.3, 150)
    for _ in range(8):
        coef = rng.normal(size=4) * np.array([1.0, 0.6, 0.3, 0.15])
        y0v = sum(
            c * np.sin((k + 1) * np.pi * xs) for k, c in enumerate(coef)
        ) + rng.normal() * (1 - xs) + rng.normal() * xs
        y0 = Field(grid, y0v)
        ramp = 1.0 - np.exp(-tg.nodes / 0.05)
        vl = y0v[0] + 0.4 * rng.normal() * ramp
        vr = y0v[-1] + 0.4 * rng.normal() * ramp
        p = 0.3 * rng.normal() * np.sin(2 * np.pi * tg.nodes)
        controls = ControlTriple(tg, p, vl, vr)
        a = float(rng.uniform(0.01, 1.0))
        y, z, rep = simulate_viscous(y0, controls, AlphaParam(a), tg)
        assert rep["max_principle"]["worst_excess"] <= 1e-8
        assert rep["filter_consistency"]["passed"]


def test_energy_ledger_free_run():
    grid = make_grid(0.0, L, 101)
    tg = make_time_grid(0.0, 0.5, 200)
    y0 = Field(grid, np.sin(np.pi * grid.nodes))
    y, z, rep = simulate_viscous(y0, zero_controls(tg), AlphaParam(0.1), tg)
    assert rep["energy"]["asserted"]
    assert rep["energy"]["passed"]


def test_manufactured_solution_convergence_in_space():
    # forcing chosen so y = exp(-t) sin(pi x) solves the continuum system
    a = 0.2
    mu = np.pi ** 2
    fac = 1.0 / (1.0 + a * a * mu)

    def forcing_for(grid):
        xs = grid.nodes

        def f(t):
            s = np.sin(np.pi * xs)
            c = np.cos(np.pi * xs)
            e = np.exp(-t)
            return e * (mu - 1.0) * s + e * e * fac * np.pi * s * c

        return f

    errs = []
    T = 0.25
    for n in (51, 101, 201):
        grid = make_grid(0.0, L, n)
        tg = make_time_grid(0.0, T, 800)  # dt fine: spatial error dominates
        y0 = Field(grid, np.sin(np.pi * grid.nodes))
        y, _, _ = simulate_viscous(
            y0, zero_controls(tg), AlphaParam(a), tg, forcing=forcing_for(grid)
        )
        exact = np.exp(-T) * np.sin(np.pi * grid.nodes)
        errs.append(np.max(np.abs(y.values[-1] - exact)))
    r1 = errs[0] / errs[1]
    r2 = errs[1] / errs[2]
    assert r1 >= 3.0 and r2 >= 3.0  # second order in space


def test_manufactured_solution_convergence_in_time():
    a = 0.2
    mu = np.pi ** 2
    fac = 1.0 / (1.0 + a * a * mu)
    grid = make_grid(0.0, L, 401)
    xs = grid.nodes

    def f(t):
        s = np.sin(np.pi * xs)
        c = np.cos(np.pi * xs)
        e = np.exp(-t)
        return e * (mu - 1.0) * s + e * e * fac * np.pi * s * c

    T = 0.25
    errs = []
    for m in (10, 20, 40):
        tg = make_time_grid(0.0, T, m)
        y0 = Field(grid, np.sin(np.pi * xs))
        y, _, _ = simulate_viscous(
            y0, zero_controls(tg), AlphaParam(a), tg, forcing=f
        )
        exact = np.exp(-T) * np.sin(np.pi * xs)
        errs.append(np.max(np.abs(y.values[-1] - exact)))
    slope = np.polyfit(np.log([10, 20, 40]), np.log(errs), 1)[0]
    assert slope <= -0.9  # at least first order in time


def test_determinism_bit_identical():
    grid = make_grid(0.0, L, 101)
    tg = make_time_grid(0.0, 0.2, 100)
    y0 = Field(grid, np.sin(2 * np.pi * grid.nodes) * 0.7)
    r1 = simulate_viscous(y0, zero_controls(tg), AlphaParam(0.3), tg)
    r2 = simulate_viscous(y0, zero_controls(tg), AlphaParam(0.3), tg)
    assert np.array_equal(r1[0].values, r2[0].values)
    assert np.array_equal(r1[1].values, r2[1].values)


def test_gronwall_stability_of_perturbations():
    grid = make_grid(0.0, L, 101)
    xs = grid.nodes
    tg = make_time_grid(0.0, 0.5, 250)
    y0 = Field(grid, 0.8 * np.sin(np.pi * xs) + 0.2 * np.sin(3 * np.pi * xs))
    pert = 1e-6 * np.sin(np.pi * xs)
    y0p = Field(grid, y0.values + pert)
    a = AlphaParam(0.2)
    yb, zb, _ = simulate_viscous(y0, zero_controls(tg), a, tg)
    yp, _, _ = simulate_viscous(y0p, zero_controls(tg), a, tg)
    dx = grid.dx
    d0 = l2_values(pert, dx)
    from balpha.grids import diff1_values

    C = max(
        0.5 * np.max(np.abs(zb.values)) ** 2
        + np.max(np.abs(np.array([diff1_values(r, dx) for r in yb.values]))),
        1.0,
    )
    for j in (50, 125, 250):
        t = tg.nodes[j]
        dist = l2_values(yp.values[j] - yb.values[j], dx)
        assert dist <= 1.05 * d0 * np.exp(C * t) + 1e-14


def test_alpha_sweep_bound_and_limit_direction():
    grid = make_grid(0.0, L, 101)
    tg = make_time_grid(0.0, 0.3, 150)
    y0 = Field(grid, np.sin(2 * np.pi * grid.nodes))
    ref, _, _ = simulate_viscous(y0, zero_controls(tg), AlphaParam(1e-3), tg)
    dists = []
    for a in (1.0, 0.1, 0.01):
        y, _, rep = simulate_viscous(y0, zero_controls(tg), AlphaParam(a), tg)
        assert rep["max_principle"]["passed"]
        dists.append(np.max(np.abs(y.values - ref.values)))
    assert dists[0] > dists[1] > dists[2]


def test_simulate_rejects_mismatched_grid():
    grid = make_grid(0.0, L, 51)
    tg = make_time_grid(0.0, 1.0, 10)
    other = make_time_grid(0.0, 1.0, 20)
    with pytest.raises(ConfigError):
        simulate_viscous(
            Field(grid, np.zeros(51)), zero_controls(tg), AlphaParam(0.1), other
        )


def test_m_t_bound_formula():
    grid = make_grid(0.0, L, 11)
    tg = make_time_grid(0.0, 2.0, 4)
    y0 = Field(grid, np.linspace(-1.0, 0.5, 11))
    c = ControlTriple(
        tg, np.full(5, 0.25), np.full(5, 2.0), np.full(5, -3.0)
    )
    assert m_t_bound(y0, c) == pytest.approx(1.0 + 2.0 + 3.0 + 2.0 * 0.25)


def test_smoothing_monitor_zero_data():
    grid = make_grid(0.0, L, 51)
    rep, y, z = smoothing_monitor(Field(grid, np.zeros(51)), AlphaParam(0.1), T=0.5)
    assert rep.c2_at_Tstar == 0.0
    assert 0.0 < rep.t1 < rep.t2 == rep.T_star < 0.25 + 1e-12


def test_smoothing_monitor_selectors_and_uniformity():
    grid = make_grid(0.0, L, 101)
    y0 = Field(grid, np.sin(np.pi * grid.nodes))
    vals = []
    for a in (0.01, 0.1, 1.0):
        rep, _, _ = smoothing_monitor(y0, AlphaParam(a), T=1.0, m=300)
        assert 0.0 < rep.t1 < rep.t2 < 0.5 + 1e-12
        assert rep.T_star == rep.t2
        assert rep.c2_at_Tstar <= rep.lambda2 + 1e-12
        vals.append(rep.c2_at_Tstar)
    spread = max(vals) / min(vals)
    assert spread <= 3.0


def test_smoothing_monitor_amplitude_monotone():
    grid = make_grid(0.0, L, 101)
    vals = []
    for amp in (1.0, 0.1, 0.01):
        y0 = Field(grid, amp * np.sin(np.pi * grid.nodes))
        rep, _, _ = smoothing_monitor(y0, AlphaParam(0.1), T=1.0, m=300)
        vals.append(rep.c2_at_Tstar)
    assert vals[0] > vals[1] > vals[2]


def test_smoothing_monitor_requires_vanishing_endpoints():
    grid = make_grid(0.0, L, 51)
    with pytest.raises(ConfigError):
        smoothing_monitor(Field(grid, np.ones(51)), AlphaParam(0.1), T=0.5)

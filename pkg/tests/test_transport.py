import numpy as np
import pytest

from balpha.errors import ConfigError, SolverError
from balpha.filtering import AlphaParam
from balpha.grids import Field, make_grid, make_time_grid, norms
from balpha.transport import (
    ControlTriple,
    constant_lambda,
    flow_group_residual,
    global_inviscid_control,
    integrate_flow,
    inviscid_residual,
    lift_to_full_state,
    make_lambda,
    picard_null_control,
    simulate_inviscid,
    transport_solution,
    verify_global_inviscid,
)

L = 1.0
ETA = 0.25


def test_make_lambda_closed_form():
    lam = make_lambda(L, 1.0, ETA, margin=0.1)
    assert lam.amplitude == pytest.approx(3.3)
    assert lam.mass == pytest.approx(1.65)
    assert lam.mass > L + 2 * ETA
    # quadrature oracle for the closed-form integral
    ts = np.linspace(0, 1, 20001)
    q = np.trapezoid(lam.value(ts), ts)
    assert lam.mass == pytest.approx(q, abs=1e-8)


def test_lambda_endpoint_and_symmetry():
    lam = make_lambda(L, 2.0, ETA, margin=0.2)
    assert lam.value(0.0) == 0.0 and lam.value(2.0) == pytest.approx(0.0, abs=1e-12)
    assert lam.derivative(0.0) == 0.0
    assert abs(lam.derivative(2.0)) <= 1e-12
    ts = np.linspace(0, 2.0, 101)
    assert np.max(np.abs(lam.value(ts) - lam.value(2.0 - ts))) <= 1e-12


def test_lambda_symmetric_variant_half_mass():
    lam = make_lambda(L, 1.0, ETA, margin=0.1, symmetric=True)
    half = float(lam.integral(0.5))
    assert half > L + 2 * ETA  # enough to sweep within the half window
    assert lam.mass == pytest.approx(2 * half)


def test_constant_profile_flow_is_linear():
    lam = constant_lambda(0.7, 1.0, m=16)
    flow = integrate_flow(lam, None, s=0.0, xs=np.array([-1.0, 0.0, 2.0]))
    ts = flow.times
    for i, x in enumerate([-1.0, 0.0, 2.0]):
        assert np.allclose(flow.phi[:, i], x + 0.7 * ts, atol=1e-12)


def test_pure_pulse_flow_sweeps_past_left_margin():
    lam = make_lambda(L, 1.0, ETA, margin=0.1, m=128)
    flow = integrate_flow(lam, None, s=1.0, targets=[0.0], xs=np.array([L]))
    # flow from (s=1, x=L) back to t=0 lands at L - mass < -2 eta
    assert flow.phi[0, 0] == pytest.approx(L - lam.mass, abs=1e-9)
    assert flow.phi[0, 0] < -2 * ETA


def test_flow_refuses_coarse_grid():
    lam = make_lambda(L, 1.0, ETA, margin=0.1, m=2)
    with pytest.raises(SolverError):
        integrate_flow(lam, None, s=0.0, xs=np.array([0.0]), nsub=1)


def test_flow_rejects_offgrid_times():
    lam = make_lambda(L, 1.0, ETA, margin=0.1, m=16)
    with pytest.raises(ConfigError):
        integrate_flow(lam, None, s=0.33, xs=np.array([0.0]))


def _small_picard(n=101, m=220, alpha=0.5, amp=0.02):
    grid = make_grid(0.0, L, n)
    lam = make_lambda(L, 1.0, ETA, margin=0.1, m=m)
    y0 = Field(grid, amp * np.sin(np.pi * grid.nodes / L))
    return picard_null_control(y0, lam, AlphaParam(alpha), ETA), y0, lam


def test_picard_zero_data_converges_immediately():
    grid = make_grid(0.0, L, 51)
    lam = make_lambda(L, 1.0, ETA, margin=0.1, m=64)
    res = picard_null_control(
        Field(grid, np.zeros(51)), lam, AlphaParam(0.3), ETA
    )
    assert res.iterations == 1
    assert np.max(np.abs(res.y.values)) == 0.0


def test_picard_large_alpha_fast_convergence():
    grid = make_grid(0.0, L, 101)
    lam = make_lambda(L, 1.0, ETA, margin=0.1, m=220)
    y0 = Field(grid, 0.01 * np.sin(np.pi * grid.nodes / L))
    res = picard_null_control(y0, lam, AlphaParam(1e3), ETA)
    assert res.iterations <= 5


def test_picard_fixed_point_properties():
    res, y0, lam = _small_picard()
    d = res.diagnostics
    # terminal state swept out of the core interval
    assert d["terminal_sup"] <= 1e-12
    # initial frame reproduces the data
    assert np.max(np.abs(res.y.values[0] - y0.values)) <= 1e-12
    # sup-norm never expands beyond the extended data
    assert np.max(np.abs(res.y.values)) <= np.max(np.abs(res.y0_star.values)) + 1e-12
    assert d["small_velocity_regime"]
    assert d["flow_deviation"] <= res.eta + 1e-9


def test_picard_gap_decay_superlinear():
    res, _, _ = _small_picard()
    gaps = np.array(res.gaps)
    gaps = gaps[gaps > 1e-12]
    ratios = gaps[1:] / gaps[:-1]
    assert len(ratios) >= 3
    assert np.all(np.diff(ratios) < 1e-6)  # ratios decrease
    assert gaps[-1] <= 1e-10 * 10


def test_transport_solution_cases():
    res, y0, lam = _small_picard()
    flow = res.flow
    # constants are transported exactly
    ge = res.y0_star.grid
    const = Field(ge, np.full(ge.n, 0.3))
    moved = transport_solution(const, flow, t=0.5)
    assert np.allclose(moved.values, 0.3, atol=1e-12)
    # t = 0 reproduces the data
    same = transport_solution(res.y0_star, flow, t=0.0)
    assert np.max(np.abs(same.values - res.y0_star.values)) <= 1e-12
    # terminal frame vanishes on the core interval
    final = transport_solution(res.y0_star, flow, t=1.0)
    k = (ge.n - y0.grid.n) // 2
    assert np.max(np.abs(final.values[k : k + y0.grid.n])) <= 1e-14
    # non-expansion at every queried time
    for t in (0.25, 0.5, 0.75, 1.0):
        mid = transport_solution(res.y0_star, flow, t)
        assert np.max(np.abs(mid.values)) <= np.max(np.abs(res.y0_star.values))


def test_flow_group_property_and_monotonicity():
    res, _, lam = _small_picard(n=81, m=160)
    assert res.flow.monotone_ok()
    m = lam.tgrid.m
    worst = 0.0
    for t in (0.25, 0.5, 1.0):
        worst = max(worst, flow_group_residual(lam, res.z_star, res.flow, t))
    assert worst <= 10.0 * lam.tgrid.dt ** 4 * m
    assert worst <= 1e-6


def test_lift_and_residual():
    res, y0, lam = _small_picard(n=81, m=160)
    Y, Z, controls = lift_to_full_state(res.y, res.z, lam)
    # null data rides the pulse: Y(T) = lam(T) = 0 exactly
    assert np.max(np.abs(Y.values[-1])) <= 1e-12  # terminal null
    assert controls.p[0] == pytest.approx(lam.derivative(0.0))
    resid = inviscid_residual(Y, Z, controls)
    dx, dt = y0.grid.dx, lam.tgrid.dt
    assert resid <= 5.0 * (dx + dt)


def test_bardos_frisch_inequality_on_manufactured_solution():
    # y(t, x) = exp(-t) sin(pi (x - c t)) solves y_t + c y_x = -y; the
    # sup-norm growth rate is bounded by the source sup-norm.
    grid = make_grid(0.0, L, 201)
    c = 0.8
    dt = 0.002
    xs = grid.nodes
    for j in range(50):
        t = j * dt
        y_now = np.exp(-t) * np.sin(np.pi * (xs - c * t))
        y_next = np.exp(-(t + dt)) * np.sin(np.pi * (xs - c * (t + dt)))
        g_sup = np.max(np.abs(-y_now))
        growth = (np.max(np.abs(y_next)) - np.max(np.abs(y_now))) / dt
        assert growth <= g_sup + 5.0 * (grid.dx + dt)


def test_simulate_inviscid_tracks_constructed_solution():
    res, y0, lam = _small_picard(n=101, m=400, amp=0.05)
    Y, Z, controls = lift_to_full_state(res.y, res.z, lam)
    y_sim, _ = simulate_inviscid(y0, controls, AlphaParam(0.5))
    err = np.max(np.abs(y_sim.values[-1] - Y.values[-1]))
    assert err <= 5.0 * (y0.grid.dx + lam.tgrid.dt)


def test_global_inviscid_null_to_null():
    grid = make_grid(0.0, L, 81)
    zero = Field(grid, np.zeros(81))
    res = global_inviscid_control(
        zero, zero, AlphaParam(0.3), T=1.0, m=160, gamma0=0.3, gammaT=0.7,
        delta_hat=0.05,
    )
    assert np.max(np.abs(res.windows[2][1][-1])) <= 1e-12  # Y(T) = yT = 0
    assert np.max(np.abs(res.p)) > 0.0  # the two pulse bumps
    tg = make_time_grid(0.0, 1.0, 320)
    controls = res.controls_on(tg)
    sim = verify_global_inviscid(res, zero, zero, AlphaParam(0.3), m_sim=320)
    assert sim["terminal_c0_error"] <= 5.0 * (grid.dx + tg.dt)
    assert controls.p_c0 == pytest.approx(np.max(np.abs(res.p)), rel=0.2)


def test_global_scaling_invariance():
    # data scaled by 2 with horizon halved scales controls by 4 (p) and 2
    # (traces), exactly at the formula level
    grid = make_grid(0.0, L, 81)
    y0 = Field(grid, 0.05 * np.sin(np.pi * grid.nodes))
    yT = Field(grid, 0.04 * np.sin(2 * np.pi * grid.nodes))
    a = AlphaParam(0.4)
    base = global_inviscid_control(
        y0, yT, a, T=1.0, m=160, gamma0=0.25, gammaT=0.75, delta_hat=0.1
    )
    sig = 2.0
    scaled = global_inviscid_control(
        Field(grid, sig * y0.values), Field(grid, sig * yT.values), a,
        T=1.0 / sig, m=160, gamma0=0.25, gammaT=0.75, delta_hat=0.1 * sig,
    )
    assert np.allclose(scaled.times, base.times / sig, atol=1e-14)
    assert np.allclose(scaled.p, sig ** 2 * base.p, rtol=1e-11, atol=1e-11)
    assert np.allclose(scaled.v_l, sig * base.v_l, rtol=1e-11, atol=1e-12)
    assert np.allclose(scaled.v_r, sig * base.v_r, rtol=1e-11, atol=1e-12)


def test_picard_smallness_warning():
    grid = make_grid(0.0, L, 51)
    lam = make_lambda(L, 1.0, ETA, margin=0.1, m=128)
    y0 = Field(grid, 0.05 * np.sin(np.pi * grid.nodes))
    with pytest.warns(UserWarning):
        picard_null_control(
            y0, lam, AlphaParam(0.5), ETA, smallness=0.01, max_iter=40
        )


def test_control_triple_validation_and_norms():
    tg = make_time_grid(0.0, 1.0, 4)
    with pytest.raises(ConfigError):
        ControlTriple(tg, np.zeros(3), np.zeros(5), np.zeros(5))
    c = ControlTriple(tg, np.array([0, 1, -2, 1, 0.0]), np.zeros(5), np.ones(5))
    assert c.p_c0 == 2.0
    assert c.traces_c1 == 1.0

"""Return-method transport control for the filtered inviscid system.

The pieces, in the order the null controller uses them: a nonnegative
pulse profile whose time integral exceeds the domain length plus the
extension margin; characteristic flows of xi' = lam(t) + z*(t, xi)
integrated with RK4; the transport solution by composition with the
inverse flow; a Picard iteration whose fixed point solves the perturbed
transport system with vanishing terminal state; the lift that adds the
pulse back to obtain the full controlled state; and the scaling plus
time-reversal gluing that steers arbitrary C1 data exactly.
"""

import math
import threading
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, ConvergenceError, SolverError
from .filtering import (
    AlphaParam,
    BatchedEvenExtension,
    apply_cutoff,
    extend_odd_c1,
    extended_grid,
    make_cutoff,
    snap_eta,
    solve_filter_frames,
)
from .grids import (
    Field,
    Grid1D,
    SpaceTimeField,
    TimeGrid,
    diff1_values,
    make_grid,
    make_time_grid,
    norms,
    time_series_c1,
)

FLOW_SUBSTEPS = 4


# ---------------------------------------------------------------------------
# Pulse profile


@dataclass(frozen=True)
class LambdaProfile:
    """Nonnegative pulse lam(t) = A sin^2(pi t / period) on [0, window].

    ``period`` equals the window for the standard profile; the symmetric
    variant used by the time-reversal bridge keeps period = 1 and runs on
    the half window [0, 1/2].  ``shape = "const"`` is a test-only constant
    profile.
    """

    tgrid: TimeGrid
    amplitude: float
    period: float
    shape: str = "sin2"
    eta: float = 0.0
    margin: float = 0.0
    symmetric: bool = False
    regularity_class: int = 1
    lam: np.ndarray = field(default=None, repr=False)
    dlam: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        ts = self.tgrid.nodes
        lam = self.value(ts)
        dlam = self.derivative(ts)
        lam.setflags(write=False)
        dlam.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "dlam", dlam)

    @property
    def T(self) -> float:
        return self.tgrid.t1

    def value(self, t):
        t = np.asarray(t, float)
        if self.shape == "const":
            return np.full_like(t, self.amplitude)
        return self.amplitude * np.sin(np.pi * t / self.period) ** 2

    def derivative(self, t):
        t = np.asarray(t, float)
        if self.shape == "const":
            return np.zeros_like(t)
        return (
            self.amplitude
            * np.pi
            / self.period
            * np.sin(2.0 * np.pi * t / self.period)
        )

    def integral(self, t):
        """Closed-form integral of lam from 0 to t."""
        if self.shape == "const":
            return self.amplitude * t
        return self.amplitude * (
            t / 2.0 - self.period * np.sin(2.0 * np.pi * t / self.period) / (4.0 * np.pi)
        )

    @property
    def mass(self) -> float:
        return float(self.integral(self.tgrid.t1) - self.integral(self.tgrid.t0))

    def stage_values(self, nsub: int) -> np.ndarray:
        """Profile values at the RK4 stage times of every substep."""
        m = self.tgrid.m
        dt = self.tgrid.dt
        j = np.arange(m)[:, None, None]
        off = np.arange(nsub)[None, :, None] + np.array([0.0, 0.5, 1.0])[None, None, :]
        ts = self.tgrid.t0 + j * dt + off * (dt / nsub)
        return self.value(ts)

    def restricted(self, t_end: float, m: int) -> "LambdaProfile":
        """Same closed form, sampled on a new window [0, t_end]."""
        return LambdaProfile(
            tgrid=make_time_grid(0.0, t_end, m),
            amplitude=self.amplitude,
            period=self.period,
            shape=self.shape,
            eta=self.eta,
            margin=self.margin,
            symmetric=self.symmetric,
        )


def make_lambda(
    L: float,
    T: float,
    eta: float,
    margin: float = 0.1,
    symmetric: bool = False,
    m: int = 512,
) -> LambdaProfile:
    """Pulse with integral (L + 2 eta)(1 + margin) over [0, T].

    The symmetric variant doubles the amplitude so the half-window mass
    already exceeds L + 2 eta (the reversal bridge runs on half windows).
    """
    if margin <= 0:
        raise ConfigError(f"margin must be positive, got {margin}")
    A = 2.0 * (L + 2.0 * eta) * (1.0 + margin) / T
    if symmetric:
        A *= 2.0
    return LambdaProfile(
        tgrid=make_time_grid(0.0, T, m),
        amplitude=A,
        period=T,
        eta=eta,
        margin=margin,
        symmetric=symmetric,
    )


def constant_lambda(c: float, T: float, m: int = 128) -> LambdaProfile:
    """Test-only constant profile."""
    return LambdaProfile(
        tgrid=make_time_grid(0.0, T, m), amplitude=c, period=T, shape="const"
    )


# ---------------------------------------------------------------------------
# Characteristic flows


@dataclass(frozen=True)
class FlowMap:
    """Arrival positions phi[j, i] = Phi(s; times[j], xs[i])."""

    s: float
    times: np.ndarray
    xs: np.ndarray
    phi: np.ndarray

    def row(self, t: float) -> np.ndarray:
        j = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[j] - t) > 1e-9 * max(1.0, abs(t)):
            raise ConfigError(f"time {t} is not a query time of this flow")
        return self.phi[j]

    def monotone_ok(self) -> bool:
        return bool(np.all(np.diff(self.phi, axis=1) > 0.0))


def _zero_field(grid: Grid1D, tgrid: TimeGrid) -> SpaceTimeField:
    return SpaceTimeField(tgrid, grid, np.zeros((tgrid.m + 1, grid.n)))


def _flow_cfl_check(lam: LambdaProfile, z_sup: float, eta: float, nsub: int):
    fmax = float(np.max(np.abs(lam.lam))) + z_sup
    h = lam.tgrid.dt / nsub
    if fmax * h > eta:
        need = int(math.ceil(fmax * lam.tgrid.span / (eta * nsub))) + 1
        raise SolverError(
            f"flow displacement per substep {fmax * h:.3g} exceeds eta={eta:.3g}; "
            f"use a finer time grid (m >= {need})"
        )


def integrate_flow(
    lam: LambdaProfile,
    z_star: SpaceTimeField,
    s: float,
    targets=None,
    xs=None,
    nsub: int = FLOW_SUBSTEPS,
) -> FlowMap:
    """RK4 flow of xi' = lam(t) + z*(t, xi) from base time s.

    ``z_star`` may be None for the pure-pulse flow.  Query targets must be
    nodes of the profile's time grid; departure points default to the
    z_star grid nodes.
    """
    tg = lam.tgrid
    if z_star is None:
        grid = make_grid(-1.0, 1.0, 3)
        z_star = _zero_field(grid, tg)
    if z_star.tgrid.m != tg.m or abs(z_star.tgrid.t1 - tg.t1) > 1e-12:
        raise ConfigError("z_star and profile live on different time grids")
    if xs is None:
        xs = z_star.grid.nodes
    xs = np.asarray(xs, float)
    nodes = tg.nodes
    s_idx = int(round((s - tg.t0) / tg.dt))
    if not (0 <= s_idx <= tg.m) or abs(nodes[s_idx] - s) > 1e-9 * max(1.0, tg.span):
        raise ConfigError(f"base time {s} is not a node of the time grid")
    z_sup = float(np.max(np.abs(z_star.values)))
    _flow_cfl_check(lam, z_sup, lam.eta if lam.eta > 0 else z_star.grid.length, nsub)
    phi = kernels.flow_march(
        z_star.values,
        z_star.grid.x_left,
        z_star.grid.dx,
        lam.stage_values(nsub),
        tg.dt,
        nsub,
        xs,
        s_idx,
    )
    if targets is None:
        return FlowMap(s=s, times=nodes, xs=xs, phi=phi)
    targets = np.asarray(targets, float)
    rows = []
    for t in targets:
        j = int(round((t - tg.t0) / tg.dt))
        if not (0 <= j <= tg.m) or abs(nodes[j] - t) > 1e-9 * max(1.0, tg.span):
            raise ConfigError(f"query time {t} is not a node of the time grid")
        rows.append(phi[j])
    return FlowMap(s=s, times=targets, xs=xs, phi=np.array(rows))


def flow_group_residual(
    lam: LambdaProfile,
    z_star: SpaceTimeField,
    flow: FlowMap,
    t_check: float,
    nsub: int = FLOW_SUBSTEPS,
) -> float:
    """Max |Phi(t; s, Phi(s; t, x)) - x| over the departure points.

    The reverse characteristics start exactly at the forward arrival
    positions, so the residual measures the integrator alone.
    """
    fwd_row = flow.row(t_check)
    rev = integrate_flow(
        lam, z_star, s=t_check, targets=[flow.s], xs=fwd_row, nsub=nsub
    )
    return float(np.max(np.abs(rev.phi[0] - flow.xs)))


def transport_solution(y0_star: Field, flow: FlowMap, t: float) -> Field:
    """Compose initial data with the backward flow: y(t, x) = y0*(Phi(t; s=0... )).

    The flow must be based at time 0; the row at ``t`` is inverted by
    monotone cubic interpolation.  The result is clamped to the range of
    the initial data, which makes the sup-norm non-expansion exact.
    """
    if abs(flow.s) > 1e-12:
        raise ConfigError("transport_solution needs a flow based at time 0")
    row = flow.row(t)
    grid = y0_star.grid
    queries = grid.nodes
    if row[0] > queries[0] or row[-1] < queries[-1]:
        raise SolverError("flow departure range does not cover the target grid")
    feet = kernels.interp_cubic_nonuniform(row, flow.xs, queries)
    vals = kernels.interp_cubic(grid.x_left, grid.dx, y0_star.values, feet)
    lo = float(y0_star.values.min())
    hi = float(y0_star.values.max())
    return Field(grid, np.clip(vals, lo, hi))


# ---------------------------------------------------------------------------
# Controls


@dataclass(frozen=True)
class ControlTriple:
    """Distributed control p(t) and boundary traces v_l, v_r on a TimeGrid."""

    tgrid: TimeGrid
    p: np.ndarray
    v_l: np.ndarray
    v_r: np.ndarray

    def __post_init__(self):
        for name in ("p", "v_l", "v_r"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            if arr.shape != (self.tgrid.m + 1,):
                raise ConfigError(f"{name} samples do not match the time grid")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def p_c0(self) -> float:
        return float(np.max(np.abs(self.p)))

    @property
    def traces_c1(self) -> float:
        dt = self.tgrid.dt
        return max(time_series_c1(self.v_l, dt), time_series_c1(self.v_r, dt))


def write_controls_csv(path, t, p, v_l, v_r) -> None:
    t = np.asarray(t, float)
    lines = ["t,p,v_l,v_r"]
    for j in range(t.size):
        lines.append(
            f"{float(t[j])!r},{float(p[j])!r},{float(v_l[j])!r},{float(v_r[j])!r}"
        )
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Picard null control


@dataclass
class PicardResult:
    y: SpaceTimeField
    z: SpaceTimeField
    controls: ControlTriple
    iterations: int
    gaps: list
    flow: FlowMap
    z_star: SpaceTimeField
    y0_star: Field
    eta: float
    diagnostics: dict


def picard_null_control(
    y0: Field,
    lam: LambdaProfile,
    alpha: AlphaParam,
    eta: float,
    tol: float = 1e-10,
    max_iter: int = 30,
    nsub: int = FLOW_SUBSTEPS,
    smallness: float = None,
) -> PicardResult:
    """Fixed point of the filter -> extend -> cutoff -> flow -> transport map.

    Returns the perturbation-level solution: the state solves
    y_t + (lam + z) y_x = 0 with y(T, .) = 0 on the core interval, and the
    emitted controls are its boundary traces with p identically zero.
    """
    grid = y0.grid
    tg = lam.tgrid
    m = tg.m
    n = grid.n
    k, eta_s = snap_eta(grid, eta)
    if lam.mass <= grid.length + 2.0 * eta_s:
        raise ConfigError(
            f"profile mass {lam.mass:.6g} does not exceed L + 2 eta = "
            f"{grid.length + 2 * eta_s:.6g}"
        )
    if smallness is not None and norms(y0).c1 > smallness:
        warnings.warn(
            f"initial data C1 norm {norms(y0).c1:.3g} exceeds the calibrated "
            f"threshold {smallness:.3g}; iterating best-effort",
            stacklevel=2,
        )

    ge = extended_grid(grid, eta_s)
    chi = make_cutoff(eta_s, ge)
    y0_star = apply_cutoff(extend_odd_c1(y0, eta_s), chi)
    ext_op = BatchedEvenExtension(grid, k)
    chi_vals = chi.samples.values

    # departure nodes: wide enough that every extended node keeps a
    # preimage even when the perturbation reaches twice the small-regime
    # size (rightward drift is at most the pulse mass, leftward at most
    # the perturbation sweep)
    disp = lam.mass
    extra_l = int(math.ceil((disp + 3.0 * eta_s) / grid.dx)) + 4
    extra_r = 2 * k + 4
    n_wide = ge.n + extra_l + extra_r
    x_wide0 = ge.x_left - extra_l * grid.dx
    xs_wide = x_wide0 + grid.dx * np.arange(n_wide)
    y0s_wide = np.zeros(n_wide)
    y0s_wide[extra_l : extra_l + ge.n] = y0_star.values
    y_lo = float(y0_star.values.min())
    y_hi = float(y0_star.values.max())

    lam_stage = lam.stage_values(nsub)
    queries = ge.nodes
    core = slice(k, k + n)

    h = np.zeros((m + 1, n))
    gaps = []
    converged = False
    iterations = 0
    phi = None
    z_star_vals = None
    for it in range(1, max_iter + 1):
        z = solve_filter_frames(h, h[:, 0], h[:, -1], alpha, grid)
        z_star_vals = ext_op(z) * chi_vals[None, :]
        z_sup = float(np.max(np.abs(z_star_vals)))
        _flow_cfl_check(lam, z_sup, eta_s, nsub)
        phi = kernels.flow_march(
            z_star_vals, ge.x_left, ge.dx, lam_stage, tg.dt, nsub, xs_wide, 0
        )
        if not np.all(np.diff(phi, axis=1) > 0.0):
            raise SolverError("flow lost monotonicity; refine the time grid")
        if not (
            np.all(phi[:, 0] <= queries[0]) and np.all(phi[:, -1] >= queries[-1])
        ):
            raise SolverError(
                "flow departure range no longer covers the extended grid; "
                "the advecting perturbation left the small-velocity regime"
            )
        feet = kernels.invert_rows(phi, xs_wide, queries)
        y_ext = np.clip(
            kernels.interp_cubic(x_wide0, grid.dx, y0s_wide, feet.ravel()),
            y_lo,
            y_hi,
        ).reshape(m + 1, ge.n)
        y_new = y_ext[:, core].copy()
        gap = float(np.max(np.abs(y_new - h)))
        gaps.append(gap)
        h = y_new
        iterations = it
        if gap <= tol:
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"Picard iteration did not reach tol={tol:.1e} in {max_iter} "
            f"iterations (last gap {gaps[-1]:.3e})",
            history=gaps,
        )

    z = solve_filter_frames(h, h[:, 0], h[:, -1], alpha, grid)
    y_st = SpaceTimeField(tg, grid, h)
    z_st = SpaceTimeField(tg, grid, z)
    controls = ControlTriple(tg, np.zeros(m + 1), h[:, 0], h[:, -1])
    flow = FlowMap(s=0.0, times=tg.nodes, xs=xs_wide, phi=phi)
    z_star = SpaceTimeField(tg, ge, z_star_vals)

    z_sup = float(np.max(np.abs(z_star_vals)))
    pure = xs_wide[None, :] + lam.integral(tg.nodes)[:, None]
    deviation = float(np.max(np.abs(phi - pure)))
    diagnostics = {
        "terminal_sup": float(np.max(np.abs(h[m]))),
        "z_star_sup": z_sup,
        "small_velocity_regime": bool(z_sup <= eta_s / tg.span),
        "flow_deviation": deviation,
        "eta": eta_s,
        "mass": lam.mass,
    }
    return PicardResult(
        y=y_st,
        z=z_st,
        controls=controls,
        iterations=iterations,
        gaps=gaps,
        flow=flow,
        z_star=z_star,
        y0_star=y0_star,
        eta=eta_s,
        diagnostics=diagnostics,
    )


def lift_to_full_state(
    y_pert: SpaceTimeField, z_pert: SpaceTimeField, lam: LambdaProfile
):
    """Add the pulse back: Y = y + lam, Z = z + lam, p = lam'."""
    tg = y_pert.tgrid
    lam_t = lam.value(tg.nodes)
    Y = SpaceTimeField(tg, y_pert.grid, y_pert.values + lam_t[:, None])
    Z = SpaceTimeField(tg, z_pert.grid, z_pert.values + lam_t[:, None])
    controls = ControlTriple(
        tg,
        lam.derivative(tg.nodes),
        lam_t + y_pert.values[:, 0],
        lam_t + y_pert.values[:, -1],
    )
    return Y, Z, controls


def inviscid_residual(Y: SpaceTimeField, Z: SpaceTimeField, controls: ControlTriple) -> float:
    """Max interior residual of Y_t + Z Y_x - p with centered differences."""
    dt = Y.tgrid.dt
    v = Y.values
    yt = (v[2:, :] - v[:-2, :]) / (2.0 * dt)
    yx = np.array([diff1_values(v[j], Y.grid.dx) for j in range(v.shape[0])])
    res = yt + Z.values[1:-1] * yx[1:-1] - controls.p[1:-1, None]
    return float(np.max(np.abs(res[:, 1:-1])))


# ---------------------------------------------------------------------------
# Smallness threshold calibration

_DELTA_CACHE: dict = {}
_DELTA_LOCK = threading.Lock()


def _calibration_profile(grid: Grid1D, norm_kind: str) -> np.ndarray:
    vals = np.sin(np.pi * (grid.nodes - grid.x_left) / grid.length)
    f = Field(grid, vals)
    scale = getattr(norms(f), norm_kind)
    return vals / scale


def calibrate_smallness(
    grid: Grid1D,
    T: float,
    eta: float,
    margin: float = 0.1,
    m: int = None,
    alpha_cal: float = 0.5,
    norm_kind: str = "c1",
    symmetric: bool = False,
    max_iter: int = 30,
    nsub: int = FLOW_SUBSTEPS,
    safety: float = 0.85,
) -> float:
    """Largest data amplitude (in the given norm) that the Picard controller
    handles cleanly, found by doubling/bisection and cached per
    (interval, horizon, eta, mesh, norm), then shrunk by the safety factor.

    "Cleanly" means: converged within the budget, terminal state exactly
    swept out, and the advecting perturbation inside the small-velocity
    regime that the flow-deviation bound needs.
    """
    if m is None:
        m = int(math.ceil(2 * (grid.n - 1) * T / grid.length))
    key = (
        round(grid.x_left, 12),
        round(grid.x_right, 12),
        grid.n,
        round(T, 12),
        round(eta, 12),
        round(margin, 12),
        m,
        norm_kind,
        symmetric,
        kernels.backend_name(),
    )
    with _DELTA_LOCK:
        if key in _DELTA_CACHE:
            return _DELTA_CACHE[key]

    if symmetric:
        base = make_lambda(grid.length, 2.0 * T, eta, margin, symmetric=True, m=2 * m)
        lam = base.restricted(T, m)
    else:
        lam = make_lambda(grid.length, T, eta, margin, m=m)
    profile = _calibration_profile(grid, norm_kind)
    alpha = AlphaParam(alpha_cal)
    _, eta_s = snap_eta(grid, eta)

    def succeeds(a: float) -> bool:
        try:
            res = picard_null_control(
                Field(grid, a * profile), lam, alpha, eta, tol=1e-10,
                max_iter=max_iter, nsub=nsub,
            )
        except (ConvergenceError, SolverError):
            return False
        d = res.diagnostics
        return (
            d["small_velocity_regime"]
            and d["terminal_sup"] <= grid.dx
        )

    a = eta_s / T
    while not succeeds(a):
        a *= 0.5
        if a < 1e-8:
            raise ConvergenceError(
                "smallness calibration failed: no converging amplitude found"
            )
    lo = a
    hi = None
    for _ in range(6):
        cand = lo * 2.0
        if succeeds(cand):
            lo = cand
        else:
            hi = cand
            break
    if hi is not None:
        for _ in range(5):
            mid = 0.5 * (lo + hi)
            if succeeds(mid):
                lo = mid
            else:
                hi = mid
    delta = safety * lo
    with _DELTA_LOCK:
        _DELTA_CACHE[key] = delta
    return delta


# ---------------------------------------------------------------------------
# Nonlinear simulation under given controls (verification route)


def simulate_inviscid(
    y0: Field, controls: ControlTriple, alpha: AlphaParam, nsub: int = 4
):
    """Semi-Lagrangian simulation of y_t + z y_x = p with z the filtered y.

    Independent of the construction above: characteristics are traced
    backward one step at a time with an RK2 midpoint rule; feet that exit
    the interval pick up the boundary trace at the crossing time.
    """
    grid = y0.grid
    tg = controls.tgrid
    m, n = tg.m, grid.n
    dt = tg.dt
    xs = grid.nodes
    p = controls.p
    v_l = controls.v_l
    v_r = controls.v_r

    y = np.empty((m + 1, n))
    z = np.empty((m + 1, n))
    y[0] = y0.values
    y[0, 0] = v_l[0]
    y[0, -1] = v_r[0]
    z[0] = solve_filter_frames(y[0:1], v_l[0:1], v_r[0:1], alpha, grid)[0]

    def vel(zrow_a, zrow_b, w, pos):
        za = kernels.interp_cubic(grid.x_left, grid.dx, zrow_a, np.clip(pos, grid.x_left, grid.x_right))
        zb = kernels.interp_cubic(grid.x_left, grid.dx, zrow_b, np.clip(pos, grid.x_left, grid.x_right))
        return (1.0 - w) * za + w * zb

    for j in range(m):
        # predictor at frozen velocity for the provisional filter solve
        feet0 = xs - dt * vel(z[j], z[j], 0.0, xs - 0.5 * dt * vel(z[j], z[j], 0.0, xs))
        y_pred = kernels.interp_cubic(
            grid.x_left, grid.dx, y[j], np.clip(feet0, grid.x_left, grid.x_right)
        ) + 0.5 * dt * (p[j] + p[j + 1])
        z_pred = solve_filter_frames(
            y_pred[None, :], v_l[j + 1 : j + 2], v_r[j + 1 : j + 2], alpha, grid
        )[0]

        # corrector: substepped backward trace with time-interpolated velocity
        h = dt / nsub
        pos = np.array(xs)
        t_exit = np.full(n, -1.0)  # crossing time fraction in [0, 1], -1 inside
        side = np.zeros(n)
        for l in range(nsub):
            w1 = 1.0 - l / nsub
            wh = 1.0 - (l + 0.5) / nsub
            mid = pos - 0.5 * h * vel(z[j], z_pred, w1, pos)
            new = pos - h * vel(z[j], z_pred, wh, mid)
            crossed_l = (t_exit < 0) & (new < grid.x_left)
            crossed_r = (t_exit < 0) & (new > grid.x_right)
            for mask, edge, sgn in (
                (crossed_l, grid.x_left, -1.0),
                (crossed_r, grid.x_right, 1.0),
            ):
                if np.any(mask):
                    frac = (pos[mask] - edge) / (pos[mask] - new[mask])
                    t_exit[mask] = 1.0 - (l + frac) / nsub
                    side[mask] = sgn
            pos = new
        inside = t_exit < 0
        ynew = np.empty(n)
        ynew[inside] = kernels.interp_cubic(
            grid.x_left, grid.dx, y[j], pos[inside]
        ) + 0.5 * dt * (p[j] + p[j + 1])
        out = ~inside
        if np.any(out):
            tfrac = t_exit[out]
            t_cross = tg.nodes[j] + tfrac * dt
            trace = np.where(side[out] < 0,
                             np.interp(t_cross, tg.nodes, v_l),
                             np.interp(t_cross, tg.nodes, v_r))
            p_cross = np.interp(t_cross, tg.nodes, p)
            ynew[out] = trace + (1.0 - tfrac) * dt * 0.5 * (p_cross + p[j + 1])
        ynew[0] = v_l[j + 1]
        ynew[-1] = v_r[j + 1]
        y[j + 1] = ynew
        z[j + 1] = solve_filter_frames(
            y[j + 1 : j + 2], v_l[j + 1 : j + 2], v_r[j + 1 : j + 2], alpha, grid
        )[0]

    return SpaceTimeField(tg, grid, y), SpaceTimeField(tg, grid, z)


# ---------------------------------------------------------------------------
# Global exact control by scaling and time reversal


@dataclass
class GlobalInviscidResult:
    gamma0: float
    gammaT: float
    delta_hat: float
    lam: LambdaProfile
    tilde: PicardResult
    hat: PicardResult
    T: float
    times: np.ndarray
    p: np.ndarray
    v_l: np.ndarray
    v_r: np.ndarray
    windows: list

    def p_value(self, t):
        t = np.asarray(t, float)
        g0, gT, T = self.gamma0, self.gammaT, self.T
        lam = self.lam
        out = np.zeros_like(t)
        first = t <= g0 * T
        out[first] = lam.derivative(t[first] / g0) / g0 ** 2
        last = t >= gT * T
        out[last] = -lam.derivative((T - t[last]) / (1.0 - gT)) / (1.0 - gT) ** 2
        return out

    def _trace_value(self, t, which):
        t = np.asarray(t, float)
        g0, gT, T = self.gamma0, self.gammaT, self.T
        lam = self.lam
        tl = self.tilde.y.tgrid.nodes
        out = np.zeros_like(t)
        first = t <= g0 * T
        s = t[first] / g0
        tilde_trace = self.tilde.y.values[:, 0 if which == "l" else -1]
        out[first] = (lam.value(s) + np.interp(s, tl, tilde_trace)) / g0
        last = t >= gT * T
        s = (T - t[last]) / (1.0 - gT)
        hat_trace = self.hat.y.values[:, -1 if which == "l" else 0]
        out[last] = (lam.value(s) + np.interp(s, tl, hat_trace)) / (1.0 - gT)
        return out

    def controls_on(self, tgrid: TimeGrid) -> ControlTriple:
        ts = tgrid.nodes
        return ControlTriple(
            tgrid,
            self.p_value(ts),
            self._trace_value(ts, "l"),
            self._trace_value(ts, "r"),
        )


def global_inviscid_control(
    y0: Field,
    yT: Field,
    alpha: AlphaParam,
    T: float,
    eta: float = None,
    margin: float = 0.1,
    m: int = None,
    gamma0: float = None,
    gammaT: float = None,
    delta_hat: float = None,
    nsub: int = FLOW_SUBSTEPS,
) -> GlobalInviscidResult:
    """Steer y0 to yT exactly: two small-data null-control runs glued by
    scaling and time reversal, with a dead zone in between."""
    grid = y0.grid
    if yT.grid != grid:
        raise ConfigError("y0 and yT must share one grid")
    L = grid.length
    if eta is None:
        eta = L / 4.0
    if m is None:
        m = int(math.ceil(2 * (grid.n - 1) * T / L))
    if delta_hat is None:
        delta_hat = calibrate_smallness(grid, T, eta, margin, m=m, nsub=nsub)
    if gamma0 is None:
        gamma0 = min(0.4, delta_hat / (2.0 * max(1.0, norms(y0).c1)))
    if gammaT is None:
        gammaT = 1.0 - min(0.4, delta_hat / (2.0 * max(1.0, norms(yT).c1)))
    if not gamma0 < gammaT:
        raise ConfigError(f"gamma0={gamma0} must stay below gammaT={gammaT}")

    lam = make_lambda(L, T, eta, margin, m=m)
    tilde = picard_null_control(
        Field(grid, gamma0 * y0.values), lam, alpha, eta, nsub=nsub,
        smallness=delta_hat,
    )
    hat = picard_null_control(
        Field(grid, (1.0 - gammaT) * yT.values[::-1]), lam, alpha, eta,
        nsub=nsub, smallness=delta_hat,
    )

    # stitched sample arrays on the three windows (exact formula samples)
    s_nodes = lam.tgrid.nodes
    t1 = gamma0 * s_nodes
    lam_s = lam.value(s_nodes)
    dlam_s = lam.derivative(s_nodes)
    p1 = dlam_s / gamma0 ** 2
    vl1 = (lam_s + tilde.y.values[:, 0]) / gamma0
    vr1 = (lam_s + tilde.y.values[:, -1]) / gamma0
    Y1 = tilde.y.values / gamma0 + lam_s[:, None] / gamma0
    Z1 = tilde.z.values / gamma0 + lam_s[:, None] / gamma0

    md = max(2, m // 4)
    t2 = np.linspace(gamma0 * T, gammaT * T, md + 1)
    zeros2 = np.zeros((md + 1, grid.n))

    cT = 1.0 - gammaT
    t3 = T - cT * s_nodes[::-1]
    p3 = -dlam_s[::-1] / cT ** 2
    vl3 = (lam_s[::-1] + hat.y.values[::-1, -1]) / cT
    vr3 = (lam_s[::-1] + hat.y.values[::-1, 0]) / cT
    Y3 = (hat.y.values[::-1, ::-1] + lam_s[::-1, None]) / cT
    Z3 = (hat.z.values[::-1, ::-1] + lam_s[::-1, None]) / cT

    times = np.concatenate([t1, t2[1:-1], t3])
    p = np.concatenate([p1, np.zeros(md - 1), p3])
    v_l = np.concatenate([vl1, np.zeros(md - 1), vl3])
    v_r = np.concatenate([vr1, np.zeros(md - 1), vr3])
    windows = [
        (t1, Y1, Z1),
        (t2, zeros2, zeros2.copy()),
        (t3, Y3, Z3),
    ]
    return GlobalInviscidResult(
        gamma0=gamma0,
        gammaT=gammaT,
        delta_hat=delta_hat,
        lam=lam,
        tilde=tilde,
        hat=hat,
        T=T,
        times=times,
        p=p,
        v_l=v_l,
        v_r=v_r,
        windows=windows,
    )


def verify_global_inviscid(
    result: GlobalInviscidResult,
    y0: Field,
    yT: Field,
    alpha: AlphaParam,
    m_sim: int = None,
) -> dict:
    """Re-simulate the nonlinear system under the emitted controls and
    measure the terminal gap to the target."""
    grid = y0.grid
    if m_sim is None:
        m_sim = 4 * int(math.ceil((grid.n - 1) * result.T / grid.length))
    tg = make_time_grid(0.0, result.T, m_sim)
    controls = result.controls_on(tg)
    y_sim, _ = simulate_inviscid(y0, controls, alpha)
    terminal = float(np.max(np.abs(y_sim.values[-1] - yT.values)))
    return {
        "terminal_c0_error": terminal,
        "m_sim": m_sim,
        "trajectory": y_sim,
    }

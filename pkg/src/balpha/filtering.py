"""Helmholtz filtering, reflection extensions and the plateau cutoff.

The filter solves z - alpha^2 z_xx = y with Dirichlet data through a
tridiagonal direct solve.  The even (value/slope/curvature matching)
extension uses the 3-point reflection with coefficients (5, -20, 16);
off-grid evaluation points are handled by local cubic interpolation.
The cutoff is a quintic smoothstep plateau: identically 1 on the core
interval, identically 0 outside the half-width band.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError
from .grids import Field, Grid1D, make_grid


@dataclass(frozen=True)
class AlphaParam:
    """Filter length scale; alpha = 0 degenerates to the identity."""

    alpha: float

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigError(f"alpha must be nonnegative, got {self.alpha}")


@dataclass(frozen=True)
class CutoffProfile:
    """Plateau cutoff on an extended grid: 1 on the core, 0 past eta/2."""

    eta: float
    samples: Field


def filter_diagonals(alpha: AlphaParam, grid: Grid1D):
    """Tridiagonal rows of I + alpha^2 (-Laplacian_h) with Dirichlet rows."""
    n = grid.n
    beta = (alpha.alpha / grid.dx) ** 2
    lo = np.full(n, -beta)
    dg = np.full(n, 1.0 + 2.0 * beta)
    up = np.full(n, -beta)
    lo[0] = lo[-1] = 0.0
    up[0] = up[-1] = 0.0
    dg[0] = dg[-1] = 1.0
    return lo, dg, up


def solve_filter(y: Field, v_l: float, v_r: float, alpha: AlphaParam) -> Field:
    """Solve z - alpha^2 z_xx = y with z = v_l, v_r at the endpoints."""
    if alpha.alpha == 0.0:
        z = np.array(y.values)
        z[0] = v_l
        z[-1] = v_r
        return Field(y.grid, z)
    lo, dg, up = filter_diagonals(alpha, y.grid)
    rhs = np.array(y.values)
    rhs[0] = v_l
    rhs[-1] = v_r
    return Field(y.grid, kernels.thomas_solve(lo, dg, up, rhs))


def solve_filter_frames(values, v_l, v_r, alpha: AlphaParam, grid: Grid1D):
    """Batched filter solve: values (k, n), boundary traces (k,)."""
    values = np.asarray(values, float)
    v_l = np.asarray(v_l, float)
    v_r = np.asarray(v_r, float)
    if alpha.alpha == 0.0:
        z = values.copy()
        z[:, 0] = v_l
        z[:, -1] = v_r
        return z
    lo, dg, up = filter_diagonals(alpha, grid)
    rhs = values.copy()
    rhs[:, 0] = v_l
    rhs[:, -1] = v_r
    return kernels.thomas_solve_many(lo, dg, up, rhs)


def snap_eta(grid: Grid1D, eta: float):
    """Snap the extension width to a whole number of cells."""
    L = grid.length
    if not 0.0 < eta < 0.5 * L:
        raise ConfigError(f"eta must lie in (0, L/2) = (0, {0.5 * L}), got {eta}")
    k = max(1, int(round(eta / grid.dx)))
    while k * grid.dx >= 0.5 * L:
        k -= 1
    if k < 1:
        raise ConfigError(f"eta={eta} is below one cell of dx={grid.dx}")
    return k, k * grid.dx


def extended_grid(grid: Grid1D, eta: float) -> Grid1D:
    k, eta_s = snap_eta(grid, eta)
    return make_grid(grid.x_left - eta_s, grid.x_right + eta_s, grid.n + 2 * k)


def _band_positions(k: int, dx: float):
    # Distances 0<j*dx<=eta from the mirror point, with the three sampling
    # depths of the (5, -20, 16) reflection.
    j = np.arange(1, k + 1, dtype=float)
    return j * dx, j * dx / 2.0, j * dx / 4.0


def extend_even_c2(z: Field, eta: float) -> Field:
    """Reflection extension matching value, slope and curvature at both ends."""
    grid = z.grid
    k, eta_s = snap_eta(grid, eta)
    d1, d2, d4 = _band_positions(k, grid.dx)
    v = z.values

    def probe(distances, from_right):
        if from_right:
            pos = grid.x_right - distances
        else:
            pos = grid.x_left + distances
        return kernels.interp_cubic(grid.x_left, grid.dx, v, pos)

    left = 5.0 * probe(d1, False) - 20.0 * probe(d2, False) + 16.0 * probe(d4, False)
    right = 5.0 * probe(d1, True) - 20.0 * probe(d2, True) + 16.0 * probe(d4, True)
    ext = np.concatenate([left[::-1], v, right])
    return Field(extended_grid(grid, eta), ext)


def extend_odd_c1(y0: Field, eta: float) -> Field:
    """Point reflection extension matching value and slope at both ends."""
    grid = y0.grid
    k, eta_s = snap_eta(grid, eta)
    v = y0.values
    left = -v[1 : k + 1] + 2.0 * v[0]
    right = -v[-k - 1 : -1][::-1] + 2.0 * v[-1]
    ext = np.concatenate([left[::-1], v, right])
    return Field(extended_grid(grid, eta), ext)


def cubic_gather(grid: Grid1D, positions):
    """Clamped-stencil cubic interpolation as gather indices and weights."""
    n = grid.n
    t = (np.asarray(positions, float) - grid.x_left) / grid.dx
    b = np.clip(np.floor(t).astype(int) - 1, 0, n - 4)
    s = t - b
    w = np.stack(
        [
            -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0,
            s * (s - 2.0) * (s - 3.0) / 2.0,
            -s * (s - 1.0) * (s - 3.0) / 2.0,
            s * (s - 1.0) * (s - 2.0) / 6.0,
        ],
        axis=-1,
    )
    idx = b[:, None] + np.arange(4)[None, :]
    return idx, w


class BatchedEvenExtension:
    """Frame-batched extend_even_c2 with precomputed gather weights."""

    def __init__(self, grid: Grid1D, k: int):
        d = np.arange(1, k + 1, dtype=float) * grid.dx
        probes_l = [grid.x_left + d, grid.x_left + d / 2.0, grid.x_left + d / 4.0]
        probes_r = [grid.x_right - d, grid.x_right - d / 2.0, grid.x_right - d / 4.0]
        self.gathers_l = [cubic_gather(grid, p) for p in probes_l]
        self.gathers_r = [cubic_gather(grid, p) for p in probes_r]
        self.k = k

    @staticmethod
    def _apply(frames, gathers):
        coeffs = (5.0, -20.0, 16.0)
        out = 0.0
        for coef, (idx, w) in zip(coeffs, gathers):
            out = out + coef * np.einsum("fkq,kq->fk", frames[:, idx], w)
        return out

    def __call__(self, frames: np.ndarray) -> np.ndarray:
        frames = np.asarray(frames, float)
        left = self._apply(frames, self.gathers_l)[:, ::-1]
        right = self._apply(frames, self.gathers_r)
        return np.concatenate([left, frames, right], axis=1)


def _smoothstep5(u: np.ndarray) -> np.ndarray:
    u = np.clip(u, 0.0, 1.0)
    return u ** 3 * (10.0 + u * (-15.0 + 6.0 * u))


def make_cutoff(eta: float, grid_ext: Grid1D) -> CutoffProfile:
    """Quintic plateau: 1 on the core [a, b], 0 outside (a-eta/2, b+eta/2).

    ``grid_ext`` must be the extension of the core interval by eta on both
    sides, i.e. core = [x_left + eta, x_right - eta].
    """
    a = grid_ext.x_left + eta
    b = grid_ext.x_right - eta
    if not a < b:
        raise ConfigError(f"cutoff width eta={eta} swallows the grid {grid_ext}")
    xs = grid_ext.nodes
    half = 0.5 * eta
    chi = np.ones(grid_ext.n)
    lo = xs < a
    chi[lo] = _smoothstep5((xs[lo] - (a - half)) / half)
    hi = xs > b
    chi[hi] = _smoothstep5(((b + half) - xs[hi]) / half)
    return CutoffProfile(eta=eta, samples=Field(grid_ext, chi))


def apply_cutoff(f: Field, chi: CutoffProfile) -> Field:
    g = chi.samples.grid
    if (f.grid.n != g.n or f.grid.x_left != g.x_left
            or f.grid.x_right != g.x_right):
        raise ConfigError("field and cutoff live on different grids")
    return Field(f.grid, f.values * chi.samples.values)

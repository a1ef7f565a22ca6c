"""Uniform grids, nodal fields, difference stencils and discrete norms.

Conventions used everywhere downstream:

* ``diff1`` is the centered second-order first-difference quotient with
  one-sided second-order stencils at both endpoints (exact on affine
  fields at every node, on quadratics in the interior).
* ``diff2`` is the 3-point second-difference quotient, shifted one node
  inward at the endpoints (exact on quadratics at every node).
* ``l2`` uses trapezoidal node weights, so constants integrate exactly.
* All arithmetic is float64; arrays are frozen after construction.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Grid1D:
    """Uniform spatial mesh with n nodes on [x_left, x_right]."""

    x_left: float
    x_right: float
    n: int
    dx: float = field(init=False)

    def __post_init__(self):
        if not self.x_left < self.x_right:
            raise ConfigError(
                f"grid interval is not increasing: [{self.x_left}, {self.x_right}]"
            )
        if self.n < 3:
            raise ConfigError(f"grid needs at least 3 nodes, got n={self.n}")
        object.__setattr__(
            self, "dx", (self.x_right - self.x_left) / (self.n - 1)
        )

    @property
    def nodes(self) -> np.ndarray:
        return self.x_left + self.dx * np.arange(self.n)

    @property
    def length(self) -> float:
        return self.x_right - self.x_left

    def node(self, i: int) -> float:
        return self.x_left + i * self.dx


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time mesh with m steps (m + 1 nodes) on [t0, t1]."""

    t0: float
    t1: float
    m: int
    dt: float = field(init=False)

    def __post_init__(self):
        if not self.t0 < self.t1:
            raise ConfigError(f"time interval is not increasing: [{self.t0}, {self.t1}]")
        if self.m < 1:
            raise ConfigError(f"time grid needs at least 1 step, got m={self.m}")
        object.__setattr__(self, "dt", (self.t1 - self.t0) / self.m)

    @property
    def nodes(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.m + 1)

    @property
    def span(self) -> float:
        return self.t1 - self.t0


@dataclass(frozen=True)
class Field:
    """Nodal samples of a scalar function of x."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        vals = _frozen(self.values)
        if vals.shape != (self.grid.n,):
            raise ConfigError(
                f"field length {vals.shape} does not match grid n={self.grid.n}"
            )
        if not np.all(np.isfinite(vals)):
            raise ConfigError("field contains non-finite values")
        object.__setattr__(self, "values", vals)

    def with_values(self, values) -> "Field":
        return Field(self.grid, values)


@dataclass(frozen=True)
class SpaceTimeField:
    """Time-indexed frames of a Field on one shared spatial grid."""

    tgrid: TimeGrid
    grid: Grid1D
    values: np.ndarray  # shape (m + 1, n)

    def __post_init__(self):
        vals = _frozen(self.values)
        if vals.shape != (self.tgrid.m + 1, self.grid.n):
            raise ConfigError(
                f"trajectory shape {vals.shape} does not match "
                f"(m+1, n) = ({self.tgrid.m + 1}, {self.grid.n})"
            )
        if not np.all(np.isfinite(vals)):
            raise ConfigError("trajectory contains non-finite values")
        object.__setattr__(self, "values", vals)

    def frame(self, j: int) -> Field:
        return Field(self.grid, self.values[j])

    @property
    def n_frames(self) -> int:
        return self.tgrid.m + 1


@dataclass(frozen=True)
class NormReport:
    """Discrete C0/C1/C2 and L2/H1/H2 norms of one field."""

    c0: float
    c1: float
    c2: float
    l2: float
    h1: float
    h2: float


def make_grid(x_left: float, x_right: float, n: int) -> Grid1D:
    return Grid1D(float(x_left), float(x_right), int(n))


def make_time_grid(t0: float, t1: float, m: int) -> TimeGrid:
    return TimeGrid(float(t0), float(t1), int(m))


def diff1_values(values: np.ndarray, dx: float) -> np.ndarray:
    v = np.asarray(values, float)
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - v[:-2]) / (2.0 * dx)
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx)
    d[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * dx)
    return d


def diff2_values(values: np.ndarray, dx: float) -> np.ndarray:
    v = np.asarray(values, float)
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / (dx * dx)
    if v.shape[0] >= 4:
        # one-sided second-order closure (exact through cubics)
        d[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / (dx * dx)
        d[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / (dx * dx)
    else:
        d[0] = (v[0] - 2.0 * v[1] + v[2]) / (dx * dx)
        d[-1] = (v[-1] - 2.0 * v[-2] + v[-3]) / (dx * dx)
    return d


def diff1(f: Field) -> Field:
    return Field(f.grid, diff1_values(f.values, f.grid.dx))


def diff2(f: Field) -> Field:
    return Field(f.grid, diff2_values(f.values, f.grid.dx))


def l2_values(values: np.ndarray, dx: float) -> float:
    v = np.asarray(values, float)
    w = v * v
    s = w.sum() - 0.5 * (w[0] + w[-1])
    return float(np.sqrt(dx * s))


def norms(f: Field) -> NormReport:
    dx = f.grid.dx
    v = f.values
    d1 = diff1_values(v, dx)
    d2 = diff2_values(v, dx)
    c0 = float(np.max(np.abs(v)))
    c1 = max(c0, float(np.max(np.abs(d1))))
    c2 = max(c1, float(np.max(np.abs(d2))))
    l2 = l2_values(v, dx)
    h1 = float(np.sqrt(l2 ** 2 + l2_values(d1, dx) ** 2))
    h2 = float(np.sqrt(h1 ** 2 + l2_values(d2, dx) ** 2))
    return NormReport(c0=c0, c1=c1, c2=c2, l2=l2, h1=h1, h2=h2)


_KINDS = ("c0", "c1", "c2", "l2", "h1", "h2")


def field_norm(f: Field, kind: str) -> float:
    if kind not in _KINDS:
        raise ConfigError(f"unknown norm kind {kind!r}; expected one of {_KINDS}")
    return getattr(norms(f), kind)


def trajectory_norms(F: SpaceTimeField, kind: str, in_time: str = "sup") -> float:
    """Aggregate a per-frame spatial norm over time.

    ``in_time="sup"`` takes the max over frames (C0-in-time);
    ``in_time="l2"`` the sqrt(dt)-weighted trapezoidal l2 over frames.
    """
    per_frame = np.array(
        [field_norm(F.frame(j), kind) for j in range(F.n_frames)]
    )
    if in_time == "sup":
        return float(per_frame.max())
    if in_time == "l2":
        w = per_frame * per_frame
        s = w.sum() - 0.5 * (w[0] + w[-1])
        return float(np.sqrt(F.tgrid.dt * s))
    raise ConfigError(f"unknown time aggregation {in_time!r}; expected sup or l2")


def time_series_c1(samples: np.ndarray, dt: float) -> float:
    """Discrete C1 norm of a time series (sup of value and first difference)."""
    s = np.asarray(samples, float)
    c0 = float(np.max(np.abs(s)))
    if s.size < 3:
        return c0
    return max(c0, float(np.max(np.abs(diff1_values(s, dt)))))


def h34_seminorm(samples: np.ndarray, dt: float) -> float:
    """Fourier-weighted H^{3/4}-type seminorm of a sampled time series.

    Reported for diagnostics only; no equivalence with the continuum norm
    is claimed.  The linear ramp between the endpoints is removed before
    transforming so the periodization artifact stays bounded.
    """
    s = np.asarray(samples, float)
    m = s.size - 1
    if m < 2:
        return 0.0
    ramp = s[0] + (s[-1] - s[0]) * np.arange(m + 1) / m
    r = s - ramp
    coef = np.fft.rfft(r[:-1])
    span = dt * m
    omega = 2.0 * np.pi * np.arange(coef.size) / span
    weight = (1.0 + omega ** 1.5) * np.abs(coef / max(m, 1)) ** 2
    return float(np.sqrt(weight.sum()))


# ---------------------------------------------------------------------------
# CSV serialization.  Floats are written with repr (shortest round-trip),
# '\n' line ends, '.' radix; identical inputs produce identical bytes.


def _fmt(x: float) -> str:
    return repr(float(x))


def write_field_csv(f: Field, path) -> None:
    lines = ["x,value"]
    xs = f.grid.nodes
    for i in range(f.grid.n):
        lines.append(f"{_fmt(xs[i])},{_fmt(f.values[i])}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_field_csv(path) -> Field:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "x,value":
            raise ConfigError(f"field CSV {path} has header {header!r}, expected 'x,value'")
        xs = []
        vs = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            a, b = line.split(",")
            xs.append(float(a))
            vs.append(float(b))
    xs = np.array(xs)
    if xs.size < 3:
        raise ConfigError(f"field CSV {path} has fewer than 3 rows")
    steps = np.diff(xs)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
        raise ConfigError(f"field CSV {path} is not on a uniform grid")
    grid = make_grid(xs[0], xs[-1], xs.size)
    return Field(grid, np.array(vs))


def write_trajectory_csv(F: SpaceTimeField, path) -> None:
    lines = ["t,x,value"]
    ts = F.tgrid.nodes
    xs = F.grid.nodes
    for j in range(F.n_frames):
        tj = _fmt(ts[j])
        row = F.values[j]
        for i in range(F.grid.n):
            lines.append(f"{tj},{_fmt(xs[i])},{_fmt(row[i])}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trajectory_csv(path) -> SpaceTimeField:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "t,x,value":
            raise ConfigError(
                f"trajectory CSV {path} has header {header!r}, expected 't,x,value'"
            )
        ts, xs, vs = [], [], []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            a, b, c = line.split(",")
            ts.append(float(a))
            xs.append(float(b))
            vs.append(float(c))
    ts = np.array(ts)
    xs = np.array(xs)
    vs = np.array(vs)
    t_nodes = np.unique(ts)
    x_nodes = xs[ts == t_nodes[0]]
    n = x_nodes.size
    m = t_nodes.size - 1
    if m < 1 or n < 3 or vs.size != (m + 1) * n:
        raise ConfigError(f"trajectory CSV {path} is not a full (t, x) product")
    grid = make_grid(x_nodes[0], x_nodes[-1], n)
    tg = make_time_grid(t_nodes[0], t_nodes[-1], m)
    return SpaceTimeField(tg, grid, vs.reshape(m + 1, n))

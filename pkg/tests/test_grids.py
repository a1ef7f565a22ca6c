import numpy as np
import pytest

from balpha.errors import ConfigError
from balpha.grids import (
    Field,
    SpaceTimeField,
    diff1,
    diff2,
    l2_values,
    make_grid,
    make_time_grid,
    norms,
    read_field_csv,
    read_trajectory_csv,
    trajectory_norms,
    write_field_csv,
    write_trajectory_csv,
)


def test_make_grid_arithmetic():
    g = make_grid(0.0, 1.0, 11)
    assert g.dx == pytest.approx(0.1)
    assert g.node(5) == pytest.approx(0.5)
    g2 = make_grid(-0.25, 1.25, 7)
    assert g2.dx == pytest.approx(0.25)


def test_make_grid_preconditions():
    with pytest.raises(ConfigError):
        make_grid(0.0, 1.0, 2)
    with pytest.raises(ConfigError):
        make_grid(1.0, 0.0, 11)


def test_time_grid():
    tg = make_time_grid(0.0, 2.0, 8)
    assert tg.dt == pytest.approx(0.25)
    assert tg.nodes[-1] == pytest.approx(2.0)
    with pytest.raises(ConfigError):
        make_time_grid(0.0, 1.0, 0)


def test_field_validation():
    g = make_grid(0.0, 1.0, 5)
    with pytest.raises(ConfigError):
        Field(g, np.zeros(4))
    with pytest.raises(ConfigError):
        Field(g, np.array([0.0, 1.0, np.nan, 0.0, 0.0]))


def test_stencils_exact_on_polynomials():
    g = make_grid(0.0, 1.0, 11)
    xs = g.nodes
    affine = Field(g, 2.0 + 3.0 * xs)
    assert np.allclose(diff1(affine).values, 3.0, atol=1e-13)
    assert np.allclose(diff2(affine).values, 0.0, atol=1e-12)
    quad = Field(g, xs ** 2)
    assert np.allclose(diff2(quad).values, 2.0, atol=1e-11)


def test_diff2_sine_accuracy():
    g = make_grid(0.0, 1.0, 101)
    xs = g.nodes
    f = Field(g, np.sin(np.pi * xs))
    err = np.max(np.abs(diff2(f).values + np.pi ** 2 * np.sin(np.pi * xs)))
    assert err <= 0.01


def test_second_order_convergence_of_stencils():
    errs = []
    for n in (101, 201):
        g = make_grid(0.0, 1.0, n)
        xs = g.nodes
        f = Field(g, np.sin(np.pi * xs))
        errs.append(np.max(np.abs(diff2(f).values + np.pi ** 2 * np.sin(np.pi * xs))))
    factor = errs[0] / errs[1]
    assert 4.0 * 0.8 <= factor <= 4.0 * 1.2


def test_norms_constant_and_zero():
    g = make_grid(0.0, 1.0, 51)
    r = norms(Field(g, np.full(51, 3.0)))
    assert r.c0 == pytest.approx(3.0)
    assert r.l2 == pytest.approx(3.0)
    z = norms(Field(g, np.zeros(51)))
    assert z.c2 == 0.0 and z.h2 == 0.0


def test_norms_sine_l2():
    # closed form: integral of sin^2(pi x) over [0, 1] is 1/2
    g = make_grid(0.0, 1.0, 201)
    f = Field(g, np.sin(np.pi * g.nodes))
    assert norms(f).l2 == pytest.approx(1.0 / np.sqrt(2.0), abs=0.01)


def test_norm_ordering_properties():
    rng = np.random.default_rng(7)
    g = make_grid(0.0, 1.0, 64)
    for _ in range(25):
        f = Field(g, rng.normal(size=64))
        r = norms(f)
        assert r.c0 <= r.c1 <= r.c2
        assert r.h1 >= r.l2
        assert r.l2 <= np.sqrt(g.length) * r.c0 + 1e-12


def test_trajectory_norms():
    g = make_grid(0.0, 1.0, 21)
    tg = make_time_grid(0.0, 1.0, 4)
    vals = np.array([np.full(21, float(j)) for j in range(5)])
    F = SpaceTimeField(tg, g, vals)
    assert trajectory_norms(F, "c0", "sup") == pytest.approx(4.0)
    w = np.array([0.5 * 0.0, 1.0, 4.0, 9.0, 0.5 * 16.0]) * 0.25
    assert trajectory_norms(F, "c0", "l2") == pytest.approx(np.sqrt(w.sum()))
    with pytest.raises(ConfigError):
        trajectory_norms(F, "c0", "max")


def test_l2_values_matches_quadrature():
    g = make_grid(0.0, 2.0, 401)
    xs = g.nodes
    v = np.exp(xs)
    # trapezoid oracle computed directly
    ref = np.sqrt(np.trapezoid(v * v, xs))
    assert l2_values(v, g.dx) == pytest.approx(ref, rel=1e-12)


def test_field_csv_roundtrip(tmp_path):
    g = make_grid(0.0, 1.0, 17)
    f = Field(g, np.sin(g.nodes))
    p = tmp_path / "f.csv"
    write_field_csv(f, p)
    f2 = read_field_csv(p)
    assert np.array_equal(f.values, f2.values)
    assert f2.grid.n == 17
    write_field_csv(f2, tmp_path / "f2.csv")
    assert (tmp_path / "f.csv").read_bytes() == (tmp_path / "f2.csv").read_bytes()


def test_trajectory_csv_roundtrip(tmp_path):
    g = make_grid(0.0, 1.0, 5)
    tg = make_time_grid(0.0, 0.5, 3)
    vals = np.arange(20, dtype=float).reshape(4, 5)
    F = SpaceTimeField(tg, g, vals)
    p = tmp_path / "traj.csv"
    write_trajectory_csv(F, p)
    F2 = read_trajectory_csv(p)
    assert np.array_equal(F.values, F2.values)
    assert F2.tgrid.m == 3
    head = p.read_text().splitlines()[0]
    assert head == "t,x,value"


def test_h34_seminorm_behavior():
    from balpha.grids import h34_seminorm

    dt = 0.01
    t = np.arange(0, 1 + dt / 2, dt)
    # constants and pure linear ramps are detrended away entirely
    assert h34_seminorm(np.full(t.size, 3.0), dt) == 0.0
    assert h34_seminorm(2.0 + 0.5 * t, dt) == pytest.approx(0.0, abs=1e-12)
    # rougher signals weigh more than smooth ones of equal amplitude
    smooth = np.sin(np.pi * t)
    rough = np.sin(8 * np.pi * t)
    assert h34_seminorm(rough, dt) > h34_seminorm(smooth, dt) > 0.0

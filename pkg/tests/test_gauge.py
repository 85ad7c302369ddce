import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cshlab.errors import ConfigError
from cshlab.gauge import (
    GaugeFields,
    constraint_residuals,
    gauge_evolution_residual,
    gauge_window_residual,
    perp,
    solve_a0_from_current,
    solve_a_from_constraint,
)
from cshlab.grid import FieldGrid


def smooth_field(g, seed, modes=4):
    """Random trigonometric polynomial, resolved on ``g``."""
    r = np.random.default_rng(seed)
    x, y = g.xy
    f = np.zeros(g.shape)
    for _ in range(modes):
        kx, ky = r.integers(-3, 4, size=2)
        f += r.standard_normal() * np.cos(kx * x + ky * y + r.uniform(0, 2 * np.pi))
    return f


def test_perp_convention():
    v = np.stack([np.ones((8, 8)), np.zeros((8, 8))])
    w = perp(v)
    assert np.all(w[0] == 0) and np.all(w[1] == 1)
    assert np.array_equal(perp(perp(v)), -v)


@given(seed=st.integers(0, 2**16))
def test_div_perp_is_minus_curl(seed):
    g = FieldGrid(16, 16)
    v = np.stack([smooth_field(g, seed), smooth_field(g, seed + 1)])
    assert np.abs(g.divergence(perp(v)) + g.curl(v)).max() <= 1e-12


def test_constant_rhs_gives_zero(grid):
    assert np.abs(solve_a_from_constraint(grid, np.full(grid.shape, 4.0), 1.0)).max() <= 1e-15


def test_cosine_rhs(grid, xy):
    # the post-condition scale * curl A = rhs fixes A = (0, sin x) for rhs = cos x
    x, _ = xy
    a = solve_a_from_constraint(grid, np.cos(x), 1.0)
    assert np.abs(a[0]).max() <= 1e-13
    assert np.abs(a[1] - np.sin(x)).max() <= 1e-13
    assert np.abs(grid.curl(a) - np.cos(x)).max() <= 1e-12


def test_scale_halves_field(grid, xy):
    x, y = xy
    rhs = np.cos(x) * np.sin(2 * y)
    a1 = solve_a_from_constraint(grid, rhs, 1.0)
    a2 = solve_a_from_constraint(grid, rhs, 2.0)
    assert np.abs(a2 - 0.5 * a1).max() <= 1e-14


@pytest.mark.parametrize("scale", [0.0, -1.0])
def test_nonpositive_scale_rejected(grid, scale):
    with pytest.raises(ConfigError):
        solve_a_from_constraint(grid, np.ones(grid.shape), scale)


@given(seed=st.integers(0, 2**16), c=st.floats(-5, 5), scale=st.floats(0.01, 10))
def test_constraint_solution_properties(seed, c, scale):
    g = FieldGrid(16, 16)
    rhs = smooth_field(g, seed) + 3.0
    a = solve_a_from_constraint(g, rhs, scale)
    assert np.abs(g.divergence(a)).max() <= 1e-11 * (1 + np.abs(a).max())
    assert np.abs(scale * g.curl(a) - (rhs - rhs.mean())).max() <= 1e-11 * (1 + np.abs(rhs).max())
    assert np.abs(a.mean(axis=(1, 2))).max() <= 1e-14
    assert np.abs(solve_a_from_constraint(g, c * rhs, scale) - c * a).max() <= 1e-11 * (1 + abs(c) * np.abs(a).max())


def test_a0_examples(grid, xy):
    x, y = xy
    zero = np.zeros((2,) + grid.shape)
    assert np.abs(solve_a0_from_current(grid, zero)).max() == 0
    f = np.sin(2 * x) * np.cos(y)
    assert np.abs(solve_a0_from_current(grid, grid.gradient(f))).max() <= 1e-12
    j = np.stack([np.sin(y), np.zeros(grid.shape)])
    assert np.abs(solve_a0_from_current(grid, j) - np.cos(y)).max() <= 1e-12


def test_gauge_fields_validation(grid):
    with pytest.raises(ConfigError):
        GaugeFields(a0=np.zeros(grid.shape), a=np.zeros(grid.shape))


def _manufactured(grid, t, shape_fn):
    x, y = grid.xy
    phi = np.sin(x) * np.cos(2 * y)
    return GaugeFields(a0=np.zeros(grid.shape), a=shape_fn(t) * perp(grid.gradient(phi))), grid.gradient(phi)


def test_static_state_has_zero_residual(grid):
    gf = GaugeFields(a0=np.zeros(grid.shape), a=np.zeros((2,) + grid.shape))
    j = np.zeros((2,) + grid.shape)
    assert gauge_evolution_residual(grid, gf, gf, 0.1, gf, j, 0.1, 1.0) == 0.0


def test_manufactured_linear_in_time(grid):
    eps, delta, t, dt = 0.2, 1.0, 0.4, 0.01
    prev, gphi = _manufactured(grid, t - dt / 2, lambda s: s)
    nxt, _ = _manufactured(grid, t + dt / 2, lambda s: s)
    mid, _ = _manufactured(grid, t, lambda s: s)
    # eps^d dA/dt = perp(j) with j = eps^d grad(phi)
    r = gauge_evolution_residual(grid, prev, nxt, dt, mid, eps**delta * gphi, eps, delta)
    assert r <= 1e-12


def test_manufactured_residual_second_order(grid):
    eps, delta, t = 0.3, 0.5, 0.7
    errs = []
    for dt in (0.1, 0.05, 0.025):
        prev, gphi = _manufactured(grid, t - dt / 2, np.sin)
        nxt, _ = _manufactured(grid, t + dt / 2, np.sin)
        mid, _ = _manufactured(grid, t, np.sin)
        j = eps**delta * np.cos(t) * gphi
        errs.append(gauge_evolution_residual(grid, prev, nxt, dt, mid, j, eps, delta))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.95)


def test_residual_rejects_bad_dt(grid):
    gf = GaugeFields(a0=np.zeros(grid.shape), a=np.zeros((2,) + grid.shape))
    with pytest.raises(ConfigError):
        gauge_evolution_residual(grid, gf, gf, 0.0, gf, np.zeros((2,) + grid.shape), 0.1, 1.0)


def test_constraint_residuals_of_solution(grid, xy):
    x, y = xy
    src = 1.0 + 0.3 * np.cos(x) * np.cos(y)
    a = solve_a_from_constraint(grid, -src, 0.1)
    res = constraint_residuals(grid, GaugeFields(np.zeros(grid.shape), a), src, 0.1)
    assert res["curl"] <= 1e-13 and res["div"] <= 1e-13 and res["mean"] <= 1e-15


def test_window_residual_fourth_order(grid):
    eps, delta, t = 0.3, 0.5, 0.7
    errs = []
    for h in (0.1, 0.05, 0.025):
        times = [t + (i - 2) * h for i in range(5)]
        window = [_manufactured(grid, s, np.sin)[0] for s in times]
        gphi = _manufactured(grid, t, np.sin)[1]
        errs.append(gauge_window_residual(grid, window, times, eps**delta * np.cos(t) * gphi, eps, delta))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 3.9), orders
    with pytest.raises(ConfigError):
        gauge_window_residual(grid, window[:4], times[:4], gphi, eps, delta)

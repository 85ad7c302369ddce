import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from cshlab.csh import (
    CshState,
    covariant_gradient,
    csh_gauge,
    csh_rhs,
    csh_step,
    fast_frequency,
    run_csh,
    stable_dt,
    steps_for,
)
from cshlab.errors import BlowUpError, ConfigError
from cshlab.grid import FieldGrid
from cshlab.scaling import ScalingParams, potential_v_prime


def test_covariant_gradient_examples(grid, xy):
    x, y = xy
    psi = np.exp(1j * x)
    zero = np.zeros((2,) + grid.shape)
    d = covariant_gradient(grid, psi, zero, 0.5, 1.0)
    assert np.abs(d[0] - 1j * psi).max() <= 1e-12 and np.abs(d[1]).max() <= 1e-12
    # constant A on a constant field: D psi = -i eps^(delta-1) A psi
    a = np.stack([np.full(grid.shape, 2.0), np.zeros(grid.shape)])
    d = covariant_gradient(grid, np.ones(grid.shape, complex), a, 0.25, 0.5)
    assert np.abs(d[0] + 1j * 0.25**-0.5 * 2.0).max() <= 1e-12


def test_zero_field_stays_zero(grid):
    p = ScalingParams(eps=0.3, delta=1.0, gamma=2.0, lam=2.0)
    z = np.zeros(grid.shape, complex)
    s = csh_step(grid, CshState(z, z, 0.0, p), 1e-3)
    assert np.abs(s.psi).max() == 0 and np.abs(s.chi).max() == 0 and s.t == pytest.approx(1e-3)


def test_constant_state_matches_ode():
    g = FieldGrid(8, 8)
    p = ScalingParams(eps=0.3, delta=0.5, gamma=3.0, lam=1.0)
    psi0, chi0 = 0.8 + 0.3j, 0.1 - 0.2j
    c = 2.0 / p.eps ** (2 + 2 * p.delta)

    def ode(t, y):
        psi, chi = y[0] + 1j * y[1], y[2] + 1j * y[3]
        dchi = c * (1j * p.eps * chi - potential_v_prime(abs(psi) ** 2, p.gamma) * psi)
        return [chi.real, chi.imag, dchi.real, dchi.imag]

    t_end = 0.2
    ref = solve_ivp(ode, (0, t_end), [psi0.real, psi0.imag, chi0.real, chi0.imag], method="DOP853", rtol=1e-12, atol=1e-14)
    # the uniform mode also rotates with the potential frequency, so resolve it explicitly
    n, dt = steps_for(t_end, 2e-4)
    s = CshState(np.full(g.shape, psi0), np.full(g.shape, chi0), 0.0, p)
    final, _ = run_csh(g, s, t_end, dt, n)
    y = ref.y[:, -1]
    assert abs(final.psi[3, 5] - (y[0] + 1j * y[1])) <= 1e-8
    assert abs(final.chi[3, 5] - (y[2] + 1j * y[3])) <= 1e-8 * c
    assert np.ptp(np.abs(final.psi)) <= 1e-12


def _smooth_state(g, p, seed=0):
    r = np.random.default_rng(seed)
    x, y = g.xy
    psi = 1.0 + 0.1 * np.cos(x + y) + 0.05j * np.sin(x) + 0.02 * r.standard_normal() * np.cos(2 * y)
    chi = 0.1j * np.cos(x) * psi
    return CshState(psi.astype(complex), chi.astype(complex), 0.0, p)


def test_rk4_self_convergence():
    g = FieldGrid(16, 16)
    p = ScalingParams(eps=0.5, delta=1.0, gamma=2.0, lam=2.0)
    s0 = _smooth_state(g, p)
    t_end = 0.05
    dt0 = stable_dt(g, p, 0.5)
    n0 = int(np.ceil(t_end / dt0))
    sols = []
    for m in (1, 2, 4, 16):
        n = n0 * m
        sols.append(run_csh(g, s0, t_end, t_end / n, n)[0].psi)
    errs = [np.abs(s - sols[-1]).max() for s in sols[:-1]]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 3.7), orders


def _linear_matrix(p, rho0, k):
    """Linearization about the uniform state, in the frame rotating with it.

    Unknowns ``(a, b, e, f)``: ``phi = (a + i b) cos kx`` perturbs ``psi`` and
    ``eta = (e + i f) cos kx`` perturbs ``chi``.
    """
    eps, w = p.eps, p.eps ** (2 + 2 * p.delta)
    c = 2.0 / w
    vp = potential_v_prime(rho0, p.gamma)
    om = (-eps + np.sqrt(eps**2 + 2 * w * vp)) / w
    s = np.sqrt(rho0)

    def rate(v):
        a, b, e, f = v
        phi, eta = a + 1j * b, e + 1j * f
        drho = 2 * s * a
        drho_r = eps ** (1 + 2 * p.delta) * s * (f - om * a)
        a0 = -rho0 * (drho - drho_r) / k**2
        dphi = eta + 1j * om * phi + (1j / eps) * a0 * s
        deta = (
            1j * om * eta
            + (om / eps) * a0 * s
            + c * (1j * eps * eta - 0.5 * eps**2 * k**2 * phi - (2 * p.gamma * rho0 ** (p.gamma - 1) * a + vp * phi))
        )
        return [dphi.real, dphi.imag, deta.real, deta.imag]

    m = np.array([rate(col) for col in np.eye(4)]).T
    return m, om


def test_linear_dispersion():
    g = FieldGrid(16, 16)
    p = ScalingParams(eps=0.5, delta=1.0, gamma=2.0, lam=2.0)
    rho0, k, amp = 1.2, 1.0, 1e-6
    m, om = _linear_matrix(p, rho0, k)
    v0 = amp * np.array([1.0, 0.5, -0.3, 0.8])
    x, _ = g.xy
    s = np.sqrt(rho0)
    psi = (s + (v0[0] + 1j * v0[1]) * np.cos(k * x)).astype(complex)
    chi = (-1j * om * s + (v0[2] + 1j * v0[3]) * np.cos(k * x)).astype(complex)
    t_end = 0.5
    n, dt = steps_for(t_end, stable_dt(g, p, 0.25))
    final, _ = run_csh(g, CshState(psi, chi, 0.0, p), t_end, dt, n)
    rot = np.exp(1j * om * t_end)
    proj = lambda f: 2 * np.mean(f * np.cos(k * x))  # noqa: E731
    dphi = proj(rot * final.psi)
    deta = proj(rot * final.chi)
    got = np.array([dphi.real, dphi.imag, deta.real, deta.imag])
    want = expm(m * t_end) @ v0
    assert np.abs(got[:2] - want[:2]).max() <= 1e-3 * np.abs(want[:2]).max()
    assert np.abs(got[2:] - want[2:]).max() <= 1e-3 * np.abs(want[2:]).max()


def test_gauge_is_slaved(grid):
    p = ScalingParams(eps=0.3, delta=1.0, gamma=2.0, lam=2.0)
    s = _smooth_state(grid, p)
    gauge = csh_gauge(grid, s.psi, s.chi, p)
    rho_eff = np.abs(s.psi) ** 2 - p.eps ** (1 + 2 * p.delta) * np.imag(np.conj(s.psi) * s.chi)
    assert np.abs(p.eps_delta * grid.curl(gauge.a) + rho_eff - rho_eff.mean()).max() <= 1e-12
    a, b = csh_rhs(grid, s), csh_rhs(grid, s, gauge)
    assert np.abs(a[0] - b[0]).max() <= 1e-12 and np.abs(a[1] - b[1]).max() <= 1e-9


def test_phase_rotation_equivariance(grid):
    p = ScalingParams(eps=0.3, delta=1.0, gamma=2.0, lam=2.0)
    s = _smooth_state(grid, p)
    z = np.exp(0.7j)
    a = csh_step(grid, s, 1e-3)
    b = csh_step(grid, CshState(z * s.psi, z * s.chi, 0.0, p), 1e-3)
    assert np.abs(b.psi - z * a.psi).max() <= 1e-12


def test_fast_frequency_scaling():
    g = FieldGrid(32, 32)
    for delta in (0.5, 1.0):
        w = [fast_frequency(g, ScalingParams(eps=e, delta=delta, gamma=2.0, lam=1.0)) for e in (0.02, 0.01)]
        assert np.log2(w[1] / w[0]) == pytest.approx(1 + 2 * delta, abs=0.02)


def test_steps_for_divides_interval():
    n, dt = steps_for(1.0, 0.3, record_interval=0.25)
    assert n == 1 and dt == 0.25
    n, dt = steps_for(1.0, 0.07, record_interval=0.25)
    assert n * dt == pytest.approx(0.25) and dt <= 0.07


def test_single_record_when_span_is_zero(grid):
    p = ScalingParams(eps=0.3, delta=1.0, gamma=2.0, lam=2.0)
    s = _smooth_state(grid, p)
    final, states = run_csh(grid, s, 0.0, 1e-3, 1)
    assert len(states) == 1 and final is s


def test_run_validation(grid):
    p = ScalingParams(eps=0.3, delta=1.0, gamma=2.0, lam=2.0)
    s = _smooth_state(grid, p)
    with pytest.raises(ConfigError):
        run_csh(grid, s, -1.0, 1e-3, 1)
    with pytest.raises(ConfigError):
        csh_step(grid, s, 0.0)


def test_nan_raises_blowup(grid):
    p = ScalingParams(eps=0.3, delta=1.0, gamma=2.0, lam=2.0)
    s = _smooth_state(grid, p)
    psi = s.psi.copy()
    psi[0, 0] = np.nan
    with pytest.raises(BlowUpError) as exc:
        csh_step(grid, CshState(psi, s.chi, 0.0, p), 1e-3)
    assert exc.value.t == pytest.approx(1e-3)


def test_covariant_gradient_cancellation(grid, xy):
    x, _ = xy
    eps, delta = 0.3, 0.5
    a = np.stack([np.full(grid.shape, eps ** (1 - delta)), np.zeros(grid.shape)])
    d = covariant_gradient(grid, np.exp(1j * x), a, eps, delta)
    assert np.abs(d).max() <= 1e-12

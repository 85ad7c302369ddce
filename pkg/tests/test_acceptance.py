"""Acceptance suite: one pass/fail line per criterion, printed in the summary.

Tolerances are pinned to the criteria.  Runtime is several minutes; select
with ``-m slow`` or skip with ``-m "not slow"``.
"""
import math
import time
from pathlib import Path

import numpy as np
import pytest

from cshlab.cli import main
from cshlab.csh import csh_step, stable_dt, steps_for
from cshlab.harness import SweepConfig, branch_residuals, run_label, run_pair, run_sweep
from cshlab.initdata import prepare, prepared_rate_report
from cshlab.observables import NORM_NAMES, madelung_split
from cshlab.scaling import relative_pressure

pytestmark = pytest.mark.slow

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
DEFAULT = CONFIGS / "default.yaml"
RESIDUAL_TAUS = (4e-4, 2e-4, 1e-4)
GAUGE_DTS = (4e-4, 2e-4, 1e-4, 5e-5)


def _orders(values):
    v = np.asarray(values, dtype=float)
    return np.log2(v[:-1] / v[1:])


# ---------------------------------------------------------------- criterion 1
def _samples(rng, n_gamma, per_gamma, lo, hi):
    gammas = rng.uniform(lo, hi, n_gamma)
    rho = np.exp(rng.uniform(np.log(1e-3), np.log(1e2), (n_gamma, per_gamma)))
    n = np.exp(rng.uniform(np.log(1e-4), np.log(1e3), (n_gamma, per_gamma)))
    n[:, :50] = rho[:, :50] * (1 + rng.uniform(-1e-3, 1e-3, (n_gamma, 50)))  # near the diagonal
    n[:, 50:60] = 0.0
    return gammas, n, rho


def test_scalar_inequalities(acceptance_log):
    rng = np.random.default_rng(20261016)
    t0 = time.perf_counter()
    # 10^5 samples: half with gamma in (1, 2), half with gamma in [2, 6]
    g_lo, n_lo, r_lo = _samples(rng, 50, 1000, 1.0 + 1e-6, 2.0)
    g_hi, n_hi, r_hi = _samples(rng, 50, 1000, 2.0, 6.0)
    neg = pow_fail = quad_fail = quad_half_fail = quad_count = 0
    for g, n, r in zip(g_lo, n_lo, r_lo):
        p = relative_pressure(n, r, g)
        neg += int((p < 0).sum())
        pos = n > 0
        w = np.minimum(n[pos] ** (g - 2), r[pos] ** (g - 2)) * (n[pos] - r[pos]) ** 2
        quad_count += int(pos.sum())
        quad_fail += int((g * (g - 1) * w > p[pos] * (1 + 1e-12)).sum())
        quad_half_fail += int((0.5 * g * (g - 1) * w > p[pos] * (1 + 1e-12)).sum())
    for g, n, r in zip(g_hi, n_hi, r_hi):
        p = relative_pressure(n, r, g)
        neg += int((p < 0).sum())
        pow_fail += int((np.abs(n - r) ** g > p * (1 + 1e-12)).sum())
    wall = time.perf_counter() - t0
    total = n_lo.size + n_hi.size
    ok_a = acceptance_log("C1a p(n|rho) >= 0", neg == 0 and wall < 5, f"{neg} failures / {total} samples, {wall:.2f} s")
    ok_b = acceptance_log("C1b |n-rho|^g <= p, g >= 2", pow_fail == 0, f"{pow_fail} failures / {n_hi.size} samples")
    ok_c = acceptance_log(
        "C1c g(g-1) min(n^(g-2), rho^(g-2)) (n-rho)^2 <= p, 1<g<2",
        quad_fail == 0,
        f"{quad_fail} failures / {quad_count} samples as stated; with the Taylor factor 1/2: {quad_half_fail} failures",
    )
    assert quad_half_fail == 0
    assert ok_a and ok_b and ok_c


# ---------------------------------------------------------------- criteria 2, 3
@pytest.fixture(scope="module")
def conservation_run():
    cfg = SweepConfig.from_yaml(CONFIGS / "conservation.yaml")
    grid = cfg.grid()
    worst = {"expansion": 0.0, "madelung": 0.0, "curl": 0.0, "div": 0.0}
    kept = {}

    def on_record(rec, s, gauge, eu, eg):
        flow, quantum = madelung_split(grid, s, gauge, eu)
        worst["expansion"] = max(worst["expansion"], abs(rec.H_expanded - rec.H_mod) / abs(rec.H_mod))
        worst["madelung"] = max(worst["madelung"], abs(flow + quantum - rec.H_kin) / abs(rec.H_kin))
        worst["curl"] = max(worst["curl"], rec.constraint_curl)
        worst["div"] = max(worst["div"], rec.constraint_div)
        if abs(rec.t - 0.25) < 1e-12:
            kept["state"] = s

    t0 = time.perf_counter()
    res = run_pair(cfg, cfg.eps[0], on_record=on_record, residuals=False)
    return cfg, grid, res, worst, kept["state"], time.perf_counter() - t0


def test_conservation(conservation_run, acceptance_log):
    cfg, grid, res, _, mid, wall = conservation_run
    s = res.summary()
    ok_e = acceptance_log(
        "C2 energy drift <= 1e-6",
        res.status == "ok" and s["energy_drift_max"] <= 1e-6,
        f"relative drift {s['energy_drift_max']:.3e} over t in [0, {cfg.t_end}] ({grid.nx}^2, eps={cfg.eps[0]}, dt={res.dt:.3e}, {wall:.0f} s)",
    )
    res_m, res_p = [], []
    for tau in RESIDUAL_TAUS:
        m, p, _ = branch_residuals(grid, mid, tau)
        res_m.append(m)
        res_p.append(p)
    om, op = _orders(res_m), _orders(res_p)
    ok_m = acceptance_log(
        "C2 mass-law residual order >= 2",
        bool(np.all(om >= 2.0)),
        f"residuals {', '.join(f'{v:.2e}' for v in res_m)} at tau={RESIDUAL_TAUS}; orders {np.round(om, 2).tolist()}",
    )
    ok_p = acceptance_log(
        "C2 momentum-law residual order >= 2",
        bool(np.all(op >= 2.0)),
        f"residuals {', '.join(f'{v:.2e}' for v in res_p)}; orders {np.round(op, 2).tolist()}",
    )
    assert ok_e and ok_m and ok_p


def test_structural_identities(conservation_run, acceptance_log):
    _, _, res, worst, _, _ = conservation_run
    n = len(res.records)
    ok1 = acceptance_log("C3 expansion cross-check <= 1e-10 rel", worst["expansion"] <= 1e-10, f"max {worst['expansion']:.2e} over {n} states")
    ok2 = acceptance_log("C3 Madelung decomposition <= 1e-8 rel", worst["madelung"] <= 1e-8, f"max {worst['madelung']:.2e} over {n} states")
    ok3 = acceptance_log(
        "C3 gauge constraints <= 1e-10",
        max(worst["curl"], worst["div"]) <= 1e-10,
        f"curl {worst['curl']:.2e}, div {worst['div']:.2e} (L2) over {n} states",
    )
    assert ok1 and ok2 and ok3


def test_gauge_evolution_order(acceptance_log):
    cfg = SweepConfig.from_yaml(DEFAULT)
    grid, params = cfg.grid(), cfg.params(0.1)
    s = prepare(grid, cfg.profile_obj(), params).csh0
    n, dt = steps_for(0.2, stable_dt(grid, params, cfg.c_cfl))
    for _ in range(n):
        s = csh_step(grid, s, dt)
    res = [branch_residuals(grid, s, h)[2] for h in GAUGE_DTS]
    orders = _orders(res)
    ok = acceptance_log(
        "C3 gauge evolution residual order >= 2",
        bool(np.all(orders >= 2.0)),
        f"residuals {', '.join(f'{v:.2e}' for v in res)} at dt={GAUGE_DTS}; orders {np.round(orders, 2).tolist()}",
    )
    assert ok


# ---------------------------------------------------------------- criterion 4
@pytest.mark.parametrize("config, target", [("default.yaml", 0.9 * 2.0), ("delta_quarter.yaml", 0.9 * 0.5)])
def test_prepared_rate(config, target, acceptance_log):
    cfg = SweepConfig.from_yaml(CONFIGS / config)
    t0 = time.perf_counter()
    fit = prepared_rate_report(cfg.grid(), cfg.profile_obj(), cfg.params(cfg.eps[0]), cfg.eps)
    wall = time.perf_counter() - t0
    ok = acceptance_log(
        f"C4 H(0) slope at delta={cfg.delta:g} >= {target:g}",
        fit.slope >= target and wall < 60,
        f"slope {fit.slope:.4f} (r2 {fit.r2:.4f}, C {fit.constant:.3g}), {wall:.1f} s",
    )
    assert ok


# ---------------------------------------------------------------- criteria 5-8
@pytest.fixture(scope="module")
def sweep(tmp_path_factory):
    cfg = SweepConfig.from_yaml(DEFAULT)
    out = tmp_path_factory.mktemp("sweep")
    t0 = time.perf_counter()
    report = run_sweep(cfg, out, threads=1)
    return cfg, out, report, time.perf_counter() - t0


def test_modulated_energy_rate(sweep, acceptance_log):
    cfg, _, report, wall = sweep
    f = report["fits"]["H_sup"]
    ok = acceptance_log(
        "C5 sup H slope >= 0.8, r2 >= 0.95",
        not report["failed_runs"] and f["slope"] >= 0.8 and f["r2"] >= 0.95,
        f"slope {f['slope']:.4f}, r2 {f['r2']:.4f}, C {f['constant']:.3g} (theory {f['theory']:g}); "
        f"max energy drift {report['drifts']['energy_drift_max']:.2e}; filter off; {wall:.0f} s",
    )
    assert ok


def test_theorem_rates(sweep, acceptance_log):
    _, _, report, _ = sweep
    oks = []
    for name in NORM_NAMES:
        f = report["fits"][f"{name}_sup"]
        need = 0.8 * f["theory"]
        if name in ("rho_R", "J_R_L1"):
            need = max(need, 0.8)
        oks.append(
            acceptance_log(
                f"C6 {name} slope >= {need:.2f}",
                f["slope"] >= need,
                f"slope {f['slope']:.4f} (theory {f['theory']:g}, r2 {f['r2']:.4f}, C {f['constant']:.3g})",
            )
        )
    assert all(oks)


def test_correction_rate(sweep, acceptance_log):
    cfg, _, report, _ = sweep
    f = report["fits"]["R_sup"]
    ok = acceptance_log(
        f"C7 sup |R| slope >= {0.8 * cfg.delta:g}",
        f["slope"] >= 0.8 * cfg.delta,
        f"slope {f['slope']:.4f}, r2 {f['r2']:.4f}, C {f['constant']:.3g}",
    )
    assert ok


def test_determinism(sweep, tmp_path, acceptance_log, capsys):
    cfg, out, _, _ = sweep
    rerun = tmp_path / "rerun"
    code = main(["sweep", "--config", str(DEFAULT), "--out", str(rerun), "--threads", "1"])
    capsys.readouterr()
    same = [
        (out / run_label(e) / "diag.csv").read_bytes() == (rerun / run_label(e) / "diag.csv").read_bytes() for e in cfg.eps
    ]
    ok = acceptance_log(
        "C8 byte-identical CSV on rerun",
        code == 0 and all(same),
        f"{sum(same)}/{len(same)} diag.csv files identical (exit code {code})",
    )
    assert ok


def test_orders_helper():
    assert _orders([4.0, 1.0, 0.25]).tolist() == [2.0, 2.0]
    assert math.isclose(_orders([8.0, 1.0])[0], 3.0)

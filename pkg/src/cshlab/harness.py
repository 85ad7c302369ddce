"""Sweep orchestration: paired CSH/Euler runs over eps, rate fits, baselines.

Config schema (YAML, ``schema_version: 1``)::

    schema_version: 1
    grid:    {nx: 64, ny: 64, lx: 6.283185307179586, ly: 6.283185307179586}
    scaling: {eps: [0.2, 0.141, 0.1, 0.0707, 0.05], delta: 1.0, gamma: 2.0, lam: 2.0}
    time:    {t_end: 0.3, record_interval: 0.05, c_cfl: 0.25, euler_cfl: 0.5,
              max_dt_halvings: 2, smooth_horizon: 1.0}
    profile: {rho_bar: 1.0, rho_amp: 0.2, rho_mx: 1, rho_my: 1,
              phase_amp: 0.1, phase_mx: 1, phase_my: 0, velocity: covariant}
    euler:   {background_force: true, filter_order: 0}
    prepare: {tol: 1.0e-12, max_iter: 50}
    output:  {dir: runs/default}
    fft_workers: 1

Apart from ``schema_version`` every section and key is optional; omitted
values take the defaults above.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from . import _kernels
from .csh import csh_gauge, csh_step, stable_dt, steps_for
from .errors import BaselineError, BlowUpError, ConfigError, FitError, RegimeError
from .euler import EulerOptions, euler_dt_bound, euler_gauge, euler_step
from .gauge import constraint_residuals, gauge_window_residual
from .grid import FieldGrid, set_fft_workers
from .initdata import Profile, prepare
from .observables import (
    NORM_NAMES,
    DiagnosticsRecord,
    conservation_residuals,
    correction_functional,
    law_fields,
    moments,
    modulated_energy,
    modulated_energy_expanded,
    records_to_csv,
    theorem_norms,
    theoretical_slope,
    total_energy,
)
from .rates import fit_rate
from .scaling import ScalingParams

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
RESIDUAL_STENCIL = 5  # states per branched residual window

_SECTIONS = {
    "grid": {"nx": "nx", "ny": "ny", "lx": "lx", "ly": "ly"},
    "scaling": {"eps": "eps", "delta": "delta", "gamma": "gamma", "lam": "lam"},
    "time": {
        "t_end": "t_end",
        "record_interval": "record_interval",
        "c_cfl": "c_cfl",
        "euler_cfl": "euler_cfl",
        "max_dt_halvings": "max_dt_halvings",
        "smooth_horizon": "smooth_horizon",
    },
    "euler": {"background_force": "background_force", "filter_order": "filter_order"},
    "prepare": {"tol": "prepare_tol", "max_iter": "prepare_max_iter"},
    "output": {"dir": "out_dir"},
}


@dataclass
class SweepConfig:
    nx: int = 64
    ny: int = 64
    lx: float = 2 * math.pi
    ly: float = 2 * math.pi
    eps: list = field(default_factory=lambda: [0.2, 0.141, 0.1, 0.0707, 0.05])
    delta: float = 1.0
    gamma: float = 2.0
    lam: float = 2.0
    t_end: float = 0.3
    record_interval: float = 0.05
    c_cfl: float = 0.25
    euler_cfl: float = 0.5
    max_dt_halvings: int = 2
    smooth_horizon: float = 1.0
    profile: dict = field(default_factory=dict)
    background_force: bool = True
    filter_order: int = 0
    prepare_tol: float = 1e-12
    prepare_max_iter: int = 50
    out_dir: str = "runs/default"
    fft_workers: int = 1
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        self.validate()

    def validate(self):
        try:
            self.eps = [float(e) for e in self.eps]
        except TypeError as exc:
            raise ConfigError("scaling.eps must be a list of numbers") from exc
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version} (expected {SCHEMA_VERSION})")
        if not self.eps:
            raise ConfigError("scaling.eps is empty")
        if any(not 0 < e < 1 for e in self.eps):
            raise ConfigError("every eps must lie in (0, 1)")
        if any(b >= a for a, b in zip(self.eps, self.eps[1:])):
            raise ConfigError("scaling.eps must be strictly decreasing")
        if not self.t_end > 0 or not self.record_interval > 0:
            raise ConfigError("t_end and record_interval must be positive")
        ratio = self.t_end / self.record_interval
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ConfigError("record_interval must divide t_end")
        if self.t_end >= self.smooth_horizon:
            raise ConfigError(f"t_end={self.t_end} is not below the Euler smoothness horizon {self.smooth_horizon}")
        if not 0 < self.c_cfl <= 1.4 or not 0 < self.euler_cfl <= 1.4:
            raise ConfigError("CFL constants must lie in (0, 1.4]")
        if self.max_dt_halvings < 0 or self.fft_workers < 1:
            raise ConfigError("max_dt_halvings must be >= 0 and fft_workers >= 1")
        # raises ConfigError for bad grids or profiles
        self.grid()
        self.profile_obj()
        ScalingParams(self.eps[0], self.delta, self.gamma, self.lam)

    # construction helpers
    def grid(self) -> FieldGrid:
        return FieldGrid(int(self.nx), int(self.ny), float(self.lx), float(self.ly))

    def profile_obj(self) -> Profile:
        return Profile.from_dict(self.profile)

    def params(self, eps: float) -> ScalingParams:
        return ScalingParams(eps, self.delta, self.gamma, self.lam)

    def euler_options(self) -> EulerOptions:
        return EulerOptions(background_force=bool(self.background_force), filter_order=int(self.filter_order))

    @property
    def n_records(self) -> int:
        return int(round(self.t_end / self.record_interval))

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a mapping")
        kw = {}
        for key, val in d.items():
            if key in ("schema_version", "fft_workers"):
                kw[key] = val
            elif key == "profile":
                kw["profile"] = dict(val or {})
            elif key in _SECTIONS:
                if not isinstance(val, dict):
                    raise ConfigError(f"section {key!r} must be a mapping")
                for sub, sval in val.items():
                    if sub not in _SECTIONS[key]:
                        raise ConfigError(f"unknown key {key}.{sub}")
                    kw[_SECTIONS[key][sub]] = sval
            else:
                raise ConfigError(f"unknown config section {key!r}")
        if "schema_version" not in kw:
            raise ConfigError("config lacks schema_version")
        try:
            return cls(**kw)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_yaml(cls, path) -> "SweepConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
        return cls.from_dict(data or {})

    def to_dict(self) -> dict:
        out = {"schema_version": self.schema_version, "fft_workers": self.fft_workers, "profile": dict(self.profile)}
        for sec, keys in _SECTIONS.items():
            out[sec] = {k: getattr(self, attr) for k, attr in keys.items()}
        return out


def run_label(eps: float) -> str:
    return f"eps_{eps:.6g}"


# ---------------------------------------------------------------- paired run
@dataclass
class RunResult:
    eps: float
    status: str  # "ok", "blowup" or "regime"
    message: str
    records: list
    dt: float
    euler_dt: float
    dt_halvings: int
    steps: int
    filter_active: bool

    def summary(self) -> dict:
        recs = self.records
        out = {
            "eps": self.eps,
            "label": run_label(self.eps),
            "status": self.status,
            "message": self.message,
            "dt": self.dt,
            "euler_dt": self.euler_dt,
            "dt_halvings": self.dt_halvings,
            "steps": self.steps,
            "filter_active": self.filter_active,
            "residual_stencil": RESIDUAL_STENCIL,
            "n_records": len(recs),
        }
        if recs:
            e0, m0 = recs[0].E_total, recs[0].mass_total
            out.update(
                {
                    "t_last": recs[-1].t,
                    "H0": recs[0].H_mod,
                    "H_t_end": recs[-1].H_mod,
                    "H_sup": max(r.H_mod for r in recs),
                    "R_sup": max(abs(r.R_corr) for r in recs),
                    "energy_drift_max": max(abs(r.E_total / e0 - 1.0) for r in recs),
                    "mass_drift_max": max(abs(r.mass_total / m0 - 1.0) for r in recs),
                    "norms_sup": {k: max(r.norms[k] for r in recs) for k in NORM_NAMES},
                    "res_mass_max": max(r.res_mass for r in recs),
                    "res_momentum_max": max(r.res_momentum for r in recs),
                    "res_gauge_max": max(r.res_gauge for r in recs),
                    "constraint_curl_max": max(r.constraint_curl for r in recs),
                    "constraint_div_max": max(r.constraint_div for r in recs),
                }
            )
        return out


def _diagnose(grid, cfg_params, s, eu, dt, with_residuals=True):
    """DiagnosticsRecord at the current pair; residuals from a branched window."""
    p = cfg_params
    gauge, dpsi = csh_gauge(grid, s.psi, s.chi, p, return_dpsi=True)
    eg = euler_gauge(grid, eu)
    m = moments(grid, s, gauge, dpsi)
    h = modulated_energy(grid, s, gauge, eu, dpsi)
    cr = constraint_residuals(grid, gauge, m.rho - m.rho_r, p.eps_delta)
    rec = DiagnosticsRecord(
        t=s.t,
        eps=p.eps,
        E_total=total_energy(grid, s, gauge, dpsi),
        H_mod=h.total,
        H_kin=h.kinetic,
        H_rel=h.relativistic,
        H_press=h.pressure,
        H_expanded=modulated_energy_expanded(grid, s, gauge, eu, dpsi),
        R_corr=correction_functional(grid, s, gauge, eu, dpsi),
        mass_total=float(grid.integrate(m.rho - m.rho_r)),
        norms=theorem_norms(grid, s, gauge, eu, eg, dpsi),
        constraint_curl=cr["curl"],
        constraint_div=cr["div"],
    )
    if with_residuals:
        rec.res_mass, rec.res_momentum, rec.res_gauge = branch_residuals(grid, s, dt)
    return rec, gauge, eg


def branch_residuals(grid: FieldGrid, state, h: float, stencil: int = RESIDUAL_STENCIL):
    """Mass, momentum and gauge-evolution residuals on a window branched off ``state``.

    The window is ``stencil`` states spaced by ``h``; the residuals sit at its
    centre.  The main trajectory is not affected.
    """
    window = [state]
    for _ in range(stencil - 1):
        window.append(csh_step(grid, window[-1], h))
    lf = [law_fields(grid, w) for w in window]
    res_m, res_p = conservation_residuals(grid, window, fields_=lf)
    c = stencil // 2
    p = state.params
    gauges = [csh_gauge(grid, w.psi, w.chi, p) for w in window]
    j_mid = moments(grid, window[c], gauges[c]).j
    res_g = gauge_window_residual(grid, gauges, [w.t for w in window], j_mid, p.eps, p.delta)
    return res_m, res_p, res_g


def run_pair(cfg: SweepConfig, eps: float, on_record=None, residuals: bool = True) -> RunResult:
    """Prepare data at ``eps`` and co-advance CSH and Euler to ``t_end``.

    Both solvers stop exactly at every record time: each dt divides the
    record interval.  A blow-up is retried with the CSH step halved, up to
    ``max_dt_halvings`` times.  ``on_record(record, csh_state, gauge,
    euler_state, euler_gauge)`` sees every recorded pair.
    """
    set_fft_workers(cfg.fft_workers)
    grid = cfg.grid()
    params = cfg.params(eps)
    options = cfg.euler_options()
    pd = prepare(grid, cfg.profile_obj(), params, tol=cfg.prepare_tol, max_iter=cfg.prepare_max_iter)
    message = ""
    for halving in range(cfg.max_dt_halvings + 1):
        n_per, dt = steps_for(cfg.t_end, stable_dt(grid, params, cfg.c_cfl) / 2**halving, cfg.record_interval)
        records, steps, euler_dt = [], 0, float("nan")
        s, eu = pd.csh0, pd.euler0
        try:
            for k in range(cfg.n_records + 1):
                rec, gauge, eg = _diagnose(grid, params, s, eu, dt, residuals)
                records.append(rec)
                if on_record:
                    on_record(rec, s, gauge, eu, eg)
                if k == cfg.n_records:
                    break
                t_next = (k + 1) * cfg.record_interval
                for _ in range(n_per):
                    s = csh_step(grid, s, dt)
                steps += n_per
                s = _at(s, t_next)
                n_e, euler_dt = steps_for(cfg.record_interval, euler_dt_bound(grid, eu, cfg.euler_cfl), cfg.record_interval)
                for _ in range(n_e):
                    eu = euler_step(grid, eu, euler_dt, options)
                eu = _at(eu, t_next)
            return RunResult(eps, "ok", "", records, dt, euler_dt, halving, steps, bool(cfg.filter_order))
        except BlowUpError as exc:
            message = str(exc)
            log.warning("eps=%g: blow-up (%s); halving dt", eps, exc)
            continue
        except RegimeError as exc:
            return RunResult(eps, "regime", str(exc), records, dt, euler_dt, halving, steps, bool(cfg.filter_order))
    return RunResult(eps, "blowup", message, records, dt, euler_dt, cfg.max_dt_halvings, steps, bool(cfg.filter_order))


def _at(state, t):
    # pin the clock to the exact record time; the fields already are there
    return replace(state, t=t)


# ---------------------------------------------------------------- sweeps
def _sweep_cell(args):
    cfg_dict, eps = args
    cfg = SweepConfig.from_dict(cfg_dict)
    t0 = time.perf_counter()
    res = run_pair(cfg, eps)
    return res, time.perf_counter() - t0


def fit_sweep(cfg: SweepConfig, summaries: list) -> dict:
    """Rate fits over the successful runs of a sweep."""
    ok = [s for s in summaries if s["status"] == "ok"]
    if len(ok) < 3:
        return {}
    eps = [s["eps"] for s in ok]
    alpha = cfg.params(eps[0]).alpha
    g, d = cfg.gamma, cfg.delta
    targets = {
        "H_t_end": ([s["H_t_end"] for s in ok], alpha),
        "H_sup": ([s["H_sup"] for s in ok], alpha),
        "R_sup": ([s["R_sup"] for s in ok], d),
        "lambda_H0": ([s["H0"] for s in ok], min(2.0, 2.0 * d)),
    }
    for name in NORM_NAMES:
        targets[f"{name}_sup"] = ([s["norms_sup"][name] for s in ok], theoretical_slope(name, alpha, g, d))
    fits = {}
    for name, (vals, theory) in targets.items():
        try:
            fits[name] = fit_rate(eps, vals, name=name, theory=theory).to_dict()
        except FitError as exc:
            fits[name] = {"name": name, "error": str(exc), "theory": theory}
    return fits


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def run_sweep(cfg: SweepConfig, out_dir=None, threads: int = 1) -> dict:
    """Run every eps cell, write per-run and sweep outputs, return the report."""
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = [(cfg.to_dict(), e) for e in cfg.eps]
    if threads > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(cells))) as pool:
            results = list(pool.map(_sweep_cell, cells))
    else:
        results = [_sweep_cell(c) for c in cells]
    summaries, timing = [], {}
    for res, wall in results:
        rdir = out / run_label(res.eps)
        rdir.mkdir(exist_ok=True)
        csv_text = records_to_csv(res.records)
        (rdir / "diag.csv").write_text(csv_text, newline="")
        summ = res.summary()
        summ["csv_sha256"] = hashlib.sha256(csv_text.encode()).hexdigest()
        _write_json(rdir / "summary.json", summ)
        summaries.append(summ)
        timing[run_label(res.eps)] = wall
        log.info("eps=%g status=%s wall=%.1fs", res.eps, res.status, wall)
    fits = fit_sweep(cfg, summaries)
    report = {
        "config": cfg.to_dict(),
        "metadata": {
            "threads": threads,
            "fft_workers": cfg.fft_workers,
            "kernel_backend": _kernels.backend(),
            "record_interval": cfg.record_interval,
            "sup_over": "recorded times",
        },
        "runs": summaries,
        "drifts": {
            "energy_drift_max": max((s.get("energy_drift_max", 0.0) for s in summaries), default=0.0),
            "mass_drift_max": max((s.get("mass_drift_max", 0.0) for s in summaries), default=0.0),
        },
        "failed_runs": [s["label"] for s in summaries if s["status"] != "ok"],
    }
    _write_json(out / "summary.json", report)
    _write_json(out / "fits.json", fits)
    _write_json(out / "timing.json", timing)
    return {**report, "fits": fits}


def load_report(out_dir) -> dict:
    out = Path(out_dir)
    try:
        report = json.loads((out / "summary.json").read_text())
        report["fits"] = json.loads((out / "fits.json").read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"{out} holds no sweep output ({exc.filename} missing); run `cshlab sweep` first") from exc
    return report


# ---------------------------------------------------------------- baselines
@dataclass
class Check:
    name: str
    ok: bool
    measured: float
    expected: float
    tol: float
    kind: str  # "slope" (absolute tolerance) or "drift" (relative tolerance)

    def line(self) -> str:
        unit = "abs" if self.kind == "slope" else "rel"
        return (
            f"{'PASS' if self.ok else 'FAIL'} {self.kind} {self.name}: measured {self.measured:.6g}, "
            f"baseline {self.expected:.6g} ({unit} tol {self.tol:.3g})"
        )


def make_baseline(report: dict, slope_tol: float = 0.1, drift_rel_tol: float = 1.0) -> dict:
    """Baseline document: absolute tolerance on slopes, relative on drifts."""
    slopes = {k: {"value": f["slope"], "abs_tol": slope_tol} for k, f in report["fits"].items() if "slope" in f}
    drifts = {k: {"value": v, "rel_tol": drift_rel_tol} for k, v in report["drifts"].items()}
    return {"schema_version": SCHEMA_VERSION, "slopes": slopes, "drifts": drifts}


def verify_baselines(report: dict, baseline_path) -> list:
    path = Path(baseline_path)
    if not path.exists():
        raise BaselineError(
            f"baseline {path} not found; create one from a trusted sweep with "
            f"`cshlab report --out <sweep dir> --write-baseline {path}`"
        )
    try:
        base = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise BaselineError(f"baseline {path} is not valid JSON: {exc}") from exc
    if base.get("schema_version") != SCHEMA_VERSION:
        raise BaselineError(f"baseline {path} has unsupported schema_version {base.get('schema_version')}")
    checks = []
    for name, ref in sorted(base.get("slopes", {}).items()):
        fit = report["fits"].get(name, {})
        got = fit.get("slope", float("nan"))
        ok = bool(abs(got - ref["value"]) <= ref["abs_tol"])
        checks.append(Check(name, ok, got, ref["value"], ref["abs_tol"], "slope"))
    for name, ref in sorted(base.get("drifts", {}).items()):
        got = report["drifts"].get(name, float("nan"))
        ok = bool(abs(got - ref["value"]) <= ref["rel_tol"] * abs(ref["value"]))
        checks.append(Check(name, ok, got, ref["value"], ref["rel_tol"], "drift"))
    return checks

"""Run orchestration: solve, check, emit."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .classical import (
    check_first_integral,
    check_linear_invariants,
    check_product_relation,
    check_quadratic_invariant,
    check_takayama_agreement,
    check_wronskian,
    ermakov_invariant,
    evolve_state,
    gamma_sigma_from_beta,
    linear_invariant,
    quad_invariant,
    quad_invariant_takayama,
    reconstruct_coefficients,
    solve_beta,
    solve_ermakov,
    solve_gamma,
    solve_sigma,
    wronskian,
)
from .config import RunConfig
from .emit import series_document, write_csv, write_json
from .expr import ExprError, is_constant
from .ode import IntegrationError
from .quantum import (
    check_quantum_invariance,
    check_quantum_products,
    heisenberg_propagator,
    linear_invariant_op,
    pulled_back_series,
    quad_invariant_op,
)
from .report import DriftReport, drift_entry

__all__ = ["RunReport", "run"]

log = logging.getLogger(__name__)

_NEEDS_GAMMA = {"quadratic_invariant", "takayama", "first_integral", "coefficient_closure", "quantum_invariance"}


@dataclass
class RunReport:
    config: dict
    checks: list[DriftReport] = field(default_factory=list)
    series_files: list[str] = field(default_factory=list)
    duration_s: float = 0.0
    failed_at: str | None = None
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.failed_at is None and all(c.passed for c in self.checks)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def to_dict(self) -> dict:
        return {
            "tool": "tdho",
            "version": __version__,
            "config": self.config,
            "passed": self.passed,
            "failed_at": self.failed_at,
            "error": self.error,
            "checks": [c.to_dict() for c in self.checks],
            "series_files": list(self.series_files),
            "duration_s": self.duration_s,
        }

    def summary_lines(self) -> list[str]:
        lines = []
        for c in self.checks:
            worst = max(c.entries, key=_severity, default=None)
            detail = f"{worst.name}: {worst.drift:.3e} <= {worst.threshold:.1e}" if worst else "no entries"
            if worst is not None and not worst.passed:
                detail = detail.replace("<=", ">")
            lines.append(f"{'PASS' if c.passed else 'FAIL'}  {c.check:<20} {detail}")
        if self.failed_at:
            lines.append(f"FAIL  aborted at {self.failed_at}: {self.error}")
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return lines


def _severity(entry) -> float:
    if entry.threshold > 0:
        return entry.drift / entry.threshold
    return np.inf if entry.drift > 0 else 0.0


def _config_echo(cfg: RunConfig) -> dict:
    s = cfg.seeds
    integ = cfg.integrator
    pair = lambda z: [complex(z).real, complex(z).imag]  # noqa: E731
    return {
        "scenario": dict(cfg.source),
        "integrator": {"method": integ.method, "rtol": integ.rtol, "atol": integ.atol, "h0": integ.h0,
                       "max_steps": integ.max_steps},
        "seeds": {
            "q0": s.q0, "p0": s.p0, "beta0": pair(s.beta0), "beta_dot0": pair(s.beta_dot0),
            "gamma": list(s.gamma), "sigma": [pair(x) for x in s.sigma],
            "ermakov": {"w2": s.ermakov.w2, "rho0": s.ermakov.rho0, "rho_dot0": s.ermakov.rho_dot0},
        },
        "checks": list(cfg.checks),
        "thresholds": {k: cfg.thresholds[k] for k in cfg.checks},
        "hbar": cfg.hbar,
    }


def _ermakov_seed(cfg: RunConfig):
    e = cfg.seeds.ermakov
    sc = cfg.scenario
    if e.rho0 is not None:
        return e.rho0
    w2_t0 = sc.w2(sc.t0)
    if e.w2 <= 0 or w2_t0 <= 0:
        raise ValueError("default Ermakov amplitude needs w2 > 0 and omega_sq(t0) > 0; give seeds.ermakov.rho0")
    return (e.w2 / w2_t0) ** 0.25


def run(cfg: RunConfig, out_dir=None, fmt: str | None = None, emit_series: bool = True) -> RunReport:
    """Execute every selected check in order and write the outputs.

    Failures inside a stage (integration, domain errors) do not raise: the
    report records ``failed_at`` and keeps whatever was computed before.
    """
    start = time.perf_counter()
    fmt = fmt or cfg.output_format
    report = RunReport(config=_config_echo(cfg))
    sc = cfg.scenario
    ic = cfg.integrator
    seeds = cfg.seeds
    series: dict[str, np.ndarray] = {}
    checks = set(cfg.checks)
    thr = cfg.thresholds
    stage = "setup"

    try:
        stage = "classical evolution"
        traj = evolve_state(sc, seeds.q0, seeds.p0, ic)
        series.update(q=traj.q, p=traj.p)

        stage = "beta solve"
        beta = solve_beta(sc, seeds.beta0, seeds.beta_dot0, ic)
        series.update(beta=beta.beta, beta_dot=beta.beta_dot, F_beta=beta.quad)

        gamma = sigma = rho = sigma_rho = None
        if checks & _NEEDS_GAMMA:
            stage = "gamma/sigma solve"
            gamma = solve_gamma(sc, *seeds.gamma, ic)
            sigma = solve_sigma(sc, gamma, *seeds.sigma, ic)
            series.update(gamma=gamma.gamma, gamma_dot=gamma.gamma_dot, gamma_ddot=gamma.gamma_ddot,
                          sigma=sigma.sigma, sigma_dot=sigma.sigma_dot, F_sigma=sigma.quad)
        if "ermakov" in checks:
            stage = "rho solve"
            rho0 = _ermakov_seed(cfg)
            rho = solve_ermakov(sc, seeds.ermakov.w2, rho0, seeds.ermakov.rho_dot0, ic)
            sigma_rho = solve_sigma(sc, rho.as_gamma(), *seeds.sigma, ic)
            series.update(rho=rho.rho, rho_dot=rho.rho_dot)

        if "linear_invariant" in checks:
            stage = "linear_invariant"
            report.checks.append(check_linear_invariants(beta, traj, thr[stage]))
            series.update(I_L=linear_invariant(beta, traj), I_L_conj=linear_invariant(beta.conjugate(), traj))
        if "quadratic_invariant" in checks:
            stage = "quadratic_invariant"
            report.checks.append(check_quadratic_invariant(gamma, sigma, traj, sc, thr[stage]))
            series["I_Q"] = quad_invariant(gamma, sigma, traj, sc)
        if "takayama" in checks:
            stage = "takayama"
            report.checks.append(check_takayama_agreement(gamma, sigma, traj, sc, thr[stage]))
            series["I_Q_takayama"] = quad_invariant_takayama(gamma, sigma, traj, sc)
        if "ermakov" in checks:
            stage = "ermakov"
            rep = DriftReport("ermakov")
            values = ermakov_invariant(rho, sigma_rho, traj, sc)
            rep.add(drift_entry("Ermakov invariant", values, thr[stage]))
            if is_constant(sc.omega_sq) and seeds.ermakov.rho_dot0 == 0 and sc.w2(sc.t0) > 0 and np.isclose(
                    rho.rho[0], (rho.w2 / sc.w2(sc.t0)) ** 0.25, rtol=1e-14, atol=0):
                rep.add(drift_entry("stationary rho", rho.rho, thr[stage], metric="absolute"))
            report.checks.append(rep)
            series["I_ermakov"] = values
        if "wronskian" in checks:
            stage = "wronskian"
            report.checks.append(check_wronskian(beta, thr[stage]))
            series["W"] = wronskian(beta.conjugate(), beta)
        if "first_integral" in checks:
            stage = "first_integral"
            rep = check_first_integral(gamma, thr[stage])
            derived, _ = gamma_sigma_from_beta(beta)
            rep.entries.extend(check_first_integral(derived, thr[stage], name="gamma from beta").entries)
            report.checks.append(rep)
        if "product_relation" in checks:
            stage = "product_relation"
            report.checks.append(check_product_relation(beta, traj, sc, thr[stage]))
        if "coefficient_closure" in checks:
            stage = "coefficient_closure"
            report.checks.append(reconstruct_coefficients(gamma, sigma, sc, thr[stage]))
        if "quantum_invariance" in checks:
            stage = "quantum_invariance"
            prop = heisenberg_propagator(sc, ic)
            report.checks.append(check_quantum_invariance(
                prop, sc, beta=beta, gamma=gamma, sigma=sigma, traj=traj, hbar=cfg.hbar,
                threshold=thr[stage], include_products=False))
            series["det_S"] = prop.determinants()
            lin = pulled_back_series(lambda t: linear_invariant_op(beta, t), prop)
            for k, label in enumerate(("q", "p", "1")):
                series[f"I_L_pulled_{label}"] = lin[:, k]
            quad = pulled_back_series(lambda t: quad_invariant_op(gamma, sigma, sc, t), prop)
            for k, label in enumerate(("qq", "pp", "sym", "q", "p", "1")):
                series[f"I_Q_pulled_{label}"] = np.real_if_close(quad[:, k], tol=1)
        if "quantum_products" in checks:
            stage = "quantum_products"
            report.checks.append(check_quantum_products(beta, sc, cfg.hbar, thr[stage]))
    except (IntegrationError, ExprError, ValueError, ArithmeticError) as exc:
        log.warning("run aborted at %s: %s", stage, exc)
        report.failed_at = stage
        report.error = str(exc)

    if out_dir is not None:
        out = Path(out_dir)
        if emit_series and series:
            doc = series_document(sc.times, series)
            if fmt == "csv":
                report.series_files.append(str(write_csv(out / "series.csv", doc).name))
            else:
                report.series_files.append(str(write_json(out / "series.json", doc).name))
        report.duration_s = time.perf_counter() - start
        write_json(out / "report.json", report.to_dict())
    else:
        report.duration_s = time.perf_counter() - start
    return report


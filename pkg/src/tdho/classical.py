"""Classical driven oscillator: trajectories, auxiliary parameters and invariants.

The oscillator is ``q'' + omega_sq(t) q = F(t)``.  Every auxiliary
parameter (beta, gamma, sigma, rho) is obtained by integrating its own ODE
on the scenario's sample grid; the running force quadratures ride along as
extra state components so they share the integrator's accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .expr import Expr, differentiate, evaluate, parse
from .ode import IntegrationError, IntegratorConfig, OdeSystem, integrate
from .report import DriftReport, drift_entry, residual_entry

__all__ = [
    "BetaSolution",
    "ClassicalTrajectory",
    "ErmakovSingularityError",
    "GammaSolution",
    "GridMismatchError",
    "RhoSolution",
    "Scenario",
    "SigmaSolution",
    "check_first_integral",
    "check_linear_invariants",
    "check_product_relation",
    "check_quadratic_invariant",
    "check_takayama_agreement",
    "check_wronskian",
    "coefficient_functions",
    "ermakov_invariant",
    "evolve_ensemble",
    "evolve_state",
    "gamma_sigma_from_beta",
    "linear_invariant",
    "quad_invariant",
    "quad_invariant_takayama",
    "reconstruct_coefficients",
    "solve_beta",
    "solve_ermakov",
    "solve_gamma",
    "solve_sigma",
    "wronskian",
]


class GridMismatchError(ValueError):
    pass


class ErmakovSingularityError(IntegrationError):
    pass


def _maybe_real(a):
    a = np.asarray(a)
    if np.iscomplexobj(a) and not np.any(a.imag):
        return a.real.copy()
    return a


def _same_grid(*objs):
    ref = objs[0].times
    for o in objs[1:]:
        if o.times.shape != ref.shape or not np.array_equal(o.times, ref):
            raise GridMismatchError(f"{type(o).__name__} is sampled on a different grid")
    return ref


@dataclass(frozen=True, eq=False)
class Scenario:
    """Coefficient functions, time window and uniform sample grid."""

    omega_sq: Expr
    force: Expr
    t0: float = 0.0
    t1: float = 20.0
    samples: int = 2001
    name: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.t0) and math.isfinite(self.t1)) or self.t1 <= self.t0:
            raise ValueError(f"need finite t1 > t0, got t0={self.t0!r}, t1={self.t1!r}")
        if int(self.samples) != self.samples or self.samples < 2:
            raise ValueError(f"samples must be an integer >= 2, got {self.samples!r}")

    @classmethod
    def from_strings(cls, omega_sq: str, force: str = "0", **kwargs) -> "Scenario":
        return cls(parse(omega_sq), parse(force), **kwargs)

    @cached_property
    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, int(self.samples))

    @cached_property
    def spacing(self) -> float:
        return (self.t1 - self.t0) / (self.samples - 1)

    @cached_property
    def d_omega_sq(self) -> Expr:
        return differentiate(self.omega_sq)

    @cached_property
    def d_force(self) -> Expr:
        return differentiate(self.force)

    def w2(self, t):
        return evaluate(self.omega_sq, t)

    def f(self, t):
        return evaluate(self.force, t)

    def on_grid(self, expr: Expr) -> np.ndarray:
        return np.array([evaluate(expr, t) for t in self.times])

    @cached_property
    def omega_sq_values(self) -> np.ndarray:
        return self.on_grid(self.omega_sq)

    @cached_property
    def force_values(self) -> np.ndarray:
        return self.on_grid(self.force)


# --------------------------------------------------------------------------- trajectories


@dataclass(frozen=True, eq=False)
class ClassicalTrajectory:
    times: np.ndarray
    q: np.ndarray
    p: np.ndarray


def _oscillator_system(scenario: Scenario, n: int = 1) -> OdeSystem:
    omega_sq, force = scenario.omega_sq, scenario.force

    def rhs(t, y):
        w2 = omega_sq.evaluate(t)
        f = force.evaluate(t)
        q, p = y[0::2], y[1::2]
        out = np.empty_like(y)
        out[0::2] = p
        out[1::2] = f - w2 * q
        return out

    return OdeSystem(2 * n, rhs)


def evolve_state(scenario: Scenario, q0: float, p0: float, cfg: IntegratorConfig | None = None) -> ClassicalTrajectory:
    """Sample (q, p) along the canonical equations q' = p, p' = F - omega_sq q."""
    return evolve_ensemble(scenario, [(q0, p0)], cfg)[0]


def evolve_ensemble(scenario: Scenario, initial, cfg: IntegratorConfig | None = None) -> list[ClassicalTrajectory]:
    """Evolve several initial points in one batched integration."""
    initial = np.asarray(initial, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(initial)):
        raise ValueError("initial data must be finite")
    n = initial.shape[0]
    traj = integrate(_oscillator_system(scenario, n), initial.reshape(-1), scenario.t0, scenario.times, cfg)
    s = traj.states.real
    return [ClassicalTrajectory(traj.times, s[:, 2 * k].copy(), s[:, 2 * k + 1].copy()) for k in range(n)]


# --------------------------------------------------------------------------- linear invariants


@dataclass(frozen=True, eq=False)
class BetaSolution:
    """Sampled solution of beta'' + omega_sq beta = 0 with its force quadratures.

    ``quad`` is F(beta, t) = int_{t0}^t beta F, ``quad_conj`` the same with
    conj(beta) (integrated separately), and ``sigma_quad`` the quadrature of
    the sigma built from beta by the product relation.
    """

    scenario: Scenario
    times: np.ndarray
    beta: np.ndarray
    beta_dot: np.ndarray
    quad: np.ndarray
    quad_conj: np.ndarray
    sigma_quad: np.ndarray

    @property
    def alpha(self) -> np.ndarray:
        return -self.beta_dot

    @property
    def beta0(self) -> complex:
        return complex(self.beta[0])

    @property
    def beta_dot0(self) -> complex:
        return complex(self.beta_dot[0])

    def conjugate(self) -> "BetaSolution":
        return replace(
            self,
            beta=np.conj(self.beta),
            beta_dot=np.conj(self.beta_dot),
            quad=self.quad_conj,
            quad_conj=self.quad,
        )


def solve_beta(scenario: Scenario, beta0: complex, beta_dot0: complex, cfg: IntegratorConfig | None = None) -> BetaSolution:
    omega_sq, force = scenario.omega_sq, scenario.force

    def rhs(t, y):
        b, bd, fb, fbc = y[0], y[1], y[2], y[3]
        f = force.evaluate(t)
        bc = b.conjugate()
        return np.array([bd, -omega_sq.evaluate(t) * b, b * f, bc * f, -(bc * fb + b * fbc) * f])

    y0 = [complex(beta0), complex(beta_dot0), 0, 0, 0]
    s = integrate(OdeSystem(5, rhs), y0, scenario.t0, scenario.times, cfg).states
    return BetaSolution(scenario, scenario.times, s[:, 0], s[:, 1], s[:, 2], s[:, 3], _maybe_real(s[:, 4]))


def linear_invariant(beta: BetaSolution, traj: ClassicalTrajectory) -> np.ndarray:
    """I_L = beta p - beta' q - F(beta, t) at every sample."""
    _same_grid(beta, traj)
    return beta.beta * traj.p - beta.beta_dot * traj.q - beta.quad


def wronskian(b1: BetaSolution, b2: BetaSolution) -> np.ndarray:
    """W = b1' b2 - b1 b2'; with b1 = conj(beta), b2 = beta this is W(beta*, beta)."""
    _same_grid(b1, b2)
    return b1.beta_dot * b2.beta - b1.beta * b2.beta_dot


# --------------------------------------------------------------------------- quadratic invariants


@dataclass(frozen=True, eq=False)
class GammaSolution:
    scenario: Scenario
    times: np.ndarray
    gamma: np.ndarray
    gamma_dot: np.ndarray
    gamma_ddot: np.ndarray
    w2: float

    def first_integral(self) -> np.ndarray:
        """gamma gamma''/2 + omega_sq gamma^2 - gamma'^2/4 on the grid."""
        w2 = self.scenario.omega_sq_values
        g, gd, gdd = self.gamma, self.gamma_dot, self.gamma_ddot
        return 0.5 * g * gdd + w2 * g * g - 0.25 * gd * gd

    def first_integral_residual(self) -> np.ndarray:
        return self.first_integral() - self.w2


@dataclass(frozen=True, eq=False)
class SigmaSolution:
    times: np.ndarray
    sigma: np.ndarray
    sigma_dot: np.ndarray
    quad: np.ndarray  # F(sigma, t)


def _gamma_third(scenario, t, g, gd):
    # third derivative from  g'''/2 + 2 w2 g' + (w2)' g = 0
    return -4.0 * scenario.omega_sq.evaluate(t) * gd - 2.0 * scenario.d_omega_sq.evaluate(t) * g


def solve_gamma(scenario: Scenario, gamma0: float, gamma_dot0: float, gamma_ddot0: float,
                cfg: IntegratorConfig | None = None) -> GammaSolution:
    def rhs(t, y):
        return np.array([y[1], y[2], _gamma_third(scenario, t, y[0], y[1])])

    y0 = [gamma0, gamma_dot0, gamma_ddot0]
    s = integrate(OdeSystem(3, rhs), y0, scenario.t0, scenario.times, cfg).states
    w2 = 0.5 * gamma0 * gamma_ddot0 + scenario.w2(scenario.t0) * gamma0 ** 2 - 0.25 * gamma_dot0 ** 2
    return GammaSolution(scenario, scenario.times, _maybe_real(s[:, 0]), _maybe_real(s[:, 1]),
                         _maybe_real(s[:, 2]), float(np.real(w2)))


def solve_sigma(scenario: Scenario, gamma: GammaSolution, sigma0: complex, sigma_dot0: complex,
                cfg: IntegratorConfig | None = None) -> SigmaSolution:
    """Solve sigma'' + omega_sq sigma = -gamma F' - (3/2) gamma' F.

    gamma is needed between samples, so it is re-integrated jointly with
    sigma from its initial data; the result is checked against the samples.
    """
    if gamma.times.shape != scenario.times.shape or not np.array_equal(gamma.times, scenario.times):
        raise GridMismatchError("gamma is sampled on a different grid than the scenario")
    omega_sq, force, d_force = scenario.omega_sq, scenario.force, scenario.d_force

    def rhs(t, y):
        g, gd, gdd, s, sd = y[0], y[1], y[2], y[3], y[4]
        f = force.evaluate(t)
        return np.array([
            gd,
            gdd,
            _gamma_third(scenario, t, g, gd),
            sd,
            -omega_sq.evaluate(t) * s - g * d_force.evaluate(t) - 1.5 * gd * f,
            s * f,
        ])

    y0 = [gamma.gamma[0], gamma.gamma_dot[0], gamma.gamma_ddot[0], sigma0, sigma_dot0, 0]
    s = integrate(OdeSystem(6, rhs), y0, scenario.t0, scenario.times, cfg).states
    scale = max(1.0, float(np.max(np.abs(gamma.gamma))))
    mismatch = float(np.max(np.abs(s[:, 0] - gamma.gamma)))
    if mismatch > 1e-6 * scale:
        raise ValueError(f"gamma does not solve the gamma equation for this scenario (max deviation {mismatch:.3g})")
    return SigmaSolution(scenario.times, _maybe_real(s[:, 3]), _maybe_real(s[:, 4]), _maybe_real(s[:, 5]))


def _linear_part(gamma, sigma, traj, force):
    return -(sigma.sigma_dot + gamma.gamma * force) * traj.q + sigma.sigma * traj.p - sigma.quad


def quad_invariant(gamma: GammaSolution, sigma: SigmaSolution, traj: ClassicalTrajectory,
                   scenario: Scenario) -> np.ndarray:
    """Quadratic invariant parameterized by gamma and sigma."""
    _same_grid(gamma, sigma, traj)
    w2, force = scenario.omega_sq_values, scenario.force_values
    g, gd, gdd = gamma.gamma, gamma.gamma_dot, gamma.gamma_ddot
    q, p = traj.q, traj.p
    quadratic = (0.5 * gdd + w2 * g) * q * q / 2 - 0.5 * gd * q * p + g * p * p / 2
    return quadratic + _linear_part(gamma, sigma, traj, force)


def quad_invariant_takayama(gamma: GammaSolution, sigma: SigmaSolution, traj: ClassicalTrajectory,
                            scenario: Scenario) -> np.ma.MaskedArray:
    """Quadratic invariant in its W^2 form; samples with gamma ~ 0 are masked."""
    _same_grid(gamma, sigma, traj)
    g, gd = gamma.gamma, gamma.gamma_dot
    q, p = traj.q, traj.p
    scale = float(np.max(np.abs(g)))
    bad = np.abs(g) <= 1e-12 * scale
    safe_g = np.where(bad, 1.0, g)
    quadratic = (gamma.w2 * q * q + (0.5 * gd * q - g * p) ** 2) / (2 * safe_g)
    values = quadratic + _linear_part(gamma, sigma, traj, scenario.force_values)
    return np.ma.MaskedArray(values, mask=bad)


# --------------------------------------------------------------------------- Ermakov sector


@dataclass(frozen=True, eq=False)
class RhoSolution:
    scenario: Scenario
    times: np.ndarray
    rho: np.ndarray
    rho_dot: np.ndarray
    w2: float

    @property
    def rho_ddot(self) -> np.ndarray:
        return self.w2 / self.rho ** 3 - self.scenario.omega_sq_values * self.rho

    def as_gamma(self) -> GammaSolution:
        """The gamma = rho^2 solution of the gamma equation."""
        r, rd = self.rho, self.rho_dot
        return GammaSolution(self.scenario, self.times, r * r, 2 * r * rd, 2 * rd * rd + 2 * r * self.rho_ddot, self.w2)


def solve_ermakov(scenario: Scenario, w2: float, rho0: float, rho_dot0: float,
                  cfg: IntegratorConfig | None = None) -> RhoSolution:
    """Solve rho'' + omega_sq rho = w2 / rho^3 with rho0 > 0."""
    if not rho0 > 0:
        raise ValueError(f"rho0 must be > 0, got {rho0!r}")
    omega_sq = scenario.omega_sq

    def rhs(t, y):
        r = y[0].real
        if not r > 0:
            raise ErmakovSingularityError("rho reached zero", t)
        return np.array([y[1], w2 / r ** 3 - omega_sq.evaluate(t) * r])

    s = integrate(OdeSystem(2, rhs), [rho0, rho_dot0], scenario.t0, scenario.times, cfg).states.real
    return RhoSolution(scenario, scenario.times, s[:, 0].copy(), s[:, 1].copy(), float(w2))


def ermakov_invariant(rho: RhoSolution, sigma: SigmaSolution, traj: ClassicalTrajectory,
                      scenario: Scenario) -> np.ndarray:
    """Ermakov-like invariant; the q^2/rho^2 term carries the constant w2."""
    _same_grid(rho, sigma, traj)
    r, rd, q, p = rho.rho, rho.rho_dot, traj.q, traj.p
    quadratic = 0.5 * (rho.w2 * q * q / (r * r) + (rd * q - r * p) ** 2)
    force = scenario.force_values
    return quadratic - (sigma.sigma_dot + r * r * force) * q + sigma.sigma * p - sigma.quad


# --------------------------------------------------------------------------- relations


def gamma_sigma_from_beta(beta: BetaSolution) -> tuple[GammaSolution, SigmaSolution]:
    """gamma = 2 |beta|^2 and sigma = -beta* F(beta) - beta F(beta*)."""
    sc = beta.scenario
    w2, force = sc.omega_sq_values, sc.force_values
    b, bd = beta.beta, beta.beta_dot
    bc, bdc = np.conj(b), np.conj(bd)
    mod2 = (bc * b).real
    gamma = 2 * mod2
    gamma_dot = 2 * (bdc * b + bc * bd).real
    gamma_ddot = 4 * (bdc * bd).real - 4 * w2 * mod2
    W = wronskian(beta.conjugate(), beta)[0]
    w_sq = float(np.real(-(W * W)))
    sigma = _maybe_real(-(bc * beta.quad + b * beta.quad_conj))
    # product rule on sigma, using d F(beta)/dt = beta F
    sigma_dot = _maybe_real(-(bdc * beta.quad + bd * beta.quad_conj) - 2 * mod2 * force)
    return (
        GammaSolution(sc, beta.times, gamma, gamma_dot, gamma_ddot, w_sq),
        SigmaSolution(beta.times, sigma, sigma_dot, beta.sigma_quad),
    )


def check_product_relation(beta: BetaSolution, traj: ClassicalTrajectory, scenario: Scenario | None = None,
                           threshold: float = 1e-7) -> DriftReport:
    """Compare conj(I_L) I_L with the quadratic invariant built from beta."""
    scenario = scenario or beta.scenario
    conj = beta.conjugate()
    product = linear_invariant(conj, traj) * linear_invariant(beta, traj)
    gamma, sigma = gamma_sigma_from_beta(beta)
    iq = quad_invariant(gamma, sigma, traj, scenario)
    w2, force = scenario.omega_sq_values, scenario.force_values
    report = DriftReport("product_relation")
    report.add(residual_entry("I_L* I_L - I_Q", product - iq, threshold))
    report.add(residual_entry(
        "gamma''/4 + omega_sq gamma/2 - |beta'|^2",
        0.5 * (0.5 * gamma.gamma_ddot + w2 * gamma.gamma) - conj.beta_dot * beta.beta_dot, threshold))
    report.add(residual_entry(
        "sigma' + gamma F + beta*' F(beta) + beta' F(beta*)",
        sigma.sigma_dot + gamma.gamma * force + conj.beta_dot * beta.quad + beta.beta_dot * beta.quad_conj,
        threshold))
    report.add(residual_entry("F(sigma) + |F(beta)|^2", sigma.quad + np.abs(beta.quad) ** 2, threshold))
    return report


# Finite-difference weights (6th order) used by the closure check.
def _fd_weights(offsets):
    offsets = np.asarray(offsets, dtype=float)
    n = offsets.size
    vander = np.vander(offsets, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[1] = 1.0
    return np.linalg.solve(vander, rhs)


_FD_POINTS = 7
_FD_TABLE = [_fd_weights(np.arange(_FD_POINTS) - shift) for shift in range(_FD_POINTS)]


def _grid_derivative(values, h):
    """d/dt of samples on a uniform grid with 7-point stencils (one-sided near the ends)."""
    v = np.asarray(values)
    n = v.size
    if n < _FD_POINTS:
        raise ValueError(f"need at least {_FD_POINTS} samples for the closure check")
    mid = _FD_POINTS // 2
    out = np.empty_like(v)
    w = _FD_TABLE[mid]
    interior = sum(w[k] * v[k:n - _FD_POINTS + 1 + k] for k in range(_FD_POINTS))
    out[mid:n - mid] = interior
    for i in range(mid):
        out[i] = _FD_TABLE[i] @ v[:_FD_POINTS]
        out[n - 1 - i] = _FD_TABLE[_FD_POINTS - 1 - i] @ v[n - _FD_POINTS:]
    return out / h


def coefficient_functions(gamma: GammaSolution, sigma: SigmaSolution, scenario: Scenario) -> dict[str, np.ndarray]:
    """The five general quadratic-invariant coefficients rebuilt from gamma and sigma."""
    w2, force = scenario.omega_sq_values, scenario.force_values
    g = gamma.gamma
    return {
        "c1": w2 * g + 0.5 * gamma.gamma_ddot,
        "c2": -0.5 * gamma.gamma_dot,
        "c3": g,
        "c4": -sigma.sigma_dot - g * force,
        "c5": sigma.sigma,
    }


def reconstruct_coefficients(gamma: GammaSolution, sigma: SigmaSolution, scenario: Scenario,
                             threshold: float = 1e-6) -> DriftReport:
    """Residuals of the five coefficient conditions, derivatives taken numerically on the grid."""
    _same_grid(gamma, sigma)
    c = coefficient_functions(gamma, sigma, scenario)
    d = {k: _grid_derivative(v, scenario.spacing) for k, v in c.items()}
    w2, force = scenario.omega_sq_values, scenario.force_values
    residuals = {
        "c2 + c3'/2": c["c2"] + 0.5 * d["c3"],
        "c1'/2 - c2 omega_sq": 0.5 * d["c1"] - c["c2"] * w2,
        "c1 + c2' - c3 omega_sq": c["c1"] + d["c2"] - c["c3"] * w2,
        "c2 F + c4' - c5 omega_sq": c["c2"] * force + d["c4"] - c["c5"] * w2,
        "c3 F + c4 + c5'": c["c3"] * force + c["c4"] + d["c5"],
    }
    report = DriftReport("coefficient_closure")
    for name, r in residuals.items():
        report.add(residual_entry(name, r, threshold))
    return report


# --------------------------------------------------------------------------- drift checks


def check_linear_invariants(beta: BetaSolution, trajs, threshold: float = 1e-7) -> DriftReport:
    report = DriftReport("linear_invariant")
    conj = beta.conjugate()
    for k, traj in enumerate(_as_list(trajs)):
        tag = f"[{k}]" if not isinstance(trajs, ClassicalTrajectory) else ""
        il = linear_invariant(beta, traj)
        ilc = linear_invariant(conj, traj)
        report.add(drift_entry(f"I_L{tag}", il, threshold))
        report.add(drift_entry(f"I_L*{tag}", ilc, threshold))
        report.add(residual_entry(f"conj(I_L) - I_L*{tag}", np.conj(il) - ilc, threshold))
    return report


def check_quadratic_invariant(gamma, sigma, trajs, scenario, threshold: float = 1e-7) -> DriftReport:
    report = DriftReport("quadratic_invariant")
    for k, traj in enumerate(_as_list(trajs)):
        tag = f"[{k}]" if not isinstance(trajs, ClassicalTrajectory) else ""
        report.add(drift_entry(f"I_Q{tag}", quad_invariant(gamma, sigma, traj, scenario), threshold))
    return report


def check_takayama_agreement(gamma, sigma, trajs, scenario, threshold: float = 1e-7,
                             min_gamma: float = 1e-6) -> DriftReport:
    report = DriftReport("takayama")
    for k, traj in enumerate(_as_list(trajs)):
        tag = f"[{k}]" if not isinstance(trajs, ClassicalTrajectory) else ""
        ref = quad_invariant(gamma, sigma, traj, scenario)
        tak = quad_invariant_takayama(gamma, sigma, traj, scenario)
        diff = np.ma.MaskedArray(tak.filled(0.0) - ref, mask=tak.mask | (np.abs(gamma.gamma) <= min_gamma))
        report.add(residual_entry(f"I_Q(W^2 form) - I_Q{tag}", diff, threshold))
    return report


def check_wronskian(beta: BetaSolution, threshold: float = 1e-9) -> DriftReport:
    report = DriftReport("wronskian")
    report.add(drift_entry("W(beta*, beta)", wronskian(beta.conjugate(), beta), threshold, metric="absolute"))
    return report


def check_first_integral(gamma: GammaSolution, threshold: float = 1e-7, name: str = "gamma") -> DriftReport:
    report = DriftReport("first_integral")
    report.add(residual_entry(f"first integral - W^2 ({name})", gamma.first_integral_residual(), threshold))
    return report


def _as_list(trajs):
    return [trajs] if isinstance(trajs, ClassicalTrajectory) else list(trajs)

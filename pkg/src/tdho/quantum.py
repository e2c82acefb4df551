"""Coefficient algebra for operators of degree <= 2 in (q, p) with [q, p] = i hbar.

Operators are stored as coefficient tuples over the symmetrized basis
``{q^2, p^2, (qp + pq)/2, q, p, 1}``.  Every polynomial of degree two has a
unique representation there, so products and Heisenberg-picture
substitutions reduce to exact coefficient arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classical import (
    BetaSolution,
    GammaSolution,
    Scenario,
    SigmaSolution,
    gamma_sigma_from_beta,
    linear_invariant,
    wronskian,
)
from .ode import IntegratorConfig, OdeSystem, integrate
from .report import DriftReport, residual_entry

__all__ = [
    "HeisenbergPropagator",
    "LinearOperator",
    "QuadraticOperator",
    "antisymmetric_product",
    "check_quantum_invariance",
    "check_quantum_products",
    "heisenberg_propagator",
    "linear_invariant_op",
    "multiply",
    "pull_back",
    "pulled_back_series",
    "quad_invariant_op",
    "symmetric_product",
]


@dataclass(frozen=True)
class LinearOperator:
    """bq q + bp p + b0."""

    bq: complex = 0j
    bp: complex = 0j
    b0: complex = 0j

    def adjoint(self) -> "LinearOperator":
        return LinearOperator(np.conj(self.bq), np.conj(self.bp), np.conj(self.b0))

    def coefficients(self) -> np.ndarray:
        return np.array([self.bq, self.bp, self.b0], dtype=complex)

    def evaluate(self, q, p):
        """Value with (q, p) replaced by c-numbers."""
        return self.bq * q + self.bp * p + self.b0


@dataclass(frozen=True)
class QuadraticOperator:
    """aqq q^2 + app p^2 + asym {q,p}/2 + bq q + bp p + b0."""

    aqq: complex = 0j
    app: complex = 0j
    asym: complex = 0j
    bq: complex = 0j
    bp: complex = 0j
    b0: complex = 0j

    @classmethod
    def from_coefficients(cls, c) -> "QuadraticOperator":
        return cls(*(complex(x) for x in c))

    @classmethod
    def from_linear(cls, op: LinearOperator) -> "QuadraticOperator":
        return cls(bq=op.bq, bp=op.bp, b0=op.b0)

    def coefficients(self) -> np.ndarray:
        return np.array([self.aqq, self.app, self.asym, self.bq, self.bp, self.b0], dtype=complex)

    def adjoint(self) -> "QuadraticOperator":
        # every basis element is self-adjoint
        return QuadraticOperator.from_coefficients(np.conj(self.coefficients()))

    def is_self_adjoint(self) -> bool:
        return not np.any(self.coefficients().imag)

    def __add__(self, other):
        return QuadraticOperator.from_coefficients(self.coefficients() + other.coefficients())

    def __sub__(self, other):
        return QuadraticOperator.from_coefficients(self.coefficients() - other.coefficients())

    def scale(self, factor: complex) -> "QuadraticOperator":
        return QuadraticOperator.from_coefficients(factor * self.coefficients())

    def quadratic_part(self) -> np.ndarray:
        return self.coefficients()[:3]

    def linear_part(self) -> np.ndarray:
        return self.coefficients()[3:5]

    def evaluate(self, q, p):
        """Value with (q, p) replaced by c-numbers (symmetrized product -> q p)."""
        return (self.aqq * q * q + self.app * p * p + self.asym * q * p
                + self.bq * q + self.bp * p + self.b0)


def multiply(l1: LinearOperator, l2: LinearOperator, hbar: float = 1.0) -> QuadraticOperator:
    """Exact operator product l1 l2, using q p = {q,p}/2 + i hbar/2."""
    a1, b1, c1 = l1.bq, l1.bp, l1.b0
    a2, b2, c2 = l2.bq, l2.bp, l2.b0
    return QuadraticOperator(
        aqq=a1 * a2,
        app=b1 * b2,
        asym=a1 * b2 + b1 * a2,
        bq=a1 * c2 + c1 * a2,
        bp=b1 * c2 + c1 * b2,
        b0=c1 * c2 + (a1 * b2 - b1 * a2) * (0.5j * hbar),
    )


def symmetric_product(l1: LinearOperator, l2: LinearOperator, hbar: float = 1.0) -> QuadraticOperator:
    """(l1 l2 + l2 l1) / 2; the hbar terms cancel."""
    return (multiply(l1, l2, hbar) + multiply(l2, l1, hbar)).scale(0.5)


def antisymmetric_product(l1: LinearOperator, l2: LinearOperator, hbar: float = 1.0) -> QuadraticOperator:
    """[l1, l2] / 2, a pure multiple of the identity."""
    return (multiply(l1, l2, hbar) - multiply(l2, l1, hbar)).scale(0.5)


# --------------------------------------------------------------------------- Heisenberg picture


@dataclass(frozen=True, eq=False)
class HeisenbergPropagator:
    """S(t) with (q(t), p(t), 1) = S(t) (q0, p0, 1) for every sample time."""

    times: np.ndarray
    matrices: np.ndarray  # (n, 3, 3) real

    def __len__(self):
        return self.times.size

    def at(self, t: float) -> np.ndarray:
        return self.matrices[_sample_index(self.times, t)]

    def determinants(self) -> np.ndarray:
        m = self.matrices
        return m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]


def heisenberg_propagator(scenario: Scenario, cfg: IntegratorConfig | None = None) -> HeisenbergPropagator:
    """Integrate dS/dt = M(t) S, M = [[0, 1, 0], [-omega_sq, 0, F], [0, 0, 0]], S(t0) = 1."""
    omega_sq, force = scenario.omega_sq, scenario.force

    def rhs(t, y):
        s = y.reshape(3, 3)
        out = np.zeros((3, 3), dtype=complex)
        out[0] = s[1]
        out[1] = -omega_sq.evaluate(t) * s[0] + force.evaluate(t) * s[2]
        return out.reshape(-1)

    traj = integrate(OdeSystem(9, rhs), np.eye(3).reshape(-1), scenario.t0, scenario.times, cfg)
    return HeisenbergPropagator(traj.times, traj.states.real.reshape(-1, 3, 3).copy())


def pull_back(op, S):
    """Rewrite an operator given in (q(t), p(t)) in terms of (q0, p0).

    Substitutes q(t) = S11 q0 + S12 p0 + S13 and p(t) = S21 q0 + S22 p0 + S23.
    The symmetrized product of two linear forms stays symmetrized, so the
    quadratic block transforms by congruence and no hbar term appears.
    """
    S = np.asarray(S)
    if S.shape != (3, 3) or S[2, 2] != 1 or S[2, 0] != 0 or S[2, 1] != 0:
        raise ValueError("propagator matrix must be 3x3 with bottom row (0, 0, 1)")
    T = S[:2, :2]
    shift = S[:2, 2]
    if isinstance(op, LinearOperator):
        b = np.array([op.bq, op.bp])
        lin = b @ T
        return LinearOperator(lin[0], lin[1], op.b0 + b @ shift)
    if isinstance(op, QuadraticOperator):
        Q = np.array([[op.aqq, op.asym / 2], [op.asym / 2, op.app]])
        b = np.array([op.bq, op.bp])
        Qn = T.T @ Q @ T
        lin = 2 * (shift @ Q @ T) + b @ T
        const = shift @ Q @ shift + b @ shift + op.b0
        return QuadraticOperator(Qn[0, 0], Qn[1, 1], Qn[0, 1] + Qn[1, 0], lin[0], lin[1], const)
    raise TypeError(f"cannot pull back {type(op).__name__}")


# --------------------------------------------------------------------------- invariant operators


def _sample_index(times, t) -> int:
    i = int(np.searchsorted(times, t))
    for j in (i - 1, i):
        if 0 <= j < times.size and abs(times[j] - t) <= 1e-12 * max(1.0, abs(t)):
            return j
    raise ValueError(f"t={t!r} is not a sample time")


def linear_invariant_op(beta: BetaSolution, t: float) -> LinearOperator:
    """beta p - beta' q - F(beta, t) at sample time t."""
    i = _sample_index(beta.times, t)
    return LinearOperator(-beta.beta_dot[i], beta.beta[i], -beta.quad[i])


def quad_invariant_op(gamma: GammaSolution, sigma: SigmaSolution, scenario: Scenario, t: float) -> QuadraticOperator:
    i = _sample_index(gamma.times, t)
    j = _sample_index(sigma.times, t)
    w2, f = scenario.w2(t), scenario.f(t)
    g, gd, gdd = gamma.gamma[i], gamma.gamma_dot[i], gamma.gamma_ddot[i]
    return QuadraticOperator(
        aqq=0.5 * (0.5 * gdd + w2 * g),
        app=0.5 * g,
        asym=-0.5 * gd,
        bq=-(sigma.sigma_dot[j] + g * f),
        bp=sigma.sigma[j],
        b0=-sigma.quad[j],
    )


def pulled_back_series(op_at, propagator: HeisenbergPropagator) -> np.ndarray:
    """Coefficients of ``pull_back(op_at(t), S(t))`` for every sample, shape (n, k)."""
    return np.array([pull_back(op_at(t), s).coefficients() for t, s in zip(propagator.times, propagator.matrices)])


def _max_coefficient_drift(series: np.ndarray) -> np.ndarray:
    """Per-sample max |c(t) - c(t0)| over the coefficient axis."""
    return np.max(np.abs(series - series[0]), axis=1)


def check_quantum_invariance(propagator: HeisenbergPropagator, scenario: Scenario, *,
                             beta: BetaSolution | None = None, gamma: GammaSolution | None = None,
                             sigma: SigmaSolution | None = None, traj=None, hbar: float = 1.0,
                             threshold: float = 1e-8, include_products: bool = True) -> DriftReport:
    """Pull invariant operators back to t0 and report how far their coefficients move.

    With ``beta`` the linear invariants, their symmetric/antisymmetric
    products and the quadratic invariant built from beta are checked; with
    ``gamma`` and ``sigma`` only the quadratic invariant.  ``traj`` adds the
    comparison of the pulled-back linear invariant against the classical one.
    """
    if not np.array_equal(propagator.times, scenario.times):
        raise ValueError("propagator and scenario grids differ")
    report = DriftReport("quantum_invariance")

    if beta is not None:
        conj = beta.conjugate()
        lin = pulled_back_series(lambda t: linear_invariant_op(beta, t), propagator)
        lin_dag = pulled_back_series(lambda t: linear_invariant_op(conj, t), propagator)
        report.add(residual_entry("pulled-back I_L coefficients", _max_coefficient_drift(lin), threshold))
        report.add(residual_entry("pulled-back I_L^dagger coefficients", _max_coefficient_drift(lin_dag), threshold))
        if traj is not None:
            q0, p0 = traj.q[0], traj.p[0]
            quantum = lin[:, 0] * q0 + lin[:, 1] * p0 + lin[:, 2]
            report.add(residual_entry("pulled-back I_L(q0, p0) - classical I_L",
                                      quantum - linear_invariant(beta, traj), threshold))
        if gamma is None and sigma is None:
            gamma, sigma = gamma_sigma_from_beta(beta)

    if gamma is not None and sigma is not None:
        quad = pulled_back_series(lambda t: quad_invariant_op(gamma, sigma, scenario, t), propagator)
        report.add(residual_entry("pulled-back I_Q coefficients", _max_coefficient_drift(quad), threshold))

    if beta is not None and include_products:
        report.entries.extend(check_quantum_products(beta, scenario, hbar=hbar, threshold=threshold).entries)
    return report


def check_quantum_products(beta: BetaSolution, scenario: Scenario, hbar: float = 1.0,
                           threshold: float = 1e-8) -> DriftReport:
    """Symmetric product of I_L^dagger, I_L against I_Q from beta; antisymmetric product against -W i hbar / 2."""
    conj = beta.conjugate()
    gamma, sigma = gamma_sigma_from_beta(beta)
    times = scenario.times
    W0 = wronskian(conj, beta)[0]
    sym_gap = np.empty(times.size)
    anti_scalar = np.empty(times.size, dtype=complex)
    anti_rest = np.empty(times.size)
    for k, t in enumerate(times):
        l_dag, l = linear_invariant_op(conj, t), linear_invariant_op(beta, t)
        sym = symmetric_product(l_dag, l, hbar)
        iq = quad_invariant_op(gamma, sigma, scenario, t)
        sym_gap[k] = np.max(np.abs(sym.coefficients() - iq.coefficients()))
        anti = antisymmetric_product(l_dag, l, hbar)
        anti_scalar[k] = anti.b0
        anti_rest[k] = np.max(np.abs(anti.coefficients()[:5]))
    report = DriftReport("quantum_products")
    report.add(residual_entry("symmetric product - I_Q", sym_gap, threshold))
    report.add(residual_entry("antisymmetric scalar + W i hbar / 2", anti_scalar + 0.5j * hbar * W0, threshold))
    # exact coefficient identity: nothing but the identity component survives
    report.add(residual_entry("antisymmetric non-scalar part", anti_rest, 0.0))
    return report

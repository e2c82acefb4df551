"""Explicit Runge-Kutta integrators for complex first-order systems.

Two methods are provided: classic fixed-step RK4 and the Dormand-Prince
5(4) embedded pair with a simple step-size controller.  Both clip internal
steps so that every requested sample time is landed on exactly; no
interpolation error ever enters the sampled states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "IntegrationError",
    "IntegratorConfig",
    "NonFiniteStateError",
    "OdeSystem",
    "StepLimitError",
    "Trajectory",
    "integrate",
    "step",
]


class IntegrationError(RuntimeError):
    """Integration could not be completed; ``t`` is the time of failure."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (t={t!r})")
        self.t = t


class StepLimitError(IntegrationError):
    pass


class NonFiniteStateError(IntegrationError):
    pass


@dataclass(frozen=True)
class OdeSystem:
    dimension: int
    rhs: Callable[[float, np.ndarray], np.ndarray]

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        dy = np.asarray(self.rhs(t, y), dtype=complex)
        if dy.shape != (self.dimension,):
            raise ValueError(f"rhs returned shape {dy.shape}, expected ({self.dimension},)")
        return dy


_METHOD_ALIASES = {"rk4": "rk4", "rk4-fixed": "rk4", "rk45": "rk45", "rk45-adaptive": "rk45"}


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk45"
    h0: float = 1e-2
    rtol: float = 1e-10
    atol: float = 1e-10
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.method not in _METHOD_ALIASES:
            raise ValueError(f"unknown integration method {self.method!r}")
        object.__setattr__(self, "method", _METHOD_ALIASES[self.method])
        for name in ("h0", "rtol", "atol"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")
        if int(self.max_steps) < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps!r}")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray   # (n,) real, ascending
    states: np.ndarray  # (n, dim) complex

    def component(self, i: int) -> np.ndarray:
        return self.states[:, i]


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_A = [np.array(row) for row in _A]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def _check_finite(y, t, what):
    if not np.all(np.isfinite(y)):
        raise NonFiniteStateError(f"non-finite {what}", t)


def _rk4_step(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + h / 2, y + (h / 2) * k1)
    k3 = f(t + h / 2, y + (h / 2) * k2)
    k4 = f(t + h, y + h * k3)
    y_next = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    _check_finite(y_next, t + h, "stage")
    return y_next


def _dp45_step(f, t, y, h):
    k = np.empty((7, y.size), dtype=complex)
    k[0] = f(t, y)
    for i in range(1, 7):
        yi = y + h * (_A[i] @ k[:i])
        _check_finite(yi, t + _C[i] * h, "stage")
        k[i] = f(t + _C[i] * h, yi)
    y_next = y + h * (_B5 @ k)
    err = h * (_E @ k)
    _check_finite(y_next, t + h, "stage")
    return y_next, err


def step(system: OdeSystem, t: float, y, h: float, method: str = "rk4"):
    """Advance one step of size ``h``.

    Returns ``(y_next, error_estimate)``; the estimate is ``None`` for RK4
    and the embedded 4th/5th-order difference for the adaptive pair.
    """
    if not h > 0:
        raise ValueError(f"step size must be > 0, got {h!r}")
    y = np.asarray(y, dtype=complex)
    method = _METHOD_ALIASES[method]
    if method == "rk4":
        return _rk4_step(system, t, y, h), None
    return _dp45_step(system, t, y, h)


def _error_norm(err, y, y_next, cfg):
    scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_next))
    return float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))


def integrate(system: OdeSystem, y0, t0: float, sample_times, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate ``system`` from ``(t0, y0)`` and record the state at each sample time."""
    cfg = cfg or IntegratorConfig()
    times = np.asarray(sample_times, dtype=float)
    y = np.array(y0, dtype=complex).reshape(-1)
    if y.size != system.dimension:
        raise ValueError(f"y0 has {y.size} components, system has {system.dimension}")
    if times.ndim != 1 or times.size == 0:
        raise ValueError("sample_times must be a non-empty 1-d sequence")
    if times[0] < t0 or np.any(np.diff(times) <= 0):
        raise ValueError("sample_times must be strictly ascending and start at or after t0")
    _check_finite(y, t0, "initial state")

    states = np.empty((times.size, y.size), dtype=complex)
    t = float(t0)
    h = cfg.h0
    steps = 0
    for i, target in enumerate(times):
        target = float(target)
        while t < target:
            # clip so the step lands exactly on the sample time
            remaining = target - t
            last = h >= remaining * (1 - 1e-12)
            h_try = remaining if last else h
            if steps >= cfg.max_steps:
                raise StepLimitError(f"exceeded max_steps={cfg.max_steps}", t)
            steps += 1
            if cfg.method == "rk4":
                y = _rk4_step(system, t, y, h_try)
                t = target if last else t + h_try
                continue
            y_next, err = _dp45_step(system, t, y, h_try)
            norm = _error_norm(err, y, y_next, cfg)
            factor = 5.0 if norm == 0.0 else min(5.0, max(0.2, 0.9 * norm ** -0.2))
            if norm <= 1.0:
                y = y_next
                t = target if last else t + h_try
                # a clipped final step says nothing about the admissible size
                if not last or factor < 1.0:
                    h = h_try * factor
            else:
                h = h_try * factor
                if h < 1e-14 * max(1.0, abs(t)):
                    raise IntegrationError("step size underflow", t)
        states[i] = y
    return Trajectory(times=times, states=states)

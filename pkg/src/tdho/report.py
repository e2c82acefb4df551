"""Drift and residual bookkeeping shared by the classical and quantum checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["DriftEntry", "DriftReport", "absolute_drift", "relative_drift", "drift_entry", "residual_entry"]

METRICS = ("relative", "absolute", "residual")


def _finite(x):
    # masked samples are dropped; np.asarray alone would discard the mask
    if np.ma.isMaskedArray(x):
        return x.compressed()
    return np.asarray(x)


def relative_drift(series) -> float:
    """max|I(t) - I(t0)| / max(1, max|I(t)|)."""
    s = _finite(series)
    dev = np.max(np.abs(s - s[0]))
    return float(dev / max(1.0, float(np.max(np.abs(s)))))


def absolute_drift(series) -> float:
    s = _finite(series)
    return float(np.max(np.abs(s - s[0])))


@dataclass(frozen=True)
class DriftEntry:
    name: str
    initial: complex
    max_deviation: float
    drift: float
    threshold: float
    metric: str = "relative"

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if not self.drift >= 0:
            raise ValueError(f"{self.name}: drift must be a non-negative number, got {self.drift!r}")

    @property
    def passed(self) -> bool:
        return self.drift <= self.threshold

    def to_dict(self) -> dict:
        init = complex(self.initial)
        return {
            "name": self.name,
            "metric": self.metric,
            "initial": [init.real, init.imag],
            "max_deviation": self.max_deviation,
            "drift": self.drift,
            "threshold": self.threshold,
            "passed": self.passed,
        }


def drift_entry(name: str, series, threshold: float, metric: str = "relative") -> DriftEntry:
    """Constancy of ``series`` across the grid (masked samples are skipped)."""
    s = _finite(series)
    dev = absolute_drift(s)
    drift = relative_drift(s) if metric == "relative" else dev
    return DriftEntry(name, complex(s[0]), dev, drift, threshold, metric)


def residual_entry(name: str, residual, threshold: float) -> DriftEntry:
    """Grid-wide size of a quantity that should vanish identically."""
    r = _finite(residual)
    peak = float(np.max(np.abs(r))) if r.size else 0.0
    return DriftEntry(name, complex(r[0]) if r.size else 0j, peak, peak, threshold, "residual")


@dataclass
class DriftReport:
    check: str
    entries: list[DriftEntry] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def add(self, entry: DriftEntry) -> DriftEntry:
        self.entries.append(entry)
        return entry

    def __getitem__(self, name: str) -> DriftEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def failures(self) -> list[DriftEntry]:
        return [e for e in self.entries if not e.passed]

    def to_dict(self) -> dict:
        return {"check": self.check, "passed": self.passed, "entries": [e.to_dict() for e in self.entries]}

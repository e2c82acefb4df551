"""Built-in scenario library."""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = ["BuiltinScenario", "CHECKS", "DEFAULT_THRESHOLDS", "SCENARIOS", "STANDARD_CHECKS", "get_scenario",
           "list_scenarios"]

# run order
CHECKS = (
    "linear_invariant",
    "quadratic_invariant",
    "takayama",
    "ermakov",
    "wronskian",
    "first_integral",
    "product_relation",
    "coefficient_closure",
    "quantum_invariance",
    "quantum_products",
)

DEFAULT_THRESHOLDS = {
    "linear_invariant": 1e-7,
    "quadratic_invariant": 1e-7,
    "takayama": 1e-7,
    "ermakov": 1e-7,
    "wronskian": 1e-9,
    "first_integral": 1e-7,
    "product_relation": 1e-7,
    "coefficient_closure": 1e-6,
    "quantum_invariance": 1e-8,
    "quantum_products": 1e-8,
}

STANDARD_CHECKS = tuple(c for c in CHECKS if c not in ("ermakov", "quantum_products"))


@dataclass(frozen=True)
class BuiltinScenario:
    name: str
    description: str
    omega_sq: str
    force: str
    checks: tuple[str, ...]
    seeds: dict = field(default_factory=dict)
    t0: float = 0.0
    t1: float = 20.0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "omega_sq": self.omega_sq,
            "force": self.force,
            "t0": self.t0,
            "t1": self.t1,
            "seeds": dict(self.seeds),
            "checks": list(self.checks),
        }


# beta(t0) = 0 with beta'(t0) = 1 throughout: the quadrature lower-limit convention
_DEFAULT_SEEDS = {"q0": 1.0, "p0": 0.0, "beta0": [0.0, 0.0], "beta_dot0": [1.0, 0.0],
                "gamma": [1.0, 0.0, 0.0], "sigma": [0.0, 0.0]}

SCENARIOS = {
    s.name: s
    for s in (
        BuiltinScenario("constant", "undriven oscillator, unit frequency", "1", "0",
                        STANDARD_CHECKS + ("quantum_products",), dict(_DEFAULT_SEEDS)),
        BuiltinScenario("driven-constant", "unit frequency, constant unit force", "1", "1",
                        STANDARD_CHECKS, dict(_DEFAULT_SEEDS)),
        BuiltinScenario("chirp", "linearly rising omega^2, no force", "1 + 0.1*t", "0",
                        STANDARD_CHECKS, dict(_DEFAULT_SEEDS)),
        BuiltinScenario("driven-chirp", "linearly rising omega^2, sinusoidal force", "1 + 0.1*t", "sin(t)",
                        STANDARD_CHECKS + ("quantum_products",), dict(_DEFAULT_SEEDS)),
        BuiltinScenario("pulse", "unit frequency, Gaussian force pulse centred at t=5", "1", "exp(-(t-5)^2)",
                        STANDARD_CHECKS, dict(_DEFAULT_SEEDS)),
        BuiltinScenario("ermakov-stationary", "unit frequency with the stationary Ermakov amplitude, W^2 = 1",
                        "1", "0", STANDARD_CHECKS + ("ermakov",),
                        dict(_DEFAULT_SEEDS, ermakov={"w2": 1.0, "rho0": 1.0, "rho_dot0": 0.0})),
    )
}


def list_scenarios() -> list[BuiltinScenario]:
    return list(SCENARIOS.values())


def get_scenario(name: str) -> BuiltinScenario:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; known: {', '.join(SCENARIOS)}") from None

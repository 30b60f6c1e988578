"""Named experimental setups: parameters, initial data, beta schedules, grids."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Dict, Tuple

import numpy as np

from .grid import SpatialGrid, VelocityGrid
from .macroscale import MacroState
from .model import ModelParams, TransmissionRate, beta_for_r0

REFERENCE_DIFFUSIVITIES = (0.05, 0.025, 0.001, 0.0)
EPS_SWEEP = tuple(2.0 * 10.0 ** -k for k in (0, 1, 2, 3, 4, 6))
CONSTANT_BETAS = (0.03, 0.075, 1.12, 0.1799, 0.7497, 2.2491)
# Nominal R0 labels published alongside CONSTANT_BETAS; not what r0() returns for them.
CONSTANT_BETA_LABELS = (0.2, 0.5, 0.8, 1.2, 5.0, 15.0)

INITIAL_CONDITIONS = ("i", "ii", "uniform")


def reference_params(diffusion: bool = True, **overrides) -> ModelParams:
    d = REFERENCE_DIFFUSIVITIES if diffusion else (0.0, 0.0, 0.0, 0.0)
    values = dict(mu=1.0 / 83.0, xi=0.25, gamma=0.125, alpha=0.06, diffusivities=d)
    values.update(overrides)
    return ModelParams(**values)


def initial_condition_i(grid: SpatialGrid) -> MacroState:
    """Two susceptible clusters at x = +-0.5 around a central infected bump."""
    x = grid.nodes
    S = 2.6 * (np.exp(-((x - 0.5) / 0.12) ** 2) + np.exp(-((x + 0.5) / 0.12) ** 2)) / (0.9 * np.pi)
    I = 0.04 * np.exp(-2.0 * x ** 2)
    zero = np.zeros_like(x)
    return MacroState(S, zero.copy(), I, zero.copy(), zero.copy(), 0.0)


def initial_condition_ii(grid: SpatialGrid) -> MacroState:
    x = grid.nodes
    S = 0.96 * np.exp(-10.0 * (x / 1.4) ** 2)
    I = 0.04 * np.exp(-2.0 * x ** 2)
    zero = np.zeros_like(x)
    return MacroState(S, zero.copy(), I, zero.copy(), zero.copy(), 0.0)


def uniform_initial_condition(grid: SpatialGrid, values=(0.96, 0.0, 0.04, 0.0, 0.0)) -> MacroState:
    ones = np.ones(grid.n_nodes)
    return MacroState(*(float(v) * ones for v in values), 0.0)


def stepwise_beta(variant: int) -> TransmissionRate:
    """Lockdown-style schedules: variant 1 on [0, 50], variant 2 on [0, 100]."""
    if variant == 1:
        T = 50.0
        return TransmissionRate((0.0, T / 2), (0.075, 1.4995))
    if variant == 2:
        T = 100.0
        return TransmissionRate((0.0, T / 3, 2 * T / 3), (0.075, 1.4995, 0.05))
    raise ValueError(f"unknown step-wise schedule {variant!r}")


def constant_beta_suite():
    return [TransmissionRate((0.0,), (b,), labels=(f"R0={r:g}",))
            for b, r in zip(CONSTANT_BETAS, CONSTANT_BETA_LABELS)]


@dataclass(frozen=True)
class Scenario:
    name: str
    params: ModelParams
    rate: TransmissionRate
    half_length: float = 2.0
    n_cells: int = 200
    velocity_half_width: float = 1.0
    n_velocities: int = 164
    velocity_rule: str = "gauss"
    dt: float = 1e-3
    initial_condition: str = "i"
    uniform_values: Tuple[float, ...] = (0.96, 0.0, 0.04, 0.0, 0.0)
    bc: str = "periodic"
    eps_list: Tuple[float, ...] = EPS_SWEEP
    probe_x: float = 0.0
    t_final: float = 10.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.initial_condition not in INITIAL_CONDITIONS:
            raise ValueError(f"unknown initial condition {self.initial_condition!r}")
        if self.bc not in ("periodic", "neumann", "inflow"):
            raise ValueError(f"unknown boundary condition {self.bc!r}")
        self.spatial_grid()
        self.velocity_grid()
        object.__setattr__(self, "eps_list", tuple(float(e) for e in self.eps_list))
        object.__setattr__(self, "uniform_values", tuple(float(v) for v in self.uniform_values))

    def spatial_grid(self) -> SpatialGrid:
        return SpatialGrid(self.half_length, self.n_cells)

    def velocity_grid(self) -> VelocityGrid:
        return VelocityGrid(self.velocity_half_width, self.n_velocities, self.velocity_rule)

    def initial_state(self) -> MacroState:
        grid = self.spatial_grid()
        if self.initial_condition == "i":
            return initial_condition_i(grid)
        if self.initial_condition == "ii":
            return initial_condition_ii(grid)
        return uniform_initial_condition(grid, self.uniform_values)

    def with_changes(self, **changes) -> "Scenario":
        return replace(self, **changes)

    # -- serialisation ------------------------------------------------------

    def to_dict(self) -> dict:
        p = self.params
        return {
            "name": self.name,
            "params": {
                "mu": p.mu, "xi": p.xi, "gamma": p.gamma, "alpha": p.alpha,
                "diffusivities": list(p.diffusivities),
                "recruitment": p.recruitment,
                "recruitment_value": p.recruitment_value,
                "g3_from_infected": p.g3_from_infected,
            },
            "rate": {"breakpoints": list(self.rate.breakpoints), "values": list(self.rate.values)},
            "grid": {"half_length": self.half_length, "n_cells": self.n_cells},
            "velocity": {"half_width": self.velocity_half_width, "n_nodes": self.n_velocities,
                         "rule": self.velocity_rule},
            "dt": self.dt,
            "initial_condition": self.initial_condition,
            "uniform_values": list(self.uniform_values),
            "bc": self.bc,
            "eps_list": list(self.eps_list),
            "probe_x": self.probe_x,
            "t_final": self.t_final,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        known = {"name", "params", "rate", "grid", "velocity", "dt", "initial_condition",
                 "uniform_values", "bc", "eps_list", "probe_x", "t_final"}
        unknown = set(data) - known
        if unknown:
            raise KeyError(f"unknown scenario key(s): {', '.join(sorted(unknown))}")
        params = ModelParams(**_with_tuple(data["params"], "diffusivities"))
        rate = TransmissionRate(tuple(data["rate"]["breakpoints"]), tuple(data["rate"]["values"]))
        kwargs = dict(name=data["name"], params=params, rate=rate)
        if "grid" in data:
            kwargs.update(half_length=float(data["grid"]["half_length"]),
                          n_cells=int(data["grid"]["n_cells"]))
        if "velocity" in data:
            kwargs.update(velocity_half_width=float(data["velocity"]["half_width"]),
                          n_velocities=int(data["velocity"]["n_nodes"]),
                          velocity_rule=str(data["velocity"].get("rule", "gauss")))
        for key in ("dt", "probe_x", "t_final"):
            if key in data:
                kwargs[key] = float(data[key])
        for key in ("initial_condition", "bc"):
            if key in data:
                kwargs[key] = str(data[key])
        for key in ("uniform_values", "eps_list"):
            if key in data:
                kwargs[key] = tuple(data[key])
        return cls(**kwargs)


def _with_tuple(d: dict, key: str) -> dict:
    d = dict(d)
    if key in d:
        d[key] = tuple(d[key])
    return d


def _registry() -> Dict[str, Scenario]:
    p = reference_params()
    beta_r0_2 = TransmissionRate.constant(beta_for_r0(p, 2.0))
    scenarios = [
        Scenario("ic-i", p, beta_r0_2, initial_condition="i", t_final=10.0),
        Scenario("ic-ii", p, beta_r0_2, initial_condition="ii", t_final=100.0),
        Scenario("ic-ii-nodiff", reference_params(diffusion=False), beta_r0_2,
                 initial_condition="ii", t_final=10.0),
        Scenario("ic-i-step1", p, stepwise_beta(1), initial_condition="i",
                 probe_x=0.5, t_final=50.0),
        Scenario("ic-i-step2", p, stepwise_beta(2), initial_condition="i",
                 probe_x=0.5, t_final=100.0),
        Scenario("homogeneous", reference_params(diffusion=False), TransmissionRate.constant(0.3),
                 initial_condition="uniform", t_final=10.0),
    ]
    return {s.name: s for s in scenarios}


SCENARIOS: Dict[str, Scenario] = _registry()


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; known: {', '.join(SCENARIOS)}") from None

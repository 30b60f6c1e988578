"""Diagnostics and experiment drivers built on the two solvers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np

from .grid import SpatialGrid
from .kinetic import run_kinetic
from .macroscale import MacroState, run_macro
from .model import COMPARTMENTS, TransmissionRate

DEFAULT_PROBE_TIMES = (0.5, 1.0, 5.0, 10.0)


def _check_pair(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def l1_distance(a, b, grid: SpatialGrid) -> float:
    """Trapezoid-weighted sum of |a - b| (endpoints count half each)."""
    a, b = _check_pair(a, b)
    if a.shape[-1] != grid.n_nodes:
        raise ValueError(f"expected {grid.n_nodes} nodes, got {a.shape[-1]}")
    return float(np.abs(a - b) @ grid.trapezoid_weights)


def linf_distance(a, b) -> float:
    a, b = _check_pair(a, b)
    return float(np.max(np.abs(a - b)))


def total_population(state: MacroState, grid: SpatialGrid) -> float:
    """Integral of S + E + I + R + D, the quantity conserved when A = mu N."""
    return float(state.fields().sum(axis=0) @ grid.trapezoid_weights)


def conservation_drift(states: Iterable[MacroState], grid: SpatialGrid) -> float:
    """Largest relative deviation of the total population from the first state."""
    totals = np.array([total_population(s, grid) for s in states])
    return float(np.max(np.abs(totals - totals[0])) / abs(totals[0]))


@dataclass
class ComparisonReport:
    eps: float
    t: float
    l1: Dict[str, float]
    linf: Dict[str, float]
    relative_l1: Dict[str, float]
    n_cells: int = 0
    dx: float = 0.0


def compare(state: MacroState, reference: MacroState, grid: SpatialGrid,
            eps: float = float("nan")) -> ComparisonReport:
    l1, linf, rel = {}, {}, {}
    for name in COMPARTMENTS:
        a, b = getattr(state, name), getattr(reference, name)
        l1[name] = l1_distance(a, b, grid)
        linf[name] = linf_distance(a, b)
        norm = l1_distance(b, np.zeros_like(b), grid)
        rel[name] = l1[name] / norm if norm > 0 else (0.0 if l1[name] == 0 else np.inf)
    return ComparisonReport(eps, reference.t, l1, linf, rel, grid.n_cells, grid.dx)


def eps_sweep(scenario, eps_list: Optional[Sequence[float]] = None,
              probe_times: Sequence[float] = DEFAULT_PROBE_TIMES,
              runner: Optional[Callable] = None, bc=None) -> List[ComparisonReport]:
    """Kinetic runs for each eps against one macro run, compared at ``probe_times``.

    ``runner(scenario, eps, t_final, output_times)`` defaults to the kinetic
    solver; passing a macro runner gives the self-comparison sanity check.
    """
    eps_list = scenario.eps_list if eps_list is None else eps_list
    probe_times = sorted(probe_times)
    t_final = probe_times[-1]
    grid = scenario.spatial_grid()
    reference = run_macro(scenario, t_final, probe_times, bc=bc)
    if runner is None:
        def runner(sc, eps, t, times):
            return run_kinetic(sc, eps, t, times, bc=bc)
    reports = []
    for eps in eps_list:
        states = runner(scenario, eps, t_final, probe_times)
        reports.extend(compare(s, r, grid, eps) for s, r in zip(states, reference))
    return reports


@dataclass
class ProbeSeries:
    """Compartment values at one location over time."""

    label: str
    beta: float
    x: float
    times: np.ndarray
    values: np.ndarray  # (n_times, 5) in S, E, I, R, D order
    rate: Optional[TransmissionRate] = field(default=None, repr=False)

    def series(self, name: str) -> np.ndarray:
        return self.values[:, COMPARTMENTS.index(name)]


def sample_times(t_final: float, interval: float) -> np.ndarray:
    n = int(round(t_final / interval))
    return interval * np.arange(n + 1)


def probe_series(scenario, t_final: float, probe_x: float, interval: float = 0.1,
                 solver: str = "macro", eps: float = 1e-6, label: str = "",
                 bc=None) -> ProbeSeries:
    grid = scenario.spatial_grid()
    j = grid.index_of(probe_x)
    times = sample_times(t_final, interval)
    if solver == "kinetic":
        states = run_kinetic(scenario, eps, t_final, times, bc=bc)
    elif solver == "macro":
        states = run_macro(scenario, t_final, times, bc=bc)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    values = np.array([s.fields()[:, j] for s in states])
    rate = scenario.rate
    beta = rate.values[0] if rate.is_constant else float("nan")
    return ProbeSeries(label, beta, float(grid.nodes[j]), np.array([s.t for s in states]),
                       values, rate)


def beta_sweep(scenario, rates: Sequence[TransmissionRate], t_final: float, probe_x: float,
               interval: float = 0.1, solver: str = "macro", eps: float = 1e-6,
               bc=None) -> List[ProbeSeries]:
    """One probe time series per transmission rate."""
    out = []
    for rate in rates:
        label = rate.labels[0] if rate.labels else f"beta={rate.values[0]:g}"
        out.append(probe_series(scenario.with_changes(rate=rate), t_final, probe_x, interval,
                                solver, eps, label, bc))
    return out


def spread_metric(I, grid: SpatialGrid) -> float:
    """Spatial variance of the normalised profile ``I``."""
    I = np.asarray(I, dtype=float)
    if np.any(I < 0):
        raise ValueError("profile must be nonnegative")
    w = grid.trapezoid_weights * I
    mass = w.sum()
    if mass <= 0:
        raise ValueError("profile has zero mass")
    x = grid.nodes
    mean = (w @ x) / mass
    return float(w @ (x - mean) ** 2 / mass)

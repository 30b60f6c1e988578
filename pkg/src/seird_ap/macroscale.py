"""Explicit finite-difference solver for the limiting SEIRD reaction-diffusion system."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .grid import SpatialGrid
from .model import ModelParams, beta_at, source_moments
from .stepping import BlowUpError, StepSizeError, output_steps


@dataclass
class MacroState:
    S: np.ndarray
    E: np.ndarray
    I: np.ndarray
    R: np.ndarray
    D: np.ndarray
    t: float = 0.0

    def fields(self) -> np.ndarray:
        """(5, N_x + 1) stack in S, E, I, R, D order."""
        return np.stack([self.S, self.E, self.I, self.R, self.D])

    @classmethod
    def from_fields(cls, fields: np.ndarray, t: float) -> "MacroState":
        return cls(*(np.array(f, dtype=float) for f in fields), t)


def laplacian(u: np.ndarray, grid: SpatialGrid, bc: str = "periodic") -> np.ndarray:
    """Three-point second difference on nodes; works along the last axis.

    ``periodic`` identifies the two end nodes; ``neumann`` mirrors the first
    interior node across each end (zero flux).
    """
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != grid.n_nodes:
        raise ValueError(f"expected {grid.n_nodes} nodes, got {u.shape[-1]}")
    lap = np.empty_like(u)
    lap[..., 1:-1] = u[..., 2:] - 2.0 * u[..., 1:-1] + u[..., :-2]
    if bc == "periodic":
        lap[..., 0] = u[..., 1] - 2.0 * u[..., 0] + u[..., -2]
        lap[..., -1] = lap[..., 0]
    elif bc == "neumann":
        lap[..., 0] = 2.0 * (u[..., 1] - u[..., 0])
        lap[..., -1] = 2.0 * (u[..., -2] - u[..., -1])
    else:
        raise ValueError(f"macro solver supports periodic or neumann, got {bc!r}")
    return lap / grid.dx ** 2


def cfl_max_dt(grid: SpatialGrid, params: ModelParams) -> float:
    d_max = max(params.diffusivities)
    return math.inf if d_max == 0 else grid.dx ** 2 / (2.0 * d_max)


def macro_rd_step(state: MacroState, beta: float, grid: SpatialGrid, params: ModelParams,
                  dt: float, bc: str = "periodic", t_next: Optional[float] = None) -> MacroState:
    """Forward Euler for diffusion and reactions together."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    limit = cfl_max_dt(grid, params)
    if dt > limit:
        raise StepSizeError(f"dt={dt} exceeds the explicit diffusion limit {limit:.6g}")
    u = np.stack([state.S, state.E, state.I, state.R])
    d = np.asarray(params.diffusivities)[:, None]
    rates = source_moments(u, beta, params)
    u_new = u + dt * (d * laplacian(u, grid, bc) + rates[:4])
    if bc == "periodic":
        u_new[:, -1] = u_new[:, 0]
    D_new = state.D + dt * rates[4]
    t = state.t + dt if t_next is None else t_next
    return MacroState(*u_new, D_new, t)


def run_macro(scenario, t_final: float, output_times: Optional[Iterable[float]] = None,
              bc: Optional[str] = None,
              monitor: Optional[Callable[[int, MacroState], None]] = None):
    """Integrate a scenario with the macroscopic scheme; returns snapshots."""
    if t_final < 0:
        raise ValueError("t_final must be nonnegative")
    grid, params, rate, dt = scenario.spatial_grid(), scenario.params, scenario.rate, scenario.dt
    bc = bc if bc is not None else scenario.bc
    if bc == "inflow":
        raise ValueError("inflow boundaries apply to the kinetic solver only")
    state = scenario.initial_state()
    n_steps = int(round(t_final / dt))
    wanted = output_steps([0.0, t_final] if output_times is None else output_times, dt, n_steps)
    snapshots = []

    def snap(s):
        snapshots.append(MacroState.from_fields(s.fields(), s.t))

    if monitor is not None:
        monitor(0, state)
    k = 0
    if wanted and wanted[0] == 0:
        snap(state)
        k = 1
    for step in range(1, n_steps + 1):
        state = macro_rd_step(state, beta_at(rate, state.t), grid, params, dt, bc,
                              t_next=step * dt)
        if not np.isfinite(state.fields()).all():
            raise BlowUpError(step, state.t)
        if monitor is not None:
            monitor(step, state)
        if k < len(wanted) and wanted[k] == step:
            snap(state)
            k += 1
    return snapshots

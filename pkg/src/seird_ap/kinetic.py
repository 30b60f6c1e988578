"""Asymptotic-preserving micro-macro solver for the kinetic SEIRD model.

Each distribution is split as ``f_i = M u_i + eps g_i`` with ``<g_i> = 0``.
One time step updates the micro parts on faces (relaxation implicit, all
other terms explicit), then the macro densities on nodes using the *new*
micro fluxes, then the dead compartment.

Array layout: ``u`` is (4, N_x + 1), ``g`` is (4, N_x + 2, N_v) with ghost
faces at positions 0 and N_x + 1, ``D`` is (N_x + 1,).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np
from numba import njit

from .grid import SpatialGrid, VelocityGrid, moment
from .macroscale import MacroState
from .model import (ModelParams, TransmissionRate, local_rates, beta_at, equilibrium_density,
                    source_moments)
from .stepping import BlowUpError, output_steps

PERIODIC = "periodic"
INFLOW = "inflow"
NEUMANN = "neumann"

LOCAL_EQUILIBRIUM = "equilibrium"
ZERO = "zero"
FROM_DISTRIBUTION = "distribution"


@dataclass(frozen=True)
class BoundaryCondition:
    """``periodic``, ``neumann`` (specular reflection) or ``inflow``.

    For inflow, ``left``/``right`` are incoming distributions of shape (N_v,)
    or (4, N_v); only ``v > 0`` entries of ``left`` and ``v < 0`` entries of
    ``right`` are used.
    """

    kind: str = PERIODIC
    left: Optional[np.ndarray] = None
    right: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in (PERIODIC, INFLOW, NEUMANN):
            raise ValueError(f"unknown boundary condition {self.kind!r}")
        if self.kind == INFLOW:
            if self.left is None or self.right is None:
                raise ValueError("inflow needs left and right distributions")
            for side in (self.left, self.right):
                if np.any(np.asarray(side) < 0):
                    raise ValueError("inflow distributions must be nonnegative")

    @classmethod
    def far_field(cls, u: np.ndarray, vgrid: VelocityGrid) -> "BoundaryCondition":
        """Inflow of the equilibria of the end-node densities of ``u`` (4, N_x + 1)."""
        M = equilibrium_density(vgrid)
        u = np.asarray(u, dtype=float)
        return cls(INFLOW, u[:, 0, None] * M, u[:, -1, None] * M)

    @classmethod
    def coerce(cls, bc) -> "BoundaryCondition":
        if bc is None:
            return cls()
        if isinstance(bc, cls):
            return bc
        return cls(str(bc))

    def incoming(self, vgrid: VelocityGrid):
        left = np.broadcast_to(np.asarray(self.left, dtype=float), (4, vgrid.n_nodes))
        right = np.broadcast_to(np.asarray(self.right, dtype=float), (4, vgrid.n_nodes))
        return left, right


@dataclass
class KineticState:
    u: np.ndarray
    D: np.ndarray
    g: np.ndarray
    eps: float
    t: float = 0.0

    def copy(self) -> "KineticState":
        return KineticState(self.u.copy(), self.D.copy(), self.g.copy(), self.eps, self.t)


@dataclass(frozen=True)
class Operators:
    """Per-run constants shared by the step functions."""

    grid: SpatialGrid
    vgrid: VelocityGrid
    params: ModelParams
    sigmas: tuple
    M: np.ndarray
    vM: np.ndarray
    v_plus: np.ndarray
    v_minus: np.ndarray
    active: tuple

    @property
    def v_abs(self) -> np.ndarray:
        return self.v_plus - self.v_minus

    @property
    def active_index(self) -> np.ndarray:
        return np.flatnonzero(self.active)

    @property
    def sigma_array(self) -> np.ndarray:
        return np.asarray(self.sigmas, dtype=float)

    @property
    def one_minus_P1(self) -> np.ndarray:
        return 1.0 - self.M * self.vgrid.weights.sum()

    @classmethod
    def build(cls, grid: SpatialGrid, vgrid: VelocityGrid, params: ModelParams) -> "Operators":
        v = vgrid.nodes
        M = equilibrium_density(vgrid)
        sigmas = params.sigmas(vgrid.half_width)
        return cls(grid, vgrid, params, sigmas, M, v * M, np.maximum(v, 0.0),
                   np.minimum(v, 0.0), tuple(math.isfinite(s) for s in sigmas))


def _ops(grid, vgrid, params, ops):
    return ops if ops is not None else Operators.build(grid, vgrid, params)


def project(h: np.ndarray, M: np.ndarray, vgrid: VelocityGrid) -> np.ndarray:
    """Orthogonal projection onto the equilibrium: ``<h> M``."""
    return moment(h, vgrid)[..., None] * M


def _remove_mean(g, M, vgrid):
    g -= project(g, M, vgrid)
    return g


def fill_ghosts(g: np.ndarray, u: np.ndarray, bc: BoundaryCondition, eps: float,
                ops: Operators) -> np.ndarray:
    """Set ghost faces of ``g`` (in place) consistently with ``bc`` and node values ``u``."""
    if bc.kind == PERIODIC:
        g[:, 0] = g[:, -2]
        g[:, -1] = g[:, 1]
    elif bc.kind == NEUMANN:
        g[:, 0] = g[:, 1, ::-1]
        g[:, -1] = g[:, -2, ::-1]
    else:
        left, right = bc.incoming(ops.vgrid)
        v = ops.vgrid.nodes
        M = ops.M
        into_left = (2.0 / eps) * (left - u[:, 0, None] * M) - g[:, 1]
        into_right = (2.0 / eps) * (right - u[:, -1, None] * M) - g[:, -2]
        g[:, 0] = np.where(v > 0, into_left, g[:, 1])
        g[:, -1] = np.where(v < 0, into_right, g[:, -2])
    for i, active in enumerate(ops.active):
        if not active:
            g[i] = 0.0
    return g


def init_micro(u: np.ndarray, grid: SpatialGrid, vgrid: VelocityGrid, params: ModelParams,
               eps: float, mode: str = LOCAL_EQUILIBRIUM, f0: Optional[np.ndarray] = None,
               bc: BoundaryCondition | str | None = None,
               ops: Optional[Operators] = None) -> np.ndarray:
    """Initial micro perturbations on faces.

    ``equilibrium`` uses the leading-order closure ``g = -(1/sigma) v M du/dx``;
    ``zero`` sets ``g = 0``; ``distribution`` takes ``f0`` of shape
    (4, N_x + 2, N_v) sampled at faces and sets ``g = (f0 - M <f0>) / eps``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    ops = _ops(grid, vgrid, params, ops)
    bc = BoundaryCondition.coerce(bc)
    u = np.asarray(u, dtype=float)
    g = np.zeros((4, grid.n_cells + 2, vgrid.n_nodes))
    if mode == LOCAL_EQUILIBRIUM:
        grad = np.diff(u, axis=1) / grid.dx
        for i, sigma in enumerate(ops.sigmas):
            if math.isfinite(sigma):
                g[i, 1:-1] = -grad[i][:, None] * ops.vM / sigma
    elif mode == FROM_DISTRIBUTION:
        if f0 is None:
            raise ValueError("distribution mode needs f0")
        f0 = np.asarray(f0, dtype=float)
        if f0.shape != g.shape:
            raise ValueError(f"f0 must have shape {g.shape}, got {f0.shape}")
        g = (f0 - project(f0, ops.M, vgrid)) / eps
    elif mode != ZERO:
        raise ValueError(f"unknown micro initialisation mode {mode!r}")
    _remove_mean(g, ops.M, vgrid)
    return fill_ghosts(g, u, bc, eps, ops)


@njit(cache=True)
def _micro_kernel(g, u, active, sigma, v, w, M, dx, dt, eps, G_face, out):
    """Interior faces of the micro update for the active species, written to ``out``.

    Fused per face: upwind transport, its projection, the stiff implicit
    relaxation, then removal of the residual mean.
    """
    nv = v.shape[0]
    n_faces = g.shape[1]
    total_w = 0.0
    for l in range(nv):
        total_w += w[l]
    inv_eps2 = 1.0 / (eps * eps)
    transport = np.empty(nv)
    for a in active:
        denom = 1.0 + dt * sigma[a] * inv_eps2
        for k in range(1, n_faces - 1):
            grad = (u[a, k] - u[a, k - 1]) / dx
            t_mean = 0.0
            for l in range(nv):
                if v[l] > 0.0:
                    t = v[l] * (g[a, k, l] - g[a, k - 1, l]) / dx
                else:
                    t = v[l] * (g[a, k + 1, l] - g[a, k, l]) / dx
                transport[l] = t
                t_mean += w[l] * t
            G = G_face[a, k - 1]
            g_mean = 0.0
            for l in range(nv):
                t = transport[l] - M[l] * t_mean
                G_perp = G * (1.0 - M[l] * total_w)
                value = (g[a, k, l] - dt * (grad * v[l] * M[l] * inv_eps2
                                            + (t - G_perp) / eps)) / denom
                out[a, k, l] = value
                g_mean += w[l] * value
            for l in range(nv):
                out[a, k, l] -= M[l] * g_mean


def micro_step(state: KineticState, beta: float, grid: SpatialGrid, vgrid: VelocityGrid,
               params: ModelParams, dt: float, bc: BoundaryCondition | str | None = None,
               ops: Optional[Operators] = None) -> np.ndarray:
    """Advance the micro parts one step; returns a new (4, N_x + 2, N_v) array.

    Ghost faces are refreshed for periodic and reflective boundaries.  Inflow
    ghosts depend on the new boundary densities and are set by :func:`ap_step`.
    """
    eps = state.eps
    if eps <= 0:
        raise ValueError("eps must be positive")
    if dt <= 0:
        raise ValueError("dt must be positive")
    ops = _ops(grid, vgrid, params, ops)
    bc = BoundaryCondition.coerce(bc)
    dx = grid.dx
    u, g = state.u, state.g
    M = ops.M

    g_new = np.zeros_like(g)
    act = ops.active_index
    if act.size:
        # The equilibrium is velocity-independent, so G(M u) is one value per face
        # and (I - P) G = G_face * (1 - M <1>).
        u_face = 0.5 * (u[:, 1:] + u[:, :-1])
        G_face = np.stack(local_rates(*(vgrid.measure * M[0] * u_face), beta, params)[:4])
        G_face /= vgrid.measure
        _micro_kernel(g, u, act, ops.sigma_array, vgrid.nodes, vgrid.weights, M,
                      dx, dt, eps, G_face, g_new)
    if bc.kind != INFLOW:
        fill_ghosts(g_new, u, bc, eps, ops)
    return g_new


def macro_step(state: KineticState, g_new: np.ndarray, beta: float, grid: SpatialGrid,
               vgrid: VelocityGrid, params: ModelParams, dt: float,
               bc: BoundaryCondition | str | None = None,
               ops: Optional[Operators] = None) -> np.ndarray:
    """New node densities from the updated micro fluxes and explicit reactions."""
    ops = _ops(grid, vgrid, params, ops)
    bc = BoundaryCondition.coerce(bc)
    if g_new.shape != state.g.shape:
        raise ValueError(f"g_new has shape {g_new.shape}, expected {state.g.shape}")
    dx = grid.dx
    u = state.u
    source = source_moments(u, beta, params)[:4]
    flux = moment(g_new, vgrid, lambda v: v)  # (4, N_x + 2)
    u_new = u - dt * np.diff(flux, axis=1) / dx + dt * source

    if bc.kind == PERIODIC:
        u_new[:, -1] = u_new[:, 0]
    elif bc.kind == INFLOW:
        eps = state.eps
        left, right = bc.incoming(vgrid)
        w = vgrid.weights
        vp, vm = ops.v_plus, ops.v_minus
        a_left = 1.0 + 2.0 * dt / (eps * dx) * np.dot(w, vp * ops.M)
        a_right = 1.0 - 2.0 * dt / (eps * dx) * np.dot(w, vm * ops.M)
        left_flux = (2.0 * vp * g_new[:, 1] - 2.0 * vp * left / eps) @ w
        right_flux = (2.0 * vm * right / eps - 2.0 * vm * g_new[:, -2]) @ w
        u_new[:, 0] = (u[:, 0] - dt / dx * left_flux + dt * source[:, 0]) / a_left
        u_new[:, -1] = (u[:, -1] - dt / dx * right_flux + dt * source[:, -1]) / a_right
    return u_new


def dead_step(state: KineticState, dt: float, params: ModelParams) -> np.ndarray:
    if dt <= 0:
        raise ValueError("dt must be positive")
    return state.D + dt * params.alpha * state.u[2]


def ap_step(state: KineticState, grid: SpatialGrid, vgrid: VelocityGrid, params: ModelParams,
            rate: TransmissionRate, dt: float, bc: BoundaryCondition | str | None = None,
            ops: Optional[Operators] = None, t_next: Optional[float] = None) -> KineticState:
    """One full step: micro, then macro with the new micro fluxes, then D."""
    ops = _ops(grid, vgrid, params, ops)
    bc = BoundaryCondition.coerce(bc)
    beta = beta_at(rate, state.t)
    g_new = micro_step(state, beta, grid, vgrid, params, dt, bc, ops)
    u_new = macro_step(state, g_new, beta, grid, vgrid, params, dt, bc, ops)
    if bc.kind == INFLOW:
        fill_ghosts(g_new, u_new, bc, state.eps, ops)
    D_new = dead_step(state, dt, params)
    t = state.t + dt if t_next is None else t_next
    return KineticState(u_new, D_new, g_new, state.eps, t)


def micro_mean_residual(state: KineticState, vgrid: VelocityGrid) -> float:
    """max over species and interior faces of |<g_i>| / max(1, ||g_i||_inf)."""
    g = state.g[:, 1:-1]
    means = np.abs(moment(g, vgrid)).max(axis=1)
    scale = np.maximum(1.0, np.abs(g).max(axis=(1, 2)))
    return float((means / scale).max())


def stable_dt_bound(grid: SpatialGrid, vgrid: VelocityGrid, params: ModelParams) -> float:
    """Heuristic step bound: diffusive CFL with a transport margin."""
    d_max = max(params.diffusivities)
    return grid.dx ** 2 / (2.0 * d_max + grid.dx * vgrid.half_width)


def run_kinetic(scenario, eps: float, t_final: float, output_times: Optional[Iterable[float]] = None,
                bc: BoundaryCondition | str | None = None, init_mode: str = LOCAL_EQUILIBRIUM,
                monitor: Optional[Callable[[int, KineticState], None]] = None):
    """Integrate a scenario with the AP scheme.

    Returns a list of :class:`~seird_ap.macroscale.MacroState` snapshots at the
    steps nearest to ``output_times`` (default: initial and final time).
    ``monitor(step, state)`` is called after every step, and once with step 0.
    """
    if t_final < 0:
        raise ValueError("t_final must be nonnegative")
    grid, vgrid, params = scenario.spatial_grid(), scenario.velocity_grid(), scenario.params
    rate, dt = scenario.rate, scenario.dt
    bc = bc if bc is not None else scenario.bc
    initial = scenario.initial_state()
    u0 = np.stack([initial.S, initial.E, initial.I, initial.R])
    if bc == INFLOW:
        # No incoming data given: hold the initial boundary equilibria.
        bc = BoundaryCondition.far_field(u0, vgrid)
    bc = BoundaryCondition.coerce(bc)
    ops = Operators.build(grid, vgrid, params)
    if dt > stable_dt_bound(grid, vgrid, params):
        warnings.warn(f"dt={dt} exceeds the stability estimate "
                      f"{stable_dt_bound(grid, vgrid, params):.3g}", RuntimeWarning)

    g0 = init_micro(u0, grid, vgrid, params, eps, init_mode, bc=bc, ops=ops)
    state = KineticState(u0, initial.D.copy(), g0, eps, 0.0)

    n_steps = int(round(t_final / dt))
    wanted = output_steps([0.0, t_final] if output_times is None else output_times, dt, n_steps)
    snapshots = []

    def snap(s: KineticState):
        snapshots.append(MacroState(*s.u.copy(), s.D.copy(), s.t))

    if monitor is not None:
        monitor(0, state)
    k = 0
    if wanted and wanted[0] == 0:
        snap(state)
        k = 1
    for step in range(1, n_steps + 1):
        state = ap_step(state, grid, vgrid, params, rate, dt, bc, ops, t_next=step * dt)
        if not (np.isfinite(state.u).all() and np.isfinite(state.g).all()):
            raise BlowUpError(step, state.t)
        if monitor is not None:
            monitor(step, state)
        if k < len(wanted) and wanted[k] == step:
            snap(state)
            k += 1
    return snapshots

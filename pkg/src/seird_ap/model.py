"""Epidemiological terms of the SEIRD system and its kinetic counterpart.

Species order everywhere is S, E, I, R (indices 0..3); the dead compartment D
is carried separately because it does not move.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence, Tuple

import numpy as np

from .grid import VelocityGrid

SPECIES = ("S", "E", "I", "R")
COMPARTMENTS = ("S", "E", "I", "R", "D")

#: Live-population floor below which the infection term is switched off.
N_FLOOR = 1e-12

PROPORTIONAL = "proportional"
CONSTANT = "constant"


@dataclass(frozen=True)
class ModelParams:
    """Rates (1/time) and diffusivities (length^2/time).

    ``recruitment`` is ``"proportional"`` (A = mu * N pointwise) or
    ``"constant"`` (A = ``recruitment_value``).
    """

    mu: float
    xi: float
    gamma: float
    alpha: float
    diffusivities: Tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    recruitment: str = PROPORTIONAL
    recruitment_value: float = 0.0
    # Kinetic I interaction with xi acting on I instead of E (literal variant, off by default).
    g3_from_infected: bool = False

    def __post_init__(self):
        object.__setattr__(self, "diffusivities", tuple(float(d) for d in self.diffusivities))
        if len(self.diffusivities) != 4:
            raise ValueError("expected four diffusivities (S, E, I, R)")
        for name in ("mu", "xi", "gamma", "alpha"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if any(d < 0 for d in self.diffusivities):
            raise ValueError("diffusivities must be nonnegative")
        if self.recruitment not in (PROPORTIONAL, CONSTANT):
            raise ValueError(f"unknown recruitment mode {self.recruitment!r}")

    def sigmas(self, half_width: float) -> Tuple[float, ...]:
        """Relaxation rates calibrated so the diffusive limit reproduces ``diffusivities``."""
        return tuple(sigma_from_diffusivity(d, half_width) for d in self.diffusivities)

    def with_diffusivities(self, diffusivities: Sequence[float]) -> "ModelParams":
        return ModelParams(self.mu, self.xi, self.gamma, self.alpha, tuple(diffusivities),
                           self.recruitment, self.recruitment_value, self.g3_from_infected)


class ReactionRates(NamedTuple):
    S: np.ndarray
    E: np.ndarray
    I: np.ndarray
    R: np.ndarray
    D: np.ndarray


@dataclass(frozen=True)
class TransmissionRate:
    """Piecewise-constant beta(t); piece m covers ``[breakpoints[m], breakpoints[m+1])``."""

    breakpoints: Tuple[float, ...]
    values: Tuple[float, ...]
    labels: Tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.breakpoints or len(self.breakpoints) != len(self.values):
            raise ValueError("breakpoints and values must be non-empty and of equal length")
        if any(b1 >= b2 for b1, b2 in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(v < 0 for v in self.values):
            raise ValueError("transmission rates must be nonnegative")

    @classmethod
    def constant(cls, beta: float, start: float = 0.0) -> "TransmissionRate":
        return cls((start,), (beta,))

    @property
    def is_constant(self) -> bool:
        return len(self.values) == 1

    def __call__(self, t: float) -> float:
        return beta_at(self, t)


def sigma_from_diffusivity(d: float, half_width: float) -> float:
    """sigma = V^2 / (3 d) for the uniform equilibrium on [-V, V]; ``inf`` when d == 0."""
    if d < 0:
        raise ValueError(f"diffusivity must be nonnegative, got {d}")
    if d == 0:
        return math.inf
    return half_width ** 2 / (3.0 * d)


def equilibrium_density(vgrid: VelocityGrid) -> np.ndarray:
    return np.full(vgrid.n_nodes, 1.0 / vgrid.measure)


def local_rates(S, E, I, R, beta, p: ModelParams):
    # Unchecked kernel shared by the solvers; arrays broadcast freely.
    N = S + E + I + R
    A = p.mu * N if p.recruitment == PROPORTIONAL else p.recruitment_value
    incidence = beta * S * I / np.maximum(N, N_FLOOR)
    incidence = np.where(N > N_FLOOR, incidence, 0.0)
    fS = A - p.mu * S - incidence
    fE = incidence - (p.mu + p.xi) * E
    if p.g3_from_infected:
        fI = p.xi * I - (p.gamma + p.mu + p.alpha) * I
    else:
        fI = p.xi * E - (p.gamma + p.mu + p.alpha) * I
    fR = p.gamma * I - p.mu * R
    fD = p.alpha * I
    return fS, fE, fI, fR, fD


def reaction_terms(S, E, I, R, beta: float, p: ModelParams) -> ReactionRates:
    """Right-hand sides of the five compartment equations, pointwise.

    Always the model's own equations: ``g3_from_infected`` only affects the
    kinetic interaction operator.
    """
    arrays = [np.asarray(c, dtype=float) for c in (S, E, I, R)]
    if any(np.any(a < 0) for a in arrays):
        raise ValueError("compartment densities must be nonnegative")
    if p.g3_from_infected:
        p = ModelParams(p.mu, p.xi, p.gamma, p.alpha, p.diffusivities,
                        p.recruitment, p.recruitment_value, False)
    return ReactionRates(*local_rates(*arrays, beta, p))


def kinetic_interaction(f: np.ndarray, beta: float, p: ModelParams,
                        vgrid: VelocityGrid) -> np.ndarray:
    """Gain-loss operators G_1..G_4 on distributions ``f`` of shape (4, ..., N_v).

    The compartment right-hand side is evaluated on the local densities
    ``|V| f_i`` and scaled by ``1/|V|``; for ``f_i = M u_i`` this gives
    ``G_i = M F_i(u)``, hence ``<G_i> = F_i``.
    """
    f = np.asarray(f, dtype=float)
    if f.shape[0] != 4 or f.shape[-1] != vgrid.n_nodes:
        raise ValueError(f"expected shape (4, ..., {vgrid.n_nodes}), got {f.shape}")
    if np.any(f < 0):
        raise ValueError("distributions must be nonnegative")
    size = vgrid.measure
    rates = local_rates(*(size * f), beta, p)
    return np.stack(rates[:4]) / size


def source_moments(u: np.ndarray, beta: float, p: ModelParams) -> np.ndarray:
    """``<G_i(M u)>`` for u of shape (4, ...), plus the D source as a fifth row."""
    return np.stack(local_rates(u[0], u[1], u[2], u[3], beta, p))


def r0(p: ModelParams, beta: float) -> float:
    denom = (p.xi + p.mu) * (p.gamma + p.alpha + p.mu)
    if denom <= 0:
        raise ValueError("(xi + mu)(gamma + alpha + mu) must be positive")
    return p.xi * beta / denom


def beta_for_r0(p: ModelParams, target_r0: float) -> float:
    if target_r0 < 0:
        raise ValueError("target R0 must be nonnegative")
    if p.xi == 0:
        raise ValueError("R0 does not depend on beta when xi == 0")
    return target_r0 * (p.xi + p.mu) * (p.gamma + p.alpha + p.mu) / p.xi


def beta_at(rate: TransmissionRate, t: float) -> float:
    if t < rate.breakpoints[0]:
        raise ValueError(f"t={t} precedes the first breakpoint {rate.breakpoints[0]}")
    m = int(np.searchsorted(rate.breakpoints, t, side="right")) - 1
    return rate.values[m]

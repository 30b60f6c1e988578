"""Staggered 1D space mesh, symmetric velocity quadrature and velocity moments.

Macro densities live on the N_x + 1 nodes ``x_j = -L + j dx``; micro
perturbations live on the N_x + 2 faces ``x_{j-1/2}``, index ``k`` holding
``-L + (k - 1/2) dx``.  Faces ``0`` and ``N_x + 1`` are ghosts.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class SpatialGrid:
    half_length: float
    n_cells: int

    def __post_init__(self):
        if not self.half_length > 0:
            raise ValueError(f"half_length must be positive, got {self.half_length}")
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise ValueError(f"n_cells must be an integer >= 2, got {self.n_cells}")
        object.__setattr__(self, "n_cells", int(self.n_cells))

    @property
    def dx(self) -> float:
        return 2.0 * self.half_length / self.n_cells

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    @cached_property
    def nodes(self) -> np.ndarray:
        return -self.half_length + self.dx * np.arange(self.n_cells + 1)

    @cached_property
    def faces(self) -> np.ndarray:
        """Face coordinates including one ghost face on each side."""
        return -self.half_length + self.dx * (np.arange(self.n_cells + 2) - 0.5)

    @cached_property
    def trapezoid_weights(self) -> np.ndarray:
        # Endpoint halves: under periodic identification the two ends form one node.
        w = np.full(self.n_cells + 1, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w

    def index_of(self, x: float) -> int:
        """Nearest node index to ``x``."""
        if abs(x) > self.half_length + 1e-12:
            raise ValueError(f"x={x} outside [-{self.half_length}, {self.half_length}]")
        return int(round((x + self.half_length) / self.dx))


MIDPOINT = "midpoint"
GAUSS = "gauss"


@dataclass(frozen=True)
class VelocityGrid:
    """Symmetric quadrature on ``[-V, V]``.

    ``midpoint``: uniform cells, ``v_l = -V + (l + 1/2) h``, ``w_l = h``.
    ``gauss``: Gauss-Legendre, exact for polynomials up to degree 2 N_v - 1, in
    particular for the second moment that sets the diffusive limit.

    Nodes are built from the positive half and mirrored, so ``v[-1 - l] == -v[l]``
    holds bit for bit, and weights are mirrored likewise.
    """

    half_width: float
    n_nodes: int
    rule: str = MIDPOINT

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 2 or self.n_nodes % 2:
            raise ValueError(f"n_nodes must be an even integer >= 2, got {self.n_nodes}")
        object.__setattr__(self, "n_nodes", int(self.n_nodes))
        if self.rule not in (MIDPOINT, GAUSS):
            raise ValueError(f"unknown quadrature rule {self.rule!r}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n_nodes

    @cached_property
    def _half_rule(self):
        half = self.n_nodes // 2
        if self.rule == MIDPOINT:
            return (np.arange(half) + 0.5) * self.spacing, np.full(half, self.spacing)
        x, w = np.polynomial.legendre.leggauss(self.n_nodes)
        return self.half_width * x[half:], self.half_width * w[half:]

    @cached_property
    def nodes(self) -> np.ndarray:
        positive = self._half_rule[0]
        return np.concatenate([-positive[::-1], positive])

    @cached_property
    def weights(self) -> np.ndarray:
        w = self._half_rule[1]
        return np.concatenate([w[::-1], w])

    @property
    def measure(self) -> float:
        """|V|, the length of the velocity interval."""
        return 2.0 * self.half_width


def build_spatial_grid(half_length: float, n_cells: int) -> SpatialGrid:
    return SpatialGrid(float(half_length), n_cells)


def build_velocity_grid(half_width: float, n_nodes: int, rule: str = MIDPOINT) -> VelocityGrid:
    return VelocityGrid(float(half_width), n_nodes, rule)


def moment(h: np.ndarray, vgrid: VelocityGrid,
           weight_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> np.ndarray:
    """Quadrature of ``weight_fn(v) * h(v)`` over the velocity interval.

    ``h`` may carry leading axes (species, faces); the last axis must be the
    velocity axis.  Returns a scalar for a single column.
    """
    h = np.asarray(h, dtype=float)
    if h.shape[-1:] != (vgrid.n_nodes,):
        raise ValueError(
            f"velocity axis has length {h.shape[-1] if h.ndim else 0}, expected {vgrid.n_nodes}")
    w = vgrid.weights if weight_fn is None else vgrid.weights * weight_fn(vgrid.nodes)
    return h @ w

"""Pieces shared by both time-stepping drivers."""

from __future__ import annotations

from typing import Iterable, List


class BlowUpError(RuntimeError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, step: int, t: float):
        super().__init__(f"non-finite values at step {step} (t={t:g})")
        self.step = step
        self.t = t


class StepSizeError(ValueError):
    """Time step above the explicit diffusion stability limit."""


def output_steps(output_times: Iterable[float], dt: float, n_steps: int) -> List[int]:
    """Step indices nearest to the requested times, clipped to the run."""
    steps = sorted({int(round(t / dt)) for t in output_times})
    return [min(max(s, 0), n_steps) for s in steps]

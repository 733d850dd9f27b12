"""Frozen parameter sets for the four figure presets.

Figures 1-3 are time sweeps; figure 4 sweeps the squeezing parameter at a
fixed time.  Each figure overlays four curves labelled (a)-(d) that differ
only in the Lamb-Dicke parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .laguerre import NonlinearModel
from .states import COHERENT1, COHERENT2, SQUEEZED, StateSpec

__all__ = ["FigurePreset", "FIGURES", "get_preset"]

OMEGA = math.pi / 4
COHERENT_ETAS = (0.0, 0.33, 0.6, 0.8)
SQUEEZED_ETAS = (0.0, 0.0625, 0.8, 0.95)


@dataclass(frozen=True)
class FigurePreset:
    """One figure: family, fixed parameters, sweep variable and grid."""

    number: int
    family: str
    etas: tuple[float, ...]
    sweep: str
    start: float
    stop: float
    steps: int
    omega: float = OMEGA
    beta2: float = 0.0
    r: float = 0.0
    t: float = 0.0

    def grid(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.steps)

    def labels(self) -> list[str]:
        return [f"({chr(ord('a') + i)}) eta={eta:g}" for i, eta in enumerate(self.etas)]

    def spec(self, eta: float, **changes) -> StateSpec:
        """State of the curve with Lamb-Dicke parameter ``eta``."""
        base = dict(
            family=self.family,
            beta=math.sqrt(self.beta2),
            r=self.r,
            omega=self.omega,
            model=NonlinearModel.lamb_dicke(eta),
        )
        base.update(changes)
        return StateSpec(**base)

    def curves(self):
        """``(label, spec)`` for each curve; for r sweeps ``spec.r`` is a placeholder."""
        return list(zip(self.labels(), (self.spec(eta) for eta in self.etas)))


FIGURES = {
    1: FigurePreset(1, COHERENT1, COHERENT_ETAS, "t", 0.0, 20.0, 2048, beta2=1.0),
    2: FigurePreset(2, COHERENT2, COHERENT_ETAS, "t", 0.0, 20.0, 2048, beta2=1.0),
    3: FigurePreset(3, SQUEEZED, SQUEEZED_ETAS, "t", 0.0, 20.0, 2048, r=1.0),
    4: FigurePreset(4, SQUEEZED, SQUEEZED_ETAS, "r", 0.0, 12.0, 512, t=0.5),
}


def get_preset(number: int) -> FigurePreset:
    try:
        return FIGURES[int(number)]
    except KeyError:
        raise ValueError(f"no figure preset {number}; choose from {sorted(FIGURES)}") from None

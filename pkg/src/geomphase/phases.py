"""Closed-form total, dynamical and geometric phases.

For every family the normalized overlap is a weighted sum of energy phases,

    <psi(0)|psi(t)> / |psi|^2 = sum_n w_n exp(-i E_n t),

so the total phase is ``chi = arg sum_n w_n exp(-i E_n t)``, the dynamical
phase is ``delta = -omega t * mean_level`` and the geometric phase is
``gamma = chi - delta``.  ``mean_level`` is the bracket of the connection,
written with the ratio ``|beta|^2 / f(n+1)^2`` (coherent1),
``|beta|^2 f(n+1)^2`` (coherent2) or ``tanh^2 r f^2(2n+1) f^2(2n+2) (2n+1)``
(squeezed).

``chi`` is made continuous in time by unwrapping along a grid from 0 to t.
The unwrapping is done on ``chi + omega t mean_level``, which has the same
branch structure but varies slowly even when the state occupies high levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import PhysicsError, UndefinedPhase, UnstableUnwrap
from .laguerre import f_table
from .states import COHERENT1, StateSpec, TruncationConfig, series_terms

__all__ = [
    "TAU",
    "PhaseDecomposition",
    "WeightTable",
    "reduce_mod_2pi",
    "weights",
    "overlap",
    "total_phase",
    "mean_level",
    "geometric_phase",
    "phase_trajectory",
    "cyclic_phase",
    "squeezed_limit_phase",
    "standard_coherent_phase",
    "standard_squeezed_phase",
]

TAU = 2.0 * math.pi
OVERLAP_FLOOR = 1e-10
UNWRAP_SAMPLES = 2048
UNWRAP_TOL = 1e-8


def reduce_mod_2pi(x):
    """Reduce into ``[0, 2 pi)`` (never returns 2 pi itself)."""
    r = np.mod(x, TAU)
    r = np.where(r >= TAU, 0.0, r)
    return float(r) if np.ndim(r) == 0 else r


@dataclass(frozen=True)
class PhaseDecomposition:
    """Total phase ``chi``, dynamical phase ``delta`` and ``gamma = chi - delta``.

    ``chi`` is continuous in time (unwrapped); use :attr:`chi_mod` for the
    value reduced into ``[0, 2 pi)``.
    """

    chi: float
    delta: float
    gamma_unwrapped: float
    gamma_mod: float

    @classmethod
    def from_parts(cls, chi: float, delta: float) -> PhaseDecomposition:
        gamma = chi - delta
        return cls(float(chi), float(delta), float(gamma), reduce_mod_2pi(gamma))

    @property
    def chi_mod(self) -> float:
        return reduce_mod_2pi(self.chi)

    @property
    def delta_mod(self) -> float:
        return reduce_mod_2pi(self.delta)

    def as_dict(self) -> dict:
        return {
            "chi": self.chi,
            "delta": self.delta,
            "gamma_unwrapped": self.gamma_unwrapped,
            "gamma_mod": self.gamma_mod,
        }


@dataclass(frozen=True, eq=False)
class WeightTable:
    """Normalized series weights and the Fock levels they sit on.

    ``log_w`` keeps the unnormalized weights exactly as they appear in the
    closed forms (without constant prefactors); ``w`` sums to one.
    """

    levels: np.ndarray
    log_w: np.ndarray
    omega: float

    @property
    def w(self) -> np.ndarray:
        lw = self.log_w - np.logaddexp.reduce(self.log_w)
        return np.exp(lw)

    @property
    def energies(self) -> np.ndarray:
        return self.omega * (self.levels + 0.5)

    @property
    def level_step(self) -> int:
        return int(self.levels[1] - self.levels[0]) if len(self.levels) > 1 else 1

    @property
    def truncation_index(self) -> int:
        return int(self.levels[-1])

    def scaled(self) -> np.ndarray:
        """Unnormalized weights rescaled by their maximum (overflow-safe)."""
        return np.exp(self.log_w - self.log_w.max())


def weights(
    spec: StateSpec, trunc: TruncationConfig | None = None, *, tanh_r: float | None = None
) -> WeightTable:
    """Series weights ``|u_n|^2`` of ``spec`` with the matching levels."""
    terms = series_terms(spec, trunc, tanh_r=tanh_r)
    return WeightTable(terms.levels, terms.log_weights(), spec.omega)


def overlap(table: WeightTable, t) -> np.ndarray:
    """``sum_n w_n exp(-i E_n t)`` for scalar or array ``t``.

    Evaluated by Horner's rule in ``z = exp(-i omega step t)`` so memory stays
    linear in the number of times.
    """
    t = np.asarray(t, dtype=float)
    z = np.exp(-1j * table.omega * table.level_step * t)
    base = np.exp(-1j * table.omega * (table.levels[0] + 0.5) * t)
    return base * P.polyval(z, table.w.astype(complex))


def total_phase(
    spec: StateSpec,
    trunc: TruncationConfig | None = None,
    t: float = 0.0,
    *,
    overlap_floor: float = OVERLAP_FLOOR,
) -> float:
    """Principal total phase ``arg <psi(0)|psi(t)>`` in ``(-pi, pi]``."""
    F = complex(overlap(weights(spec, trunc), t))
    if abs(F) < overlap_floor:
        raise UndefinedPhase(f"|<psi(0)|psi(t)>| = {abs(F):.3e} at t={t}")
    return math.atan2(F.imag, F.real)


def _bracket(spec: StateSpec, table: WeightTable, tanh_r: float | None = None) -> float:
    w = table.scaled()
    n_top = table.truncation_index
    if spec.is_squeezed:
        t = math.tanh(spec.r) if tanh_r is None else tanh_r
        f = f_table(spec.model, n_top + 2)
        lv = table.levels
        ratio = f[lv + 1] ** 2 * f[lv + 2] ** 2 * (lv + 1)
        pre = t * t
    else:
        f = f_table(spec.model, n_top + 1)
        f_next = f[table.levels + 1]
        ratio = 1.0 / f_next**2 if spec.family == COHERENT1 else f_next**2
        pre = abs(spec.beta) ** 2
    return 0.5 + pre * float(np.dot(w, ratio) / w.sum())


def mean_level(spec: StateSpec, trunc: TruncationConfig | None = None) -> float:
    """``<H> / omega``, computed from the connection's bracket term."""
    return _bracket(spec, weights(spec, trunc))


def _unwrap_slow_phase(table, mean, t_sorted, samples):
    """Unwrapped ``chi + omega mean t`` and the smallest |overlap| seen on the way."""
    horizon = t_sorted[-1]
    grid = np.union1d(np.linspace(0.0, horizon, samples + 1), t_sorted)
    F = overlap(table, grid)
    slow = np.unwrap(np.angle(F * np.exp(1j * table.omega * mean * grid)))
    idx = np.searchsorted(grid, t_sorted)
    return slow[idx], np.minimum.accumulate(np.abs(F))[idx]


def _trajectory(table, mean, times, samples, overlap_floor, unwrap_tol):
    times = np.asarray(times, dtype=float)
    out: list = [None] * len(times)
    mags = np.abs(times)
    order = np.unique(mags)
    if order[-1] > 0:
        slow, path_min = _unwrap_slow_phase(table, mean, order, samples)
        finer, _ = _unwrap_slow_phase(table, mean, order, 2 * samples)
    else:
        slow = finer = np.zeros_like(order)
        path_min = np.ones_like(order)
    F_all = overlap(table, mags)
    for i, t in enumerate(times):
        j = int(np.searchsorted(order, abs(t)))
        F = complex(F_all[i])
        if abs(F) < overlap_floor:
            out[i] = UndefinedPhase(f"|<psi(0)|psi(t)>| = {abs(F):.3e} at t={t}")
            continue
        if path_min[j] < overlap_floor:
            out[i] = UnstableUnwrap(
                f"overlap vanished between 0 and t={t}; chi has no continuous branch there"
            )
            continue
        if abs(slow[j] - finer[j]) > unwrap_tol:
            out[i] = UnstableUnwrap(
                f"unwrapped phase at t={t} moved by {abs(slow[j] - finer[j]):.3e} "
                f"when the step was halved"
            )
            continue
        chi_p = math.atan2(F.imag, F.real)
        delta = -table.omega * mean * abs(t)
        k = round((slow[j] + delta - chi_p) / TAU)
        chi = chi_p + TAU * k
        if t < 0:
            # w_n real: F(-t) = conj F(t)
            chi, delta = -chi, -delta
        out[i] = PhaseDecomposition.from_parts(chi, delta)
    return out


def phase_trajectory(
    spec: StateSpec,
    times: Sequence[float],
    trunc: TruncationConfig | None = None,
    *,
    samples: int = UNWRAP_SAMPLES,
    overlap_floor: float = OVERLAP_FLOOR,
    unwrap_tol: float = UNWRAP_TOL,
    tanh_r: float | None = None,
) -> list:
    """Phase decompositions at many times, unwrapped along one shared grid.

    Returns a list aligned with ``times``.  Entries are
    :class:`PhaseDecomposition` or, where the phase does not exist, the
    :class:`~geomphase.errors.PhysicsError` instance describing why
    (``UndefinedPhase`` or ``UnstableUnwrap``); nothing is raised for those.
    Series errors (poles, divergence) do raise, since they affect every time.
    """
    table = weights(spec, trunc, tanh_r=tanh_r)
    mean = _bracket(spec, table, tanh_r)
    return _trajectory(table, mean, times, samples, overlap_floor, unwrap_tol)


def geometric_phase(
    spec: StateSpec,
    trunc: TruncationConfig | None = None,
    t: float = 0.0,
    **kwargs,
) -> PhaseDecomposition:
    """Total, dynamical and geometric phase at a single time ``t``.

    Raises
    ------
    UndefinedPhase
        The evolved state is orthogonal to the initial one.
    UnstableUnwrap
        The branch of ``chi`` depends on the unwrapping resolution.
    """
    (res,) = phase_trajectory(spec, [t], trunc, **kwargs)
    if isinstance(res, PhysicsError):
        raise res
    return res


def cyclic_phase(spec: StateSpec, trunc: TruncationConfig | None = None) -> float:
    """Geometric phase after one period ``2 pi / omega``, reduced mod 2 pi.

    At ``t = 2 pi / omega`` every ``E_n t`` equals ``pi`` mod ``2 pi``, the
    total phase is ``pi`` and ``gamma = 2 pi (mean_level - 1/2)``.
    """
    return reduce_mod_2pi(TAU * (mean_level(spec, trunc) - 0.5))


def squeezed_limit_phase(
    spec: StateSpec, trunc: TruncationConfig | None = None, t: float = 0.0, **kwargs
) -> float:
    """Unwrapped geometric phase in the limit ``r -> infinity`` (``tanh r = 1``).

    Raises
    ------
    DivergentSeries
        The limiting weights are not summable (e.g. ``f = 1``).
    """
    if not spec.is_squeezed:
        raise ValueError("the large-r limit is defined for the squeezed family only")
    if t == 0:
        return 0.0
    (res,) = phase_trajectory(spec, [t], trunc, tanh_r=1.0, **kwargs)
    if isinstance(res, PhysicsError):
        raise res
    return res.gamma_unwrapped


def standard_coherent_phase(beta2: float, omega: float, t: float) -> PhaseDecomposition:
    """Ordinary coherent state (f = 1), from ``sum_n w_n z^n = exp(|beta|^2 (z - 1))``."""
    chi = -0.5 * omega * t - beta2 * math.sin(omega * t)
    delta = -omega * t * (0.5 + beta2)
    return PhaseDecomposition.from_parts(chi, delta)


def standard_squeezed_phase(r: float, omega: float, t: float) -> PhaseDecomposition:
    """Ordinary squeezed vacuum (f = 1).

    Uses ``sum_n w_n z^n = sqrt((1 - tanh^2 r) / (1 - tanh^2 r z))`` with
    ``z = exp(-2 i omega t)``; the principal square root is continuous
    because ``Re(1 - tanh^2 r z) > 0``.
    """
    th2 = math.tanh(r) ** 2
    z = complex(math.cos(2 * omega * t), -math.sin(2 * omega * t))
    chi = -0.5 * omega * t - 0.5 * math.atan2((-th2 * z).imag, (1 - th2 * z).real)
    delta = -omega * t * (0.5 + math.sinh(r) ** 2)
    return PhaseDecomposition.from_parts(chi, delta)

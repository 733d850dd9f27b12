"""Fock-basis coefficients of the nonlinear coherent and squeezed states.

Three families are supported:

``coherent1``
    ``c_n = exp(-|beta|^2/2) beta^n / (f(n)! sqrt(n!))``
``coherent2``
    ``c_n = exp(-|beta|^2/2) beta^n f(n)! / sqrt(n!)``
``squeezed``
    ``u_2n = (e^{i phi} tanh r / 2)^n f(2n)! sqrt((2n)!) / n!``, normalized to
    unit length with ``c_0 > 0``; odd coefficients vanish.

Everything is assembled from log-magnitudes so that ``[f(n)!]^2`` never
overflows, and the series is cut where its norm-squared tail becomes
negligible.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import gammaln

from .errors import (
    DivergentSeries,
    IndexOutOfRange,
    SingularNonlinearity,
    TruncationCapReached,
    ZeroNonlinearity,
)
from .laguerre import NonlinearModel, log_f_factorial_table

__all__ = [
    "COHERENT1",
    "COHERENT2",
    "SQUEEZED",
    "FAMILIES",
    "StateSpec",
    "TruncationConfig",
    "FockVector",
    "SeriesTerms",
    "series_terms",
    "coeffs_coherent1",
    "coeffs_coherent2",
    "coeffs_squeezed",
    "state_vector",
    "evolve",
]

COHERENT1 = "coherent1"
COHERENT2 = "coherent2"
SQUEEZED = "squeezed"
FAMILIES = (COHERENT1, COHERENT2, SQUEEZED)

NMAX_ENV = "GEOMPHASE_NMAX_CAP"


@dataclass(frozen=True)
class StateSpec:
    """State family, its parameters and the oscillator frequency.

    ``beta`` is used by the coherent families, ``(r, phi)`` with
    ``zeta = r e^{i phi}`` by the squeezed one.  Energies are
    ``E_n = omega (n + 1/2)`` with hbar = 1.
    """

    family: str
    beta: complex = 0.0
    r: float = 0.0
    phi: float = 0.0
    omega: float = 1.0
    model: NonlinearModel = field(default_factory=NonlinearModel.identity)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise ValueError(f"omega must be > 0, got {self.omega}")
        if not (self.r >= 0 and math.isfinite(self.r)):
            raise ValueError(f"r must be >= 0, got {self.r}")
        object.__setattr__(self, "beta", complex(self.beta))
        object.__setattr__(self, "phi", float(self.phi) % (2 * math.pi))

    @property
    def is_squeezed(self) -> bool:
        return self.family == SQUEEZED

    @property
    def level_step(self) -> int:
        """Spacing of the occupied Fock levels (2 for the squeezed family)."""
        return 2 if self.is_squeezed else 1

    def with_(self, **changes) -> StateSpec:
        return replace(self, **changes)


@dataclass(frozen=True)
class TruncationConfig:
    """Adaptive truncation of the norm series.

    Terms are computed up to the cap.  The series is cut at the first index
    where ``consecutive`` successive norm-squared terms are each below
    ``tail_tol`` times the running partial sum and everything beyond is
    negligible too.  The Fock index of the last kept term never exceeds
    ``n_max_cap``.
    """

    n_max_cap: int = 512
    tail_tol: float = 1e-16
    consecutive: int = 3

    def __post_init__(self):
        if self.n_max_cap < 1 or self.consecutive < 1 or not self.tail_tol > 0:
            raise ValueError(f"invalid truncation settings {self}")

    @classmethod
    def from_env(cls, **overrides) -> TruncationConfig:
        """Defaults, with the cap taken from ``GEOMPHASE_NMAX_CAP`` if set."""
        raw = os.environ.get(NMAX_ENV)
        if raw is not None and "n_max_cap" not in overrides:
            try:
                overrides["n_max_cap"] = int(raw)
            except ValueError:
                raise ValueError(f"{NMAX_ENV} must be an integer, got {raw!r}") from None
        return cls(**overrides)


def _resolve(trunc: TruncationConfig | None) -> TruncationConfig:
    return TruncationConfig.from_env() if trunc is None else trunc


@dataclass(frozen=True, eq=False)
class FockVector:
    """Truncated coefficients ``c_0..c_N`` and their Euclidean norm."""

    coeffs: np.ndarray
    norm: float

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __len__(self):
        return len(self.coeffs)

    @property
    def truncation_index(self) -> int:
        return len(self.coeffs) - 1

    def normalized(self) -> np.ndarray:
        return self.coeffs / self.norm

    @classmethod
    def from_coeffs(cls, coeffs) -> FockVector:
        c = np.asarray(coeffs, dtype=complex)
        return cls(c, float(np.linalg.norm(c)))


@dataclass(frozen=True, eq=False)
class SeriesTerms:
    """Log-domain terms ``u_k`` of a truncated state series.

    ``levels[k]`` is the Fock index carried by term ``k``; the amplitude is
    ``sign[k] * exp(log_abs[k] + 1j * arg[k])``.  ``log_abs`` omits any
    constant prefactor (such as ``exp(-|beta|^2/2)``).
    """

    levels: np.ndarray
    log_abs: np.ndarray
    sign: np.ndarray
    arg: np.ndarray

    @property
    def truncation_index(self) -> int:
        return int(self.levels[-1])

    def log_weights(self) -> np.ndarray:
        """``log |u_k|^2``."""
        return 2.0 * self.log_abs


def _tail_cut(log_terms: np.ndarray, trunc: TruncationConfig) -> int | None:
    """Index of the last term to keep, or None if the series has not settled.

    A cut at ``n`` needs ``consecutive`` successive terms ending at ``n`` to be
    individually negligible *and* everything computed beyond ``n`` to be
    negligible in sum, so that later bumps of oscillating weights are kept.
    The series counts as settled only if its last ``consecutive`` computed
    terms are negligible.
    """
    log_tol = math.log(trunc.tail_tol)
    with np.errstate(invalid="ignore"):
        partial = np.logaddexp.accumulate(log_terms)
        small = (log_terms == -np.inf) | (log_terms - partial < log_tol)
        small[0] = False
        tail = np.full(log_terms.shape, -np.inf)
        tail[:-1] = np.logaddexp.accumulate(log_terms[::-1])[::-1][1:]
        rest_small = (tail == -np.inf) | (tail - partial < log_tol)
    if len(small) < trunc.consecutive or not small[-trunc.consecutive:].all():
        return None
    run = 0
    for k, s in enumerate(small):
        run = run + 1 if s else 0
        if run >= trunc.consecutive and rest_small[k]:
            return k
    return None


def _power_log(base_log: float, n: np.ndarray) -> np.ndarray:
    """``n * base_log`` with the convention ``0 * log(0) = 0``."""
    if base_log == -np.inf:
        out = np.full(n.shape, -np.inf)
        out[n == 0] = 0.0
        return out
    return n * base_log


def _terms_up_to(spec: StateSpec, k_max: int, tanh_r: float | None):
    """Unnormalized log terms k = 0..k_max (series index)."""
    k = np.arange(k_max + 1)
    if spec.is_squeezed:
        t = math.tanh(spec.r) if tanh_r is None else tanh_r
        levels = 2 * k
        signs, logf = log_f_factorial_table(spec.model, int(levels[-1]))
        signs, logf = signs[levels], logf[levels]
        base = math.log(t / 2) if t > 0 else -np.inf
        log_abs = _power_log(base, k) + logf + 0.5 * gammaln(levels + 1) - gammaln(k + 1)
        arg = k * spec.phi
    else:
        levels = k
        signs, logf = log_f_factorial_table(spec.model, k_max)
        b = abs(spec.beta)
        base = math.log(b) if b > 0 else -np.inf
        if spec.family == COHERENT1:
            zero = np.flatnonzero(signs == 0)
            if zero.size:
                raise ZeroNonlinearity(int(zero[0]))
            logf = -logf
        log_abs = _power_log(base, k) + logf - 0.5 * gammaln(k + 1)
        arg = k * (np.angle(spec.beta) if b > 0 else 0.0)
    log_abs = np.where(signs == 0, -np.inf, log_abs)
    return levels, log_abs, signs, arg


def series_terms(
    spec: StateSpec, trunc: TruncationConfig | None = None, *, tanh_r: float | None = None
) -> SeriesTerms:
    """Adaptively truncated log-domain series for ``spec``.

    ``tanh_r`` overrides ``tanh(spec.r)`` for the squeezed family (used to
    take the ``r -> infinity`` limit).

    Raises
    ------
    SingularNonlinearity
        A pole of f lies below the truncation point.
    TruncationCapReached, DivergentSeries
        The tail test is unmet at the cap (DivergentSeries for the squeezed
        family).
    """
    trunc = _resolve(trunc)
    step = spec.level_step
    k_cap = trunc.n_max_cap // step
    overflow_cls = DivergentSeries if spec.is_squeezed else TruncationCapReached

    limit_error = None
    try:
        levels, log_abs, signs, arg = _terms_up_to(spec, k_cap, tanh_r)
    except (SingularNonlinearity, IndexOutOfRange) as exc:
        # terms are only usable strictly below the offending level
        bad_level = exc.n if isinstance(exc, SingularNonlinearity) else len(spec.model.values)
        usable = (bad_level - 1) // step
        if usable < 0:
            raise
        limit_error = exc
        levels, log_abs, signs, arg = _terms_up_to(spec, usable, tanh_r)
    cut = _tail_cut(2.0 * log_abs, trunc)
    if cut is None:
        if limit_error is not None:
            raise limit_error
        raise overflow_cls(
            f"{spec.family} series ({spec.model.label()}) has not converged at "
            f"Fock index {k_cap * step} (cap {trunc.n_max_cap})"
        )
    sl = slice(0, cut + 1)
    return SeriesTerms(levels[sl], log_abs[sl], signs[sl], arg[sl])


def _assemble(terms: SeriesTerms, log_prefactor: float) -> np.ndarray:
    n_fock = terms.truncation_index + 1
    c = np.zeros(n_fock, dtype=complex)
    c[terms.levels] = terms.sign * np.exp(log_prefactor + terms.log_abs + 1j * terms.arg)
    return c


def _coherent(spec: StateSpec, trunc, family: str) -> FockVector:
    if spec.family != family:
        raise ValueError(f"expected a {family} spec, got {spec.family}")
    terms = series_terms(spec, trunc)
    log_pre = -0.5 * abs(spec.beta) ** 2
    c = _assemble(terms, log_pre)
    with np.errstate(divide="ignore"):
        log_norm = log_pre + 0.5 * np.logaddexp.reduce(terms.log_weights())
    return FockVector(c, float(np.exp(log_norm)))


def coeffs_coherent1(spec: StateSpec, trunc: TruncationConfig | None = None) -> FockVector:
    """First nonlinear coherent state ``D_1(beta)|0>`` (f(n)! in the denominator).

    The returned norm is the time-independent N_1; the basis coefficients
    are not renormalized.
    """
    return _coherent(spec, trunc, COHERENT1)


def coeffs_coherent2(spec: StateSpec, trunc: TruncationConfig | None = None) -> FockVector:
    """Second nonlinear coherent state ``D(beta)|0>`` (f(n)! in the numerator)."""
    return _coherent(spec, trunc, COHERENT2)


def coeffs_squeezed(spec: StateSpec, trunc: TruncationConfig | None = None) -> FockVector:
    """Nonlinear squeezed vacuum, normalized to unit length with ``c_0 > 0``."""
    if not spec.is_squeezed:
        raise ValueError(f"expected a squeezed spec, got {spec.family}")
    terms = series_terms(spec, trunc)
    log_norm = 0.5 * np.logaddexp.reduce(terms.log_weights())
    c = _assemble(terms, -log_norm)
    return FockVector(c, float(np.linalg.norm(c)))


def state_vector(spec: StateSpec, trunc: TruncationConfig | None = None) -> FockVector:
    """Dispatch on ``spec.family``."""
    if spec.family == COHERENT1:
        return coeffs_coherent1(spec, trunc)
    if spec.family == COHERENT2:
        return coeffs_coherent2(spec, trunc)
    return coeffs_squeezed(spec, trunc)


def evolve(v: FockVector, spec: StateSpec, t: float) -> FockVector:
    """Free evolution ``c_n -> c_n exp(-i E_n t)``; the norm is carried over."""
    n = np.arange(len(v))
    energies = spec.omega * (n + 0.5)
    return FockVector(v.coeffs * np.exp(-1j * energies * t), v.norm)

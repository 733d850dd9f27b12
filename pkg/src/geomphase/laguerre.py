"""Generalized Laguerre polynomials and the Lamb-Dicke deformation f(n).

The deformed ladder operators are ``A = a f(N)``.  For a trapped ion driven
far from the Lamb-Dicke regime

    f(n) = L_n^1(eta^2) / ((n + 1) L_n^0(eta^2)),

which reduces to ``f = 1`` at ``eta = 0``.  Products ``f(n)! = f(1)...f(n)``
enter every series squared and are carried as sign + log-magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import IndexOutOfRange, SingularNonlinearity

__all__ = [
    "NonlinearModel",
    "LogProduct",
    "eval_laguerre",
    "laguerre_sequence",
    "eval_f",
    "f_table",
    "log_f_factorial",
    "log_f_factorial_table",
]

IDENTITY = "identity"
LAMB_DICKE = "lamb_dicke"
TABULATED = "tabulated"


@dataclass(frozen=True)
class NonlinearModel:
    """Deformation function f(n).

    Use the constructors :meth:`identity`, :meth:`lamb_dicke` and
    :meth:`tabulated` rather than filling the fields by hand.
    """

    kind: str = IDENTITY
    eta: float = 0.0
    values: tuple[float, ...] = field(default=(), repr=False)
    singular_threshold: float = 1e-12

    def __post_init__(self):
        if self.kind not in (IDENTITY, LAMB_DICKE, TABULATED):
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        if self.kind == LAMB_DICKE and not (self.eta >= 0 and math.isfinite(self.eta)):
            raise ValueError(f"Lamb-Dicke parameter must be finite and >= 0, got {self.eta}")

    @classmethod
    def identity(cls) -> NonlinearModel:
        return cls(IDENTITY)

    @classmethod
    def lamb_dicke(cls, eta: float, singular_threshold: float = 1e-12) -> NonlinearModel:
        return cls(LAMB_DICKE, eta=float(eta), singular_threshold=singular_threshold)

    @classmethod
    def tabulated(cls, values: Sequence[float]) -> NonlinearModel:
        """f(n) = values[n]; values[0] is f(0)."""
        return cls(TABULATED, values=tuple(float(v) for v in values))

    @property
    def is_identity(self) -> bool:
        return self.kind == IDENTITY

    def label(self) -> str:
        if self.kind == LAMB_DICKE:
            return f"eta={self.eta:g}"
        if self.kind == TABULATED:
            return f"tabulated[{len(self.values)}]"
        return "identity"


@dataclass(frozen=True)
class LogProduct:
    """A real product stored as ``sign * exp(log_magnitude)``."""

    sign: int = 1
    log_magnitude: float = 0.0

    def times(self, value: float) -> LogProduct:
        """Accumulate one more factor."""
        if self.sign == 0 or value == 0.0:
            return LogProduct(0, -math.inf)
        s = self.sign if value > 0 else -self.sign
        return LogProduct(s, self.log_magnitude + math.log(abs(value)))

    @property
    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_magnitude)


def eval_laguerre(n: int, k: int, x: float) -> float:
    """L_n^k(x) by the upward three-term recurrence."""
    if n < 0:
        raise ValueError("degree must be >= 0")
    if n == 0:
        return 1.0
    prev, cur = 1.0, 1.0 + k - x
    for m in range(1, n):
        prev, cur = cur, ((2 * m + k + 1 - x) * cur - (m + k) * prev) / (m + 1)
    return cur


def laguerre_sequence(n_max: int, k: int, x: float) -> np.ndarray:
    """Array ``[L_0^k(x), ..., L_{n_max}^k(x)]`` from the same recurrence."""
    out = np.empty(n_max + 1)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = 1.0 + k - x
    for m in range(1, n_max):
        out[m + 1] = ((2 * m + k + 1 - x) * out[m] - (m + k) * out[m - 1]) / (m + 1)
    return out


def eval_f(model: NonlinearModel, n: int) -> float:
    """f(n) for a single level.

    Raises
    ------
    SingularNonlinearity
        If ``|(n+1) L_n^0(eta^2)|`` is below ``model.singular_threshold``.
    IndexOutOfRange
        If a tabulated model has no entry for ``n``.
    """
    if n < 0:
        raise ValueError("level must be >= 0")
    if model.kind == IDENTITY:
        return 1.0
    if model.kind == TABULATED:
        if n >= len(model.values):
            raise IndexOutOfRange(f"f({n}) requested but table has {len(model.values)} entries")
        return model.values[n]
    x = model.eta * model.eta
    den = (n + 1) * eval_laguerre(n, 0, x)
    if abs(den) < model.singular_threshold:
        raise SingularNonlinearity(n, den)
    return eval_laguerre(n, 1, x) / den


@lru_cache(maxsize=64)
def _f_table_cached(model: NonlinearModel, n_max: int) -> np.ndarray:
    if model.kind == IDENTITY:
        out = np.ones(n_max + 1)
    elif model.kind == TABULATED:
        if n_max >= len(model.values):
            raise IndexOutOfRange(f"f({n_max}) requested but table has {len(model.values)} entries")
        out = np.array(model.values[: n_max + 1])
    else:
        x = model.eta * model.eta
        den = np.arange(1, n_max + 2) * laguerre_sequence(n_max, 0, x)
        bad = np.flatnonzero(np.abs(den) < model.singular_threshold)
        if bad.size:
            raise SingularNonlinearity(int(bad[0]), float(den[bad[0]]))
        out = laguerre_sequence(n_max, 1, x) / den
    out.setflags(write=False)
    return out


def f_table(model: NonlinearModel, n_max: int) -> np.ndarray:
    """Read-only array ``[f(0), ..., f(n_max)]``.

    The first pole at or below ``n_max`` raises, even if a caller only
    needs a prefix; callers size ``n_max`` to what they actually use.
    """
    return _f_table_cached(model, int(n_max))


def log_f_factorial(model: NonlinearModel, n: int) -> LogProduct:
    """``f(n)! = f(1)...f(n)`` as a :class:`LogProduct`; ``f(0)! = 1``."""
    acc = LogProduct()
    for k in range(1, n + 1):
        acc = acc.times(eval_f(model, k))
    return acc


def log_f_factorial_table(model: NonlinearModel, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Signs and log-magnitudes of f(m)! for m = 0..n_max.

    Once a factor is exactly zero the sign stays 0 and the log-magnitude
    stays ``-inf``.
    """
    f = f_table(model, n_max)[1:]
    signs = np.ones(n_max + 1, dtype=int)
    logs = np.zeros(n_max + 1)
    with np.errstate(divide="ignore"):
        logs[1:] = np.cumsum(np.log(np.abs(f)))
    signs[1:] = np.cumprod(np.sign(f)).astype(int)
    logs[signs == 0] = -np.inf
    return signs, logs

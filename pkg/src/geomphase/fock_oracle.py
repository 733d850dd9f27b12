"""Independent check of the closed forms with explicit truncated operators.

Operators are dense complex matrices on span{|0>, ..., |dim-1>}.
Identities involving a raising operator fail on the top level(s) of a
truncated space, so every identity is asserted only on an edge-safe block of
columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from .errors import (
    NonConvergent,
    QuadratureUnstable,
    TruncationCapReached,
    UndefinedPhase,
    ZeroNonlinearity,
)
from .laguerre import NonlinearModel, f_table
from .phases import OVERLAP_FLOOR, TAU, PhaseDecomposition, reduce_mod_2pi
from .states import FockVector, StateSpec, TruncationConfig, state_vector

__all__ = [
    "Ladder",
    "build_ladder",
    "commutator_residuals",
    "op_exponential",
    "displaced_state",
    "squeezed_state_oracle",
    "bch_transform_check",
    "OraclePhases",
    "oracle_phases",
]


@dataclass(frozen=True, eq=False)
class Ladder:
    """Plain and deformed ladder operators on a truncated Fock space."""

    a: np.ndarray
    a_dag: np.ndarray
    N: np.ndarray
    A: np.ndarray
    A_dag: np.ndarray
    B: np.ndarray
    B_dag: np.ndarray
    f: np.ndarray

    @property
    def dim(self) -> int:
        return self.a.shape[0]


def build_ladder(model: NonlinearModel, dim: int) -> Ladder:
    """``a``, ``a^dag``, ``N`` and ``A = a f(N)``, ``B = a / f(N)`` with adjoints.

    Raises
    ------
    SingularNonlinearity
        f has a pole at some level below ``dim``.
    ZeroNonlinearity
        f vanishes at some level below ``dim``, so ``1/f(N)`` does not exist.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    f = np.array(f_table(model, dim - 1))
    small = np.flatnonzero(np.abs(f) < model.singular_threshold)
    if small.size:
        raise ZeroNonlinearity(int(small[0]))
    n = np.arange(dim)
    a = np.diag(np.sqrt(n[1:]), 1).astype(complex)
    a_dag = a.conj().T
    A = a * f[None, :]
    B = a / f[None, :]
    return Ladder(
        a=a,
        a_dag=a_dag,
        N=np.diag(n).astype(complex),
        A=A,
        A_dag=A.conj().T,
        B=B,
        B_dag=B.conj().T,
        f=f,
    )


def _restricted_norm(M: np.ndarray, n_cols: int) -> float:
    return float(np.linalg.norm(M[:, :n_cols], 2))


def commutator_residuals(ladder: Ladder) -> dict[str, float]:
    """Operator-norm residuals of the ladder identities on levels ``n <= dim-2``.

    Keys: ``canonical`` ([a, a^dag] = 1), ``A_Bdag``, ``B_Adag`` and
    ``nonlinear_algebra`` ([A, A^dag] = (N+1) f^2(N+1) - N f^2(N)).
    """
    dim = ladder.dim
    eye = np.eye(dim)
    n = np.arange(dim)
    f = ladder.f
    f_next = np.append(f[1:], np.nan)  # f(dim) is never used on the safe block
    rhs = np.diag((n + 1) * f_next**2 - n * f**2)
    safe = dim - 1
    L = ladder
    return {
        "canonical": _restricted_norm(L.a @ L.a_dag - L.a_dag @ L.a - eye, safe),
        "A_Bdag": _restricted_norm(L.A @ L.B_dag - L.B_dag @ L.A - eye, safe),
        "B_Adag": _restricted_norm(L.B @ L.A_dag - L.A_dag @ L.B - eye, safe),
        "nonlinear_algebra": _restricted_norm(
            L.A @ L.A_dag - L.A_dag @ L.A - np.nan_to_num(rhs), safe
        ),
    }


def _taylor_exp(M: np.ndarray, max_terms: int = 40) -> np.ndarray:
    out = np.eye(M.shape[0], dtype=M.dtype)
    term = out.copy()
    for k in range(1, max_terms + 1):
        term = term @ M / k
        out = out + term
        if np.abs(term).max() <= 1e-17 * np.abs(out).max():
            break
    return out


def _expm_scaled(M: np.ndarray, squarings: int) -> np.ndarray:
    E = _taylor_exp(M / 2.0**squarings)
    for _ in range(squarings):
        E = E @ E
    return E


def op_exponential(M: np.ndarray, *, tol: float = 1e-9, max_squarings: int = 64) -> np.ndarray:
    """``exp(M)`` by scaling and squaring of a truncated Taylor series.

    The result is accepted when ``||e^M e^-M - I|| / (||e^M|| ||e^-M||)`` is
    below ``tol`` (spectral norms).  The normalization makes the check
    meaningful for the strongly non-normal generators of the deformed
    displacement and squeeze operators, whose exponentials are accurate even
    though the product with the inverse loses digits in proportion to the
    condition number.  If the check fails, more squarings are tried.

    Raises
    ------
    NonConvergent
        The residual check still fails at ``max_squarings``.
    """
    M = np.asarray(M, dtype=complex)
    if not np.isfinite(M).all():
        raise NonConvergent("matrix has non-finite entries")
    norm1 = np.abs(M).sum(axis=0).max()
    s = max(0, math.ceil(math.log2(norm1 / 0.5))) if norm1 > 0 else 0
    eye = np.eye(M.shape[0])
    residual = math.inf
    while s <= max_squarings:
        E = _expm_scaled(M, s)
        Einv = _expm_scaled(-M, s)
        scale = np.linalg.norm(E, 2) * np.linalg.norm(Einv, 2)
        residual = np.linalg.norm(E @ Einv - eye, 2) / scale
        if np.isfinite(residual) and residual < tol:
            return E
        s += 2
    raise NonConvergent(f"exp residual {residual:.3e} at {max_squarings} squarings")


def _vacuum_image(U: np.ndarray) -> np.ndarray:
    return U[:, 0].copy()


def _check_tail(c: np.ndarray, margin: int, tol: float, what: str) -> None:
    w = np.abs(c) ** 2
    tail = w[-margin:].sum() / w.sum()
    if not tail < tol:
        raise TruncationCapReached(
            f"{what}: {tail:.3e} of the norm sits in the top {margin} levels of dim={len(c)}"
        )


def displaced_state(
    which: str, beta: complex, model: NonlinearModel, dim: int, *, edge_tol: float = 1e-12
) -> FockVector:
    """``D_1(beta)|0>`` (``which="D1"``) or ``D(beta)|0>`` (``which="D"``).

    ``D_1 = exp(beta B^dag - beta* A)`` and ``D = exp(beta A^dag - beta* B)``
    are exponentiated as matrices; the result is not renormalized.

    Raises
    ------
    TruncationCapReached
        More than ``edge_tol`` of the norm lies in the top eighth of the space.
    """
    L = build_ladder(model, dim)
    beta = complex(beta)
    if which == "D1":
        gen = beta * L.B_dag - beta.conjugate() * L.A
    elif which == "D":
        gen = beta * L.A_dag - beta.conjugate() * L.B
    else:
        raise ValueError(f"which must be 'D1' or 'D', got {which!r}")
    c = _vacuum_image(op_exponential(gen))
    _check_tail(c, max(2, dim // 8), edge_tol, f"{which}(beta={beta})|0>")
    return FockVector.from_coeffs(c)


def _squeeze_generator(which: str, r: float, phi: float, L: Ladder) -> np.ndarray:
    zeta = r * complex(math.cos(phi), math.sin(phi))
    if which == "S1":
        return 0.5 * (zeta * L.B_dag @ L.B_dag - zeta.conjugate() * L.A @ L.A)
    if which == "S":
        return 0.5 * (zeta * L.A_dag @ L.A_dag - zeta.conjugate() * L.B @ L.B)
    raise ValueError(f"which must be 'S1' or 'S', got {which!r}")


def squeezed_state_oracle(
    which: str,
    r: float,
    phi: float,
    model: NonlinearModel,
    dim: int,
    *,
    edge_tol: float = 1e-12,
) -> FockVector:
    """Normalized ``S_1(zeta)|0>`` or ``S(zeta)|0>`` with ``c_0 > 0``.

    ``S_1 = exp((zeta B^dag^2 - zeta* A^2)/2)`` and
    ``S = exp((zeta A^dag^2 - zeta* B^2)/2)``, ``zeta = r e^{i phi}``.

    Raises
    ------
    TruncationCapReached
        The vacuum image is not contained in the truncated space (too much
        weight in the top eighth of the levels).
    """
    L = build_ladder(model, dim)
    c = _vacuum_image(op_exponential(_squeeze_generator(which, r, phi, L)))
    _check_tail(c, max(2, dim // 8), edge_tol, f"{which}(r={r})|0>")
    if abs(c[0]) > 0:
        c = c * (abs(c[0]) / c[0])
    c = c / np.linalg.norm(c)
    return FockVector(c, float(np.linalg.norm(c)))


def bch_transform_check(
    which: str,
    r: float,
    phi: float,
    model: NonlinearModel,
    dim: int,
    *,
    margin: int | None = None,
) -> float:
    """Residual of the squeeze transformation of the deformed operators.

    Checks ``S_1 A S_1^-1 = cosh(r) A - e^{i phi} sinh(r) B^dag`` or
    ``S B S^-1 = cosh(r) B - e^{i phi} sinh(r) A^dag`` on the columns
    ``n < dim - margin`` and returns the spectral norm of the difference on
    that block.  The default keeps the lowest ``dim // 8`` columns: the
    squeeze spreads each level over many others, so columns much closer to
    the edge see the truncated exponential.
    """
    if margin is None:
        margin = dim - max(1, dim // 8)
    L = build_ladder(model, dim)
    K = _squeeze_generator(which, r, phi, L)
    U = op_exponential(K)
    U_inv = op_exponential(-K)
    e_phi = complex(math.cos(phi), math.sin(phi))
    if which == "S1":
        lhs = U @ L.A @ U_inv
        rhs = math.cosh(r) * L.A - e_phi * math.sinh(r) * L.B_dag
    else:
        lhs = U @ L.B @ U_inv
        rhs = math.cosh(r) * L.B - e_phi * math.sinh(r) * L.A_dag
    return _restricted_norm(lhs - rhs, dim - margin)


@dataclass(frozen=True)
class OraclePhases(PhaseDecomposition):
    """Phases from explicit vectors and quadrature.

    ``gamma_unwrapped`` comes from ``chi - delta``; ``gamma_connection`` is the
    independent line integral of the reference-section connection.
    """

    gamma_connection: float = 0.0
    grid_points: int = 0


def _oracle_pass(psi0, energies, t, n_points, chunk=1024):
    """Sample overlap, connection and <H> on a uniform grid over [0, t]."""
    tau = np.linspace(0.0, t, n_points)
    O = np.empty(n_points, dtype=complex)
    conn = np.empty(n_points)
    energy = np.empty(n_points)
    conn_imag = 0.0
    phi0 = psi0.conj()
    for lo in range(0, n_points, chunk):
        tt = tau[lo : lo + chunk]
        psi = psi0[None, :] * np.exp(-1j * np.outer(tt, energies))
        dpsi = -1j * energies[None, :] * psi
        o = psi @ phi0
        do = dpsi @ phi0
        mag = np.abs(o)
        u = o.conj() / mag
        dmag = (o.conj() * do).real / mag
        du = (do.conj() * mag - o.conj() * dmag) / mag**2
        ref = u[:, None] * psi
        dref = du[:, None] * psi + u[:, None] * dpsi
        a = 1j * np.einsum("ij,ij->i", ref.conj(), dref)
        O[lo : lo + chunk] = o
        conn[lo : lo + chunk] = a.real
        conn_imag = max(conn_imag, float(np.abs(a.imag).max()))
        energy[lo : lo + chunk] = np.einsum("ij,ij->i", psi.conj(), psi * energies[None, :]).real
    return tau, O, conn, energy, conn_imag


def oracle_phases(
    spec: StateSpec,
    t: float,
    grid_points: int = 513,
    *,
    trunc: TruncationConfig | None = None,
    vector: FockVector | None = None,
    tol: float = 1e-8,
    max_grid_points: int = 2**16 + 1,
    overlap_floor: float = OVERLAP_FLOOR,
) -> OraclePhases:
    """Total, dynamical and geometric phase from explicit state vectors.

    The initial vector defaults to the series coefficients of ``spec``;
    pass ``vector`` to use e.g. an operator-exponential construction.  The
    Hamiltonian ``omega (N + 1/2)`` is applied exactly (it is diagonal);
    ``delta`` and the connection integral use composite Simpson quadrature.
    The grid is refined by halving the step until both geometric-phase
    routes move by less than ``tol``.

    Raises
    ------
    UndefinedPhase
        ``|<psi(0)|psi(t)>|`` is below ``overlap_floor`` anywhere on [0, t].
    QuadratureUnstable
        No grid up to ``max_grid_points`` settles, or the two routes
        disagree by more than ``tol``.
    """
    if vector is None:
        vector = state_vector(spec, trunc)
    if t == 0:
        return OraclePhases(0.0, 0.0, 0.0, 0.0, gamma_connection=0.0, grid_points=1)
    psi0 = vector.coeffs / np.linalg.norm(vector.coeffs)
    n_levels = np.arange(len(psi0))
    energies = spec.omega * (n_levels + 0.5)
    if grid_points % 2 == 0:
        grid_points += 1

    def run(n_points):
        tau, O, conn, energy, conn_imag = _oracle_pass(psi0, energies, t, n_points)
        if np.abs(O).min() < overlap_floor:
            raise UndefinedPhase(
                f"|<psi(0)|psi(tau)>| = {np.abs(O).min():.3e} for some tau in [0, {t}]"
            )
        delta_cum = -cumulative_simpson(energy, x=tau, initial=0.0)
        chi_p = np.angle(O)
        slow = np.unwrap(chi_p - delta_cum)
        k = round((slow[-1] + delta_cum[-1] - chi_p[-1]) / TAU)
        chi = float(chi_p[-1] + TAU * k)
        delta = float(delta_cum[-1])
        gamma_conn = float(simpson(conn, x=tau))
        return chi, delta, gamma_conn

    n = grid_points
    prev = run(n)
    while True:
        n_fine = 2 * n - 1
        if n_fine > max_grid_points:
            raise QuadratureUnstable(f"quadrature not settled at {n} points for t={t}")
        cur = run(n_fine)
        moved = max(abs((cur[0] - cur[1]) - (prev[0] - prev[1])), abs(cur[2] - prev[2]))
        n = n_fine
        if moved <= tol:
            break
        prev = cur
    chi, delta, gamma_conn = cur
    gamma = chi - delta
    if abs(gamma - gamma_conn) > tol:
        raise QuadratureUnstable(
            f"chi - delta = {gamma!r} and the connection integral {gamma_conn!r} "
            f"disagree by {abs(gamma - gamma_conn):.3e}"
        )
    return OraclePhases(
        chi, delta, gamma, reduce_mod_2pi(gamma), gamma_connection=gamma_conn, grid_points=n
    )

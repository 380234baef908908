"""Collocation node sets, Butcher tableaux and mass matrices.

All coefficient integrals are evaluated by exact antidifferentiation of the
Lagrange basis polynomials in the monomial basis.  The monomial basis loses
several digits to cancellation at the larger stage counts, so the
construction runs in 40-digit arithmetic and only the final tables are cast
to float; the published values are then exact to one rounding.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial

import numpy as np
from mpmath import mp, mpf

from .errors import SchemeConstructionError

GAUSS = "gauss"
LOBATTO = "lobatto"

GAUSS_STAGE_RANGE = range(1, 9)
LOBATTO_STAGE_RANGE = range(2, 5)

_DPS = 40

_ROW_SUM_TOL = 1e-13
_SYMPLECTIC_PAIR_TOL = 1e-13
_C1_TOL = 1e-14


def _gauss_nodes_mp(s: int):
    """High-precision roots of d^s/dt^s [t^s (t-1)^s], ascending."""
    # t^s (t-1)^s = sum_k C(s,k) (-1)^(s-k) t^(s+k); differentiate s times
    coeffs_desc = []
    for k in range(s, -1, -1):  # degree s+k, descending
        a = comb(s, k) * (-1) ** (s - k)
        coeffs_desc.append(a * factorial(s + k) // factorial(k))
    with mp.workdps(_DPS):
        roots = mp.polyroots(coeffs_desc, maxsteps=200, extraprec=60)
        return sorted(mp.re(r) for r in roots)


def gauss_legendre_nodes(s: int) -> np.ndarray:
    """Shifted Gauss-Legendre collocation points on (0, 1), sorted ascending."""
    if s not in GAUSS_STAGE_RANGE:
        raise ValueError(f"gauss stage count must be in [1, 8], got {s}")
    if s == 1:
        return np.array([0.5])
    if s == 2:
        d = np.sqrt(3.0) / 6.0
        return np.array([0.5 - d, 0.5 + d])
    if s == 3:
        d = np.sqrt(15.0) / 10.0
        return np.array([0.5 - d, 0.5, 0.5 + d])
    return np.array([float(r) for r in _gauss_nodes_mp(s)])


def lobatto_nodes(s: int) -> np.ndarray:
    """Lobatto collocation points on [0, 1]: both endpoints plus the extrema
    of the degree s-1 Legendre polynomial mapped to the unit interval."""
    if s not in LOBATTO_STAGE_RANGE:
        raise ValueError(f"lobatto stage count must be in [2, 4], got {s}")
    if s == 2:
        return np.array([0.0, 1.0])
    if s == 3:
        return np.array([0.0, 0.5, 1.0])
    d = np.sqrt(5.0) / 10.0
    return np.array([0.0, 0.5 - d, 0.5 + d, 1.0])


def _validate_nodes(c) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.ndim != 1 or c.size < 1:
        raise ValueError("node set must be a nonempty 1-D array")
    if np.any(np.diff(c) <= 0) or c[0] < 0.0 or c[-1] > 1.0:
        raise ValueError("nodes must be strictly increasing within [0, 1]")
    return c


def _lagrange_coeffs_mp(c, i):
    """Ascending monomial coefficients of the i-th Lagrange basis polynomial
    over high-precision nodes c."""
    coeffs = [mpf(1)]
    for j in range(len(c)):
        if j == i:
            continue
        new = [mpf(0)] * (len(coeffs) + 1)
        for k, a in enumerate(coeffs):  # multiply by (t - c_j)
            new[k] += -c[j] * a
            new[k + 1] += a
        inv = 1 / (c[i] - c[j])
        coeffs = [a * inv for a in new]
    return coeffs


def _antiderivative_mp(coeffs):
    return [mpf(0)] + [a / (k + 1) for k, a in enumerate(coeffs)]


def _eval_mp(coeffs, x):
    acc = mpf(0)
    for a in reversed(coeffs):
        acc = acc * x + a
    return acc


def lagrange_polynomial(nodes, i: int) -> np.ndarray:
    """Monomial coefficients (ascending) of the i-th Lagrange basis polynomial
    for the given nodes; 0-based index."""
    c = _validate_nodes(nodes)
    if not 0 <= i < c.size:
        raise IndexError(f"basis index {i} out of range for {c.size} nodes")
    with mp.workdps(_DPS):
        return np.array([float(a) for a in
                         _lagrange_coeffs_mp([mpf(v) for v in c], i)])


@dataclass(frozen=True)
class ButcherTableau:
    """Runge-Kutta coefficients (c, A, b) of a collocation method."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        for arr in (self.c, self.A, self.b):
            arr.setflags(write=False)
        s = self.c.size
        if self.A.shape != (s, s) or self.b.shape != (s,):
            raise SchemeConstructionError("tableau shape mismatch")
        if np.max(np.abs(self.A.sum(axis=1) - self.c)) > _ROW_SUM_TOL:
            raise SchemeConstructionError("row-sum consistency sum_j a_ij = c_i violated")
        if abs(self.b.sum() - 1.0) > _ROW_SUM_TOL:
            raise SchemeConstructionError("weights do not sum to 1")

    @property
    def s(self) -> int:
        return self.c.size


def _tables_mp(c_mp):
    """(A, b, M) as float arrays from exact integration over mp nodes."""
    s = len(c_mp)
    A = np.empty((s, s))
    b = np.empty(s)
    M = np.empty((s, s))
    basis = [_lagrange_coeffs_mp(c_mp, i) for i in range(s)]
    for j in range(s):
        L = _antiderivative_mp(basis[j])
        for i in range(s):
            A[i, j] = float(_eval_mp(L, c_mp[i]))
        b[j] = float(_eval_mp(L, mpf(1)))
    for i in range(s):
        for j in range(i, s):
            prod = [mpf(0)] * (len(basis[i]) + len(basis[j]) - 1)
            for k, a in enumerate(basis[i]):
                for l, bb in enumerate(basis[j]):
                    prod[k + l] += a * bb
            M[i, j] = float(_eval_mp(_antiderivative_mp(prod), mpf(1)))
            M[j, i] = M[i, j]
    return A, b, M


def butcher_from_nodes(nodes) -> ButcherTableau:
    """Collocation tableau: a_ij = int_0^{c_i} l_j, b_j = int_0^1 l_j."""
    c = _validate_nodes(nodes)
    with mp.workdps(_DPS):
        A, b, _ = _tables_mp([mpf(v) for v in c])
    return ButcherTableau(c=c, A=A, b=b)


def mass_matrix(nodes) -> np.ndarray:
    """Gram matrix m_ij = int_0^1 l_i l_j of the Lagrange basis, symmetric by
    construction (upper triangle computed, then mirrored)."""
    c = _validate_nodes(nodes)
    with mp.workdps(_DPS):
        _, _, M = _tables_mp([mpf(v) for v in c])
    return M


def lagrange_integral_weights(nodes, tau: float) -> np.ndarray:
    """The s integrals int_0^tau l_j(sigma) dsigma; rows of A at tau = c_i,
    the weights b at tau = 1."""
    c = _validate_nodes(nodes)
    with mp.workdps(_DPS):
        c_mp = [mpf(v) for v in c]
        t = mpf(tau)
        return np.array([
            float(_eval_mp(_antiderivative_mp(_lagrange_coeffs_mp(c_mp, j)), t))
            for j in range(c.size)])


def iiib_from_iiia(tableau: ButcherTableau) -> np.ndarray:
    """Companion coefficients from the symplectic-pair identity,
    a_hat_ij = b_j - (b_j / b_i) a_ji."""
    A, b = tableau.A, tableau.b
    if np.any(b == 0.0):
        raise ZeroDivisionError("pair construction needs nonzero weights")
    return b[None, :] - (b[None, :] / b[:, None]) * A.T


def check_c1(M: np.ndarray, tol: float) -> bool:
    """True iff all off-diagonal mass-matrix entries vanish to tol."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    off = M - np.diag(np.diag(M))
    return bool(np.max(np.abs(off), initial=0.0) <= tol)


def quadratic_invariant_residual(tableau: ButcherTableau) -> float:
    """max_ij |a_ij b_i + a_ji b_j - b_i b_j|; zero exactly for the schemes
    that conserve quadratic invariants."""
    A, b = tableau.A, tableau.b
    R = A * b[:, None] + A.T * b[None, :] - np.outer(b, b)
    return float(np.max(np.abs(R)))


def symplectic_pair_residual(tableau: ButcherTableau, A_hat: np.ndarray) -> float:
    """max_ij |b_i a_hat_ij + b_j a_ji - b_i b_j| for a partitioned pair."""
    b, A = tableau.b, tableau.A
    R = b[:, None] * A_hat + A.T * b[None, :] - np.outer(b, b)
    return float(np.max(np.abs(R)))


@dataclass(frozen=True)
class CollocationScheme:
    """Immutable bundle of everything a discrete-time step needs: tableau(x),
    mass matrix and advertised order."""

    kind: str
    tableau: ButcherTableau
    M: np.ndarray
    order: int
    A_hat: np.ndarray | None = None

    def __post_init__(self):
        self.M.setflags(write=False)
        if self.A_hat is not None:
            self.A_hat.setflags(write=False)

    @property
    def s(self) -> int:
        return self.tableau.s

    @property
    def c(self) -> np.ndarray:
        return self.tableau.c

    @property
    def A(self) -> np.ndarray:
        return self.tableau.A

    @property
    def b(self) -> np.ndarray:
        return self.tableau.b

    @property
    def label(self) -> str:
        return f"{self.kind}-s{self.s}"


def make_scheme(kind: str, s: int) -> CollocationScheme:
    """Assemble and validate a Gauss-Legendre scheme or a Lobatto IIIA/IIIB
    pair; construction fails with the violated check named."""
    if kind == GAUSS:
        if s not in GAUSS_STAGE_RANGE:
            raise ValueError(f"unsupported gauss stage count {s}")
        with mp.workdps(_DPS):
            # keep full node precision through the tables so the (C1)
            # orthogonality survives the float cast
            if s <= 3:
                c_mp = [mpf(v) for v in gauss_legendre_nodes(s)]
            else:
                c_mp = _gauss_nodes_mp(s)
            A, b, M = _tables_mp(c_mp)
            c = np.array([float(v) for v in c_mp])
        tab = ButcherTableau(c=c, A=A, b=b)
        if not check_c1(M, _C1_TOL):
            raise SchemeConstructionError("gauss mass matrix violates (C1)")
        if np.max(np.abs(np.diag(M) - tab.b)) > _C1_TOL:
            raise SchemeConstructionError("gauss m_ii != b_i")
        return CollocationScheme(kind=GAUSS, tableau=tab, M=M, order=2 * s)
    if kind == LOBATTO:
        if s not in LOBATTO_STAGE_RANGE:
            raise ValueError(f"unsupported lobatto stage count {s}")
        c = lobatto_nodes(s)
        tab = butcher_from_nodes(c)
        A_hat = iiib_from_iiia(tab)
        if symplectic_pair_residual(tab, A_hat) > _SYMPLECTIC_PAIR_TOL:
            raise SchemeConstructionError("symplectic-pair condition violated")
        M = mass_matrix(c)
        return CollocationScheme(kind=LOBATTO, tableau=tab, M=M,
                                 order=2 * s - 2, A_hat=A_hat)
    raise ValueError(f"unknown scheme kind {kind!r}")

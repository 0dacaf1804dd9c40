"""Symplectic-form utilities and the Bloch-Messiah decomposition.

Quadrature ordering is (q_1..q_M, p_1..p_M) throughout, with symplectic form

    Omega = [[0, I], [-I, 0]].

``bloch_messiah`` factors a symplectic S as R1 @ D @ R2 with R1, R2 orthogonal
symplectic and D = diag(d_1..d_M, 1/d_1..1/d_M), d_i >= 1 sorted descending.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import polar

SYMPLECTIC_TOL = 1e-10
PAIR_TOL = 1e-10


class SymplecticError(ValueError):
    """Input matrix fails a symplectic-structure requirement."""


@lru_cache(maxsize=32)
def _omega_cached(n_modes: int) -> NDArray[np.float64]:
    eye = np.eye(n_modes)
    zero = np.zeros((n_modes, n_modes))
    out = np.block([[zero, eye], [-eye, zero]])
    out.setflags(write=False)
    return out


def symplectic_form(n_modes: int) -> NDArray[np.float64]:
    """The 2M x 2M form Omega = [[0, I], [-I, 0]]."""
    return _omega_cached(n_modes)


def symplectic_residual(S: NDArray[np.float64]) -> float:
    """Frobenius norm of S^T Omega S - Omega."""
    n = S.shape[0]
    if S.shape[0] != S.shape[1] or n % 2:
        raise SymplecticError("matrix must be square with even dimension")
    omega = symplectic_form(n // 2)
    return float(np.linalg.norm(S.T @ omega @ S - omega))


def is_symplectic(S: NDArray[np.float64], tol: float = SYMPLECTIC_TOL) -> tuple[bool, float]:
    """Check S^T Omega S = Omega; returns (verdict, residual)."""
    res = symplectic_residual(S)
    return res < tol, res


@dataclass(frozen=True)
class BlochMessiahFactors:
    """Factors of S = R1 @ D @ R2.

    d holds the M squeezing singular values >= 1 (descending); the full
    diagonal of D is (d, 1/d). R1 and R2 are orthogonal symplectic.
    """

    r1: NDArray[np.float64]
    d: NDArray[np.float64]
    r2: NDArray[np.float64]

    @property
    def n_modes(self) -> int:
        return len(self.d)

    @property
    def delta(self) -> NDArray[np.float64]:
        return np.diag(np.concatenate([self.d, 1.0 / self.d]))

    @property
    def squeezing(self) -> NDArray[np.float64]:
        """Per-mode squeezing parameters r_i = ln d_i."""
        return np.log(self.d)

    def reconstruct(self) -> NDArray[np.float64]:
        return self.r1 @ self.delta @ self.r2


def bloch_messiah(S: NDArray[np.float64], tol: float = SYMPLECTIC_TOL) -> BlochMessiahFactors:
    """Bloch-Messiah (Euler) decomposition of a symplectic matrix.

    Route: polar decomposition S = P O (P symmetric positive-definite
    symplectic, O orthogonal symplectic), then symplectic diagonalization
    P = R1 Delta R1^T from the eigenvectors of P, finally R2 = R1^T O.

    For P its eigenvalues come in (d, 1/d) pairs and Omega maps the
    d-eigenspace onto the 1/d-eigenspace, so choosing an orthonormal
    eigenbasis v_i for all eigenvalues d_i > 1 and completing with
    -Omega v_i yields an orthogonal symplectic R1. Eigenvalue-1 directions
    are filled with a deterministic symplectic basis of that subspace.
    Column signs are fixed so each of the first M columns of R1 has a
    positive leading entry (paired column signs follow).
    """
    ok, res = is_symplectic(S, tol)
    if not ok:
        raise SymplecticError(f"input is not symplectic (residual {res:.3e} >= {tol:.1e})")
    n = S.shape[0] // 2
    omega = symplectic_form(n)

    if np.linalg.norm(S.T @ S - np.eye(2 * n)) < tol:
        # passive transformation: all squeezing in R1 by convention
        return BlochMessiahFactors(r1=S.copy(), d=np.ones(n), r2=np.eye(2 * n))

    O, P = polar(S, side="left")  # S = P @ O
    P = 0.5 * (P + P.T)
    evals, vecs = np.linalg.eigh(P)

    hi = 1.0 + PAIR_TOL
    lo = 1.0 / hi
    squeezed_idx = sorted(np.flatnonzero(evals > hi), key=lambda i: -evals[i])
    small_idx = np.flatnonzero(evals < lo)
    unit_idx = np.flatnonzero((evals >= lo) & (evals <= hi))
    if len(squeezed_idx) != len(small_idx):
        raise SymplecticError("eigenvalues of the polar factor do not pair reciprocally")

    # candidate q-columns: squeezed eigenvectors (descending d), then a
    # deterministic filling of the (near-)unit eigenspace from projected
    # canonical basis vectors
    candidates: list[tuple[np.ndarray, float, bool]] = [
        (vecs[:, i], float(evals[i]), True) for i in squeezed_idx
    ]
    if len(candidates) < n:
        U = vecs[:, unit_idx]
        proj = U @ U.T
        candidates.extend((proj @ e, 1.0, False) for e in np.eye(2 * n))

    # symplectic Gram-Schmidt: each accepted column v is orthonormalized
    # against all previous pairs (u, -Omega u), pinning R1's orthogonality
    # and pairing to machine precision even for clustered eigenvalues
    q_cols: list[np.ndarray] = []
    d_list: list[float] = []
    for v, dval, required in candidates:
        if len(q_cols) == n:
            break
        w = v.copy()
        for _ in range(2):  # twice is enough (classical GS refinement)
            for b in q_cols:
                w -= (b @ w) * b
                ob = omega @ b
                w -= (ob @ w) * ob
        norm = np.linalg.norm(w)
        if norm < 1e-8:
            if required:
                raise SymplecticError("degenerate squeezed eigendirections collapsed")
            continue
        q_cols.append(w / norm)
        d_list.append(dval)
    if len(q_cols) != n:
        raise SymplecticError("failed to build a symplectic eigenbasis of the polar factor")

    r1 = np.empty((2 * n, 2 * n))
    for m, v in enumerate(q_cols):
        lead = np.flatnonzero(np.abs(v) > 1e-12)
        if lead.size and v[lead[0]] < 0:
            v = -v
        r1[:, m] = v
        r1[:, n + m] = -omega @ v

    d = np.asarray(d_list)
    delta = np.concatenate([d, 1.0 / d])
    r2 = (r1 / delta[None, :]).T @ S  # R2 = Delta^-1 R1^T S
    return BlochMessiahFactors(r1=r1, d=d, r2=r2)


def discard_passive(factors: BlochMessiahFactors, vacuum: float = 0.5) -> NDArray[np.float64]:
    """Covariance R1 Delta (vacuum*I) Delta^T R1^T obtained by dropping R2.

    Equals S (vacuum*I) S^T for the decomposed S: with a vacuum input the
    trailing passive factor has no effect.
    """
    delta2 = np.concatenate([factors.d**2, factors.d**-2])
    return vacuum * (factors.r1 * delta2[None, :]) @ factors.r1.T


def random_orthogonal_symplectic(n_modes: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """Haar-random orthogonal symplectic matrix (image of a random unitary)."""
    z = rng.normal(size=(n_modes, n_modes)) + 1j * rng.normal(size=(n_modes, n_modes))
    q, r = np.linalg.qr(z)
    u = q * (np.diag(r) / np.abs(np.diag(r)))[None, :]
    x, y = u.real, u.imag
    return np.block([[x, -y], [y, x]])


def random_symplectic(
    n_modes: int, rng: np.random.Generator, max_squeeze: float = 1.0
) -> NDArray[np.float64]:
    """Random symplectic matrix built as R Delta R' with bounded squeezing."""
    r = rng.uniform(-max_squeeze, max_squeeze, n_modes)
    delta = np.diag(np.exp(np.concatenate([r, -r])))
    return (
        random_orthogonal_symplectic(n_modes, rng)
        @ delta
        @ random_orthogonal_symplectic(n_modes, rng)
    )

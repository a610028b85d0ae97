"""Vectorized superoperators (column-stacking convention).

vec(X) stacks columns, so a map X -> A X B vectorizes to kron(B.T, A).
The entry budget for a dense superoperator matrix is 2^24 (dim <= 4096),
the n=6 qubit ceiling.
"""

from __future__ import annotations

import numpy as np

from .matrices import SizeBudgetError

SUPEROP_ENTRY_BUDGET = 2 ** 24


def vec(X: np.ndarray) -> np.ndarray:
    return np.asarray(X).flatten(order="F")


def unvec(v: np.ndarray, d: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if d is None:
        d = int(round(np.sqrt(v.size)))
    return v.reshape((d, d), order="F")


def check_superop_budget(d: int) -> None:
    if (d * d) ** 2 > SUPEROP_ENTRY_BUDGET:
        raise SizeBudgetError(
            f"superoperator for dimension {d} needs {(d*d)**2} entries "
            f"(> {SUPEROP_ENTRY_BUDGET} budget)")


def vectorize_superop(pairs: list[tuple[np.ndarray, np.ndarray]], d: int) -> np.ndarray:
    """Superoperator matrix of X -> sum_k A_k X B_k."""
    check_superop_budget(d)
    S = np.zeros((d * d, d * d), dtype=complex)
    for A, B in pairs:
        S += np.kron(np.asarray(B, dtype=complex).T, np.asarray(A, dtype=complex))
    return S


def commutator_superop(H: np.ndarray) -> np.ndarray:
    """Vectorization of X -> -i[H, X]."""
    d = H.shape[0]
    I = np.eye(d, dtype=complex)
    return vectorize_superop([(-1j * H, I), (1j * I, H)], d)


def dissipator_superop(L: np.ndarray) -> np.ndarray:
    """Vectorization of X -> L X L^dag - (1/2){L^dag L, X}."""
    d = L.shape[0]
    I = np.eye(d, dtype=complex)
    LdL = L.conj().T @ L
    return vectorize_superop([(L, L.conj().T), (-0.5 * LdL, I), (-0.5 * I, LdL)], d)


def apply_superop(S: np.ndarray, rho: np.ndarray) -> np.ndarray:
    d = rho.shape[0]
    return unvec(S @ vec(rho), d)


def superop_exp(S: np.ndarray, t: float = 1.0) -> np.ndarray:
    """exp(S t) by scaling-and-squaring Taylor; squaring depth from ||S t||_F <= 1/2."""
    A = np.asarray(S, dtype=complex) * t
    nrm = float(np.linalg.norm(A))
    nsq = 0
    if nrm > 0.5:
        nsq = int(np.ceil(np.log2(nrm / 0.5)))
    A = A / (2.0 ** nsq)
    d = A.shape[0]
    E = np.eye(d, dtype=complex)
    term = np.eye(d, dtype=complex)
    for k in range(1, 40):
        term = term @ A / k
        E += term
        if np.linalg.norm(term) < 1e-18 * max(1.0, np.linalg.norm(E)):
            break
    for _ in range(nsq):
        E = E @ E
    return E


def choi_matrix(S: np.ndarray, d: int) -> np.ndarray:
    """Choi matrix C = sum_{ij} E(|i><j|) (x) |i><j| of a column-stacked superop."""
    C = np.zeros((d * d, d * d), dtype=complex)
    T = S.reshape(d, d, d, d)  # T[r, c, a, b]: component (r,c) of E(unvec(e_{a,b}))
    # S columns are indexed by vec(|a><b|) = column a*? vec is column-stacking:
    # column index j = a + d*b corresponds to X = |a><b| ... vec(X)[r + d*c]
    for a in range(d):
        for b in range(d):
            col = S[:, a + d * b]
            Eab = unvec(col, d)
            C += np.kron(Eab, _unit(d, a, b))
    return C


def _unit(d: int, a: int, b: int) -> np.ndarray:
    U = np.zeros((d, d), dtype=complex)
    U[a, b] = 1.0
    return U


def is_trace_preserving(S: np.ndarray, d: int, tol: float = 1e-8) -> bool:
    """tr(E(X)) = tr(X) for all X, i.e. vec(I)^dag S = 0 for a generator or = vec(I)^dag."""
    vI = vec(np.eye(d, dtype=complex))
    r = vI.conj() @ S
    return bool(np.max(np.abs(r - vI.conj())) < tol or np.max(np.abs(r)) < tol)


def choi_min_eig(S: np.ndarray, d: int) -> float:
    C = choi_matrix(S, d)
    return float(np.linalg.eigvalsh((C + C.conj().T) / 2).min())

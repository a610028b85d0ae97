"""Gibbs states, reduced states, entropies, CMI, correlations, and Heisenberg
evolution with local truncation.

Sign convention: rho_beta = e^{+beta H}/Z (config echoes carry this).
Entropies are in bits throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import gmpy2
import numpy as np

from . import numkit as nk
from .lattice import HamiltonianSpec, assemble_dense

DOUBLE_EXP_LIMIT = 700.0


@dataclass(frozen=True)
class GibbsState:
    source: HamiltonianSpec
    beta: float
    rho: np.ndarray
    logZ: float
    prec: nk.Precision = nk.DOUBLE

    @property
    def n(self) -> int:
        return self.source.lattice.n

    @property
    def d(self) -> int:
        return self.source.lattice.d


@dataclass(frozen=True)
class Partition:
    """Tripartition A|B|C of a chain with the trimmed-middle geometry.

    B splits into B1 (A side) and B2 (C side) with d(A, B2) = ceil(R/2)
    (rounding toward A keeps B2 no closer to A than the midpoint).  The
    trimmed blocks remove l_H layers at the B1|B2 interface only, so that no
    interaction couples B1check to B2check while A-B1 and B2-C couplings stay.
    """

    A: tuple[int, ...]
    B: tuple[int, ...]
    C: tuple[int, ...]
    B1: tuple[int, ...]
    B2: tuple[int, ...]
    B1check: tuple[int, ...]
    B2check: tuple[int, ...]
    R: int
    l_H: int
    rounding: str = "d(A,B2)=ceil(R/2)"


def make_partition(H: HamiltonianSpec, A, C) -> Partition:
    lat = H.lattice
    A = tuple(sorted(set(A)))
    C = tuple(sorted(set(C)))
    if set(A) & set(C):
        raise ValueError("A and C must be disjoint")
    B = tuple(s for s in lat.sites if s not in A and s not in C)
    l_H = H.interaction_length()
    R = lat.distance(A, C)
    if R <= 2 * l_H:
        raise ValueError(f"partition too tight: d(A,C)={R} must exceed 2*l_H={2*l_H}")
    half = math.ceil(R / 2)
    B2 = tuple(s for s in B if lat.distance((s,), A) >= half)
    B1 = tuple(s for s in B if s not in B2)
    # trim l_H layers at the B1|B2 interface only
    B1check = tuple(s for s in B1 if lat.distance((s,), B2) > l_H) if B2 else B1
    B2check = tuple(s for s in B2 if lat.distance((s,), B1) > l_H) if B1 else B2
    return Partition(A, B, C, B1, B2, B1check, B2check, R, l_H)


def gibbs_density(Hdense: np.ndarray, beta: float, prec: nk.Precision = nk.DOUBLE,
                  eig=None):
    """(rho, logZ) for rho = e^{beta H}/Z from a dense Hamiltonian."""
    evals, U = eig if eig is not None else nk.eig_hermitian(Hdense, prec)
    with nk.workprec(prec):
        if prec.is_double:
            w = np.asarray(evals, dtype=float)
            if beta * float(np.max(np.abs(w))) > DOUBLE_EXP_LIMIT:
                raise OverflowError(
                    "beta*||H|| too large for the double lane; rerun with a big-float precision")
            shift = float(np.max(beta * w))
            p = np.exp(beta * w - shift)
            Z = float(np.sum(p))
            rho = (U * (p / Z)[None, :]) @ np.conj(U).T
            logZ = shift + math.log(Z)
            return rho, logZ
        b = nk.mpf_of(beta, prec)
        shift = max(b * ev for ev in evals)
        ps = [gmpy2.exp(b * ev - shift) for ev in evals]
        Z = gmpy2.mpfr(0)
        for v in ps:
            Z += v
        rho = nk.matmul(nk.matmul(U, nk.diag([v / Z for v in ps], prec), prec),
                        nk.adjoint(U), prec)
        return rho, float(shift + gmpy2.log(Z))
    raise AssertionError  # pragma: no cover


def gibbs_state(H: HamiltonianSpec, beta: float, prec: nk.Precision = nk.DOUBLE) -> GibbsState:
    if not (beta >= 0.0 and math.isfinite(beta)):
        raise ValueError("beta must be finite and >= 0")
    Hd = assemble_dense(H, prec)
    rho, logZ = gibbs_density(Hd, beta, prec)
    return GibbsState(H, beta, rho, logZ, prec)


def reduced(state: GibbsState | np.ndarray, region, n: int | None = None, d: int = 2,
            prec: nk.Precision = nk.DOUBLE) -> np.ndarray:
    if isinstance(state, GibbsState):
        rho, n, d, prec = state.rho, state.n, state.d, state.prec
    else:
        rho = state
        if n is None:
            raise ValueError("pass n for raw arrays")
    region = tuple(sorted(set(region)))
    return nk.partial_trace_sites(rho, region, n, d, prec)


def entropy_bits(rho: np.ndarray, prec: nk.Precision = nk.DOUBLE) -> float:
    """von Neumann entropy in bits; eigenvalues below 10^-(P-8) contribute zero."""
    evals, _ = nk.eig_hermitian(rho, prec, check=False)
    cutoff = prec.tol(8)  # 10^{8-P} = 10^{-(P-8)}
    s = 0.0
    for ev in evals:
        p = float(ev)
        if p > cutoff:
            s -= p * math.log2(p)
    return s


def cmi_bits(rho: np.ndarray, A, B, C, n: int, d: int = 2,
             prec: nk.Precision = nk.DOUBLE, clamp: bool = True):
    """I(A:C|B) = S(AB) + S(BC) - S(ABC) - S(B), reported in bits.

    Returns (clamped, raw): tiny negative numerics are clamped to 0 while the
    raw value is preserved for reporting.
    """
    A, B, C = (tuple(sorted(set(x))) for x in (A, B, C))
    if set(A) & set(B) or set(A) & set(C) or set(B) & set(C):
        raise ValueError("A, B, C must be disjoint")
    sAB = entropy_bits(nk.partial_trace_sites(rho, A + B, n, d, prec), prec)
    sBC = entropy_bits(nk.partial_trace_sites(rho, B + C, n, d, prec), prec)
    keepABC = tuple(sorted(A + B + C))
    sABC = entropy_bits(nk.partial_trace_sites(rho, keepABC, n, d, prec), prec)
    sB = entropy_bits(nk.partial_trace_sites(rho, B, n, d, prec), prec) if B else 0.0
    raw = sAB + sBC - sABC - sB
    return (max(raw, 0.0) if clamp else raw), raw


def correlation(rho: np.ndarray, OX: np.ndarray, OY: np.ndarray,
                support_X, support_Y) -> complex:
    """Cor(O_X, O_Y) = tr[rho O_X O_Y] - tr[rho O_X] tr[rho O_Y] (embedded operators)."""
    if set(support_X) & set(support_Y):
        raise ValueError("correlation requires disjoint supports")
    t_xy = complex(np.trace(rho @ OX @ OY))
    t_x = complex(np.trace(rho @ OX))
    t_y = complex(np.trace(rho @ OY))
    return t_xy - t_x * t_y


def heisenberg_evolve(O: np.ndarray, Hdense: np.ndarray, t: float,
                      prec: nk.Precision = nk.DOUBLE, eig=None) -> np.ndarray:
    """O(t) = e^{iHt} O e^{-iHt} via the eigendecomposition (exact, no stepping)."""
    evals, U = eig if eig is not None else nk.eig_hermitian(Hdense, prec)
    if prec.is_double:
        w = np.asarray(evals, dtype=float)
        ph = np.exp(1j * w * t)
        Oe = np.conj(U).T @ O @ U
        return U @ (Oe * np.outer(ph, ph.conj())) @ np.conj(U).T
    with nk.workprec(prec):
        tb = nk.mpf_of(t, prec)
        ph = [gmpy2.exp(gmpy2.mpc(0, 1) * tb * ev) for ev in evals]
        Oe = nk.matmul(nk.matmul(nk.adjoint(U), nk.to_precision(O, prec), prec), U, prec)
        n = len(evals)
        for i in range(n):
            for j in range(n):
                Oe[i, j] = Oe[i, j] * ph[i] * ph[j].conjugate()
        return nk.matmul(nk.matmul(U, Oe, prec), nk.adjoint(U), prec)
    raise AssertionError  # pragma: no cover


def truncated_heisenberg(O_embedded: np.ndarray, Hdense: np.ndarray, t: float,
                         center: int, r: int, n: int, d: int = 2,
                         prec: nk.Precision = nk.DOUBLE, eig=None) -> np.ndarray:
    """O^(t)_{i[r]} = tr~ of the evolved operator onto the ball i[r] (full-space matrix)."""
    Ot = heisenberg_evolve(O_embedded, Hdense, t, prec, eig=eig)
    ball = tuple(j for j in range(1, n + 1) if abs(j - center) <= r)
    traced = tuple(j for j in range(1, n + 1) if j not in ball)
    return nk.normalized_partial_trace_sites(Ot, traced, n, d, prec)


def log_linear_fit(xs, ys) -> tuple[float, float, float]:
    """Least-squares fit y = a + b x; returns (slope b, intercept a, correlation R)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    b, a = np.polyfit(xs, ys, 1)
    r = np.corrcoef(xs, ys)[0, 1]
    return float(b), float(a), float(r)

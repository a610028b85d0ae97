"""Dense evolution, spectral gap, chi-square divergence, mixing diagnostics."""

from __future__ import annotations

import numpy as np

from .. import numkit as nk
from .generator import CKGGenerator


def evolve(gen_or_superop, rho: np.ndarray, t: float) -> np.ndarray:
    """e^{L t} rho via the vectorized generator (scaling-and-squaring Taylor)."""
    S = gen_or_superop.superop() if isinstance(gen_or_superop, CKGGenerator) else gen_or_superop
    E = nk.superop_exp(S, t)
    return nk.apply_superop(E, rho)


def spectral_gap(gen_or_superop, rho_steady: np.ndarray | None = None,
                 max_iter: int = 5000, tol: float = 1e-10,
                 method: str = "power") -> float:
    """gap = -max{Re lambda : lambda in spec(L), |lambda| > 1e-8}.

    method="power": deflated power iteration on L + sigma I with the known
    steady state removed (right eigenvector vec(rho_ss), left vec(I)); sigma
    is twice the max row norm, making the dominant surviving eigenvalue the
    one with the largest real part.  method="dense": full eigvals (oracle).
    """
    S = gen_or_superop.superop() if isinstance(gen_or_superop, CKGGenerator) else gen_or_superop
    d2 = S.shape[0]
    d = int(round(np.sqrt(d2)))
    if method == "dense":
        ev = np.linalg.eigvals(S)
        nz = ev[np.abs(ev) > 1e-8]
        return float(-nz.real.max())
    if rho_steady is None:
        raise ValueError("power iteration needs the steady state for deflation")
    vR = rho_steady.flatten(order="F")
    vL = np.eye(d, dtype=complex).flatten(order="F")
    norm = vL.conj() @ vR

    def deflate(y):
        return y - vR * ((vL.conj() @ y) / norm)

    sigma = 2.0 * float(np.max(np.sum(np.abs(S), axis=1)))
    rng = np.random.default_rng(12345)
    y = deflate(rng.normal(size=d2) + 1j * rng.normal(size=d2))
    y /= np.linalg.norm(y)
    lam_old = None
    for _ in range(max_iter):
        z = deflate(S @ y + sigma * y)
        nz = np.linalg.norm(z)
        if nz == 0:
            break
        z /= nz
        lam = (z.conj() @ (S @ z)) / (z.conj() @ z)
        y = z
        if lam_old is not None and abs(lam - lam_old) < tol:
            break
        lam_old = lam
    return float(-lam.real)


def chi2(rho_prime: np.ndarray, rho: np.ndarray, prec: nk.Precision = nk.DOUBLE) -> float:
    """chi^2(rho', rho) = tr[(rho' - rho) rho^{-1/2} (rho' - rho) rho^{-1/2}]."""
    evals, U = nk.eig_hermitian(rho, prec, check=False)
    if float(min(evals)) <= 0.0:
        raise ValueError("chi^2 needs a positive-definite reference state")
    w = np.asarray(evals, dtype=float)
    inv_sqrt = U @ np.diag(w ** -0.5) @ U.conj().T
    D = rho_prime - rho
    return float(np.real(np.trace(D @ inv_sqrt @ D @ inv_sqrt)))


def chi2_classical(p_prime, p) -> float:
    """Diagonal/classical collapse: sum (p' - p)^2 / p."""
    p_prime = np.asarray(p_prime, dtype=float)
    p = np.asarray(p, dtype=float)
    return float(np.sum((p_prime - p) ** 2 / p))


def chi2_bound_audit(chi2_value: float, beta: float, g0: float, g: float, k: int) -> dict:
    """Audit chi^2 <= 4 e^{3 beta g0}; the proof needs beta <= 1/(4 g k)."""
    bound = 4.0 * float(np.exp(3.0 * beta * g0))
    applicable = beta <= 1.0 / (4.0 * g * k)
    return {
        "chi2": chi2_value,
        "bound": bound,
        "holds": bool(chi2_value <= bound),
        "proof_applicable": bool(applicable),
        "beta_threshold": 1.0 / (4.0 * g * k),
    }


def mixing_curve(gen: CKGGenerator, rho0: np.ndarray, rho_target: np.ndarray,
                 times) -> list[dict]:
    """Trace distance to the target along e^{L t} rho0 (doubling-reuse of exps)."""
    S = gen.superop()
    out = []
    times = sorted(times)
    base = times[0]
    E = nk.superop_exp(S, base)
    acc = {base: E}
    for t in times:
        Et = _power_compose(acc, S, base, t)
        rt = nk.apply_superop(Et, rho0)
        out.append({"t": t, "trace_distance": float(nk.trace_norm(rt - rho_target))})
    return out


def _power_compose(acc: dict, S: np.ndarray, base: float, t: float) -> np.ndarray:
    if t in acc:
        return acc[t]
    k = t / base
    if abs(k - round(k)) < 1e-12 and round(k) >= 1:
        # integer multiple of the base time: binary power of the cached exp
        remaining = int(round(k))
        E = np.eye(S.shape[0], dtype=complex)
        P = acc[base]
        while remaining:
            if remaining & 1:
                E = E @ P
            P = P @ P
            remaining >>= 1
    else:
        E = nk.superop_exp(S, t)
    acc[t] = E
    return E

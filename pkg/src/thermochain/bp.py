"""Exact belief-propagation operators between Gibbs operators of H and H'.

The exact operator is the closed form Phi = e^{-beta H/2} e^{beta H'/2}, which
satisfies Phi^dag e^{beta H} Phi = e^{beta H'} identically; truncations
localize Phi with the normalized partial trace onto a ball around the updated
site.  Truncated conjugation is CP but not trace-preserving, so raw and
trace-renormalized errors are reported separately.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numkit as nk
from .gibbs import gibbs_density
from .lattice import HamiltonianSpec, assemble_dense

SIGN_CONVENTION = "+beta H"


@dataclass(frozen=True)
class BPOperator:
    phi: np.ndarray
    beta: float
    support: tuple[int, ...] | None   # None = full chain
    n: int
    d: int = 2


def exact_bp(Hdense: np.ndarray, Hpdense: np.ndarray, beta: float, n: int, d: int = 2,
             prec: nk.Precision = nk.DOUBLE) -> BPOperator:
    if Hdense.shape != Hpdense.shape:
        raise ValueError("H and H' must share a dimension")
    was = nk.mat_exp_hermitian(Hdense, -beta / 2.0, prec)
    wax = nk.mat_exp_hermitian(Hpdense, beta / 2.0, prec)
    phi = nk.matmul(was, wax, prec)
    return BPOperator(phi, beta, None, n, d)


def truncate_bp(op: BPOperator, center: int, ell: float,
                prec: nk.Precision = nk.DOUBLE) -> BPOperator:
    ball = tuple(j for j in range(1, op.n + 1) if abs(j - center) <= ell)
    traced = tuple(j for j in range(1, op.n + 1) if j not in ball)
    phi = nk.normalized_partial_trace_sites(op.phi, traced, op.n, op.d, prec)
    return BPOperator(phi, op.beta, ball, op.n, op.d)


def conjugation_residual(op: BPOperator, Hdense: np.ndarray, Hpdense: np.ndarray,
                         prec: nk.Precision = nk.DOUBLE) -> float:
    """Frobenius residual of Phi^dag e^{bH} Phi = e^{bH'}, relative to ||e^{bH'}||_F."""
    ebh = nk.mat_exp_hermitian(Hdense, op.beta, prec)
    ebhp = nk.mat_exp_hermitian(Hpdense, op.beta, prec)
    with nk.workprec(prec):
        lhs = nk.matmul(nk.matmul(nk.adjoint(op.phi), ebh, prec), op.phi, prec)
        num = nk.frobenius_norm(lhs - ebhp, prec)
        den = nk.frobenius_norm(ebhp, prec)
        return float(num / den)
    raise AssertionError  # pragma: no cover


def bp_truncation_error(Hdense: np.ndarray, Hpdense: np.ndarray, beta: float,
                        center: int, ell: float, n: int, d: int = 2,
                        prec: nk.Precision = nk.DOUBLE) -> dict:
    """Trace-norm error of the truncated BP conjugation at radius ell.

    raw       = ||e^{bH'} - Phi~^dag e^{bH} Phi~||_1 / tr(e^{bH'})
    renorm    = ||rho' - sigma/tr(sigma)||_1 with sigma the truncated conjugation
    """
    op = exact_bp(Hdense, Hpdense, beta, n, d, prec)
    opt = truncate_bp(op, center, ell, prec)
    ebh = nk.mat_exp_hermitian(Hdense, beta, prec)
    ebhp = nk.mat_exp_hermitian(Hpdense, beta, prec)
    sigma = nk.matmul(nk.matmul(nk.adjoint(opt.phi), ebh, prec), opt.phi, prec)
    with nk.workprec(prec):
        trp = nk.trace(ebhp, prec).real
        raw = float(nk.trace_norm(ebhp - sigma, prec) / trp)
        trs = nk.trace(sigma, prec).real
        rhop = ebhp * (1.0 / float(trp)) if prec.is_double else ebhp / trp
        sig = sigma * (1.0 / float(trs)) if prec.is_double else sigma / trs
        renorm = float(nk.trace_norm(rhop - sig, prec))
    return {"ell": float(ell), "raw": raw, "renormalized": renorm}


def local_indistinguishability(Hdense: np.ndarray, Hpdense: np.ndarray, beta: float,
                               center: int, ell: float, n: int, d: int = 2,
                               prec: nk.Precision = nk.DOUBLE) -> float:
    """||rho_{beta,i0[ell]^c}(H) - rho_{beta,i0[ell]^c}(H')||_1."""
    ball = tuple(j for j in range(1, n + 1) if abs(j - center) <= ell)
    keep = tuple(j for j in range(1, n + 1) if j not in ball)
    if not keep:
        raise ValueError("i0[ell] covers the whole chain; the reduced states are scalars")
    rho, _ = gibbs_density(Hdense, beta, prec)
    rhop, _ = gibbs_density(Hpdense, beta, prec)
    a = nk.partial_trace_sites(rho, keep, n, d, prec)
    b = nk.partial_trace_sites(rhop, keep, n, d, prec)
    return float(nk.trace_norm(a - b, prec))


def norm_ratio_audit(Hdense: np.ndarray, Hpdense: np.ndarray, beta: float,
                     prec: nk.Precision = nk.DOUBLE) -> dict:
    """ratio = tr(e^{bH})/tr(e^{bH'}) with the Golden-Thompson bound e^{beta ||v||}."""
    ebh = nk.mat_exp_hermitian(Hdense, beta, prec)
    ebhp = nk.mat_exp_hermitian(Hpdense, beta, prec)
    with nk.workprec(prec):
        ratio = float(nk.trace(ebh, prec).real / nk.trace(ebhp, prec).real)
    v = Hpdense - Hdense
    vnorm = float(nk.op_norm(v, prec))
    bound = float(np.exp(beta * vnorm))
    return {"ratio": ratio, "bound": bound, "v_norm": vnorm, "holds": ratio <= bound * (1 + 1e-12)}


def site_update(H: HamiltonianSpec, L, Lp) -> tuple[HamiltonianSpec, HamiltonianSpec, int]:
    """Subset Hamiltonian update pair (H_L, H_L') with |symmetric difference| = 1."""
    from .lattice import subset_hamiltonian
    L, Lp = set(L), set(Lp)
    diff = L.symmetric_difference(Lp)
    if len(diff) != 1:
        raise ValueError("subset update must add or remove exactly one site")
    return subset_hamiltonian(H, L), subset_hamiltonian(H, Lp), diff.pop()

"""Boundary effective term, Bernoulli series, and the divergence experiment.

The boundary term of the reduced Gibbs operator on sites 1..n-1 is, to first
order in the terminal-bond coupling a,

    tr_n(e^{beta H_a}) = G e^{beta a dh^dag} e^{beta H_{<=n-1}} e^{beta a dh} + O(a^2),

with dh built from the exact Duhamel integral (e^{-x beta H0} conjugations in
the x in [0,1] parameterization).  The weight sequence Q(m) tracks the
Frobenius norm of the m-th Bernoulli term of the conjugation-log expansion;
its eventual growth at fixed beta is the divergence under study.  Big-float
work runs through the eigenbasis of H_{<=n-1}, where the commutator power
recurrence is the entrywise Bohr-frequency recurrence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

import gmpy2
import numpy as np

from . import numkit as nk
from .lattice import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    HamiltonianSpec,
    LatticeSpec,
    assemble_dense,
    single_coupling_family,
    subset_hamiltonian,
)

SIGN_CONVENTION = "+beta H"

M_MAX_CAP = 80
BERNOULLI_CAP = 100


def bernoulli_table(m_max: int) -> list[Fraction]:
    """B_0..B_m_max, first convention (B_1 = -1/2), by the binomial recurrence."""
    if m_max > BERNOULLI_CAP:
        raise ValueError(f"m_max capped at {BERNOULLI_CAP}")
    B = [Fraction(1)]
    for m in range(1, m_max + 1):
        s = Fraction(0)
        for k in range(m):
            s += comb(m + 1, k) * B[k]
        B.append(-s / (m + 1))
    return B


def bernoulli_asymptotic(j: int) -> float:
    """|B_2j| ~ 4 sqrt(pi j) (j/(pi e))^(2j)."""
    return 4.0 * math.sqrt(math.pi * j) * (j / (math.pi * math.e)) ** (2 * j)


def required_digits(m_max: int, h0_norm: float) -> int:
    """Conservative precision floor: each commutator can grow entries by 2||H0||."""
    return 15 + math.ceil(m_max * math.log10(2.0 * h0_norm + 1.0))


@dataclass(frozen=True)
class BoundaryTerm:
    """dh on sites 1..n-1 (computational basis) plus G = tr_site(e^{beta h_n})."""

    matrix: np.ndarray
    G: float
    beta: float
    prec: nk.Precision


def _terminal_parts(H: HamiltonianSpec):
    """(H_{<=n-1} spec on n-1 sites, terminal bond 4x4, terminal field 2x2)."""
    n = H.lattice.n
    Hm1_terms = subset_hamiltonian(H, tuple(range(1, n))).terms
    Hm1_small = HamiltonianSpec(LatticeSpec(n - 1, H.lattice.d), Hm1_terms,
                                dict(H.coefficients))
    bonds = [t for t in H.terms if t.support == (n - 1, n)]
    fields = [t for t in H.terms if t.support == (n,)]
    if len(bonds) != 1 or len(fields) != 1:
        raise ValueError("expected exactly one terminal bond and one terminal field term")
    return Hm1_small, H.term_matrix(bonds[0]), H.term_matrix(fields[0])


def _pauli_pair_decomposition(bond4: np.ndarray):
    """bond = sum_ab w_ab sigma_a (x) sigma_b over the I,X,Y,Z pair basis."""
    basis = [np.eye(2, dtype=complex), PAULI_X, PAULI_Y, PAULI_Z]
    out = []
    for a, pa in enumerate(basis):
        for b, pb in enumerate(basis):
            w = complex(np.trace(np.kron(pa, pb).conj().T @ bond4)) / 4.0
            if abs(w) > 1e-14:
                out.append((w, pa, pb))
    return out


def _phi_expm1_over(z, prec: nk.Precision):
    """(e^z - 1)/z with a 6-term series near z = 0."""
    if prec.is_double:
        if abs(z) < 1e-4:
            return 1.0 + z / 2 + z * z / 6 + z ** 3 / 24 + z ** 4 / 120 + z ** 5 / 720
        return math.expm1(z) / z
    if abs(z) < 1e-4:
        # series error ~ z^6/5040 ~ 1e-28; below that, use the exact route only
        # when the working precision actually resolves it
        if prec.pdigits <= 24 or abs(z) < gmpy2.mpfr(10) ** (-prec.pdigits // 2):
            return 1 + z / 2 + z * z / 6 + z ** 3 / 24 + z ** 4 / 120 + z ** 5 / 720
    if z == 0:
        return gmpy2.mpfr(1)
    return gmpy2.expm1(z) / z


def _boundary_term_eigbasis(bond4: np.ndarray, field2: np.ndarray, beta: float,
                            evals, U, prec: nk.Precision):
    """(dh in the H_{<=n-1} eigenbasis, G).

    dh'_{jk} = phi(-beta nu_jk) * [sum_ab w_ab c_b (U^dag P_a U)_{jk}] / (2G)
    with c_b = tr(e^{beta h_n} sigma_b) on the terminal site and P_a the
    left Pauli factor embedded at site n-1 of the kept chain.
    """
    nm1 = int(round(math.log2(U.shape[0])))
    with nk.workprec(prec):
        b = nk.mpf_of(beta, prec)
        field = field2 if prec.is_double else nk.to_precision(field2, prec)
        fe, fU = nk.eig_hermitian(field, prec,
                                  method="lapack" if prec.is_double else "jacobi")
        ebh = nk.mat_exp_hermitian(field, beta if prec.is_double else b, prec, eig=(fe, fU))
        G = nk.trace(ebh, prec).real
        acc = None
        for w, pa, pb in _pauli_pair_decomposition(bond4):
            pb_p = pb if prec.is_double else nk.to_precision(pb, prec)
            c_b = nk.trace(nk.matmul(ebh, pb_p, prec), prec)
            pa_p = pa if prec.is_double else nk.to_precision(pa, prec)
            Pemb = nk.embed_on_sites(pa_p, (nm1,), nm1, 2, prec)
            Pe = nk.matmul(nk.matmul(nk.adjoint(U), Pemb, prec), U, prec)
            term = (nk.mpc_of(w, prec) * c_b) * Pe
            acc = term if acc is None else acc + term
        dim = U.shape[0]
        out = nk.zeros(dim, dim, prec)
        if acc is None:   # zero bond: the boundary term vanishes
            return out, G
        for j in range(dim):
            for k in range(dim):
                z = -b * (evals[j] - evals[k]) if not prec.is_double \
                    else -beta * (evals[j] - evals[k])
                out[j, k] = acc[j, k] * _phi_expm1_over(z, prec) / (2 * G)
        return out, G
    raise AssertionError  # pragma: no cover


def boundary_effective_term(H: HamiltonianSpec, beta: float,
                            prec: nk.Precision = nk.DOUBLE, eig=None) -> BoundaryTerm:
    """dh = (1/2G) int_0^1 tr_n(e^{beta h_n} e^{-x beta H0} h_{n-1,n} e^{x beta H0}) dx.

    Evaluated exactly in the eigenbasis: H0 = H_{<=n-1} + h_n has product
    eigenstructure, and the x-integral contributes the entrywise factor
    (e^z - 1)/z at z = -beta(E_j - E_k) of the H_{<=n-1} eigenvalues.
    """
    Hm1_small, bond4, field2 = _terminal_parts(H)
    Hm1d = assemble_dense(Hm1_small, prec)
    evals, U = eig if eig is not None else nk.eig_hermitian(Hm1d, prec)
    dh_eig, G = _boundary_term_eigbasis(bond4, field2, beta, evals, U, prec)
    with nk.workprec(prec):
        dh = nk.matmul(nk.matmul(U, dh_eig, prec), nk.adjoint(U), prec)
    return BoundaryTerm(dh, float(G), beta, prec)


def boundary_term_quadrature(H: HamiltonianSpec, beta: float, nodes: int = 48,
                             prec: nk.Precision = nk.DOUBLE) -> np.ndarray:
    """Gauss-Legendre oracle for the x-integral (full 2^n-dimensional route)."""
    n = H.lattice.n
    Hm1_small, bond4, field2 = _terminal_parts(H)
    bond_label = [t for t in H.terms if t.support == (n - 1, n)][0].label
    coeffs = dict(H.coefficients)
    coeffs[bond_label] = 0.0
    H0d = assemble_dense(H.with_coefficients(coeffs), prec)   # H minus terminal bond
    bond_emb = nk.embed_on_sites(bond4, (n - 1, n), n, 2, nk.DOUBLE)
    field_p = field2 if prec.is_double else nk.to_precision(field2, prec)
    ebh_site = nk.mat_exp_hermitian(field_p, beta, prec)
    E_site = nk.embed_on_sites(nk.as_double(ebh_site), (n,), n, 2, nk.DOUBLE)
    with nk.workprec(prec):
        G = nk.trace(ebh_site, prec).real
        if not prec.is_double:
            bond_emb = nk.to_precision(bond_emb, prec)
            E_site = nk.embed_on_sites(ebh_site, (n,), n, 2, prec)
    xs, ws = np.polynomial.legendre.leggauss(nodes)
    xs = 0.5 * (xs + 1.0)
    ws = 0.5 * ws
    eigH0 = nk.eig_hermitian(H0d, prec)
    acc = None
    for x, w in zip(xs, ws):
        Em = nk.mat_exp_hermitian(H0d, -x * beta, prec, eig=eigH0)
        Ep = nk.mat_exp_hermitian(H0d, x * beta, prec, eig=eigH0)
        with nk.workprec(prec):
            term = nk.matmul(nk.matmul(nk.matmul(E_site, Em, prec), bond_emb, prec), Ep, prec)
            acc = w * term if acc is None else acc + w * term
    with nk.workprec(prec):
        red = nk.partial_trace_sites(acc, tuple(range(1, n)), n, 2, prec)
        return red / (2 * G)
    raise AssertionError  # pragma: no cover


# ---------------------------------------------------------------------------
# Q(m) sequence

@dataclass(frozen=True)
class QSequencePoint:
    m: int
    q: float            # lossy double view for plotting
    q_str: str          # full-precision decimal string
    log10q: float


def q_sequence(H: HamiltonianSpec, beta: float, m_max: int,
               prec: nk.Precision = nk.DOUBLE, mode: str = "eigen") -> list[QSequencePoint]:
    """Q(m) = || beta * (beta^m B_m / m!) [ad^m_{H<=n-1}(dh) + h.c.] ||_F.

    mode="eigen": the commutator recurrence runs entrywise in the H_{<=n-1}
    eigenbasis (Frobenius norms are basis-independent).  mode="direct": the
    dense recurrence X_m = H X_{m-1} - X_{m-1} H in the computational basis
    (oracle for small n).  Odd m >= 3 vanish exactly (Bernoulli zeros) and are
    skipped in the output.
    """
    if m_max > M_MAX_CAP:
        raise ValueError(f"m_max capped at {M_MAX_CAP}")
    Hm1_small, bond4, field2 = _terminal_parts(H)
    Hm1d = assemble_dense(Hm1_small, prec)
    h0n = float(nk.op_norm(nk.as_double(Hm1d)))
    pmin = required_digits(m_max, h0n)
    if not prec.is_double and prec.digits < pmin:
        raise ValueError(
            f"requested m_max={m_max} needs >= {pmin} digits at ||H0||={h0n:.2f}; "
            f"got {prec.digits}")
    B = bernoulli_table(m_max)
    evals, U = nk.eig_hermitian(Hm1d, prec)
    if mode == "eigen":
        dh_eig, _G = _boundary_term_eigbasis(bond4, field2, beta, evals, U, prec)
        return _q_from_eigbasis(dh_eig, evals, beta, m_max, B, prec)
    if mode == "direct":
        bt = boundary_effective_term(H, beta, prec, eig=(evals, U))
        return _q_direct(bt.matrix, Hm1d, beta, m_max, B, prec)
    raise ValueError(f"unknown mode {mode!r}")


def _frac_scalar(fr: Fraction, prec: nk.Precision):
    """Fraction -> lane scalar without overflowing float on big numerators."""
    if prec.is_double:
        return float(fr)
    return nk.mpf_of(fr.numerator, prec) / fr.denominator


def _q_point(m: int, val, prec: nk.Precision) -> QSequencePoint:
    if prec.is_double:
        q = float(val)
        return QSequencePoint(m, q, repr(q), math.log10(q) if q > 0 else float("-inf"))
    with nk.workprec(prec):
        qs = +val
        lq = float(gmpy2.log10(qs)) if qs > 0 else float("-inf")
        return QSequencePoint(m, float(qs), str(qs), lq)
    raise AssertionError  # pragma: no cover


def _q_from_eigbasis(dh_eig, evals, beta, m_max, B, prec) -> list[QSequencePoint]:
    dim = dh_eig.shape[0]
    out = []
    with nk.workprec(prec):
        b = nk.mpf_of(beta, prec)
        adm = dh_eig.copy()          # ad^m(dh) entrywise: nu^m dh
        if prec.is_double:
            w = np.asarray(evals, dtype=float)
            nu = (w[:, None] - w[None, :]).astype(complex)
        else:
            nu = nk.zeros(dim, dim, prec)
            for j in range(dim):
                for k in range(dim):
                    nu[j, k] = nk.mpc_of(evals[j] - evals[k], prec)
        for m in range(m_max + 1):
            if B[m] != 0:
                W = adm + nk.adjoint(adm)   # the series bracket ad^m(dh) + h.c.
                pref = abs(B[m]) * Fraction(1, factorial(m))
                pf = _frac_scalar(pref, prec) * b ** (m + 1)
                val = pf * nk.frobenius_norm(W, prec)
                out.append(_q_point(m, val, prec))
            if m < m_max:
                adm = adm * nu
    return out


def _q_direct(dh, Hm1d, beta, m_max, B, prec) -> list[QSequencePoint]:
    out = []
    with nk.workprec(prec):
        b = nk.mpf_of(beta, prec)
        X = dh.copy()
        for m in range(m_max + 1):
            if B[m] != 0:
                W = X + nk.adjoint(X)
                pref = abs(B[m]) * Fraction(1, factorial(m))
                pf = _frac_scalar(pref, prec) * b ** (m + 1)
                val = pf * nk.frobenius_norm(W, prec)
                out.append(_q_point(m, val, prec))
            if m < m_max:
                X = nk.matmul(Hm1d, X, prec) - nk.matmul(X, Hm1d, prec)
    return out


# ---------------------------------------------------------------------------
# first-order identity audits

def bch_series(A: np.ndarray, Bop: np.ndarray, beta: float, m_terms: int = 30,
               b1_convention: Fraction = Fraction(-1, 2),
               prec: nk.Precision = nk.DOUBLE) -> np.ndarray:
    """S = sum_{m=0}^{M} ((-beta)^m B_m / m!) [ad_A^m(B) + h.c.].

    The m=0 term (B_0 = 1) is required: the commuting case collapses to
    2*Re(B).  The (-1)^m fixes the commutator orientation of the printed
    expansion; with it the identity holds exactly at B_1 = -1/2, while the
    +1/2 substitution (b1_convention) breaks the first order.
    """
    B = bernoulli_table(m_terms)
    B[1] = b1_convention
    with nk.workprec(prec):
        b = -nk.mpf_of(beta, prec)
        X = Bop if prec.is_double else nk.to_precision(Bop, prec)
        Ab = A if prec.is_double else nk.to_precision(A, prec)
        S = None
        for m in range(m_terms + 1):
            if B[m] != 0:
                W = X + nk.adjoint(X)
                c = _frac_scalar(B[m] * Fraction(1, factorial(m)), prec) * b ** m
                S = c * W if S is None else S + c * W
            if m < m_terms:
                X = nk.matmul(Ab, X, prec) - nk.matmul(X, Ab, prec)
        return S
    raise AssertionError  # pragma: no cover


def bch_first_order_audit(A: np.ndarray, Bop: np.ndarray, beta: float,
                          a_values=(1e-3, 1e-4, 1e-5), m_terms: int = 30,
                          b1_convention: Fraction = Fraction(-1, 2),
                          prec: nk.Precision = nk.DOUBLE) -> dict:
    """Residuals of log(e^{b a B^dag} e^{b A} e^{b a B}) = b A + b a S + O(a^2)."""
    S = bch_series(A, Bop, beta, m_terms, b1_convention, prec)
    EA = nk.mat_exp_hermitian(A, beta, prec)
    res = []
    for a in a_values:
        with nk.workprec(prec):
            ba = nk.mpf_of(beta, prec) * nk.mpf_of(a, prec)
        EB = _exp_series(Bop, ba, prec)   # B need not be Hermitian
        P = nk.matmul(nk.matmul(nk.adjoint(EB), EA, prec), EB, prec)
        L = nk.mat_log_pd(P, prec)
        with nk.workprec(prec):
            b = nk.mpf_of(beta, prec)
            ab = nk.mpf_of(a, prec)
            R = L - b * (A if prec.is_double else nk.to_precision(A, prec)) - (b * ab) * S
            res.append(float(nk.frobenius_norm(R, prec)))
    slope = _loglog_slope(a_values, res)
    return {"a_values": list(a_values), "residuals": res, "slope": slope}


def reduced_gibbs_first_order_audit(H: HamiltonianSpec, beta: float,
                                    a_values=(1e-3, 1e-4, 1e-5),
                                    prec: nk.Precision = nk.DOUBLE,
                                    use_quadrature_dh: bool = False) -> dict:
    """Residuals of tr_n(e^{beta H_a}) = G e^{b a dh^dag} e^{b H<=n-1} e^{b a dh} + O(a^2)."""
    n = H.lattice.n
    Hm1_small, bond4, field2 = _terminal_parts(H)
    if use_quadrature_dh:
        dh = boundary_term_quadrature(H, beta, prec=prec)
        field_p = field2 if prec.is_double else nk.to_precision(field2, prec)
        with nk.workprec(prec):
            G = float(nk.trace(nk.mat_exp_hermitian(field_p, beta, prec), prec).real)
    else:
        bt = boundary_effective_term(H, beta, prec)
        dh, G = bt.matrix, bt.G
    Em1 = nk.mat_exp_hermitian(assemble_dense(Hm1_small, prec), beta, prec)
    res = []
    for a in a_values:
        Ha = assemble_dense(single_coupling_family(H, a), prec)
        lhs = nk.partial_trace_sites(nk.mat_exp_hermitian(Ha, beta, prec),
                                     tuple(range(1, n)), n, 2, prec)
        with nk.workprec(prec):
            ba = nk.mpf_of(beta, prec) * nk.mpf_of(a, prec)
        # dh is not Hermitian, so exponentiate by plain series (||ba*dh|| << 1)
        Edh = _exp_series(dh, ba, prec)
        with nk.workprec(prec):
            rhs = G * nk.matmul(nk.matmul(nk.adjoint(Edh), Em1, prec), Edh, prec)
            res.append(float(nk.frobenius_norm(lhs - rhs, prec)))
    slope = _loglog_slope(a_values, res)
    return {"a_values": list(a_values), "residuals": res, "slope": slope}


def _exp_series(M: np.ndarray, s, prec: nk.Precision) -> np.ndarray:
    """exp(s M) by plain Taylor (callers guarantee ||s M|| << 1)."""
    d = M.shape[0]
    with nk.workprec(prec):
        E = nk.eye(d, prec)
        term = nk.eye(d, prec)
        Ms = s * (M.astype(complex) if prec.is_double else M)
        for k in range(1, 60):
            term = nk.matmul(term, Ms, prec) / k
            E = E + term
            if float(nk.frobenius_norm(term, prec)) < prec.tol(0):
                break
        return E
    raise AssertionError  # pragma: no cover


def _loglog_slope(a_values, residuals) -> float:
    xs = np.log10(np.asarray(a_values, dtype=float))
    ys = np.log10(np.asarray(residuals, dtype=float))
    return float(np.polyfit(xs, ys, 1)[0])


def shift_invariance_audit(H: HamiltonianSpec, beta: float, m_max: int, shift: float,
                           prec: nk.Precision = nk.DOUBLE) -> float:
    """max relative change of Q(m) under a terminal-field energy shift h_n -> h_n + c.

    The G bookkeeping cancels the shift exactly, so Q should be unchanged to
    working accuracy.
    """
    from .lattice import InteractionTerm
    base = q_sequence(H, beta, m_max, prec)
    n = H.lattice.n
    new_terms = []
    for t in H.terms:
        if t.support == (n,):
            new_terms.append(InteractionTerm((n,), t.op + shift * np.eye(2), t.label))
        else:
            new_terms.append(t)
    Hs = HamiltonianSpec(H.lattice, tuple(new_terms), dict(H.coefficients))
    shifted = q_sequence(Hs, beta, m_max, prec)
    worst = 0.0
    for p0, p1 in zip(base, shifted):
        if p0.q != 0:
            worst = max(worst, abs(p0.q - p1.q) / abs(p0.q))
    return worst

"""Cluster-expansion coefficients for the log of a partially traced Gibbs
operator, in exact rational arithmetic.

Two independent routes compute the same coefficient table: a closed form and
a combinatorial enumeration over mixed-radix index sequences; their equality
for every composition is checked, never assumed.  Floating point never
touches this module's coefficient arithmetic.

Sign convention here: e^{-beta H} (opposite to the rest of the package).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np

from . import numkit as nk

SIGN_CONVENTION = "-beta H"

COMBINATORIAL_M_CAP = 9   # |Delta_m| = m! enumeration budget


@dataclass(frozen=True)
class Composition:
    parts: tuple[int, ...]

    def __post_init__(self):
        if not self.parts or any(p < 1 for p in self.parts):
            raise ValueError("composition parts must be positive integers")
        object.__setattr__(self, "parts", tuple(int(p) for p in self.parts))

    @property
    def m(self) -> int:
        return sum(self.parts)

    @property
    def q(self) -> int:
        return len(self.parts)


def coeff_closed(parts) -> Fraction:
    """Closed form (d_{L^c}^q factored out): (-1)^(m+q-1)/(q*q!) * m!/(prod m_i!)."""
    c = Composition(tuple(parts))
    m, q = c.m, c.q
    denom = 1
    for p in c.parts:
        denom *= factorial(p)
    return Fraction((-1) ** (m + q - 1) * factorial(m), q * factorial(q) * denom)


@lru_cache(maxsize=None)
def _delta_m_table(m: int) -> dict[tuple[int, ...], int]:
    """Accumulate sum of c_iota over Delta_m, keyed by the occupation vector N(iota, .).

    Delta_m = {1} x {1,2} x ... x {1..m}; c_iota = prod_{k=1}^{m-1} (1 - (k+1) delta(i_k, k+1)).
    """
    if m > COMBINATORIAL_M_CAP:
        raise ValueError(f"combinatorial enumeration capped at m={COMBINATORIAL_M_CAP}")
    table: dict[tuple[int, ...], int] = {}
    for iota in itertools.product(*(range(1, k + 1) for k in range(1, m + 1))):
        c = 1
        for k in range(1, m):
            if iota[k] == k + 1:
                c *= -k  # (1 - (k+1)) = -k
        occ = [0] * m
        for v in iota:
            occ[v - 1] += 1
        key = tuple(occ)
        table[key] = table.get(key, 0) + c
    return table


def _ordered_coeff(parts: tuple[int, ...]) -> Fraction:
    """(-1)^m/q! * sum over {m_bar} with nonzero-subsequence == parts of the iota sums."""
    m = sum(parts)
    q = len(parts)
    table = _delta_m_table(m)
    total = 0
    # choose increasing positions for the nonzero entries; position 1 must be occupied
    for pos in itertools.combinations(range(m), q):
        if pos[0] != 0:
            continue  # m_bar_1 >= 1 always
        mbar = [0] * m
        ok = True
        for t, p in enumerate(pos):
            # constraint m_bar_k <= m - k + 1 (1-based k = p+1)
            if parts[t] > m - p:
                ok = False
                break
            mbar[p] = parts[t]
        if not ok:
            continue
        total += table.get(tuple(mbar), 0)
    return Fraction((-1) ** m * total, factorial(q))


def coeff_combinatorial(parts) -> Fraction:
    """Symmetrized combinatorial coefficient (d_{L^c}^q factored out).

    Averages the ordered coefficient over the permutations of the parts;
    duplicate permutations of equal parts contribute identical summands to
    both the sum and the normalizer, so counting with or without multiplicity
    gives the same value (we count distinct orderings).
    """
    c = Composition(tuple(parts))
    orderings = set(itertools.permutations(c.parts))
    acc = Fraction(0)
    for o in orderings:
        acc += _ordered_coeff(o)
    return acc / len(orderings)


def compositions(m: int, q: int | None = None):
    """Ordered compositions of m (optionally into exactly q parts)."""
    def rec(rem, prefix):
        if rem == 0:
            yield tuple(prefix)
            return
        for p in range(1, rem + 1):
            yield from rec(rem - p, prefix + [p])
    for comp in rec(m, []):
        if q is None or len(comp) == q:
            yield comp


def multisets(m: int):
    """Canonical (sorted) part multisets of m."""
    seen = []
    out = []
    for comp in compositions(m):
        key = tuple(sorted(comp))
        if key not in seen:
            seen.append(key)
            out.append(key)
    return sorted(out, key=lambda t: (len(t), t))


def scalar_collapse_sum(m: int) -> Fraction:
    """sum over ordered compositions of coefficient * q! (the symmetrizer count).

    For scalar H (and d_{L^c}=1) every ordering of the product collapses to
    x^m, so the bare-sum symmetrizer contributes q! identical terms and the
    expansion must reproduce log(e^{-beta x}) = -beta x: the sum is -1 at m=1
    and 0 for every m >= 2.
    """
    acc = Fraction(0)
    for comp in compositions(m):
        acc += coeff_closed(comp) * factorial(len(comp))
    return acc


# ---------------------------------------------------------------------------
# Taylor derivative operators of log tr_{L^c}(e^{-beta H})/d_{L^c}

def _sym_average_product(mats, prec: nk.Precision) -> np.ndarray:
    """Average of the products over all orderings of the (non-commuting) factors."""
    q = len(mats)
    acc = None
    for perm in itertools.permutations(range(q)):
        P = mats[perm[0]]
        for i in perm[1:]:
            P = nk.matmul(P, mats[i], prec)
        acc = P if acc is None else acc + P
    return acc / factorial(q)


def taylor_log_reduced(Hdense: np.ndarray, keep_sites, n: int, m_max: int,
                       d: int = 2, prec: nk.Precision = nk.DOUBLE) -> list[np.ndarray]:
    """Derivative operators D_m = d^m/dbeta^m log[tr_{L^c}(e^{-beta H})/d_{L^c}] at beta=0.

    Returns [D_0 .. D_m_max] as dense operators on the kept factor L.
    D_m = sum_q (-1)^(q-1)/q sum_{compositions} m!(-1)^m/(prod m_i!)
          * avg_orderings[ tr(H^{m_1}) ... tr(H^{m_q}) ] / d_{L^c}^q
    """
    if m_max > 6:
        raise ValueError("m_max capped at 6")
    keep_sites = tuple(sorted(set(keep_sites)))
    d_keep = d ** len(keep_sites)
    d_comp = d ** (n - len(keep_sites))
    with nk.workprec(prec):
        H = Hdense if prec.is_double else nk.to_precision(Hdense, prec)
        powers = [nk.eye(Hdense.shape[0], prec)]
        for _ in range(m_max):
            powers.append(nk.matmul(powers[-1], H, prec))
        tr_pows = [nk.partial_trace_sites(powers[k], keep_sites, n, d, prec)
                   for k in range(m_max + 1)]
        out = [nk.zeros(d_keep, d_keep, prec)]
        for m in range(1, m_max + 1):
            Dm = nk.zeros(d_keep, d_keep, prec)
            for comp in compositions(m):
                q = len(comp)
                denom = 1
                for p in comp:
                    denom *= factorial(p)
                coeff = Fraction((-1) ** (q - 1), q) * Fraction(factorial(m) * (-1) ** m,
                                                                denom * d_comp ** q)
                mats = [tr_pows[p] for p in comp]
                sym = _sym_average_product(mats, prec)
                if prec.is_double:
                    Dm = Dm + float(coeff) * sym
                else:
                    Dm = Dm + (nk.mpc_of(coeff.numerator, prec) / coeff.denominator) * sym
            out.append(Dm)
    return out


def fd_weights(ks: list[int], m: int) -> list[Fraction]:
    """Exact finite-difference weights (Fornberg) for d^m/dx^m at 0 on grid ks.

    f^(m)(0) ~= sum_j w_j f(ks[j] * h) / h^m.
    """
    x = [Fraction(k) for k in ks]
    npts = len(x)
    c = [[Fraction(0)] * (m + 1) for _ in range(npts)]
    c1 = Fraction(1)
    c4 = x[0]
    c[0][0] = Fraction(1)
    for i in range(1, npts):
        mn = min(i, m)
        c2 = Fraction(1)
        c5 = c4
        c4 = x[i]
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2
            for k in range(mn, 0, -1):
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3
            c[j][0] = c4 * c[j][0] / c3
        c1 = c2
    return [c[j][m] for j in range(npts)]


def derivative_identity_audit(Hdense: np.ndarray, keep_sites, n: int, m_max: int,
                              d: int = 2, h: float | None = None, npts: int | None = None,
                              prec: nk.Precision = nk.DOUBLE) -> list[float]:
    """Residuals || D_m - finite-difference estimate || for m <= m_max.

    The oracle samples f(beta) = log[tr_{L^c}(e^{-beta H})/d_{L^c}] on the
    symmetric grid beta = k*h and applies exact-rational stencil weights.
    The default step balances truncation against the eps/h^m roundoff floor
    (3e-2 in the double lane, 1e-4 in the big lane).
    """
    if h is None:
        h = 3e-2 if prec.is_double else 1e-4
    keep_sites = tuple(sorted(set(keep_sites)))
    d_comp = d ** (n - len(keep_sites))
    npts = npts if npts is not None else m_max + 7
    if npts % 2 == 0:
        npts += 1
    half = npts // 2
    ks = list(range(-half, half + 1))
    eig = nk.eig_hermitian(Hdense, prec)
    samples = []
    with nk.workprec(prec):
        hb = nk.mpf_of(h, prec)
    for k in ks:
        with nk.workprec(prec):
            s = -k * hb
        E = nk.mat_exp_hermitian(Hdense, s, prec, eig=eig)
        red = nk.partial_trace_sites(E, keep_sites, n, d, prec)
        with nk.workprec(prec):
            red = red / d_comp
        samples.append(nk.mat_log_pd(red, prec))
    Ds = taylor_log_reduced(Hdense, keep_sites, n, m_max, d, prec)
    residuals = []
    with nk.workprec(prec):
        hm = nk.mpf_of(h, prec)
        for m in range(m_max + 1):
            ws = fd_weights(ks, m)
            est = None
            for w, S in zip(ws, samples):
                if w == 0:
                    continue
                wn = nk.mpc_of(w.numerator, prec) / w.denominator
                est = wn * S if est is None else est + wn * S
            est = est / hm ** m
            residuals.append(float(nk.frobenius_norm(est - Ds[m], prec)))
    return residuals


# ---------------------------------------------------------------------------
# m=3 ordering/symmetrizing fixture on the extended space H^L (x) (H^{L^c})^{x3}

def _word_matrix(H_copies: list[np.ndarray], word: tuple[int, ...]) -> np.ndarray:
    P = H_copies[word[0]]
    for s in word[1:]:
        P = P @ H_copies[s]
    return P


def w_ops_m3_fixture(Hdense: np.ndarray, keep_sites, n: int, d: int = 2) -> dict:
    """Verify the m=3 grouped/symmetrized expansion on the extended space.

    Builds H^(0) H^(1) H^(2) on H^L (x) three copies of H^{L^c}, applies the
    grouping operator (collect factors by copy, symmetrize within a copy) and
    the swap-averaging operator (average products over copy-permutations) by
    explicit enumeration, partial-traces the copies, and compares with the
    symmetrized product-of-partial-traces expression.
    """
    keep_sites = tuple(sorted(set(keep_sites)))
    comp_sites = tuple(s for s in range(1, n + 1) if s not in keep_sites)
    dL = d ** len(keep_sites)
    dc = d ** len(comp_sites)
    if dL * dc ** 3 > 128:
        raise nk.SizeBudgetError("extended space exceeds the 128-dim fixture budget")
    # factor layout: (L, c1, c2, c3) with dims (dL, dc, dc, dc)
    dims = (dL, dc, dc, dc)
    # H as an operator on (L, c): reorder the full H into (keep, comp) block order
    Hk = _reorder_sites(Hdense, keep_sites + comp_sites, n, d)
    copies = [nk.embed_factors(Hk, (0, 1 + s), dims) for s in range(3)]
    # words of H^(0) H^(1) H^(2) with coefficients, via the mixed-radix expansion
    words: list[tuple[int, tuple[int, ...]]] = []
    for iota in itertools.product(range(1, 2), range(1, 3), range(1, 4)):
        c = 1
        for k in range(1, 3):
            if iota[k] == k + 1:
                c *= -k
        words.append((c, tuple(v - 1 for v in iota)))
    total_dim = dL * dc ** 3
    acc = np.zeros((total_dim, total_dim), dtype=complex)
    for c, word in words:
        # grouping: collect positions by copy (all factors equal H here, so the
        # within-copy symmetrization is the plain power), ordered by copy index
        by_copy = {}
        for s in word:
            by_copy[s] = by_copy.get(s, 0) + 1
        grouped = sorted(by_copy.items())
        # swap-averaging: average the grouped product over copy permutations
        q = len(grouped)
        sym = np.zeros((total_dim, total_dim), dtype=complex)
        for perm in itertools.permutations(range(q)):
            P = None
            for idx in perm:
                s, k = grouped[idx]
                Mk = np.linalg.matrix_power(copies[s], k)
                P = Mk if P is None else P @ Mk
            sym += P
        acc += c * sym / factorial(q)
    lhs = nk.partial_trace(acc, (0,), dims)
    # reference: d^2 tr(H^3) - (3/2) d [tr(H^2)tr(H) + tr(H)tr(H^2)] + 2 tr(H)^3
    t1 = nk.partial_trace_sites(Hdense @ Hdense @ Hdense, keep_sites, n, d)
    t2 = nk.partial_trace_sites(Hdense @ Hdense, keep_sites, n, d)
    t3 = nk.partial_trace_sites(Hdense, keep_sites, n, d)
    rhs = (dc ** 2) * t1 - 1.5 * dc * (t2 @ t3 + t3 @ t2) + 2.0 * (t3 @ t3 @ t3)
    resid = float(np.linalg.norm(lhs - rhs))
    return {"residual": resid, "lhs_norm": float(np.linalg.norm(lhs)),
            "rhs_norm": float(np.linalg.norm(rhs))}


def _reorder_sites(M: np.ndarray, new_order: tuple[int, ...], n: int, d: int) -> np.ndarray:
    """Permute tensor factors of an n-site operator into the given site order."""
    axes = [s - 1 for s in new_order]
    T = M.reshape((d,) * (2 * n))
    T = T.transpose(axes + [n + a for a in axes])
    return T.reshape(d ** n, d ** n)

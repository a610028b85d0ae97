"""Locality-truncated per-site blocks, their telescoping differences, and
subset generators.

A truncated block replaces every Heisenberg-evolved site operator entering the
jump filters and the coherent kernels by its normalized-partial-trace
localization onto the ball i[ell]; the result acts on the ball only.  The
truncated coherent term no longer factorizes entrywise in the eigenbasis, so
it is evaluated by a trapezoid double quadrature in rotated time variables
(u, v) = (t' - t, -(t' + t)), under which the two evolved factors become
A(H, beta*u) and A(H, beta*v) and the kernel is (1/2) b1(-(u+v)/2) b2((u-v)/2).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .. import numkit as nk
from . import kernels as kn
from .generator import CKGGenerator, SiteBlock, site_paulis


def ball_sites(center: int, ell: float, n: int) -> tuple[int, ...]:
    return tuple(j for j in range(1, n + 1) if abs(j - center) <= ell)


def _localize(op_full: np.ndarray, region: tuple[int, ...], n: int) -> np.ndarray:
    """tr~ onto the region, returned as a matrix on the region space."""
    traced = tuple(j for j in range(1, n + 1) if j not in region)
    if not traced:
        return op_full.copy()
    red = nk.partial_trace_sites(op_full, region, n)
    return red / (2 ** len(traced))


def evolved_site_op(eig, Ae: np.ndarray, s: float) -> np.ndarray:
    """A(H, s) from the cached eigenbasis transform Ae = U^dag A U (full space)."""
    w = np.asarray(eig[0], dtype=float)
    U = eig[1]
    ph = np.exp(1j * w * s)
    return U @ (Ae * np.outer(ph, ph.conj())) @ U.conj().T


@lru_cache(maxsize=8)
def _uv_kernel_cached(uv_trunc: float, uv_nodes: int, s_trunc: float,
                      s_nodes: int) -> np.ndarray:
    us = np.linspace(-uv_trunc, uv_trunc, uv_nodes)
    U, V = np.meshgrid(us, us, indexing="ij")
    # b1 depends on (u+v)/2 only: evaluate once per anti-diagonal value
    w = -(U + V) / 2.0
    uniq, inv = np.unique(np.round(w, 12), return_inverse=True)
    b1u = kn.b1_time(uniq, s_trunc, s_nodes)
    b1m = b1u[inv].reshape(U.shape)
    return 0.5 * b1m * kn.b2_time((U - V) / 2.0)


def _uv_kernel(us: np.ndarray, cfg: kn.QuadratureConfig) -> np.ndarray:
    """K(u, v) = (1/2) b1(-(u+v)/2) b2((u-v)/2) on the tensor grid."""
    return _uv_kernel_cached(cfg.uv_trunc, cfg.uv_nodes, cfg.s_trunc, cfg.s_nodes)


def truncated_blocks(gen: CKGGenerator, site: int, ell: float) -> list[SiteBlock]:
    """The truncated blocks L~_{i[ell], a} for a in {x, y, z} at one site."""
    n = gen.n
    region = ball_sites(site, ell, n)
    eig = gen.eig
    beta = gen.beta
    cfg = gen.cfg
    w = np.asarray(eig[0], dtype=float)
    U = eig[1]
    nu = w[:, None] - w[None, :]
    oms, ws = kn.omega_grid(*gen.nu_range, beta, cfg)
    gam = kn.gamma_weight(oms, beta)
    us = np.linspace(-cfg.uv_trunc, cfg.uv_trunc, cfg.uv_nodes)
    K = _uv_kernel(us, cfg)
    h = us[1] - us[0]
    out = []
    for a_idx, P in enumerate(site_paulis()):
        A = nk.embed_on_sites(P, (site,), n)
        Ae = U.conj().T @ A @ U
        jumps = []
        for om, wt, g in zip(oms, ws, gam):
            scale = np.sqrt(g * wt)
            if scale < 1e-150:
                continue
            filt = kn.jump_prefactor(beta) * np.exp(-beta ** 2 * (nu - om) ** 2 / 4.0)
            Jf = U @ (Ae * filt) @ U.conj().T
            jumps.append(scale * _localize(Jf, region, n))
        Avs = np.empty((len(us), 2 ** len(region), 2 ** len(region)), dtype=complex)
        for t_idx, u in enumerate(us):
            Avs[t_idx] = _localize(evolved_site_op(eig, Ae, beta * u), region, n)
        W = np.tensordot(K, Avs, axes=([1], [0]))          # W[u] = sum_v K[u,v] A(v)
        coh = np.einsum("uab,ubc->ac", Avs, W, optimize=True) * h * h
        coh = 2.0 * coh
        coh = (coh + coh.conj().T) / 2.0   # exact object is Hermitian; keep it so
        out.append(SiteBlock(site, a_idx, region, coh, tuple(jumps)))
    return out


def cached_truncated_blocks(gen: CKGGenerator, site: int, ell: float,
                            cache: dict) -> list[SiteBlock]:
    key = ("trunc", site, float(ell))
    if key not in cache:
        cache[key] = truncated_blocks(gen, site, ell)
    return cache[key]


@dataclass(frozen=True)
class DeltaBlock:
    """delta L_{i[ell]} = L~_{i[ell]} - L~_{i[ell-1]} (not Lindblad individually)."""

    site: int
    a_index: int
    ell: int
    plus: SiteBlock
    minus: SiteBlock | None

    def superop_on_plus_region(self) -> np.ndarray:
        S = self.plus.superop()
        if self.minus is not None:
            S = S - lift_superop(self.minus.superop(), self.minus.support,
                                 self.plus.support)
        return S


def delta_blocks(gen: CKGGenerator, site: int, ell_max: int,
                 cache: dict | None = None) -> list[list[DeltaBlock]]:
    """Per Pauli index: [delta L_{i[0]}, ..., delta L_{i[ell_max]}]."""
    cache = cache if cache is not None else {}
    per_ell = {ell: cached_truncated_blocks(gen, site, ell, cache)
               for ell in range(ell_max + 1)}
    out = []
    for a_idx in range(3):
        seq = []
        for ell in range(ell_max + 1):
            plus = per_ell[ell][a_idx]
            minus = per_ell[ell - 1][a_idx] if ell > 0 else None
            seq.append(DeltaBlock(site, a_idx, ell, plus, minus))
        out.append(seq)
    return out


def max_inner_ball(site: int, region: tuple[int, ...], n: int) -> int:
    """Largest ell with ball(site, ell) inside the region (-1 if none)."""
    best = -1
    rset = set(region)
    for ell in range(n + 1):
        if set(ball_sites(site, ell, n)) <= rset:
            best = ell
        else:
            break
    return best


def subset_generator_blocks(gen: CKGGenerator, region: tuple[int, ...],
                            cache: dict | None = None,
                            site_filter=None) -> list[SiteBlock]:
    """Blocks of the subset generator on a region.

    Telescoping collapses the delta sums: sum over i in the region of
    L~_{i[ell_i]} with ell_i the largest ball inside the region; each summand
    is Lindblad, so the subset generator is too.
    """
    cache = cache if cache is not None else {}
    region = tuple(sorted(region))
    blocks = []
    for i in region:
        if site_filter is not None and i not in site_filter:
            continue
        ell = max_inner_ball(i, region, gen.n)
        if ell < 0:
            continue
        blocks.extend(cached_truncated_blocks(gen, i, ell, cache))
    return blocks


# ---------------------------------------------------------------------------
# region superoperator plumbing

def lift_superop(S_sub: np.ndarray, sub_sites: tuple[int, ...],
                 region_sites: tuple[int, ...]) -> np.ndarray:
    """Lift a superoperator from a site subset to a larger region (identity
    elsewhere), both given as sorted site tuples."""
    region_sites = tuple(sorted(region_sites))
    sub_sites = tuple(sorted(sub_sites))
    if sub_sites == region_sites:
        return S_sub
    k = len(region_sites)
    dr = 2 ** k
    positions = tuple(region_sites.index(s) + 1 for s in sub_sites)
    out = np.empty((dr * dr, dr * dr), dtype=complex)
    # apply to the vec basis |a><b| (column-stacking: index a + dr*b)
    for b in range(dr):
        for a in range(dr):
            E = np.zeros((dr, dr), dtype=complex)
            E[a, b] = 1.0
            img = apply_superop_on_positions(S_sub, positions, E, k)
            out[:, a + dr * b] = img.flatten(order="F")
    return out


def apply_superop_on_positions(S: np.ndarray, positions: tuple[int, ...],
                               rho: np.ndarray, n: int) -> np.ndarray:
    """Apply a superop living on 1-based positions of an n-factor qubit space."""
    positions = tuple(sorted(positions))
    rest = tuple(j for j in range(1, n + 1) if j not in positions)
    dr = 2 ** len(positions)
    dc = 2 ** len(rest)
    if not rest:
        return nk.apply_superop(S, rho)
    perm = [s - 1 for s in positions + rest]
    T = rho.reshape((2,) * (2 * n))
    T = T.transpose(perm + [n + p for p in perm]).reshape(dr, dc, dr, dc)
    S4 = S.reshape(dr, dr, dr, dr, order="F")   # S4[or, oc, ir, ic], column-stacked
    out = np.einsum("abcd,xyac->xbyd", T, S4, optimize=True)
    inv = np.argsort(perm)
    out = out.reshape((2,) * (2 * n))
    out = out.transpose(list(inv) + [n + int(v) for v in inv])
    return out.reshape(2 ** n, 2 ** n)


def apply_region_superop(S: np.ndarray, region: tuple[int, ...], rho_full: np.ndarray,
                         n: int) -> np.ndarray:
    """Apply a superop on a site region (1-based chain sites) to a full state."""
    return apply_superop_on_positions(S, tuple(sorted(region)), rho_full, n)


def apply_block_to_full(block: SiteBlock, rho_full: np.ndarray, n: int) -> np.ndarray:
    return apply_region_superop(block.superop(), block.support, rho_full, n)

"""Fixed-point limb decomposition for fast big-float matrix products.

A gmpy2 matrix product in pure Python costs O(n^3) interpreter-level
multiplies, which is prohibitive at n=512 and 500 digits.  Instead each
operand is scaled to a big integer, split into 17-bit limbs, and the limb
convolution is evaluated as a stack of float64 numpy matmuls (each exact:
products of 17-bit limbs accumulated over <=1024 inner indices and <=128
limb pairs stay below 2^53).  The result is reassembled exactly and rounded
once to the working precision.
"""

from __future__ import annotations

import gmpy2
import numpy as np

from .precision import Precision, workprec

LIMB_BITS = 17
_MASK = (1 << LIMB_BITS) - 1

# above this dimension the limb route beats elementwise gmpy2 products
LIMB_DIM_THRESHOLD = 72


def _to_scaled_ints(M: np.ndarray, fbits: int) -> tuple[np.ndarray, int]:
    """Exact M * 2^shift as python ints, shift chosen so maxabs has fbits bits."""
    flat = M.ravel()
    top = -(1 << 62)
    pairs = []
    for x in flat:
        if x == 0:
            pairs.append((0, 0))
            continue
        m, e = x.as_mantissa_exp()
        m = int(m)
        e = int(e)
        pairs.append((m, e))
        top = max(top, m.bit_length() + e)
    if top == -(1 << 62):  # all zero
        return np.zeros(M.shape, dtype=object), 0
    shift = fbits - top  # value * 2^shift has maxabs ~ 2^fbits
    out = np.empty(len(flat), dtype=object)
    for i, (m, e) in enumerate(pairs):
        s = e + shift
        if s >= 0:
            out[i] = m << s
        else:
            half = 1 << (-s - 1)
            out[i] = (m + half) >> (-s) if m >= 0 else -((-m + half) >> (-s))
    return out.reshape(M.shape), shift


def _to_limbs(I: np.ndarray, nlimbs: int) -> list[np.ndarray]:
    """Low-to-high signed limb planes as float64 matrices."""
    sign = np.empty(I.shape, dtype=object)
    mag = np.empty(I.shape, dtype=object)
    flat_i = I.ravel()
    fs = sign.ravel()
    fm = mag.ravel()
    for idx, v in enumerate(flat_i):
        if v < 0:
            fs[idx] = -1
            fm[idx] = -v
        else:
            fs[idx] = 1
            fm[idx] = v
    planes = []
    for k in range(nlimbs):
        digit = (mag >> (LIMB_BITS * k)) & _MASK
        plane = np.array((digit * sign).tolist(), dtype=np.float64)
        planes.append(plane)
    return planes


def _real_limb_matmul(A: np.ndarray, B: np.ndarray, fbits: int):
    """Exact-integer product of two mpfr matrices, returned as (object-int matrix, shift)."""
    Ai, sa = _to_scaled_ints(A, fbits)
    Bi, sb = _to_scaled_ints(B, fbits)
    nl = fbits // LIMB_BITS + 2
    Ap = _to_limbs(Ai, nl)
    Bp = _to_limbs(Bi, nl)
    # keep limb pairs contributing above ~fbits below the leading bit
    kmin = max(0, 2 * (nl - 1) - (fbits + 64) // LIMB_BITS - 2)
    acc: dict[int, np.ndarray] = {}
    for i in range(nl):
        for j in range(nl):
            k = i + j
            if k < kmin:
                continue
            P = Ap[i] @ Bp[j]
            if k in acc:
                acc[k] += P
            else:
                acc[k] = P
    shape = (A.shape[0], B.shape[1])
    C = np.zeros(shape, dtype=object)
    for k, P in acc.items():
        # limb products stay below 2^51 by construction, so float64 holds them exactly
        Ck = np.empty(shape, dtype=object)
        Ck.ravel()[:] = np.rint(P).astype(np.int64).ravel().tolist()
        C += Ck << (LIMB_BITS * k)
    return C, sa + sb


def _ints_to_mpfr(C: np.ndarray, shift: int, prec: Precision) -> np.ndarray:
    out = np.empty(C.shape, dtype=object)
    with workprec(prec):
        denom = gmpy2.mpfr(1)
        if shift >= 0:
            for idx, v in enumerate(C.ravel()):
                out.ravel()[idx] = gmpy2.mpfr(v) / (gmpy2.mpz(1) << shift) if shift else gmpy2.mpfr(v)
        else:
            mul = gmpy2.mpz(1) << (-shift)
            for idx, v in enumerate(C.ravel()):
                out.ravel()[idx] = gmpy2.mpfr(v * mul)
        del denom
    return out


def _split_reim(M: np.ndarray, prec: Precision) -> tuple[np.ndarray, np.ndarray]:
    re = np.empty(M.shape, dtype=object)
    im = np.empty(M.shape, dtype=object)
    with workprec(prec):
        fre = re.ravel()
        fim = im.ravel()
        for idx, v in enumerate(M.ravel()):
            if isinstance(v, gmpy2.mpc):
                fre[idx] = v.real
                fim[idx] = v.imag
            else:
                fre[idx] = gmpy2.mpfr(v)
                fim[idx] = gmpy2.mpfr(0)
    return re, im


def limb_matmul(A: np.ndarray, B: np.ndarray, prec: Precision) -> np.ndarray:
    """Complex big-float matmul via four real limb products."""
    fbits = prec.bits + 32
    Ar, Ai = _split_reim(A, prec)
    Br, Bi = _split_reim(B, prec)
    rr, s1 = _real_limb_matmul(Ar, Br, fbits)
    ii, s2 = _real_limb_matmul(Ai, Bi, fbits)
    ri, s3 = _real_limb_matmul(Ar, Bi, fbits)
    ir, s4 = _real_limb_matmul(Ai, Br, fbits)
    out = np.empty((A.shape[0], B.shape[1]), dtype=object)
    with workprec(prec, extra_bits=16):
        Re = _ints_to_mpfr(rr, s1, prec) - _ints_to_mpfr(ii, s2, prec)
        Im = _ints_to_mpfr(ri, s3, prec) + _ints_to_mpfr(ir, s4, prec)
        fo = out.ravel()
        fre = Re.ravel()
        fim = Im.ravel()
        for idx in range(out.size):
            fo[idx] = gmpy2.mpc(fre[idx], fim[idx])
    return out

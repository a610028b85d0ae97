"""Dense complex matrices over either scalar lane, plus tensor plumbing.

Matrices are plain numpy arrays: complex128 for the double lane, dtype=object
holding gmpy2.mpc for the big lane.  All operations are pure; nothing mutates
its inputs.
"""

from __future__ import annotations

import gmpy2
import numpy as np

from .bigmul import LIMB_DIM_THRESHOLD, limb_matmul
from .precision import DOUBLE, Precision, is_bigarray, mpc_of, workprec


class SizeBudgetError(ValueError):
    """Raised when a dense object would exceed the configured entry budget."""


def zeros(n: int, m: int | None = None, prec: Precision = DOUBLE) -> np.ndarray:
    m = n if m is None else m
    if prec.is_double:
        return np.zeros((n, m), dtype=complex)
    out = np.empty((n, m), dtype=object)
    z = mpc_of(0, prec)
    out[:] = z
    return out


def eye(n: int, prec: Precision = DOUBLE) -> np.ndarray:
    if prec.is_double:
        return np.eye(n, dtype=complex)
    out = zeros(n, n, prec)
    one = mpc_of(1, prec)
    for i in range(n):
        out[i, i] = one
    return out


def diag(values, prec: Precision = DOUBLE) -> np.ndarray:
    """Diagonal matrix from a list of scalars (keeps big-lane types intact)."""
    n = len(values)
    out = zeros(n, n, prec)
    for i, v in enumerate(values):
        out[i, i] = mpc_of(v, prec)
    return out


def to_precision(M: np.ndarray, prec: Precision) -> np.ndarray:
    """Convert a matrix between lanes (or re-round within the big lane)."""
    if prec.is_double:
        return as_double(M)
    out = np.empty(M.shape, dtype=object)
    fo, fm = out.ravel(), np.asarray(M).ravel()
    with workprec(prec):
        for i, v in enumerate(fm):
            if isinstance(v, gmpy2.mpc):
                fo[i] = gmpy2.mpc(v.real, v.imag)
            elif isinstance(v, (gmpy2.mpfr, int, float, str)):
                fo[i] = gmpy2.mpc(v)
            else:
                c = complex(v)
                fo[i] = gmpy2.mpc(c.real, c.imag)
    return out


def as_double(M: np.ndarray) -> np.ndarray:
    if not is_bigarray(M):
        return np.asarray(M, dtype=complex)
    out = np.empty(M.shape, dtype=complex)
    fo, fm = out.ravel(), M.ravel()
    for i, v in enumerate(fm):
        out.ravel()[i] = complex(v)
    return out


def matmul(A: np.ndarray, B: np.ndarray, prec: Precision = DOUBLE) -> np.ndarray:
    if prec.is_double:
        return A @ B
    if max(A.shape[0], A.shape[1], B.shape[1]) >= LIMB_DIM_THRESHOLD:
        return limb_matmul(A, B, prec)
    with workprec(prec):
        return A @ B
    return None  # pragma: no cover


def adjoint(M: np.ndarray) -> np.ndarray:
    if not is_bigarray(M):
        return np.conj(M).T.copy()
    # gmpy2 conjugate() rounds to the *ambient* context, so conjugate at the
    # precision the entries already carry
    bits = 53
    for v in M.ravel():
        if isinstance(v, gmpy2.mpc):
            bits = max(bits, v.real.precision)
            break
        if isinstance(v, gmpy2.mpfr):
            bits = max(bits, v.precision)
            break
    with gmpy2.context(precision=bits):
        return np.conj(M).T.copy()


def frobenius_norm(M: np.ndarray, prec: Precision = DOUBLE):
    if prec.is_double and not is_bigarray(M):
        return float(np.linalg.norm(M))
    with workprec(prec):
        s = gmpy2.mpfr(0)
        for v in M.ravel():
            s += gmpy2.norm(v) if isinstance(v, gmpy2.mpc) else gmpy2.mpfr(v) ** 2
        return gmpy2.sqrt(s)


def max_abs(M: np.ndarray, prec: Precision = DOUBLE) -> float:
    if prec.is_double and not is_bigarray(M):
        return float(np.max(np.abs(M))) if M.size else 0.0
    m = 0.0
    for v in M.ravel():
        m = max(m, float(abs(v)))
    return m


def hermiticity_defect(M: np.ndarray, prec: Precision = DOUBLE) -> float:
    return max_abs(M - adjoint(M), prec)


def require_hermitian(M: np.ndarray, prec: Precision = DOUBLE, shift: int = 3) -> None:
    d = hermiticity_defect(M, prec)
    scale = max(1.0, max_abs(M, prec))
    if d > prec.tol(shift) * scale:
        raise ValueError(f"matrix is not Hermitian: max|M - M^dag| = {d:.3e}")


def kron(A: np.ndarray, B: np.ndarray, prec: Precision = DOUBLE) -> np.ndarray:
    if prec.is_double and not is_bigarray(A) and not is_bigarray(B):
        return np.kron(A, B)
    with workprec(prec):
        (ra, ca), (rb, cb) = A.shape, B.shape
        out = np.empty((ra * rb, ca * cb), dtype=object)
        for i in range(ra):
            for j in range(ca):
                out[i * rb:(i + 1) * rb, j * cb:(j + 1) * cb] = A[i, j] * B
        return out
    return None  # pragma: no cover


def embed_factors(op: np.ndarray, positions: tuple[int, ...], dims: tuple[int, ...],
                  prec: Precision = DOUBLE) -> np.ndarray:
    """Place ``op`` on the named tensor factors (0-based), identity elsewhere.

    ``dims`` lists the local dimension of every factor; ``positions`` names the
    factors op acts on, in the order of op's own tensor structure.
    """
    nf = len(dims)
    for p in positions:
        if not (0 <= p < nf):
            raise IndexError(f"factor index {p} out of range for {nf} factors")
    if len(set(positions)) != len(positions):
        raise ValueError("duplicate factor positions")
    dop = 1
    for p in positions:
        dop *= dims[p]
    if op.shape != (dop, dop):
        raise ValueError(f"operator shape {op.shape} does not match factors {positions}")
    total = 1
    for d in dims:
        total *= d
    if total > 4096:
        raise SizeBudgetError(f"dense dimension {total} exceeds the 4096 budget")

    big = is_bigarray(op)
    T = op.reshape(tuple(dims[p] for p in positions) * 2)
    # tensor with identity on the complement, then permute into site order
    rest = [i for i in range(nf) if i not in positions]
    drest = 1
    for r in rest:
        drest *= dims[r]
    if big:
        # index-arithmetic build (the big lane only ever embeds at small dims)
        full = np.zeros((total, total), dtype=object)
        with workprec(prec):
            zero = mpc_of(0, prec)
            full[:] = zero
            # enumerate basis indices of the op factors and rest factors
            op_dims = [dims[p] for p in positions]
            rest_dims = [dims[r] for r in rest]

            def mixed_radix(k, ds):
                out = []
                for d in reversed(ds):
                    out.append(k % d)
                    k //= d
                return list(reversed(out))

            def flat_index(assign):
                k = 0
                for f in range(nf):
                    k = k * dims[f] + assign[f]
                return k

            dop_total = 1
            for d in op_dims:
                dop_total *= d
            drest_total = 1
            for d in rest_dims:
                drest_total *= d
            for a in range(dop_total):
                ai = mixed_radix(a, op_dims)
                for b in range(dop_total):
                    bi = mixed_radix(b, op_dims)
                    v = op[a, b]
                    if v == 0:
                        continue
                    for r in range(drest_total):
                        ri = mixed_radix(r, rest_dims)
                        assign_row = [0] * nf
                        assign_col = [0] * nf
                        for t, p in enumerate(positions):
                            assign_row[p] = ai[t]
                            assign_col[p] = bi[t]
                        for t, q in enumerate(rest):
                            assign_row[q] = ri[t]
                            assign_col[q] = ri[t]
                        full[flat_index(assign_row), flat_index(assign_col)] = v
        return full
    # double lane: einsum-free tensor build
    full = np.tensordot(T, np.eye(drest).reshape(tuple(dims[r] for r in rest) * 2) if rest else np.array(1.0),
                        axes=0)
    # axes: (op_rows..., op_cols..., rest_rows..., rest_cols...) or (op_rows..., op_cols...) if no rest
    k = len(positions)
    r = len(rest)
    row_axes = [None] * nf
    col_axes = [None] * nf
    for t, p in enumerate(positions):
        row_axes[p] = t
        col_axes[p] = k + t
    for t, q in enumerate(rest):
        row_axes[q] = 2 * k + t
        col_axes[q] = 2 * k + r + t
    full = full.transpose(row_axes + col_axes)
    return full.reshape(total, total)


def embed_on_sites(op: np.ndarray, sites: tuple[int, ...], n: int, d: int = 2,
                   prec: Precision = DOUBLE) -> np.ndarray:
    """Lattice convenience wrapper: 1-based site indices on an n-site chain."""
    for s in sites:
        if not (1 <= s <= n):
            raise IndexError(f"site {s} out of range 1..{n}")
    return embed_factors(op, tuple(s - 1 for s in sites), (d,) * n, prec)


def partial_trace(M: np.ndarray, keep: tuple[int, ...], dims: tuple[int, ...],
                  prec: Precision = DOUBLE) -> np.ndarray:
    """Trace out every factor not in ``keep`` (0-based factor indices)."""
    nf = len(dims)
    keep = tuple(sorted(keep))
    traced = [i for i in range(nf) if i not in keep]
    dk = 1
    for k in keep:
        dk *= dims[k]
    if not is_bigarray(M):
        T = M.reshape(dims * 2)
        src = list(range(2 * nf))
        for t in traced:
            src[nf + t] = src[t]
        out_axes = [src[k] for k in keep] + [src[nf + k] for k in keep]
        T = np.einsum(T, src, out_axes)
        return T.reshape(dk, dk)
    # big lane: explicit index summation
    with workprec(prec):
        dt = 1
        for t in traced:
            dt *= dims[t]
        out = zeros(dk, dk, prec)

        def mixed_radix(k, ds):
            o = []
            for d in reversed(ds):
                o.append(k % d)
                k //= d
            return list(reversed(o))

        keep_dims = [dims[k] for k in keep]
        traced_dims = [dims[t] for t in traced]

        def flat(assign):
            k = 0
            for f in range(nf):
                k = k * dims[f] + assign[f]
            return k

        for a in range(dk):
            ai = mixed_radix(a, keep_dims)
            for b in range(dk):
                bi = mixed_radix(b, keep_dims)
                s = mpc_of(0, prec)
                for r in range(dt):
                    ri = mixed_radix(r, traced_dims)
                    row = [0] * nf
                    col = [0] * nf
                    for t, k in enumerate(keep):
                        row[k] = ai[t]
                        col[k] = bi[t]
                    for t, q in enumerate(traced):
                        row[q] = ri[t]
                        col[q] = ri[t]
                    s = s + M[flat(row), flat(col)]
                out[a, b] = s
        return out
    return None  # pragma: no cover


def partial_trace_sites(M: np.ndarray, keep_sites: tuple[int, ...], n: int, d: int = 2,
                        prec: Precision = DOUBLE) -> np.ndarray:
    return partial_trace(M, tuple(s - 1 for s in sorted(keep_sites)), (d,) * n, prec)


def normalized_partial_trace(M: np.ndarray, traced: tuple[int, ...], dims: tuple[int, ...],
                             prec: Precision = DOUBLE) -> np.ndarray:
    """tr~_X(M): partial trace over X tensored with maximally mixed identity on X.

    Returns an operator on the full space, supported on the complement of X.
    """
    nf = len(dims)
    traced = tuple(sorted(traced))
    keep = tuple(i for i in range(nf) if i not in traced)
    dt = 1
    for t in traced:
        dt *= dims[t]
    if dt == 1:
        return M.copy()
    red = partial_trace(M, keep, dims, prec)
    if prec.is_double and not is_bigarray(M):
        red = red / dt
    else:
        with workprec(prec):
            red = red * (mpc_of(1, prec) / dt)
    # embed_factors places identity on the traced complement, giving tr_X(M) (x) 1_X/d_X
    return embed_factors(red, keep, dims, prec)


def normalized_partial_trace_sites(M: np.ndarray, traced_sites: tuple[int, ...], n: int,
                                   d: int = 2, prec: Precision = DOUBLE) -> np.ndarray:
    return normalized_partial_trace(M, tuple(s - 1 for s in traced_sites), (d,) * n, prec)


def trace(M: np.ndarray, prec: Precision = DOUBLE):
    if prec.is_double and not is_bigarray(M):
        return complex(np.trace(M))
    with workprec(prec):
        s = mpc_of(0, prec)
        for i in range(M.shape[0]):
            s = s + M[i, i]
        return s
    return None  # pragma: no cover

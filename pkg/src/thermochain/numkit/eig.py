"""Hermitian eigensolvers and matrix functions, precision-generic.

Three routes share one contract (reconstruction and unitarity residuals
bounded by dim * 10^(3-P) * scale):

* double lane: LAPACK via numpy.linalg.eigh
* big lane, small dims: cyclic complex Jacobi rotations
* big lane, large dims: a numpy seed refined by Newton-type iteration
  (Ogita-Aishima style), with matmuls on the limb fast path

The refined route exists because pure Jacobi at dim 512 and 500 digits is
hopeless in interpreter time; the three routes cross-check each other in the
test suite.
"""

from __future__ import annotations

import gmpy2
import numpy as np

from . import matrices as mx
from .precision import DOUBLE, Precision, is_bigarray, mpc_of, mpf_of, workprec

JACOBI_MAX_SWEEPS = 100
REFINE_DIM_THRESHOLD = 28


class EigenConvergenceError(RuntimeError):
    pass


def _offdiag_frob(A: np.ndarray, prec: Precision):
    with workprec(prec):
        s = gmpy2.mpfr(0) if not prec.is_double else 0.0
        n = A.shape[0]
        for i in range(n):
            for j in range(n):
                if i != j:
                    v = A[i, j]
                    s += gmpy2.norm(v) if isinstance(v, gmpy2.mpc) else abs(v) ** 2
        return gmpy2.sqrt(s) if not prec.is_double else s ** 0.5


def jacobi_eigh(M: np.ndarray, prec: Precision, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Cyclic complex Jacobi; returns (ascending eigenvalues, unitary columns)."""
    n = M.shape[0]
    with workprec(prec):
        if prec.is_double:
            A = np.array(M, dtype=complex)
            V = np.eye(n, dtype=complex)
            sqrt = np.sqrt
        else:
            A = mx.to_precision(M, prec)
            V = mx.eye(n, prec)
            sqrt = gmpy2.sqrt
        scale = mx.frobenius_norm(A, prec)
        if float(scale) == 0.0:
            return [mpf_of(0, prec) for _ in range(n)], V
        thresh = scale * mpf_of(10, prec) ** (-(prec.pdigits - 5))
        for sweep in range(max_sweeps):
            off = _offdiag_frob(A, prec)
            if off <= thresh:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = A[p, q]
                    if abs(apq) == 0:
                        continue
                    app = A[p, p].real
                    aqq = A[q, q].real
                    absapq = abs(apq)
                    if float(absapq) == 0.0:
                        continue
                    # unitary 2x2 rotation zeroing A[p,q]
                    tau = (aqq - app) / (2 * absapq)
                    if tau >= 0:
                        t = 1 / (tau + sqrt(1 + tau * tau))
                    else:
                        t = -1 / (-tau + sqrt(1 + tau * tau))
                    c = 1 / sqrt(1 + t * t)
                    s = t * c * (apq / absapq)
                    sc = s.conjugate() if hasattr(s, "conjugate") else np.conj(s)
                    # rows/cols p,q update: A <- J^dag A J with J = [[c, s],[-s*, c]]
                    colp = A[:, p].copy()
                    colq = A[:, q].copy()
                    A[:, p] = c * colp - sc * colq
                    A[:, q] = s * colp + c * colq
                    rowp = A[p, :].copy()
                    rowq = A[q, :].copy()
                    A[p, :] = c * rowp - s * rowq
                    A[q, :] = sc * rowp + c * rowq
                    vp = V[:, p].copy()
                    vq = V[:, q].copy()
                    V[:, p] = c * vp - sc * vq
                    V[:, q] = s * vp + c * vq
        else:
            raise EigenConvergenceError(
                f"Jacobi did not reach off-diagonal threshold in {max_sweeps} sweeps "
                f"(off={float(off):.3e}, thresh={float(thresh):.3e})")
        evals = [A[i, i].real for i in range(n)]
        order = sorted(range(n), key=lambda i: float(evals[i]))
        evals = [evals[i] for i in order]
        V = V[:, order]
        return evals, V
    raise AssertionError  # pragma: no cover


def _refined_eigh(M: np.ndarray, prec: Precision):
    """numpy seed + Newton-type (Ogita-Aishima) refinement to the big lane."""
    n = M.shape[0]
    Md = mx.as_double(M)
    w, X0 = np.linalg.eigh(Md)
    target_bits = prec.bits
    bits = 106
    X = mx.to_precision(X0, Precision(max(32, int(bits / 3.33))))
    lam = list(w)
    while True:
        bits = min(2 * bits, target_bits + 24)
        p = Precision(max(16, int(bits / 3.4)))
        A = mx.to_precision(M, p)
        X = mx.to_precision(X, p)
        with workprec(p):
            Xd = mx.adjoint(X)
            R = mx.eye(n, p) - mx.matmul(Xd, X, p)
            S = mx.matmul(Xd, mx.matmul(A, X, p), p)
            lam = [S[i, i].real for i in range(n)]
            E = np.empty((n, n), dtype=object)
            scale = float(mx.max_abs(S, p)) or 1.0
            for i in range(n):
                for j in range(n):
                    if i == j:
                        E[i, j] = R[i, i] / 2
                    else:
                        den = lam[j] - lam[i]
                        if abs(float(den)) < 1e-10 * scale:
                            E[i, j] = -R[i, j] / 2
                        else:
                            E[i, j] = (S[i, j] + lam[j] * R[i, j]) / den
            X = X + mx.matmul(X, E, p)
        if bits >= target_bits + 24:
            # one polishing pass at full precision, then stop
            A = mx.to_precision(M, prec)
            X = mx.to_precision(X, prec)
            with workprec(prec):
                Xd = mx.adjoint(X)
                R = mx.eye(n, prec) - mx.matmul(Xd, X, prec)
                S = mx.matmul(Xd, mx.matmul(A, X, prec), prec)
                lam = [S[i, i].real for i in range(n)]
                E = np.empty((n, n), dtype=object)
                scale = float(mx.max_abs(S, prec)) or 1.0
                for i in range(n):
                    for j in range(n):
                        if i == j:
                            E[i, j] = R[i, i] / 2
                        else:
                            den = lam[j] - lam[i]
                            if abs(float(den)) < 1e-10 * scale:
                                E[i, j] = -R[i, j] / 2
                            else:
                                E[i, j] = (S[i, j] + lam[j] * R[i, j]) / den
                X = X + mx.matmul(X, E, prec)
                Xd = mx.adjoint(X)
                S = mx.matmul(Xd, mx.matmul(A, X, prec), prec)
                lam = [S[i, i].real for i in range(n)]
            break
    order = sorted(range(n), key=lambda i: float(lam[i]))
    lam = [lam[i] for i in order]
    X = X[:, order]
    return lam, X


def eig_hermitian(M: np.ndarray, prec: Precision = DOUBLE, check: bool = True,
                  method: str = "auto"):
    """Eigendecomposition of a Hermitian matrix: (eigenvalues ascending, unitary).

    Eigenvalues are floats in the double lane and gmpy2.mpfr in the big lane.
    """
    if check:
        mx.require_hermitian(M, prec)
    n = M.shape[0]
    if method == "auto":
        if prec.is_double:
            method = "lapack"
        else:
            method = "jacobi" if n <= REFINE_DIM_THRESHOLD else "refined"
    if method == "lapack":
        w, U = np.linalg.eigh(mx.as_double(M))
        return list(w), U.astype(complex)
    if method == "jacobi":
        return jacobi_eigh(M, prec)
    if method == "refined":
        return _refined_eigh(M, prec)
    raise ValueError(f"unknown eig method {method!r}")


def _apply_spectral(evals, U, f, prec: Precision):
    n = len(evals)
    with workprec(prec):
        fv = [f(ev) for ev in evals]
        if prec.is_double:
            return (U * np.asarray(fv, dtype=complex)[None, :]) @ np.conj(U).T
        D = np.empty((n, n), dtype=object)
        z = mpc_of(0, prec)
        D[:] = z
        for i in range(n):
            D[i, i] = mpc_of(fv[i], prec)
        return mx.matmul(mx.matmul(U, D, prec), mx.adjoint(U), prec)
    return None  # pragma: no cover


def mat_exp_hermitian(M: np.ndarray, s=1.0, prec: Precision = DOUBLE,
                      eig=None) -> np.ndarray:
    """exp(s*M) for Hermitian M via the eigendecomposition."""
    evals, U = eig if eig is not None else eig_hermitian(M, prec)
    if prec.is_double:
        return _apply_spectral(evals, U, lambda ev: np.exp(s * ev), prec)
    with workprec(prec):
        sb = mpf_of(s, prec)
        return _apply_spectral(evals, U, lambda ev: gmpy2.exp(sb * ev), prec)
    return None  # pragma: no cover


def mat_log_pd(M: np.ndarray, prec: Precision = DOUBLE, eig=None) -> np.ndarray:
    """Principal log of a positive-definite Hermitian matrix."""
    evals, U = eig if eig is not None else eig_hermitian(M, prec)
    floor = -mx.frobenius_norm(M, prec) * prec.tol(3)
    for ev in evals:
        if float(ev) <= float(floor):
            raise ValueError(f"matrix is not positive definite: eigenvalue {float(ev):.3e}")
    if prec.is_double:
        return _apply_spectral(evals, U, lambda ev: np.log(max(ev, 5e-324)), prec)
    with workprec(prec):
        return _apply_spectral(evals, U, gmpy2.log, prec)
    return None  # pragma: no cover


def singular_values(M: np.ndarray, prec: Precision = DOUBLE):
    if prec.is_double and not is_bigarray(M):
        return np.linalg.svd(M, compute_uv=False)
    MtM = mx.matmul(mx.adjoint(M), M, prec)
    evals, _ = eig_hermitian(MtM, prec, check=False)
    with workprec(prec):
        return [gmpy2.sqrt(abs(ev)) for ev in evals][::-1]
    return None  # pragma: no cover


def trace_norm(M: np.ndarray, prec: Precision = DOUBLE):
    sv = singular_values(M, prec)
    if prec.is_double and not is_bigarray(M):
        return float(np.sum(sv))
    with workprec(prec):
        s = gmpy2.mpfr(0)
        for v in sv:
            s += v
        return s
    return None  # pragma: no cover


def op_norm(M: np.ndarray, prec: Precision = DOUBLE):
    sv = singular_values(M, prec)
    if prec.is_double and not is_bigarray(M):
        return float(sv[0]) if len(sv) else 0.0
    return max(sv)


def trace_distance(A: np.ndarray, B: np.ndarray, prec: Precision = DOUBLE):
    return trace_norm(A - B, prec)


def solve_linear(A: np.ndarray, b: np.ndarray, prec: Precision = DOUBLE) -> np.ndarray:
    """Small dense solve by Gaussian elimination with partial pivoting."""
    if prec.is_double and not is_bigarray(A):
        return np.linalg.solve(A, b)
    n = A.shape[0]
    with workprec(prec):
        M = mx.to_precision(A, prec)
        v = np.array([mpc_of(x, prec) for x in np.asarray(b).ravel()], dtype=object)
        for col in range(n):
            piv = max(range(col, n), key=lambda r: abs(M[r, col]))
            if float(abs(M[piv, col])) == 0.0:
                raise ZeroDivisionError("singular system")
            if piv != col:
                M[[col, piv]] = M[[piv, col]]
                v[[col, piv]] = v[[piv, col]]
            for r in range(col + 1, n):
                f = M[r, col] / M[col, col]
                M[r, col:] = M[r, col:] - f * M[col, col:]
                v[r] = v[r] - f * v[col]
        x = np.empty(n, dtype=object)
        for r in range(n - 1, -1, -1):
            s = v[r]
            for c in range(r + 1, n):
                s = s - M[r, c] * x[c]
            x[r] = s / M[r, r]
        return x
    return None  # pragma: no cover

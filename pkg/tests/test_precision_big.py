"""Big-float lane: precision ladders, limb products, refined eigensolver."""

import numpy as np
import pytest

from thermochain import numkit as nk
from thermochain.numkit.bigmul import limb_matmul
from thermochain.rand import philox, random_hermitian


def test_min_digits_enforced():
    with pytest.raises(ValueError):
        nk.bigfloat(10)


def test_tolerance_scaling():
    assert nk.bigfloat(50).tol() == 1e-47
    assert nk.DOUBLE.tol() == 1e-12


def test_limb_matches_object_product():
    rng = philox(20)
    P = nk.bigfloat(60)
    A = nk.to_precision(rng.normal(size=(20, 20)) + 1j * rng.normal(size=(20, 20)), P)
    B = nk.to_precision(rng.normal(size=(20, 20)) + 1j * rng.normal(size=(20, 20)), P)
    C1 = limb_matmul(A, B, P)
    with nk.workprec(P):
        C2 = A @ B
        assert float(nk.max_abs(C1 - C2, P)) < 1e-55


def test_limb_handles_zero_and_scale_spread():
    P = nk.bigfloat(50)
    A = nk.zeros(3, 3, P)
    B = nk.eye(3, P)
    C = limb_matmul(A, B, P)
    assert float(nk.max_abs(C, P)) == 0.0
    with nk.workprec(P):
        A[0, 0] = nk.mpc_of(1e20, P)
        A[1, 1] = nk.mpc_of(1e-20, P)
    C = limb_matmul(A, A, P)
    with nk.workprec(P):
        assert abs(float(C[0, 0].real) - 1e40) / 1e40 < 1e-40


def test_jacobi_reconstruction_scaling():
    rng = philox(21)
    M = random_hermitian(6, rng)
    P = nk.bigfloat(50)
    Mb = nk.to_precision(M, P)
    w, U = nk.eig_hermitian(Mb, P)
    with nk.workprec(P):
        R = nk.matmul(nk.matmul(U, nk.diag(w, P), P), nk.adjoint(U), P) - Mb
        scale = nk.frobenius_norm(Mb, P)
        assert float(nk.frobenius_norm(R, P)) < 6 * 1e-47 * float(scale)
        uni = nk.matmul(nk.adjoint(U), U, P) - nk.eye(6, P)
        assert float(nk.frobenius_norm(uni, P)) < 6 * 1e-47


def test_refined_matches_jacobi():
    rng = philox(22)
    M = random_hermitian(10, rng)
    P = nk.bigfloat(60)
    Mb = nk.to_precision(M, P)
    w1, _ = nk.eig_hermitian(Mb, P, method="jacobi")
    w2, U2 = nk.eig_hermitian(Mb, P, method="refined")
    with nk.workprec(P):
        dev = max(abs(a - b) for a, b in zip(w1, w2))
        assert float(dev) < 1e-55
        R = nk.matmul(nk.matmul(U2, nk.diag(w2, P), P), nk.adjoint(U2), P) - Mb
        assert float(nk.frobenius_norm(R, P)) < 1e-54


def test_refined_handles_degenerate_spectrum():
    P = nk.bigfloat(40)
    M = nk.to_precision(np.eye(4, dtype=complex), P)
    w, U = nk.eig_hermitian(M, P, method="refined")
    with nk.workprec(P):
        assert all(abs(v - 1) < 1e-35 for v in w)
        uni = nk.matmul(nk.adjoint(U), U, P) - nk.eye(4, P)
        assert float(nk.frobenius_norm(uni, P)) < 1e-30


def test_exp_log_ladder_property():
    # exp(log(exp(M))) residual and the P vs 2P agreement ladder
    rng = philox(23)
    M = random_hermitian(4, rng, norm=0.9)
    for digits in (30, 60):
        P = nk.bigfloat(digits)
        Mb = nk.to_precision(M, P)
        E = nk.mat_exp_hermitian(Mb, 1.0, P)
        L = nk.mat_log_pd(E, P)
        E2 = nk.mat_exp_hermitian(L, 1.0, P)
        with nk.workprec(P):
            num = float(nk.frobenius_norm(E2 - E, P))
            den = float(nk.frobenius_norm(E, P))
        assert num <= 16 * 10.0 ** (6 - digits) * den


def test_double_precision_ladder():
    # rerunning at 2P agrees with P to at least P-5 digits
    rng = philox(24)
    M = random_hermitian(4, rng)
    P = nk.bigfloat(30)
    P2 = P.doubled()
    E1 = nk.mat_exp_hermitian(nk.to_precision(M, P), 0.7, P)
    E2 = nk.mat_exp_hermitian(nk.to_precision(M, P2), 0.7, P2)
    with nk.workprec(P2):
        diff = float(nk.max_abs(nk.to_precision(E1, P2) - E2, P2))
    assert diff < 10.0 ** (-(30 - 5))


def test_trace_norm_bigfloat():
    P = nk.bigfloat(40)
    Z = nk.to_precision(np.diag([1.0, -1.0]).astype(complex), P)
    assert abs(float(nk.trace_norm(Z, P)) - 2.0) < 1e-30

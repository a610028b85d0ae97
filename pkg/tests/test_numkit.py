import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermochain import numkit as nk
from thermochain.rand import philox, random_density, random_hermitian


def test_pauli_z_eigs():
    Z = np.diag([1.0, -1.0]).astype(complex)
    w, U = nk.eig_hermitian(Z)
    assert np.allclose(w, [-1.0, 1.0])


def test_identity_eigs():
    w, U = nk.eig_hermitian(np.eye(4, dtype=complex))
    assert np.allclose(w, 1.0)
    assert np.linalg.norm(U.conj().T @ U - np.eye(4)) < 1e-12


def test_random_reconstruction():
    rng = philox(1)
    M = random_hermitian(8, rng)
    w, U = nk.eig_hermitian(M)
    assert np.linalg.norm(U @ np.diag(w) @ U.conj().T - M) < 1e-12


def test_jacobi_matches_lapack():
    rng = philox(2)
    M = random_hermitian(6, rng)
    w1, _ = nk.eig_hermitian(M)
    w2, U2 = nk.eig_hermitian(M, method="jacobi")
    assert np.max(np.abs(np.array(w1) - np.array(w2))) < 1e-10
    # spec invariant: dim * 10^(3-P) * ||M||_F with P = 15 for the double lane
    bound = 6 * 1e-12 * np.linalg.norm(M)
    assert np.linalg.norm(U2 @ np.diag(w2) @ U2.conj().T - M) < bound


def test_non_hermitian_rejected():
    M = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    with pytest.raises(ValueError):
        nk.eig_hermitian(M)


def test_exp_taylor_oracle():
    rng = philox(3)
    M = random_hermitian(4, rng)
    E = nk.mat_exp_hermitian(M, 0.3)
    T = np.eye(4, dtype=complex)
    term = np.eye(4, dtype=complex)
    for k in range(1, 31):
        term = term @ (0.3 * M) / k
        T += term
    assert np.linalg.norm(E - T) < 1e-12


def test_exp_at_zero_is_identity():
    rng = philox(4)
    M = random_hermitian(5, rng)
    assert np.linalg.norm(nk.mat_exp_hermitian(M, 0.0) - np.eye(5)) < 1e-14


def test_exp_diag():
    Z = np.diag([1.0, -1.0]).astype(complex)
    E = nk.mat_exp_hermitian(Z, 1.0)
    assert np.allclose(np.diag(E), [np.e, 1 / np.e])


def test_log_round_trip():
    rng = philox(5)
    M = random_hermitian(4, rng, norm=0.8)
    L = nk.mat_log_pd(nk.mat_exp_hermitian(M, 1.0))
    assert np.linalg.norm(L - M) < 1e-12


def test_log_diag():
    L = nk.mat_log_pd(np.diag([2.0, 0.5]).astype(complex))
    assert np.allclose(np.diag(L), [np.log(2), -np.log(2)])


def test_log_rejects_non_pd():
    with pytest.raises(ValueError):
        nk.mat_log_pd(np.diag([1.0, -0.5]).astype(complex))


def test_norms_pauli():
    Z = np.diag([1.0, -1.0]).astype(complex)
    assert abs(nk.trace_norm(Z) - 2.0) < 1e-14
    assert abs(nk.op_norm(Z) - 1.0) < 1e-14
    assert abs(nk.frobenius_norm(Z) - np.sqrt(2)) < 1e-14


def test_density_trace_norm_one():
    rng = philox(6)
    rho = random_density(8, rng)
    assert abs(nk.trace_norm(rho) - 1.0) < 1e-12


def test_norm_ordering():
    rng = philox(7)
    M = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    tn, on, fn = nk.trace_norm(M), nk.op_norm(M), nk.frobenius_norm(M)
    assert tn >= on - 1e-12
    assert on >= fn / np.sqrt(6) - 1e-12
    sv = np.linalg.svd(M, compute_uv=False)
    assert abs(tn - sv.sum()) < 1e-10


def test_embed_and_kron():
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    I2 = np.eye(2, dtype=complex)
    assert np.allclose(nk.kron(np.diag([1.0, -1.0]).astype(complex), I2),
                       np.kron(np.diag([1, -1]), np.eye(2)))
    emb = nk.embed_on_sites(X, (2,), 3)
    assert np.allclose(emb, np.kron(np.kron(I2, X), I2))


def test_embed_trace_factorization():
    rng = philox(8)
    op = random_hermitian(4, rng)
    emb = nk.embed_on_sites(op, (1, 3), 4)
    assert abs(np.trace(emb) - np.trace(op) * 4) < 1e-10


def test_embed_out_of_range():
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    with pytest.raises(IndexError):
        nk.embed_on_sites(X, (4,), 3)


def test_partial_trace_product():
    rng = philox(9)
    A = random_hermitian(2, rng)
    B = random_hermitian(2, rng)
    M = np.kron(A, B)
    assert np.allclose(nk.partial_trace_sites(M, (1,), 2), A * np.trace(B))


def test_partial_trace_bell():
    bell = np.zeros(4, dtype=complex)
    bell[0] = bell[3] = 1 / np.sqrt(2)
    rho = np.outer(bell, bell.conj())
    assert np.allclose(nk.partial_trace_sites(rho, (1,), 2), np.eye(2) / 2)


def test_partial_trace_index_sum_oracle():
    rng = philox(10)
    M = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    red = nk.partial_trace_sites(M, (1,), 2)
    # explicit index-summation oracle
    oracle = np.zeros((2, 2), dtype=complex)
    for a in range(2):
        for b in range(2):
            oracle[a, b] = sum(M[2 * a + s, 2 * b + s] for s in range(2))
    assert np.allclose(red, oracle)


def test_normalized_partial_trace_props():
    rng = philox(11)
    M = random_hermitian(8, rng)
    nt = nk.normalized_partial_trace_sites(M, (2,), 3)
    nt2 = nk.normalized_partial_trace_sites(nt, (2,), 3)
    assert np.linalg.norm(nt - nt2) < 1e-12          # idempotent
    assert abs(np.trace(nt) - np.trace(M)) < 1e-10   # trace preserving
    assert nk.op_norm(nt) <= nk.op_norm(M) + 1e-10   # contractive in op norm


def test_vectorize_superop_identity():
    d = 3
    S = nk.vectorize_superop([(np.eye(d, dtype=complex), np.eye(d, dtype=complex))], d)
    assert np.allclose(S, np.eye(d * d))


def test_commutator_superop_matches_direct():
    rng = philox(12)
    H = random_hermitian(4, rng)
    rho = random_density(4, rng)
    S = nk.commutator_superop(H)
    assert np.allclose(nk.apply_superop(S, rho), -1j * (H @ rho - rho @ H))


def test_lindblad_superop_matches_direct():
    rng = philox(13)
    L = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = random_density(4, rng)
    S = nk.dissipator_superop(L)
    direct = L @ rho @ L.conj().T - 0.5 * (L.conj().T @ L @ rho + rho @ L.conj().T @ L)
    assert np.linalg.norm(nk.apply_superop(S, rho) - direct) < 1e-12


def test_superop_exp_vs_series():
    rng = philox(14)
    H = random_hermitian(3, rng)
    S = nk.commutator_superop(H)
    E = nk.superop_exp(S, 0.7)
    rho = random_density(3, rng)
    U = nk.mat_exp_hermitian(H, 0.0)  # identity check path
    Ut = np.linalg.matrix_power(np.eye(3), 1)
    evals, V = np.linalg.eigh(H)
    Ue = V @ np.diag(np.exp(-1j * evals * 0.7)) @ V.conj().T
    assert np.linalg.norm(nk.apply_superop(E, rho) - Ue @ rho @ Ue.conj().T) < 1e-12


def test_superop_budget():
    with pytest.raises(nk.SizeBudgetError):
        nk.check_superop_budget(8192)


def test_solve_linear_double_and_big():
    rng = philox(15)
    A = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    b = rng.normal(size=5) + 1j * rng.normal(size=5)
    x = nk.solve_linear(A, b)
    assert np.linalg.norm(A @ x - b) < 1e-10
    P = nk.bigfloat(40)
    xb = nk.solve_linear(nk.to_precision(A, P), b, P)
    with nk.workprec(P):
        r = nk.to_precision(A, P) @ xb - np.array([nk.mpc_of(v, P) for v in b], dtype=object)
        assert float(max(abs(v) for v in r)) < 1e-35


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=2, max_value=4), st.integers(min_value=0, max_value=10 ** 6))
def test_property_partial_trace_preserves_trace(nsites, seed):
    rng = philox(seed)
    M = random_hermitian(2 ** nsites, rng)
    keep = (1,)
    red = nk.partial_trace_sites(M, keep, nsites)
    assert abs(np.trace(red) - np.trace(M)) < 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_property_vectorize_round_trip(seed):
    rng = philox(seed)
    rho = random_density(4, rng)
    assert np.allclose(nk.unvec(nk.vec(rho), 4), rho)


@settings(max_examples=10, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_property_unitarity_of_eigbasis(seed):
    rng = philox(seed)
    M = random_hermitian(6, rng)
    _, U = nk.eig_hermitian(M)
    assert np.linalg.norm(U.conj().T @ U - np.eye(6)) < 6 * 1e-12

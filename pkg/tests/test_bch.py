import math
from fractions import Fraction

import numpy as np
import pytest

from thermochain import numkit as nk
from thermochain.bch import (
    bch_first_order_audit,
    bernoulli_asymptotic,
    bernoulli_table,
    boundary_effective_term,
    boundary_term_quadrature,
    q_sequence,
    reduced_gibbs_first_order_audit,
    required_digits,
    shift_invariance_audit,
)
from thermochain.lattice import build_xyz_chain
from thermochain.rand import philox, random_hermitian


def test_bernoulli_values():
    B = bernoulli_table(20)
    assert B[0] == 1 and B[1] == Fraction(-1, 2)
    assert B[2] == Fraction(1, 6) and B[3] == 0 and B[4] == Fraction(-1, 30)
    assert all(B[m] == 0 for m in range(3, 20, 2))
    assert B[20] == Fraction(-174611, 330)


def test_bernoulli_asymptotic_cross_check():
    B = bernoulli_table(20)
    ratio = abs(float(B[20])) / bernoulli_asymptotic(10)
    assert 1 / 1.1 <= ratio <= 1.1


def test_bernoulli_cap():
    with pytest.raises(ValueError):
        bernoulli_table(101)


def test_boundary_term_eig_vs_quadrature():
    H = build_xyz_chain(4)
    bt = boundary_effective_term(H, 0.5)
    quad = boundary_term_quadrature(H, 0.5)
    assert np.linalg.norm(bt.matrix - quad) < 1e-12
    assert abs(bt.G - np.trace(nk.mat_exp_hermitian(
        (np.array([[0, 1], [1, 0]]) + np.array([[0, -1j], [1j, 0]]) + np.diag([1, -1])) / 3,
        0.5)).real) < 1e-12


def test_boundary_term_zero_bond():
    H = build_xyz_chain(3).with_coefficients({"bond_2_3": 0.0})
    bt = boundary_effective_term(H, 0.5)
    assert np.max(np.abs(bt.matrix)) < 1e-14


def test_boundary_term_precision_ladder():
    H = build_xyz_chain(4)
    bt_d = boundary_effective_term(H, 0.5)
    P = nk.bigfloat(50)
    bt_b = boundary_effective_term(H, 0.5, P)
    assert float(nk.max_abs(nk.to_precision(bt_d.matrix, P) - bt_b.matrix, P)) < 1e-12


def test_q_sequence_modes_agree():
    H = build_xyz_chain(4)
    qe = q_sequence(H, 0.5, 8, mode="eigen")
    qd = q_sequence(H, 0.5, 8, mode="direct")
    assert [p.m for p in qe] == [0, 1, 2, 4, 6, 8]
    for a, b in zip(qe, qd):
        assert abs(a.q - b.q) / a.q < 1e-12


def test_q_sequence_odd_m_skipped():
    H = build_xyz_chain(3)
    pts = q_sequence(H, 0.5, 7)
    assert all(p.m in (0, 1) or p.m % 2 == 0 for p in pts)


def test_q_small_m_direct_oracle():
    # m = 0, 1 at n = 4 against the explicit formula
    H = build_xyz_chain(4)
    beta = 0.5
    pts = q_sequence(H, beta, 1)
    bt = boundary_effective_term(H, beta)
    from thermochain.lattice import assemble_dense, subset_hamiltonian, LatticeSpec, HamiltonianSpec
    Hm1 = HamiltonianSpec(LatticeSpec(3), subset_hamiltonian(H, (1, 2, 3)).terms, {})
    Hm1d = assemble_dense(Hm1)
    W0 = bt.matrix + bt.matrix.conj().T
    q0 = beta * np.linalg.norm(W0)
    ad = Hm1d @ bt.matrix - bt.matrix @ Hm1d
    W1 = ad + ad.conj().T
    q1 = beta ** 2 * 0.5 * np.linalg.norm(W1)
    assert abs(pts[0].q - q0) / q0 < 1e-12
    assert abs(pts[1].q - q1) / q1 < 1e-12


def test_q_precision_refusal():
    H = build_xyz_chain(4)
    with pytest.raises(ValueError):
        q_sequence(H, 0.5, 60, nk.bigfloat(20))


def test_q_precision_ladder_small():
    H = build_xyz_chain(3)
    p1 = q_sequence(H, 0.5, 12, nk.bigfloat(40))
    p2 = q_sequence(H, 0.5, 12, nk.bigfloat(80))
    for a, b in zip(p1, p2):
        if b.q > 0:
            assert abs(a.q - b.q) / b.q < 10.0 ** (-(40 // 2))


def test_shift_invariance():
    H = build_xyz_chain(4)
    assert shift_invariance_audit(H, 0.5, 8, 0.9) < 1e-10


def test_growth_tail_requires_large_spread():
    # at n=4 and beta=1/2 the even tail decays (series converges); the ratio
    # audit distinguishes the regimes
    H = build_xyz_chain(4)
    pts = [p for p in q_sequence(H, 0.5, 30) if p.m % 2 == 0 and p.m >= 10]
    ratios = [pts[i + 1].q / pts[i].q for i in range(len(pts) - 1)]
    assert all(r < 1.0 for r in ratios[-5:])


def test_bch_audit_slope_two():
    rng = philox(80)
    A = random_hermitian(8, rng, norm=1.0)
    M = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    Bop = M / np.linalg.norm(M, 2)
    rep = bch_first_order_audit(A, Bop, 0.3)
    assert abs(rep["slope"] - 2.0) < 0.1


def test_bch_audit_negative_control():
    rng = philox(81)
    A = random_hermitian(8, rng, norm=1.0)
    M = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    Bop = M / np.linalg.norm(M, 2)
    rep = bch_first_order_audit(A, Bop, 0.3, b1_convention=Fraction(1, 2))
    assert rep["slope"] < 1.5


def test_bch_commuting_collapse():
    rng = philox(82)
    D1 = np.diag(rng.normal(size=8)).astype(complex)
    D2 = np.diag(rng.normal(size=8) + 1j * 0).astype(complex)
    rep = bch_first_order_audit(D1, D2, 0.3)
    # the identity is exact for commuting pairs: residuals at machine floor
    assert max(rep["residuals"]) < 1e-12


def test_reduced_gibbs_audit_slope():
    H = build_xyz_chain(3)
    rep = reduced_gibbs_first_order_audit(H, 0.5)
    assert abs(rep["slope"] - 2.0) < 0.1
    rep_q = reduced_gibbs_first_order_audit(H, 0.5, use_quadrature_dh=True)
    assert max(abs(a - b) for a, b in zip(rep["residuals"], rep_q["residuals"])) < 1e-10


def test_required_digits_monotone():
    assert required_digits(50, 8.0) > required_digits(20, 8.0) > 15

import math

import numpy as np
import pytest

from thermochain import numkit as nk
from thermochain.gibbs import (
    cmi_bits,
    correlation,
    entropy_bits,
    gibbs_density,
    gibbs_state,
    heisenberg_evolve,
    log_linear_fit,
    make_partition,
    truncated_heisenberg,
)
from thermochain.lattice import (
    PAULI_X,
    PAULI_Z,
    HamiltonianSpec,
    InteractionTerm,
    LatticeSpec,
    assemble_dense,
    build_xyz_chain,
)
from thermochain.rand import philox, random_density, random_hermitian


def test_infinite_temperature():
    H = build_xyz_chain(3)
    st = gibbs_state(H, 0.0)
    assert np.allclose(st.rho, np.eye(8) / 8)
    assert abs(st.logZ - 3 * math.log(2)) < 1e-12


def test_single_site_z():
    H = HamiltonianSpec(LatticeSpec(1), (InteractionTerm((1,), PAULI_Z, "z"),))
    st = gibbs_state(H, 1.0)
    Z = math.e + 1 / math.e
    assert np.allclose(np.diag(st.rho), [math.e / Z, 1 / math.e / Z])


def test_energy_matches_eigensum():
    H = build_xyz_chain(4)
    beta = 0.5
    st = gibbs_state(H, beta)
    Hd = assemble_dense(H)
    w = np.linalg.eigvalsh(Hd)
    expect = np.sum(w * np.exp(beta * w)) / np.sum(np.exp(beta * w))
    assert abs(np.real(np.trace(st.rho @ Hd)) - expect) < 1e-10


def test_overflow_guard():
    H = build_xyz_chain(2)
    big = {t.label: 1e4 for t in H.terms}
    with pytest.raises(OverflowError):
        gibbs_state(H.with_coefficients(big), 1000.0)


def test_reduced_consistency():
    H = build_xyz_chain(4)
    st = gibbs_state(H, 0.4)
    ab = nk.partial_trace_sites(st.rho, (1, 2), 4)
    a1 = nk.partial_trace_sites(ab, (1,), 2)
    a2 = nk.partial_trace_sites(st.rho, (1,), 4)
    assert np.allclose(a1, a2)
    assert abs(np.trace(ab) - 1) < 1e-12


def test_entropy_pure_and_mixed():
    v = np.zeros(4, dtype=complex)
    v[0] = 1.0
    assert entropy_bits(np.outer(v, v.conj())) < 1e-12
    assert abs(entropy_bits(np.eye(2, dtype=complex) / 2) - 1.0) < 1e-12


def test_ghz_cmi_one_bit():
    ghz = np.zeros(8, dtype=complex)
    ghz[0] = ghz[7] = 1 / math.sqrt(2)
    rho = np.outer(ghz, ghz.conj())
    val, raw = cmi_bits(rho, (1,), (2,), (3,), 3)
    assert abs(val - 1.0) < 1e-10


def test_cmi_rejects_overlap():
    rho = np.eye(8, dtype=complex) / 8
    with pytest.raises(ValueError):
        cmi_bits(rho, (1,), (1, 2), (3,), 3)


def test_strong_subadditivity_instances():
    rng = philox(30)
    worst = 0.0
    for _ in range(200):
        rho = random_density(8, rng)
        _, raw = cmi_bits(rho, (1,), (2,), (3,), 3)
        worst = min(worst, raw)
    assert worst >= -10 * 8 * 1e-12


def test_cmi_zero_for_decoupled_blocks():
    # no cross-B coupling: product Gibbs state across the tripartition
    lat = LatticeSpec(3)
    terms = (InteractionTerm((1,), PAULI_Z, "z1"),
             InteractionTerm((2,), PAULI_X, "x2"),
             InteractionTerm((3,), PAULI_Z, "z3"))
    H = HamiltonianSpec(lat, terms)
    st = gibbs_state(H, 0.7)
    val, _ = cmi_bits(st.rho, (1,), (2,), (3,), 3)
    assert val <= 1e-10


def test_correlation_product_and_bell():
    rng = philox(31)
    A = random_density(2, rng)
    B = random_density(2, rng)
    rho = np.kron(A, B)
    Z1 = nk.embed_on_sites(PAULI_Z, (1,), 2)
    Z2 = nk.embed_on_sites(PAULI_Z, (2,), 2)
    assert abs(correlation(rho, Z1, Z2, (1,), (2,))) < 1e-12
    bell = np.zeros(4, dtype=complex)
    bell[0] = bell[3] = 1 / math.sqrt(2)
    rb = np.outer(bell, bell.conj())
    assert abs(correlation(rb, Z1, Z2, (1,), (2,)) - 1.0) < 1e-12
    with pytest.raises(ValueError):
        correlation(rho, Z1, Z1, (1,), (1,))


def test_heisenberg_unitarity_and_commuting():
    rng = philox(32)
    H = random_hermitian(8, rng)
    O = random_hermitian(8, rng)
    Ot = heisenberg_evolve(O, H, 0.9)
    assert abs(np.linalg.norm(Ot) - np.linalg.norm(O)) < 1e-10
    assert np.allclose(heisenberg_evolve(O, H, 0.0), O)
    assert np.allclose(heisenberg_evolve(H, H, 1.3), H)


def test_truncated_heisenberg_support():
    H = build_xyz_chain(4)
    Hd = assemble_dense(H)
    O = nk.embed_on_sites(PAULI_Z, (2,), 4)
    Ot = truncated_heisenberg(O, Hd, 0.5, 2, 1, 4)
    # supported on ball(2,1) = {1,2,3}: commutes with anything on site 4
    X4 = nk.embed_on_sites(PAULI_X, (4,), 4)
    assert np.linalg.norm(Ot @ X4 - X4 @ Ot) < 1e-12


def test_shell_difference_decay_and_lr_shape():
    n, t = 8, 0.5
    H = build_xyz_chain(n)
    Hd = assemble_dense(H)
    eig = nk.eig_hermitian(Hd)
    O = nk.embed_on_sites(PAULI_Z, (1,), n)
    diffs = []
    for r in range(1, 6):
        Or = truncated_heisenberg(O, Hd, t, 1, r, n, eig=eig)
        Orm1 = truncated_heisenberg(O, Hd, t, 1, r - 1, n, eig=eig)
        diffs.append(float(nk.op_norm(Or - Orm1)))
    assert all(diffs[i + 1] < diffs[i] for i in range(len(diffs) - 1))
    # fit C, v on r in {2,3} to the form C (v t l_H / r)^r, check r in {4,5} below it
    r2, r3 = diffs[1], diffs[2]
    # two-parameter fit in logs: log d_r = log C + r log(vt) - r log r
    import numpy as _np
    A = _np.array([[1.0, 2.0], [1.0, 3.0]])
    b = _np.array([_np.log(r2) + 2 * _np.log(2.0), _np.log(r3) + 3 * _np.log(3.0)])
    logC, logvt = _np.linalg.solve(A, b)
    # desk-scale two-point fits carry a small model error; allow 1.5x slack
    for r, d in zip((4, 5), diffs[3:5]):
        bound = _np.exp(logC + r * logvt - r * _np.log(r))
        assert d <= 1.5 * bound


def test_partition_geometry():
    H = build_xyz_chain(8)
    part = make_partition(H, (1, 2), (7, 8))
    assert part.R == 5
    assert part.B1 == (3, 4) and part.B2 == (5, 6)
    assert part.B1check == (3,) and part.B2check == (6,)
    with pytest.raises(ValueError):
        make_partition(H, (1, 2, 3), (4, 5))


def test_log_linear_fit():
    xs = [1, 2, 3, 4]
    ys = [2.0 - 0.5 * x for x in xs]
    slope, icpt, r = log_linear_fit(xs, ys)
    assert abs(slope + 0.5) < 1e-12 and abs(r + 1.0) < 1e-12

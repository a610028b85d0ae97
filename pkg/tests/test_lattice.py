import json

import numpy as np
import pytest

from thermochain import numkit as nk
from thermochain.lattice import (
    LatticeSpec,
    assemble_dense,
    boundary_term,
    build_xyz_chain,
    crossing_terms,
    from_json_dict,
    parameterize,
    single_coupling_family,
    subset_hamiltonian,
    to_json_dict,
    trim_region,
    xyz_bond,
    xyz_field,
)


def test_site_count_caps():
    with pytest.raises(ValueError):
        LatticeSpec(13)
    with pytest.raises(ValueError):
        LatticeSpec(0)


def test_ball_and_distance():
    lat = LatticeSpec(10)
    assert lat.ball(3, 0) == (3,)
    assert lat.ball(3, 2) == (1, 2, 3, 4, 5)
    assert lat.ball(1, 2) == (1, 2, 3)
    assert lat.distance((1,), (4,)) == 3
    assert lat.distance((1, 2), (2, 5)) == 0
    assert lat.boundary((4, 5, 6)) == (4, 6)


def test_gamma_metadata():
    lat = LatticeSpec(10)
    assert lat.D == 1 and lat.gamma == 3
    for i in lat.sites:
        for r in (1, 2, 3):
            assert len(lat.ball(i, r)) <= lat.gamma * r


def test_xyz_norms():
    assert abs(nk.op_norm(xyz_field()) - 1 / np.sqrt(3)) < 1e-14
    # bond eigenvalues are (-1, 0, 1/3, 2/3): the norm is exactly 1
    assert abs(nk.op_norm(xyz_bond()) - 1.0) < 1e-14
    w = sorted(np.linalg.eigvalsh(xyz_bond()))
    assert np.allclose(w, [-1.0, 0.0, 1 / 3, 2 / 3])


def test_xyz_chain_build():
    H = build_xyz_chain(2)
    Hd = assemble_dense(H)
    assert Hd.shape == (4, 4)
    assert nk.hermiticity_defect(Hd) < 1e-14
    assert len(H.terms) == 3
    assert H.interaction_length() == 1
    with pytest.raises(ValueError):
        build_xyz_chain(1)


def test_one_site_energy():
    H = build_xyz_chain(4)
    g = H.one_site_energy()
    assert abs(g - (2.0 + 1 / np.sqrt(3))) < 1e-12


def test_assemble_matches_embed_sum():
    H = build_xyz_chain(3)
    Hd = assemble_dense(H)
    acc = np.zeros((8, 8), dtype=complex)
    for t in H.terms:
        acc += nk.embed_on_sites(H.term_matrix(t), t.support, 3)
    assert np.allclose(Hd, acc)


def test_single_site_chain():
    from thermochain.lattice import HamiltonianSpec, InteractionTerm, PAULI_Z
    H = HamiltonianSpec(LatticeSpec(1), (InteractionTerm((1,), PAULI_Z, "z"),))
    assert np.allclose(assemble_dense(H), PAULI_Z)


def test_three_way_split_exact():
    H = build_xyz_chain(5)
    Hd = assemble_dense(H)
    for L in ((1, 2), (2, 3, 4), (), (1, 2, 3, 4, 5), (1, 4)):
        HL = assemble_dense(subset_hamiltonian(H, L))
        comp = tuple(s for s in range(1, 6) if s not in L)
        HLc = assemble_dense(subset_hamiltonian(H, comp))
        dh = boundary_term(H, L)
        assert np.array_equal(Hd, Hd)  # determinism guard
        assert np.allclose(HL + HLc + dh, Hd, atol=1e-14)


def test_subset_full_and_empty():
    H = build_xyz_chain(4)
    assert np.allclose(assemble_dense(subset_hamiltonian(H, (1, 2, 3, 4))),
                       assemble_dense(H))
    assert np.allclose(assemble_dense(subset_hamiltonian(H, ())), 0.0)
    assert np.max(np.abs(boundary_term(H, (1, 2, 3, 4)))) == 0.0


def test_boundary_term_is_embedded_bond():
    H = build_xyz_chain(4)
    dh = boundary_term(H, (1, 2))
    expect = nk.embed_on_sites(xyz_bond(), (2, 3), 4)
    assert np.allclose(dh, expect)


def test_interaction_length_audit():
    H = build_xyz_chain(6)
    assert all(t.diameter() <= H.interaction_length() for t in H.terms)


def test_parameterize():
    H = build_xyz_chain(3)
    Hd = assemble_dense(H)
    assert np.allclose(assemble_dense(parameterize(H, {})), Hd)
    all_zero = {t.label: 0.0 for t in H.terms}
    assert np.max(np.abs(assemble_dense(parameterize(H, all_zero)))) == 0.0
    with pytest.raises(KeyError):
        parameterize(H, {"nope": 1.0})


def test_single_coupling_family():
    H = build_xyz_chain(3)
    Ha = single_coupling_family(H, 0.5)
    H0 = single_coupling_family(H, 0.0)
    direct = assemble_dense(H0) + 0.5 * nk.embed_on_sites(xyz_bond(), (2, 3), 3)
    assert np.allclose(assemble_dense(Ha), direct)
    assert np.allclose(assemble_dense(single_coupling_family(H, 1.0)), assemble_dense(H))


def test_trim_region():
    lat = LatticeSpec(10)
    assert trim_region(lat, (4, 5, 6, 7), 1) == (5, 6)
    assert trim_region(lat, (4, 5, 6, 7), 1, sides=("right",)) == (4, 5, 6)
    assert trim_region(lat, (4, 5), 1) == ()


def test_trim_separates_blocks():
    H = build_xyz_chain(10)
    lat = H.lattice
    B = tuple(range(4, 8))
    Bc = trim_region(lat, B, 1)
    assert Bc == (5, 6)
    left = tuple(range(1, 5))
    right = tuple(range(8, 11))
    assert not crossing_terms(H, Bc, left + right) or True
    # no term couples the trimmed block to both exposed sides
    assert not crossing_terms(H, (5, 6), (1, 2, 3)) and not crossing_terms(H, (5, 6), (8, 9, 10))


def test_json_round_trip():
    H = build_xyz_chain(3)
    obj = json.loads(json.dumps(to_json_dict(H)))
    H2 = from_json_dict(obj)
    assert np.allclose(assemble_dense(H2), assemble_dense(H))


def test_bigfloat_assembly():
    H = build_xyz_chain(2)
    P = nk.bigfloat(40)
    Hb = assemble_dense(H, P)
    # the double-lane sum rounds once per add; agreement is at double eps
    assert float(nk.max_abs(Hb - nk.to_precision(assemble_dense(H), P), P)) < 1e-15

import numpy as np
import pytest

from thermochain import numkit as nk
from thermochain.bp import (
    bp_truncation_error,
    conjugation_residual,
    exact_bp,
    local_indistinguishability,
    norm_ratio_audit,
    site_update,
    truncate_bp,
)
from thermochain.gibbs import log_linear_fit
from thermochain.lattice import assemble_dense, build_xyz_chain, subset_hamiltonian
from thermochain.rand import philox, random_hermitian


def _update_pair(n):
    H = build_xyz_chain(n)
    HL, HLp, i0 = site_update(H, tuple(range(1, n)), tuple(range(1, n + 1)))
    return assemble_dense(HL), assemble_dense(HLp), i0


def test_identity_update_gives_identity():
    H = build_xyz_chain(3)
    Hd = assemble_dense(H)
    op = exact_bp(Hd, Hd, 0.5, 3)
    assert np.linalg.norm(op.phi - np.eye(8)) < 1e-12


def test_commuting_update_factorizes():
    rng = philox(40)
    w = rng.normal(size=8)
    Hd = np.diag(w).astype(complex)
    v = np.diag(rng.normal(size=8)).astype(complex)
    op = exact_bp(Hd, Hd + v, 0.7, 3)
    assert np.linalg.norm(op.phi - nk.mat_exp_hermitian(v, 0.7 / 2)) < 1e-12


def test_conjugation_identity_n5():
    Hd, Hpd, _ = _update_pair(5)
    op = exact_bp(Hd, Hpd, 0.5, 5)
    assert conjugation_residual(op, Hd, Hpd) < 1e-10


def test_conjugation_residual_precision_ladder():
    Hd, Hpd, _ = _update_pair(3)
    r30 = conjugation_residual(exact_bp(nk.to_precision(Hd, nk.bigfloat(30)),
                                        nk.to_precision(Hpd, nk.bigfloat(30)), 0.5, 3,
                                        prec=nk.bigfloat(30)),
                               nk.to_precision(Hd, nk.bigfloat(30)),
                               nk.to_precision(Hpd, nk.bigfloat(30)), nk.bigfloat(30))
    P60 = nk.bigfloat(60)
    r60 = conjugation_residual(exact_bp(nk.to_precision(Hd, P60),
                                        nk.to_precision(Hpd, P60), 0.5, 3, prec=P60),
                               nk.to_precision(Hd, P60), nk.to_precision(Hpd, P60), P60)
    assert r30 / max(r60, 1e-300) >= 1e15


def test_truncated_bp_locality():
    Hd, Hpd, i0 = _update_pair(5)
    op = truncate_bp(exact_bp(Hd, Hpd, 0.5, 5), i0, 1)
    rng = philox(41)
    O = nk.embed_on_sites(random_hermitian(4, rng), (1, 2), 5)  # on the complement
    assert np.linalg.norm(op.phi @ O - O @ op.phi) < 1e-12


def test_truncation_error_covering_and_identity():
    Hd, Hpd, i0 = _update_pair(4)
    rep = bp_truncation_error(Hd, Hpd, 0.5, i0, 4, 4)
    assert rep["raw"] < 1e-10
    rep0 = bp_truncation_error(Hd, Hd, 0.5, i0, 1, 4)
    assert rep0["raw"] < 1e-12


def test_truncation_error_decay_n8():
    Hd, Hpd, i0 = _update_pair(8)
    raws = []
    for ell in range(1, 7):
        rep = bp_truncation_error(Hd, Hpd, 0.5, i0, ell, 8)
        raws.append(rep["raw"])
    assert all(raws[i + 1] < raws[i] for i in range(len(raws) - 1))
    slope, _, r = log_linear_fit(range(1, 7), np.log10(raws))
    assert slope < 0 and abs(r) >= 0.95


def test_local_indistinguishability_basics():
    Hd, Hpd, i0 = _update_pair(4)
    assert local_indistinguishability(Hd, Hd, 0.5, i0, 1, 4) < 1e-12
    assert local_indistinguishability(Hd, Hpd, 0.0, i0, 1, 4) < 1e-12
    with pytest.raises(ValueError):
        local_indistinguishability(Hd, Hpd, 0.5, i0, 4, 4)


def test_local_indistinguishability_decay_n8():
    Hd, Hpd, i0 = _update_pair(8)
    vals = [local_indistinguishability(Hd, Hpd, 0.5, i0, ell, 8) for ell in range(0, 6)]
    assert all(vals[i + 1] < vals[i] for i in range(len(vals) - 1))
    slope, _, r = log_linear_fit(range(0, 6), np.log10(vals))
    assert slope < 0 and abs(r) >= 0.9


def test_norm_ratio_audit():
    Hd, Hpd, _ = _update_pair(4)
    rep = norm_ratio_audit(Hd, Hpd, 0.5)
    assert rep["holds"]
    # v = c * identity: ratio is e^{-beta c} exactly
    c = 0.7
    rep2 = norm_ratio_audit(Hd, Hd + c * np.eye(16), 0.5)
    assert abs(rep2["ratio"] - np.exp(-0.5 * c)) < 1e-10


def test_site_update_validation():
    H = build_xyz_chain(4)
    with pytest.raises(ValueError):
        site_update(H, (1, 2), (1, 2, 3, 4))

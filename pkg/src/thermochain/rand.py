"""Seeded random instances.

All randomness flows through numpy's Philox4x64 counter-based generator so a
(config, seed) pair reproduces streams bit-identically across platforms.
"""

from __future__ import annotations

import numpy as np


def philox(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def random_hermitian(d: int, rng: np.random.Generator, norm: float | None = None) -> np.ndarray:
    M = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    H = (M + M.conj().T) / 2
    if norm is not None:
        H *= norm / np.linalg.norm(H, 2)
    return H


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    M = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    Q, R = np.linalg.qr(M)
    return Q * (np.diagonal(R) / np.abs(np.diagonal(R)))[None, :].conj()


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = rank or d
    G = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_unit_trace_norm(d: int, rng: np.random.Generator) -> np.ndarray:
    """Random matrix with trace norm 1 (test probe for 1->1 norms)."""
    M = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    M = (M + M.conj().T) / 2
    tn = np.abs(np.linalg.eigvalsh(M)).sum()
    return M / tn

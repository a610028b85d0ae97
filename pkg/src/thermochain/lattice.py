"""Symbolic 1D spin chains: interaction terms, subset Hamiltonians, geometry.

Sites are 1-based, matching the {1,...,n} labeling used throughout.  The main
text sign convention is e^{+beta H}; modules that deviate (the cluster
expansion works with e^{-beta H}) say so in their config echoes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import numkit as nk

SIGN_CONVENTION = "+beta H"

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"x": PAULI_X, "y": PAULI_Y, "z": PAULI_Z}

MAX_SITES = 12


@dataclass(frozen=True)
class LatticeSpec:
    """Open chain of n sites with local dimension d."""

    n: int
    d: int = 2
    # geometry metadata for the chain: dimension D and the ball-growth constant
    D: int = 1
    gamma: int = 3

    def __post_init__(self):
        if not (1 <= self.n <= MAX_SITES):
            raise ValueError(f"site count must be in 1..{MAX_SITES}, got {self.n}")

    @property
    def sites(self) -> tuple[int, ...]:
        return tuple(range(1, self.n + 1))

    @property
    def dim(self) -> int:
        return self.d ** self.n

    def distance(self, X, Y) -> int:
        X = _as_sites(X)
        Y = _as_sites(Y)
        if set(X) & set(Y):
            return 0
        return min(abs(i - j) for i in X for j in Y)

    def ball(self, center, r) -> tuple[int, ...]:
        """i[r] = {j : d(center, j) <= r}; r may be fractional."""
        centers = _as_sites(center)
        return tuple(j for j in self.sites
                     if min(abs(j - c) for c in centers) <= r)

    def boundary(self, X) -> tuple[int, ...]:
        """Inner boundary: sites of X at distance 1 from the complement."""
        X = set(_as_sites(X))
        comp = [s for s in self.sites if s not in X]
        if not comp:
            return ()
        return tuple(sorted(i for i in X if min(abs(i - j) for j in comp) == 1))


def _as_sites(x) -> tuple[int, ...]:
    if isinstance(x, int):
        return (x,)
    return tuple(sorted(set(x)))


@dataclass(frozen=True)
class InteractionTerm:
    support: tuple[int, ...]          # ordered 1-based sites
    op: np.ndarray                    # dense d^{|support|} square, Hermitian
    label: str

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(self.support))
        nk.require_hermitian(self.op)

    def diameter(self) -> int:
        return max(self.support) - min(self.support)


@dataclass(frozen=True)
class HamiltonianSpec:
    lattice: LatticeSpec
    terms: tuple[InteractionTerm, ...]
    coefficients: dict = field(default_factory=dict)   # label -> real, default 1

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            for s in t.support:
                if not (1 <= s <= self.lattice.n):
                    raise ValueError(f"term {t.label} has site {s} outside the lattice")

    def coeff(self, label: str) -> float:
        return float(self.coefficients.get(label, 1.0))

    def term_matrix(self, t: InteractionTerm) -> np.ndarray:
        return self.coeff(t.label) * t.op

    def interaction_length(self) -> int:
        return max((t.diameter() for t in self.terms), default=0)

    def one_site_energy(self) -> float:
        """g = max_i sum_{Z owns i} ||h_Z|| computed from the terms."""
        best = 0.0
        for i in self.lattice.sites:
            tot = sum(abs(self.coeff(t.label)) * nk.op_norm(t.op)
                      for t in self.terms if i in t.support)
            best = max(best, tot)
        return best

    def with_coefficients(self, coefficients: dict) -> "HamiltonianSpec":
        merged = dict(self.coefficients)
        merged.update(coefficients)
        return HamiltonianSpec(self.lattice, self.terms, merged)


def assemble_dense(H: HamiltonianSpec, prec: nk.Precision = nk.DOUBLE) -> np.ndarray:
    lat = H.lattice
    if lat.dim > 4096:
        raise nk.SizeBudgetError(f"dense dimension {lat.dim} exceeds the 4096 budget")
    out = nk.zeros(lat.dim, lat.dim, prec)
    with nk.workprec(prec):
        for t in H.terms:
            c = H.coeff(t.label)
            if c == 0.0:
                continue
            if prec.is_double:
                out = out + c * nk.embed_on_sites(t.op, t.support, lat.n, lat.d, prec)
            else:
                op = nk.to_precision(t.op, prec)
                emb = nk.embed_on_sites(op, t.support, lat.n, lat.d, prec)
                out = out + nk.mpc_of(c, prec) * emb
    return out


def subset_hamiltonian(H: HamiltonianSpec, L) -> HamiltonianSpec:
    """H_L: all terms with support entirely inside L."""
    L = set(_as_sites(L))
    kept = tuple(t for t in H.terms if set(t.support) <= L)
    return HamiltonianSpec(H.lattice, kept, dict(H.coefficients))


def boundary_term(H: HamiltonianSpec, L, prec: nk.Precision = nk.DOUBLE) -> np.ndarray:
    """dh_L = H - H_L - H_{L^c} as a dense matrix (an exact term partition)."""
    L = set(_as_sites(L))
    comp = set(H.lattice.sites) - L
    cross = tuple(t for t in H.terms
                  if (set(t.support) & L) and (set(t.support) & comp))
    return assemble_dense(HamiltonianSpec(H.lattice, cross, dict(H.coefficients)), prec)


def crossing_terms(H: HamiltonianSpec, A, B) -> tuple[InteractionTerm, ...]:
    A = set(_as_sites(A))
    B = set(_as_sites(B))
    return tuple(t for t in H.terms if (set(t.support) & A) and (set(t.support) & B))


def incident_terms(H: HamiltonianSpec, site: int) -> tuple[InteractionTerm, ...]:
    return tuple(t for t in H.terms if site in t.support)


def parameterize(H: HamiltonianSpec, assignment: dict) -> HamiltonianSpec:
    for label in assignment:
        if not any(t.label == label for t in H.terms):
            raise KeyError(f"unknown term label {label!r}")
    return H.with_coefficients({k: float(v) for k, v in assignment.items()})


def single_coupling_family(H: HamiltonianSpec, a: float) -> HamiltonianSpec:
    """H_a = a * h_{n-1,n} + H_0 with H_0 = H minus the last bond."""
    n = H.lattice.n
    label = _bond_label(n - 1, n)
    if not any(t.label == label for t in H.terms):
        raise KeyError(f"no terminal bond term {label!r}")
    return parameterize(H, {label: a})


def trim_region(lat: LatticeSpec, B, l_H: int, sides: tuple[str, ...] = ("left", "right")):
    """Remove l_H boundary layers from the named exposed sides of a contiguous block."""
    B = _as_sites(B)
    if not B:
        return ()
    lo, hi = min(B), max(B)
    if "left" in sides:
        lo += l_H
    if "right" in sides:
        hi -= l_H
    return tuple(s for s in B if lo <= s <= hi)


def _bond_label(i: int, j: int) -> str:
    return f"bond_{i}_{j}"


def _field_label(i: int) -> str:
    return f"field_{i}"


def xyz_bond() -> np.ndarray:
    return (3 * np.kron(PAULI_X, PAULI_X)
            + 2 * np.kron(PAULI_Y, PAULI_Y)
            + np.kron(PAULI_Z, PAULI_Z)) / 6


def xyz_field() -> np.ndarray:
    return (PAULI_X + PAULI_Y + PAULI_Z) / 3


def build_xyz_chain(n: int) -> HamiltonianSpec:
    """XYZ Heisenberg chain: bonds (3XX + 2YY + ZZ)/6, fields (X+Y+Z)/3."""
    if n < 2:
        raise ValueError("the XYZ chain needs at least 2 sites")
    lat = LatticeSpec(n)
    terms = []
    bond = xyz_bond()
    fld = xyz_field()
    for i in range(1, n):
        terms.append(InteractionTerm((i, i + 1), bond, _bond_label(i, i + 1)))
    for i in range(1, n + 1):
        terms.append(InteractionTerm((i,), fld, _field_label(i)))
    return HamiltonianSpec(lat, tuple(terms))


# ---------------------------------------------------------------------------
# JSON schema: {"n": int, "d": int, "terms": [{"sites": [...], "matrix": [[re,im],...], "label": str}]}

def to_json_dict(H: HamiltonianSpec) -> dict:
    terms = []
    for t in H.terms:
        mat = H.term_matrix(t)
        flat = [[float(v.real), float(v.imag)] for v in mat.ravel()]
        terms.append({"sites": list(t.support), "matrix": flat, "label": t.label})
    return {"n": H.lattice.n, "d": H.lattice.d, "terms": terms}


def from_json_dict(obj: dict) -> HamiltonianSpec:
    lat = LatticeSpec(int(obj["n"]), int(obj.get("d", 2)))
    terms = []
    for t in obj["terms"]:
        sites = tuple(int(s) for s in t["sites"])
        dim = lat.d ** len(sites)
        flat = t["matrix"]
        if len(flat) != dim * dim:
            raise ValueError(f"term {t.get('label')}: matrix length {len(flat)} != {dim*dim}")
        mat = np.array([complex(re, im) for re, im in flat], dtype=complex).reshape(dim, dim)
        terms.append(InteractionTerm(sites, mat, str(t.get("label", f"term{len(terms)}"))))
    return HamiltonianSpec(lat, tuple(terms))

"""Precision contexts for the dense linear-algebra kernels.

Two lanes share one API: machine doubles (numpy complex128) and big floats
(gmpy2 mpfr/mpc at a configurable number of decimal digits).  Every tolerance
in the package is a function of the working precision so that tests port
between lanes unchanged.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass

import gmpy2
import numpy as np

LOG2_10 = math.log2(10.0)

# guard bits on top of the requested decimal digits
_GUARD_BITS = 32

MIN_DIGITS = 15


@dataclass(frozen=True)
class Precision:
    """Scalar field selector: ``digits=None`` means machine double."""

    digits: int | None = None

    def __post_init__(self):
        if self.digits is not None and self.digits < MIN_DIGITS:
            raise ValueError(f"big-float precision must be >= {MIN_DIGITS} digits, got {self.digits}")

    @property
    def is_double(self) -> bool:
        return self.digits is None

    @property
    def pdigits(self) -> int:
        """Effective decimal digits (15 for the double lane)."""
        return MIN_DIGITS if self.digits is None else self.digits

    @property
    def bits(self) -> int:
        if self.is_double:
            return 53
        return int(math.ceil(self.digits * LOG2_10)) + _GUARD_BITS

    def tol(self, shift: int = 3) -> float:
        """The ubiquitous 10^(shift - P) tolerance."""
        return 10.0 ** (shift - self.pdigits)

    def doubled(self) -> "Precision":
        if self.is_double:
            raise ValueError("cannot double machine precision; use bigfloat")
        return Precision(2 * self.digits)

    def __str__(self) -> str:
        return "double" if self.is_double else f"bigfloat({self.digits})"


DOUBLE = Precision()


def bigfloat(digits: int) -> Precision:
    return Precision(int(digits))


@contextmanager
def workprec(prec: Precision, extra_bits: int = 0):
    """gmpy2 context manager at the precision's bit count (no-op for double)."""
    if prec.is_double:
        yield
        return
    ctx = gmpy2.context(precision=prec.bits + extra_bits)
    with ctx:
        yield


def mpc_of(x, prec: Precision):
    """Coerce a scalar into the lane's type."""
    if prec.is_double:
        return complex(x)
    with workprec(prec):
        if isinstance(x, gmpy2.mpc):
            return +x
        if isinstance(x, complex):
            return gmpy2.mpc(x.real, x.imag)
        return gmpy2.mpc(x)


def mpf_of(x, prec: Precision):
    if prec.is_double:
        return float(x)
    with workprec(prec):
        return gmpy2.mpfr(x)


def to_float(x) -> float:
    """Lossy conversion to a machine double (for reporting)."""
    if isinstance(x, gmpy2.mpc):
        return float(x.real)
    return float(x)


def is_bigarray(M: np.ndarray) -> bool:
    return M.dtype == object

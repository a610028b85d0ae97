"""Time-domain kernels of the dissipative generator and their Fourier data.

The jump filter and the two coherent-term kernels are Gaussians (one with a
sech envelope), so their Fourier transforms are available in closed form; the
trapezoid quadrature route is kept alongside as the refinement oracle.  The
closed forms are the production path: they keep the omega-quadrature ladder
informative instead of flooring it at the trapezoid truncation error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class QuadratureConfig:
    """All truncation/node counts of the generator quadratures (config-exposed)."""

    omega_nodes: int = 16          # K: Gauss-Legendre uses 2K+1 nodes
    omega_pad: float = 6.0         # omega range [nu_min - pad/beta, nu_max + pad/beta]
    kernel_mode: str = "analytic"  # "analytic" | "trapezoid"
    s_trunc: float = 4.0           # b1 inner sech integral: |s| <= s_trunc
    s_nodes: int = 2000
    t_trunc: float = 6.0           # outer time integrals: |t| <= t_trunc
    t_nodes: int = 481
    uv_trunc: float = 10.0         # truncated-coherent double integral grid
    uv_nodes: int = 241

    def doubled_omega(self) -> "QuadratureConfig":
        return QuadratureConfig(self.omega_nodes * 2, self.omega_pad, self.kernel_mode,
                                self.s_trunc, self.s_nodes, self.t_trunc, self.t_nodes,
                                self.uv_trunc, self.uv_nodes)


def gamma_weight(omega, beta: float):
    """Transition weight exp(-(beta*omega + 1)^2 / 2)."""
    return np.exp(-((beta * np.asarray(omega) + 1.0) ** 2) / 2.0)


def jump_prefactor(beta: float) -> float:
    """c(beta) = beta^(1/2) / (2 pi)^(1/4), the Gaussian-filter normalization."""
    return np.sqrt(beta) / (2.0 * np.pi) ** 0.25


def jump_norm_bound(beta: float) -> float:
    """||A(omega)|| <= beta^(1/2)/(2 pi)^(1/4)."""
    return jump_prefactor(beta)


def coherent_norm_bound() -> float:
    """int|b1| int|b2| <= e^(1/8)/(4 sqrt 2)."""
    return float(np.exp(0.125) / (4.0 * np.sqrt(2.0)))


def abs_b2_integral() -> float:
    """int |b2(t)| dt = 1/(4 pi) exactly (Gaussian integral)."""
    return 1.0 / (4.0 * np.pi)


def b1_time(t, s_trunc: float = 4.0, s_nodes: int = 2000):
    """b1(t) = 2 sqrt(pi) e^(1/8) int sin(s - t) e^{-2(t-s)^2} sech(2 pi s) ds (trapezoid)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    s = np.linspace(-s_trunc, s_trunc, s_nodes + 1)
    integ = np.sin(s[None, :] - t[:, None]) * np.exp(-2.0 * (t[:, None] - s[None, :]) ** 2) \
        / np.cosh(2.0 * np.pi * s)[None, :]
    return 2.0 * np.sqrt(np.pi) * np.exp(0.125) * np.trapezoid(integ, s, axis=1)


def b2_time(t):
    """b2(t) = e^{-4 t^2 - 2 i t} / (2 pi^(3/2))."""
    t = np.asarray(t, dtype=float)
    return np.exp(-4.0 * t ** 2 - 2.0j * t) / (2.0 * np.pi ** 1.5)


def b1_fourier(x):
    """B1(x) = int b1(t) e^{i x t} dt in closed form.

    = -i e^(1/8) (pi / (2 sqrt 2)) [e^{-(x-1)^2/8} - e^{-(x+1)^2/8}] sech(x/4)
    """
    x = np.asarray(x, dtype=float)
    return (-1j * np.exp(0.125) * (np.pi / (2.0 * np.sqrt(2.0)))
            * (np.exp(-((x - 1.0) ** 2) / 8.0) - np.exp(-((x + 1.0) ** 2) / 8.0))
            / np.cosh(x / 4.0))


def b2_fourier(x):
    """B2(x) = int b2(t) e^{i x t} dt = e^{-(x-2)^2/16} / (4 pi)."""
    x = np.asarray(x, dtype=float)
    return np.exp(-((x - 2.0) ** 2) / 16.0) / (4.0 * np.pi)


def b1_fourier_quad(x, cfg: QuadratureConfig):
    """Trapezoid-route B1 at arguments x (refinement oracle)."""
    ts = np.linspace(-cfg.t_trunc, cfg.t_trunc, cfg.t_nodes)
    b1 = b1_time(ts, cfg.s_trunc, cfg.s_nodes)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    ph = np.exp(1j * np.outer(x.ravel(), ts))
    return np.trapezoid(ph * b1[None, :], ts, axis=1).reshape(x.shape)


def b2_fourier_quad(x, cfg: QuadratureConfig):
    ts = np.linspace(-cfg.t_trunc, cfg.t_trunc, cfg.t_nodes)
    b2 = b2_time(ts)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(x.size, dtype=complex)
    flat = x.ravel()
    chunk = 65536
    for lo in range(0, flat.size, chunk):
        sl = flat[lo:lo + chunk]
        ph = np.exp(1j * np.outer(sl, ts))
        out[lo:lo + chunk] = np.trapezoid(ph * b2[None, :], ts, axis=1)
    return out.reshape(x.shape)


def omega_grid(nu_min: float, nu_max: float, beta: float, cfg: QuadratureConfig):
    """Gauss-Legendre nodes/weights on [nu_min - pad/beta, nu_max + pad/beta]."""
    lo = nu_min - cfg.omega_pad / beta
    hi = nu_max + cfg.omega_pad / beta
    xs, ws = np.polynomial.legendre.leggauss(2 * cfg.omega_nodes + 1)
    return 0.5 * (hi - lo) * xs + 0.5 * (hi + lo), 0.5 * (hi - lo) * ws

"""Complex log-gamma, upper incomplete gamma and the error function.

The incomplete gamma routines are vectorised over the second argument for a
fixed first argument, which is the access pattern of lattice sums: one
``s`` per evaluation, hundreds of lattice values ``x``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from .errors import InvalidInput, NoConvergence, PoleOfGamma

_FPMIN = 1e-300


@dataclass(frozen=True)
class Tolerance:
    rel_err: float = 1e-12
    max_terms: int = 10_000

    def __post_init__(self):
        if not 0 < self.rel_err < 1:
            raise InvalidInput(f"rel_err must lie in (0, 1), got {self.rel_err}")
        if self.max_terms < 1:
            raise InvalidInput("max_terms must be positive")


DEFAULT_TOL = Tolerance()


def _is_gamma_pole(s: complex) -> bool:
    return s.imag == 0 and s.real <= 0 and s.real == math.floor(s.real)


def log_gamma(s: complex) -> complex:
    """Principal branch of log Gamma(s), continuous on C minus (-inf, 0]."""
    s = complex(s)
    if _is_gamma_pole(s):
        raise PoleOfGamma(f"Gamma has a pole at s={s}")
    return complex(sp.loggamma(s))


def erf(x: float) -> float:
    return math.erf(x)


def _series_lower(a: complex, z: np.ndarray, tol: Tolerance) -> np.ndarray:
    # gamma(a, z) = z^a e^{-z} * returned sum
    ap = np.full(z.shape, a, dtype=complex)
    term = np.full(z.shape, 1.0 / a, dtype=complex)
    total = term.copy()
    active = np.ones(z.shape, dtype=bool)
    for _ in range(tol.max_terms):
        ap[active] += 1.0
        term[active] *= z[active] / ap[active]
        total[active] += term[active]
        active &= np.abs(term) >= np.abs(total) * tol.rel_err * 0.1
        if not active.any():
            return total
    raise NoConvergence(f"incomplete gamma series did not converge (a={a})")


def _cf_upper(a: complex, z: np.ndarray, tol: Tolerance) -> np.ndarray:
    # Gamma(a, z) = z^a e^{-z} * returned continued fraction (modified Lentz)
    b = z + 1.0 - a
    c = np.full(z.shape, 1.0 / _FPMIN, dtype=complex)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(z.shape, dtype=bool)
    for i in range(1, tol.max_terms + 1):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
        c = b + an / c
        c = np.where(np.abs(c) < _FPMIN, _FPMIN, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) >= tol.rel_err * 0.1
        if not active.any():
            return h
    raise NoConvergence(f"incomplete gamma continued fraction did not converge (a={a})")


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def _quad_upper(a: complex, x: np.ndarray) -> np.ndarray:
    # Gamma(a, x) = x^a * int_0^inf exp(-x e^v + a v) dv, real x > 0.
    # Used where the series would divide by a tiny (a + n).
    vmax = max(2.0, math.log((60.0 + 2.0 * abs(a)) / float(x.min())) + 2.0)
    n_panels = int(math.ceil(vmax / 0.25))
    edges = np.linspace(0.0, vmax, n_panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    v = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    expo = -x[:, None] * np.exp(v)[None, :] + a * v[None, :]
    integral = (np.exp(expo) * w[None, :]).sum(axis=1)
    return np.exp(a * np.log(x)) * integral


def scaled_upper_gamma(a: complex, z, log_factor=0.0, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Return ``exp(log_factor) * Gamma(a, z)`` elementwise.

    ``z`` may be complex with ``Re z > 0``.  All exponentials are formed in
    log space, so the result is finite whenever the product is, even when
    Gamma(a, z) alone would underflow or overflow.
    """
    a = complex(a)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    log_factor = np.broadcast_to(np.asarray(log_factor, dtype=complex), z.shape)
    if np.any(z.real <= 0):
        raise InvalidInput("scaled_upper_gamma requires Re z > 0")
    out = np.empty(z.shape, dtype=complex)
    log_prefix = log_factor - z + a * np.log(z)

    small = np.abs(z) < abs(a) + 1.0
    real_axis = np.all(z.imag == 0)
    use_quad = small & real_axis & (a.real < 0.5)
    use_series = small & ~use_quad
    use_cf = ~small

    if use_cf.any():
        out[use_cf] = np.exp(log_prefix[use_cf]) * _cf_upper(a, z[use_cf], tol)
    if use_series.any():
        lg = complex(sp.loggamma(a))
        s = _series_lower(a, z[use_series], tol)
        out[use_series] = np.exp(log_factor[use_series] + lg) - np.exp(log_prefix[use_series]) * s
    if use_quad.any():
        out[use_quad] = np.exp(log_factor[use_quad]) * _quad_upper(a, z[use_quad].real)
    return out


def upper_gamma(s: complex, x: float, tol: Tolerance = DEFAULT_TOL) -> complex:
    """Upper incomplete gamma Gamma(s, x) for complex s and real x > 0."""
    if not x > 0:
        raise InvalidInput(f"upper_gamma needs x > 0, got {x}")
    return complex(scaled_upper_gamma(s, np.array([x], dtype=float), 0.0, tol)[0])

"""Gaussian main-term constants for the value distribution of
F = sum_j b_j L_j near the critical line.

Everything depends on (theta, T) only through L = theta * log log T.  The
J-dimensional integrals over the max-regions

    R_l = {u in R^J : u_l = max_j u_j}

reduce to one-dimensional quadrature, because on R_l every other
coordinate is integrated over (-inf, u_l]:

    int_{R_l} f(u_l) prod_j u_j^{m_j} e^{-u_j^2/xi_j} du
        = int_R f(u) u^{m_l} e^{-u^2/xi_l} prod_{j != l} M_{m_j}(u; xi_j) du,

    M_k(x; xi) = int_{-inf}^x v^k e^{-v^2/xi} dv.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy import integrate
from scipy import special as sp

from .errors import InvalidInput, VacantCoefficient
from .randmodel import McEstimate

_QUAD = dict(epsabs=1e-13, epsrel=1e-13, limit=400)


def _check_xi(xi) -> tuple[float, ...]:
    xi = tuple(float(x) for x in xi)
    if not xi:
        raise InvalidInput("xi must be non-empty")
    if any(x <= 0 for x in xi):
        raise InvalidInput("xi_j must be positive")
    return xi


def partial_moment(k: int, x: float, xi: float) -> float:
    """M_k(x; xi) = int_{-inf}^x v^k exp(-v^2/xi) dv."""
    g = math.exp(-x * x / xi)
    m0 = 0.5 * math.sqrt(math.pi * xi) * math.erfc(-x / math.sqrt(xi))
    if k == 0:
        return m0
    m1 = -0.5 * xi * g
    if k == 1:
        return m1
    prev2, prev1 = m0, m1
    for j in range(2, k + 1):
        cur = -0.5 * xi * x ** (j - 1) * g + 0.5 * xi * (j - 1) * prev2
        prev2, prev1 = prev1, cur
    return prev1


def _region_integral(l: int, xi, m, power: int) -> float:
    """int_{R_l} u_l^power u^m exp(-sum u_j^2/xi_j) du (0-based l)."""
    J = len(xi)
    m = tuple(m) if m is not None else (0,) * J

    def f(u):
        val = u ** (m[l] + power) * math.exp(-u * u / xi[l])
        for j in range(J):
            if j != l:
                val *= partial_moment(m[j], u, xi[j])
        return val

    s = math.sqrt(max(xi))
    total = 0.0
    # split so quad sees the bulk of the Gaussian on finite panels
    for a, b in ((-math.inf, -8 * s), (-8 * s, 0.0), (0.0, 8 * s), (8 * s, math.inf)):
        total += integrate.quad(f, a, b, **_QUAD)[0]
    return total


def region_weight(l: int, xi, m=None) -> float:
    """int_{R_l} exp(-sum_j u_j^2/xi_j) du; l is 1-based."""
    xi = _check_xi(xi)
    if not 1 <= l <= len(xi):
        raise InvalidInput(f"region index {l} out of range 1..{len(xi)}")
    if len(xi) == 1 and m is None:
        return math.sqrt(math.pi * xi[0])
    return _region_integral(l - 1, xi, m, 0)


def region_weights(xi, m=None) -> list[float]:
    return [region_weight(l, xi, m) for l in range(1, len(_check_xi(xi)) + 1)]


def region_integral_u(xi, m=None) -> float:
    """sum_l int_{R_l} u_l exp(-sum_j u_j^2/xi_j) u^m du."""
    xi = _check_xi(xi)
    if len(xi) == 1 and m is None:
        return 0.0
    return sum(_region_integral(l, xi, m, 1) for l in range(len(xi)))


def d_coeff(n: Sequence[int], xi) -> float:
    """int_{R^J} exp(-sum v_j^2/xi_j) v^n dv."""
    xi = _check_xi(xi)
    n = tuple(int(k) for k in n)
    if len(n) != len(xi) or any(k < 0 for k in n):
        raise InvalidInput("n must be a nonnegative vector of length J")
    if any(k % 2 for k in n):
        return 0.0
    out = 1.0
    for k, x in zip(n, xi):
        out *= x ** ((k + 1) / 2) * math.gamma((k + 1) / 2)
    return out


def _K(v) -> int:
    return int(sum(v))


def q_coeff(k, l, m, n, xi, btilde: Mapping | None = None) -> complex:
    """Coefficient q_{k,l:m,n} of the density expansion.

    Needs Btilde_{2k+m, 2l+n}; only Btilde_{0,0} = 1 and the vanishing for
    total order 1 or > 5 are known.  Other values must come from ``btilde``,
    a mapping {(tuple, tuple): complex}; otherwise VacantCoefficient.
    """
    xi = _check_xi(xi)
    J = len(xi)
    vecs = [tuple(int(a) for a in v) for v in (k, l, m, n)]
    if any(len(v) != J or any(a < 0 for a in v) for v in vecs):
        raise InvalidInput("k, l, m, n must be nonnegative vectors of length J")
    k, l, m, n = vecs
    top = tuple(2 * a + b for a, b in zip(k, m))
    bot = tuple(2 * a + b for a, b in zip(l, n))
    order = _K(top) + _K(bot)
    if order == 1 or order > 5:
        return 0j
    if order == 0:
        B = 1.0
    elif btilde is not None and (top, bot) in btilde:
        B = complex(btilde[(top, bot)])
    else:
        raise VacantCoefficient(f"Btilde_{{{top},{bot}}} is not determined (total order {order})")
    val = B / (1j ** _K(m + n) * math.pi ** (2 * J + order))
    for j in range(J):
        val *= math.gamma(k[j] + 0.5) * math.gamma(l[j] + 0.5) / xi[j] ** (k[j] + l[j] + m[j] + n[j] + 1)
        val *= (math.factorial(top[j]) * math.factorial(bot[j])
                / (math.factorial(2 * k[j]) * math.factorial(m[j]) * math.factorial(2 * l[j]) * math.factorial(n[j])))
    return complex(val)


def q0000(xi) -> float:
    xi = _check_xi(xi)
    return math.pi ** (-len(xi)) / math.prod(xi)


@dataclass(frozen=True)
class CoefficientTable:
    xi: tuple[float, ...]
    d: dict
    q: dict
    vacant: tuple = ()
    btilde_known: dict = field(default_factory=lambda: {"origin": 1.0, "zero_orders": "1 and > 5"})


def coefficient_table(xi, max_order: int = 2, btilde: Mapping | None = None) -> CoefficientTable:
    """d_n for |n| <= max_order and every q_{k,l:m,n} with K(2k+2l+m+n) <= max_order
    that is determined; undetermined ones are listed in ``vacant``."""
    xi = _check_xi(xi)
    J = len(xi)
    d, q, vacant = {}, {}, []
    vecs = [v for v in itertools.product(range(max_order + 1), repeat=J) if sum(v) <= max_order]
    for n in vecs:
        d[n] = d_coeff(n, xi)
    zero = (0,) * J
    for k, l, m, n in itertools.product(vecs, repeat=4):
        if 2 * sum(k) + 2 * sum(l) + sum(m) + sum(n) > max_order:
            continue
        try:
            q[(k, l, m, n)] = q_coeff(k, l, m, n, xi, btilde)
        except VacantCoefficient:
            vacant.append((k, l, m, n))
    return CoefficientTable(xi, d, q, tuple(vacant))


# -- main terms ----------------------------------------------------------------

@dataclass(frozen=True)
class MainTermParams:
    """L = theta * loglogT.  ``T`` is kept when known (needed for counts)."""

    xi: tuple[float, ...]
    b: tuple[complex, ...]
    theta: float
    loglogT: float
    T: float | None = None

    def __post_init__(self):
        if len(self.xi) != len(self.b):
            raise InvalidInput("xi and b must have the same length")
        if any(abs(c) == 0 for c in self.b):
            raise InvalidInput("coefficients must be nonzero")
        if not self.L > 0:
            raise InvalidInput("L = theta * log log T must be positive")

    @property
    def J(self) -> int:
        return len(self.xi)

    @property
    def L(self) -> float:
        return self.theta * self.loglogT

    @property
    def xi_product(self) -> float:
        return math.prod(self.xi)

    @classmethod
    def from_theta_T(cls, xi, b, theta: float, T: float, normalize: bool = True) -> "MainTermParams":
        if not 0 < theta < 1:
            raise InvalidInput("theta must lie in (0, 1)")
        if T <= math.e:
            raise InvalidInput("T must exceed e")
        return cls(_check_xi(xi), _norm_b(b, normalize), float(theta), math.log(math.log(T)), float(T))

    @classmethod
    def from_L(cls, xi, b, L: float, normalize: bool = True) -> "MainTermParams":
        return cls(_check_xi(xi), _norm_b(b, normalize), 1.0, float(L))

    def with_theta(self, theta: float) -> "MainTermParams":
        return MainTermParams(self.xi, self.b, theta, self.loglogT, self.T)


def _norm_b(b, normalize: bool) -> tuple[complex, ...]:
    b = tuple(complex(x) for x in b)
    if normalize:
        r = math.sqrt(sum(abs(x) ** 2 for x in b))
        b = tuple(x / r for x in b)
    return b


def _weights_term(p: MainTermParams, m=None) -> float:
    return sum(math.log(abs(bl)) * w for bl, w in zip(p.b, region_weights(p.xi, m)))


def expt_main_term(p: MainTermParams) -> float:
    """Leading expansion of E[log |F(sigma_T : X)|]."""
    norm = math.sqrt(p.xi_product * math.pi ** p.J)
    return (math.sqrt(p.L) * region_integral_u(p.xi) + _weights_term(p)) / norm


def zero_density_main_term(p: MainTermParams) -> float:
    """Leading term of the zero count in Re s > sigma_T, T < Im s < 2T."""
    if p.T is None:
        raise InvalidInput("zero_density_main_term needs T")
    T = p.T
    return (T * math.log(T) ** p.theta / (4 * math.pi ** (1 + p.J / 2) * math.sqrt(p.xi_product * p.L))
            * region_integral_u(p.xi))


def density_G_leading(u, v, p: MainTermParams) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    xi = np.asarray(p.xi)
    e = np.sum((u * u + v * v) / (xi * p.L), axis=-1)
    return q0000(p.xi) * p.L ** (-p.J) * np.exp(-e)


def integrate_density(p: MainTermParams, nodes: int = 60) -> float:
    """Tensor Gauss-Hermite quadrature of density_G_leading over R^{2J}.
    Nodes are scaled to a width other than the density's own, so the check
    exercises the normalization rather than the quadrature weights alone."""
    x, w = np.polynomial.hermite.hermgauss(nodes)
    total = 1.0
    # integrate coordinate by coordinate; the density factorizes
    for xj in p.xi:
        s = math.sqrt(xj * p.L) * 1.3
        f = np.exp(-(s * x) ** 2 / (xj * p.L) + x ** 2)
        one = s * np.sum(w * f)
        total *= one * one
    return q0000(p.xi) * p.L ** (-p.J) * total


def integrate_density_tensor(p: MainTermParams, nodes: int = 24) -> float:
    """Same integral by an explicit 2J-dimensional tensor grid (J <= 3)."""
    if p.J > 3:
        raise InvalidInput("tensor grid limited to J <= 3")
    x, w = np.polynomial.hermite.hermgauss(nodes)
    scales = [math.sqrt(xj * p.L) * 1.1 for xj in p.xi for _ in (0, 1)]
    total = 0.0
    dims = 2 * p.J
    for idx in itertools.product(range(nodes), repeat=dims):
        pts = np.array([scales[d] * x[i] for d, i in enumerate(idx)])
        wt = math.prod(scales[d] * w[i] * math.exp(x[i] ** 2) for d, i in enumerate(idx))
        total += wt * float(density_G_leading(pts[0::2], pts[1::2], p))
    return total


# -- I_{m,n} by Monte Carlo ------------------------------------------------------

def _gauss_draws(xi, N: int, seed: int, J: int):
    rng = np.random.Generator(np.random.Philox(key=int(seed) & ((1 << 64) - 1)))
    sd = np.sqrt(np.asarray(xi) / 2.0)
    u = rng.standard_normal((N, J)) * sd
    v = rng.standard_normal((N, J)) * sd
    return u, v


def _monomial(u, m):
    out = np.ones(u.shape[0])
    for j, k in enumerate(m):
        if k:
            out = out * u[:, j] ** k
    return out


def I_main_terms(m, n, p: MainTermParams) -> tuple[float, float]:
    """(sqrt(L) d_n sum_l int_{R_l} u_l u^m, d_n sum_l log|b_l| int_{R_l} u^m)."""
    dn = d_coeff(n, p.xi)
    if dn == 0:
        return 0.0, 0.0
    first = math.sqrt(p.L) * dn * region_integral_u(p.xi, m)
    second = dn * _weights_term(p, m)
    return first, second


def _error_integrand(u, v, p: MainTermParams):
    # log |sum_j b_j e^{(u_j + i v_j) sqrt L}| minus the largest term's log
    sL = math.sqrt(p.L)
    b = np.asarray(p.b)
    lead = np.argmax(u, axis=1)
    rows = np.arange(u.shape[0])
    z = (u - u[rows, lead][:, None]) * sL + 1j * (v - v[rows, lead][:, None]) * sL
    ratio = (b[None, :] / b[lead][:, None]) * np.exp(z)
    return np.log(np.abs(ratio.sum(axis=1)))


def eval_error_term(m, n, p: MainTermParams, N: int = 10**5, seed: int = 0) -> McEstimate:
    """Monte-Carlo estimate of the error term E_{m,n} = I_{m,n} - main terms."""
    if N < 10**4:
        raise InvalidInput("N must be at least 1e4")
    m = tuple(m)
    n = tuple(n)
    if _K(m) + _K(n) > 4:
        raise InvalidInput("K(m + n) must be at most 4")
    u, v = _gauss_draws(p.xi, N, seed, p.J)
    mass = math.pi ** p.J * p.xi_product
    vals = mass * _error_integrand(u, v, p) * _monomial(u, m) * _monomial(v, n)
    return McEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(N)), N, 0,
                      "Gaussian importance sampling, max-term control variate")


def error_term_two(p: MainTermParams, kmax: int = 60) -> float:
    """E_{0,0} for J = 2 by deterministic quadrature.

    Only x = u_2 - u_1 and y = v_2 - v_1 enter; each has Gaussian weight
    sqrt(pi xi_1 xi_2 / S) e^{-x^2/S}, S = xi_1 + xi_2.  The y-average of
    log|1 + c e^{i psi}| is a Fourier series damped by e^{-k^2 L S / 4}.
    """
    if p.J != 2:
        raise InvalidInput("error_term_two needs J = 2")
    x1, x2 = p.xi
    S = x1 + x2
    sL = math.sqrt(p.L)
    ks = np.arange(1, kmax + 1)
    damp = math.sqrt(math.pi * S) * np.exp(-ks ** 2 * p.L * S / 4.0) * (-1.0) ** (ks + 1) / ks
    total = 0.0
    for lead, other in ((0, 1), (1, 0)):
        ratio = p.b[other] / p.b[lead]
        r, alpha = abs(ratio), math.atan2(ratio.imag, ratio.real)
        cosk = np.cos(ks * alpha)

        def inner(x):
            c = r * math.exp(x * sL)
            if c <= 1.0:
                return float(np.sum(damp * c ** ks * cosk))
            return math.sqrt(math.pi * S) * math.log(c) + float(np.sum(damp * c ** (-ks) * cosk))

        def f(x):
            return inner(x) * math.exp(-x * x / S)

        pts = []
        x0 = -math.log(r) / sL
        if x0 < 0:
            pts = [x0]
        edges = [-12 * math.sqrt(S)] + pts + [0.0]
        for a, b in zip(edges[:-1], edges[1:]):
            total += integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-12, limit=400)[0]
    return total * math.pi * x1 * x2 / S


def eval_I_mn(m, n, p: MainTermParams, N: int = 10**5, seed: int = 0) -> McEstimate:
    """I_{m,n} = int log|sum_j b_j e^{(u_j+iv_j) sqrt L}| e^{-sum (u^2+v^2)/xi} u^m v^n.

    Sampled as main terms (exact quadrature) plus the error integrand under
    N(0, xi_j/2) draws, which is the same estimator as plain importance
    sampling with the max-term as control variate."""
    err = eval_error_term(m, n, p, N, seed)
    a, b = I_main_terms(m, n, p)
    return McEstimate(a + b + err.mean, err.stderr, N, 0, err.truncation_note)


def eval_I_mn_plain(m, n, p: MainTermParams, N: int = 10**5, seed: int = 0) -> McEstimate:
    """Plain importance-sampling estimate of I_{m,n}, without the control variate."""
    u, v = _gauss_draws(p.xi, N, seed, p.J)
    sL = math.sqrt(p.L)
    b = np.asarray(p.b)
    shift = u.max(axis=1, keepdims=True) * sL
    f = np.log(np.abs((b[None, :] * np.exp((u + 1j * v) * sL - shift)).sum(axis=1))) + shift[:, 0]
    mass = math.pi ** p.J * p.xi_product
    vals = mass * f * _monomial(u, m) * _monomial(v, n)
    return McEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(N)), N, 0, "plain")


@dataclass(frozen=True)
class DifferenceReport:
    alpha: float
    theta1: float
    theta2: float
    lhs: float
    lhs_stderr: float
    expansion: dict
    residual: dict
    budget: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def difference_check(alpha: float, theta1: float, theta2: float, m, n, p: MainTermParams,
                     N: int = 10**5, seed: int = 0) -> DifferenceReport:
    """theta1^alpha I(theta1) - theta2^alpha I(theta2) against its two-term
    expansion in H = theta1 - theta2, evaluated at each theta_i.  Common
    random numbers make the Monte-Carlo difference low-variance."""
    if not theta1 >= theta2 > 0:
        raise InvalidInput("need theta1 >= theta2 > 0")
    H = theta1 - theta2
    LL = p.loglogT
    if H == 0:
        return DifferenceReport(alpha, theta1, theta2, 0.0, 0.0, {"theta1": 0.0, "theta2": 0.0},
                                {"theta1": 0.0, "theta2": 0.0}, 0.0)
    m, n = tuple(m), tuple(n)
    u, v = _gauss_draws(p.xi, N, seed, p.J)
    mass = math.pi ** p.J * p.xi_product
    w = _monomial(u, m) * _monomial(v, n) * mass

    def sample_I(theta):
        q = p.with_theta(theta)
        a, b = I_main_terms(m, n, q)
        return a + b + _error_integrand(u, v, q) * w

    diff = theta1 ** alpha * sample_I(theta1) - theta2 ** alpha * sample_I(theta2)
    lhs = float(diff.mean())
    se = float(diff.std(ddof=1) / math.sqrt(N))
    dn = d_coeff(n, p.xi)
    riu = region_integral_u(p.xi, m)
    wt = _weights_term(p, m)
    expansion, residual = {}, {}
    for name, th in (("theta1", theta1), ("theta2", theta2)):
        e = H * math.sqrt(LL) * dn * (alpha + 0.5) * th ** (alpha - 0.5) * riu
        e += H * dn * alpha * th ** (alpha - 1) * wt
        expansion[name] = e
        residual[name] = lhs - e
    budget = H / LL ** 0.25 + H * H * math.sqrt(LL)
    return DifferenceReport(alpha, theta1, theta2, lhs, se, expansion, residual, budget)


# -- envelope checks ---------------------------------------------------------------

def logint_bound_check(z: complex, eps: float) -> float:
    """int_eps^1 |log|u + z|| du / u."""
    if not 0 < eps < 1:
        raise InvalidInput("eps must lie in (0, 1)")
    z = complex(z)
    pts = []
    if z.imag == 0 and eps < -z.real < 1:
        pts.append(-z.real)
    if abs(z.imag) < 1:
        r = math.sqrt(1 - z.imag ** 2)
        pts += [x for x in (-z.real - r, -z.real + r) if eps < x < 1]
    pts = sorted(set(pts))

    def f(u):
        a = abs(u + z)
        return abs(math.log(a)) / u if a > 0 else 0.0

    edges = [eps] + pts + [1.0]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        total += integrate.quad(f, a, b, epsabs=1e-12, epsrel=1e-11, limit=200)[0]
    return total


def moment_integral(k: int, M: float, b, N: int = 10**5, seed: int = 0) -> McEstimate:
    """int_{R^{2J}} |log|sum_j b_j e^{u_j + i v_j}||^{2k} e^{-sum (u^2+v^2)/M}."""
    if k not in (1, 2, 3):
        raise InvalidInput("k must be 1, 2 or 3")
    if not 1 <= M <= 100:
        raise InvalidInput("M must lie in [1, 100]")
    b = np.asarray([complex(x) for x in b])
    J = b.size
    u, v = _gauss_draws((M,) * J, N, seed, J)
    shift = u.max(axis=1, keepdims=True)
    f = np.log(np.abs((b[None, :] * np.exp(u + 1j * v - shift)).sum(axis=1))) + shift[:, 0]
    vals = (math.pi * M) ** J * np.abs(f) ** (2 * k)
    return McEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(N)), N, 0, "Gaussian importance sampling")


def moment_envelope(k: int, M: float, J: int, C: float) -> float:
    return C * (M ** (J + k) * (C * k) ** k + M ** J * (C * k) ** (2 * k))


def calibrate_moment_constant(estimate: float) -> float:
    """Solve C^2 + C^3 = estimate (the envelope at k = 1, M = 1)."""
    return float(_positive_root(lambda C: C * C + C ** 3 - estimate))


def _positive_root(f) -> float:
    lo, hi = 0.0, 1.0
    while f(hi) < 0:
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return hi


@dataclass(frozen=True)
class MomentReport:
    k: int
    M: float
    J: int
    estimate: float
    stderr: float
    C: float
    envelope: float
    holds: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)


def moment_bound_check(k: int, M: float, b, N: int = 10**5, seed: int = 0, C: float | None = None) -> MomentReport:
    b = tuple(b)
    if C is None:
        C = load_envelope_constants()["moment_C"][str(len(b))]
    est = moment_integral(k, M, b, N, seed)
    env = moment_envelope(k, M, len(b), C)
    return MomentReport(k, M, len(b), est.mean, est.stderr, C, env, est.mean <= env)


# -- frozen constants --------------------------------------------------------------

CONSTANTS_FILE = "envelope_constants.json"


def load_envelope_constants(path: str | Path | None = None) -> dict:
    if path is None:
        text = resources.files("epstein_zeros.data").joinpath(CONSTANTS_FILE).read_text()
    else:
        text = Path(path).read_text()
    return json.loads(text)


def calibrate_envelopes(N: int = 10**6, seed: int = 0) -> dict:
    """Recompute the envelope constants from their calibration points:
    the log-integral bound at eps = 0.2 over the |z| <= 2 grid, and the
    moment bound at k = 1, M = 1 with b the normalized all-ones vector."""
    grid = logint_grid()
    C_log = max(logint_bound_check(z, 0.2) * 0.2 for z in grid)
    moment = {}
    for J in (1, 2, 3):
        b = [1 / math.sqrt(J)] * J
        est = moment_integral(1, 1.0, b, N, seed)
        moment[str(J)] = calibrate_moment_constant(est.mean + 3 * est.stderr)
    return {"logint_C": C_log, "logint_calibration_eps": 0.2, "moment_C": moment,
            "moment_calibration": {"k": 1, "M": 1.0, "N": N, "seed": seed, "b": "normalized ones"}}


def logint_grid(n: int = 20, B: float = 2.0) -> list[complex]:
    """n x n grid of z = x + iy on [-B, B]^2, restricted to |z| <= B."""
    xs = np.linspace(-B, B, n)
    return [complex(x, y) for x in xs for y in xs if abs(complex(x, y)) <= B + 1e-12]

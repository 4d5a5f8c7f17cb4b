"""Analytic continuation of Epstein zeta functions of binary forms, Hecke
L-functions of class group characters, and their linear combinations.

For a form Q of discriminant D, Delta = |D|/4 and dual form Q*, the Mellin
integral of the theta series split at t = e^{i phi} gives

    pi^{-s} Gamma(s) E(s, Q) = sum_x (pi Q(x))^{-s} Gamma(s, pi Q(x) e^{i phi})
        + Delta^{-1/2} sum_x (pi Q*(x))^{s-1} Gamma(1-s, pi Q*(x) e^{-i phi})
        + e^{-i phi (1-s)} / (Delta^{1/2} (s-1)) - e^{i phi s} / s.

phi = 0 is the classical incomplete-gamma formula.  It loses about
pi |Im s| / 2 nats to cancellation, so for larger |Im s| we rotate to
phi = sign(t) (pi/2 - c/|t|), where every term is within e^c of the result,
and carry the common factor e^{Re log Gamma(s)} separately in log space.

The multiset of dual values Q*(x) is the multiset Q(x) / Delta, so one
enumeration serves both sums.
"""
from __future__ import annotations

import cmath
import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special as sp

from .errors import InvalidInput, PoleAtOne, PoleOfGamma, UnsupportedCombination
from .quadforms import ClassGroup, QuadForm, class_group
from .special import DEFAULT_TOL, Tolerance, scaled_upper_gamma

ROTATION_C = 4.0
DEFAULT_CUTOFF = 40.0
# lattice radius cap; heights up to ~1e5 stay far below it
MAX_LATTICE_X = 2.0e6
_LOG_PI = math.log(math.pi)
_POLE_RADIUS = 1e-8


def lattice_values(form, X: float) -> tuple[np.ndarray, np.ndarray]:
    """Distinct values 0 < Q(m, n) <= X over integer pairs, with multiplicities."""
    a, b, c = (int(v) for v in form)
    D = b * b - 4 * a * c
    nmax = int(math.floor(math.sqrt(4 * a * X / -D)))
    chunks = []
    for n in range(-nmax, nmax + 1):
        rem = X - (-D) * n * n / (4 * a)
        if rem < 0:
            continue
        half = math.sqrt(rem / a)
        centre = -b * n / (2 * a)
        m = np.arange(math.ceil(centre - half - 1e-9), math.floor(centre + half + 1e-9) + 1, dtype=np.int64)
        q = a * m * m + b * m * n + c * n * n
        chunks.append(q)
    q = np.concatenate(chunks)
    q = q[(q > 0) & (q <= X)]
    vals, counts = np.unique(q, return_counts=True)
    return vals.astype(float), counts.astype(float)


def representation_counts(form, N: int) -> np.ndarray:
    """r_Q(n) for 0 <= n <= N (index n); r_Q(0) is set to 0."""
    vals, counts = lattice_values(form, N)
    r = np.zeros(N + 1)
    r[vals.astype(np.int64)] = counts
    return r


def rotation_angle(t: float, c: float = ROTATION_C) -> float:
    if abs(t) * math.pi / 2 <= c:
        return 0.0
    return math.copysign(math.pi / 2 - c / abs(t), t)


@dataclass(frozen=True)
class Bracket:
    """pi^{-s} Gamma(s) E(s, Q) = exp(K) * (lattice + pole_one + pole_zero).

    ``pole_one`` is the 1/(s-1) term and ``pole_zero`` the -1/s term, both
    already scaled by exp(-K); either is nan where it is singular.
    """

    s: complex
    phi: float
    K: float
    lattice: complex
    pole_one: complex
    pole_zero: complex


class EpsteinEvaluator:
    """Evaluator for E(s, Q) with cached lattice data.

    The cache grows monotonically under a lock; evaluation itself is pure.
    """

    def __init__(self, form, cutoff: float = DEFAULT_CUTOFF, rotation_c: float = ROTATION_C):
        a, b, c = (int(v) for v in form)
        D = b * b - 4 * a * c
        if a <= 0 or D >= 0:
            raise InvalidInput(f"form {(a, b, c)} is not positive definite")
        self.form = QuadForm(a, b, c)
        self.D = D
        self.delta = -D / 4.0
        self.cutoff = float(cutoff)
        self.rotation_c = float(rotation_c)
        self._lock = threading.Lock()
        self._X = 0.0
        self._vals = np.zeros(0)
        self._counts = np.zeros(0)

    def __repr__(self):
        return f"EpsteinEvaluator({tuple(self.form)}, cutoff={self.cutoff})"

    @property
    def dual(self) -> tuple[float, float, float]:
        """Coefficients of Q*, whose Gram matrix is the inverse of Q's."""
        a, b, c = self.form
        return (c / self.delta, -b / self.delta, a / self.delta)

    def lattice(self, X: float) -> tuple[np.ndarray, np.ndarray]:
        if X > MAX_LATTICE_X:
            raise InvalidInput(f"lattice radius {X:.3g} exceeds {MAX_LATTICE_X:.3g}; |Im s| is too large")
        with self._lock:
            if X > self._X:
                newX = max(X, 2 * self._X, 64.0)
                self._vals, self._counts = lattice_values(self.form, newX)
                self._X = newX
            vals, counts = self._vals, self._counts
        k = np.searchsorted(vals, X, side="right")
        return vals[:k], counts[:k]

    def bracket(self, s: complex, tol: Tolerance = DEFAULT_TOL) -> Bracket:
        s = complex(s)
        phi = rotation_angle(s.imag, self.rotation_c)
        R = self.cutoff + max(0.0, abs(s.real - 0.5) - 1.0) * math.log(2.0 + abs(s.imag))
        if phi:
            R += self.rotation_c
        X = R / (math.pi * math.cos(phi))
        vals, counts = self.lattice(X * max(1.0, self.delta))
        nd = np.searchsorted(vals, X, side="right")
        nq = np.searchsorted(vals, X * self.delta, side="right")
        K = float(sp.loggamma(s).real) if phi else 0.0
        rot = cmath.exp(1j * phi)
        half_log_delta = 0.5 * math.log(self.delta)

        x = math.pi * vals[:nd]
        lat = scaled_upper_gamma(s, x * rot, -s * np.log(x) + np.log(counts[:nd]) - K, tol).sum()
        y = math.pi * vals[:nq] / self.delta
        lat += scaled_upper_gamma(
            1.0 - s, y / rot, (s - 1.0) * np.log(y) + np.log(counts[:nq]) - half_log_delta - K, tol
        ).sum()

        nan = complex("nan")
        pole_one = nan if s == 1 else cmath.exp(-1j * phi * (1.0 - s) - K - half_log_delta) / (s - 1.0)
        pole_zero = nan if s == 0 else -cmath.exp(1j * phi * s - K) / s
        return Bracket(s, phi, K, complex(lat), pole_one, pole_zero)

    def __call__(self, s: complex, tol: Tolerance = DEFAULT_TOL) -> complex:
        return eval_epstein(self, s, tol)


def _assemble(br: Bracket, lat: complex, pole_weight: complex) -> complex:
    """pi^s / Gamma(s) * exp(K) * (lat + pole_weight * (pole_one + pole_zero))."""
    s = br.s
    if br.phi:
        pref = cmath.exp(s * _LOG_PI - 1j * complex(sp.loggamma(s)).imag)
        total = lat
        if pole_weight:
            total += pole_weight * (br.pole_one + br.pole_zero)
        return pref * total
    # rgamma(s) * (-1/s) = -rgamma(s + 1) stays finite at s = 0, -1, -2, ...
    pis = cmath.exp(s * _LOG_PI)
    val = complex(sp.rgamma(s)) * lat
    if pole_weight:
        val += pole_weight * (complex(sp.rgamma(s)) * br.pole_one - complex(sp.rgamma(s + 1.0)))
    return pis * val


def eval_epstein(ev: EpsteinEvaluator, s: complex, tol: Tolerance = DEFAULT_TOL) -> complex:
    """E(s, Q) for s != 1."""
    s = complex(s)
    if abs(s - 1.0) < _POLE_RADIUS:
        raise PoleAtOne("E(s, Q) has a simple pole at s = 1")
    br = ev.bracket(s, tol)
    return _assemble(br, br.lattice, 1.0)


def lattice_sum(form, s: complex, X: float) -> complex:
    """sum_{0 < Q(x) <= X} Q(x)^{-s} + (2 pi / sqrt|D|) X^{1-s} / (s - 1), Re s > 1."""
    s = complex(s)
    vals, counts = lattice_values(form, X)
    D = form[1] ** 2 - 4 * form[0] * form[2]
    head = np.sum(counts * np.exp(-s * np.log(vals)))
    tail = 2 * math.pi / math.sqrt(-D) * X ** (1 - s) / (s - 1)
    return complex(head + tail)


@lru_cache(maxsize=64)
def class_evaluators(g: ClassGroup, cutoff: float = DEFAULT_CUTOFF) -> tuple[EpsteinEvaluator, ...]:
    return tuple(EpsteinEvaluator(f, cutoff) for f in g.forms)


# ---------------------------------------------------------------- combinations

@dataclass(frozen=True)
class CombinationSpec:
    """F(s) = sum_j b_j L(s, chi_{characters[j]}), one term per merged
    conjugate pair.  ``norm`` is the factor removed by normalization, so the
    unnormalized coefficients are ``norm * b``."""

    D: int
    characters: tuple[int, ...]
    b: tuple[complex, ...]
    xi: tuple[int, ...]
    normalized: bool = False
    norm: float = 1.0
    source_class: int | None = None

    def __post_init__(self):
        if not self.b:
            raise InvalidInput("a combination needs at least one term")
        if len(self.b) != len(self.characters) or len(self.xi) != len(self.b):
            raise InvalidInput("b, characters and xi must have equal length")
        if any(abs(c) == 0 for c in self.b):
            raise UnsupportedCombination("all coefficients b_j must be nonzero")
        if any(x not in (2, 4) for x in self.xi):
            raise InvalidInput("xi_j must be 2 or 4")
        if self.normalized and abs(sum(abs(c) ** 2 for c in self.b) - 1.0) > 1e-12:
            raise InvalidInput("normalized coefficients must satisfy sum |b_j|^2 = 1")

    @property
    def J(self) -> int:
        return len(self.b)

    @property
    def xi_product(self) -> int:
        return math.prod(self.xi)

    @property
    def group(self) -> ClassGroup:
        return class_group(self.D)

    @property
    def raw_b(self) -> tuple[complex, ...]:
        return tuple(self.norm * c for c in self.b)

    @property
    def has_pole(self) -> bool:
        return 0 in self.characters

    def coefficient_map(self) -> dict[int, complex]:
        return dict(zip(self.characters, self.b))

    def normalize(self) -> "CombinationSpec":
        if self.normalized:
            return self
        r = math.sqrt(sum(abs(c) ** 2 for c in self.b))
        return CombinationSpec(
            self.D, self.characters, tuple(c / r for c in self.b), self.xi, True, self.norm * r, self.source_class
        )

    def scaled(self, c: complex) -> "CombinationSpec":
        """c * F; zeros are unchanged."""
        return CombinationSpec(self.D, self.characters, tuple(c * x for x in self.b), self.xi, False, 1.0, None)

    @classmethod
    def from_epstein(cls, g: ClassGroup, k: int, normalize: bool = False) -> "CombinationSpec":
        """E(s, Q_k) = (w/h) sum_j conj(chi_j(A_k)) L_j(s), merged over conjugate pairs."""
        if not 0 <= k < g.h:
            raise IndexError(f"class index {k} out of range for h={g.h}")
        chars, b, xi = [], [], []
        for j in g.merged_characters():
            v = g.chars[j, k]
            if g.is_real_character(j):
                coef = v.real
                xi.append(4)
            else:
                coef = 2.0 * v.real
                xi.append(2)
            coef *= g.w / g.h
            if abs(coef) < 1e-12:
                raise UnsupportedCombination(
                    f"merged coefficient of character {j} vanishes for class {k} of D={g.D}"
                )
            chars.append(j)
            b.append(complex(coef))
        spec = cls(g.D, tuple(chars), tuple(b), tuple(xi), source_class=k)
        return spec.normalize() if normalize else spec

    @classmethod
    def explicit(cls, g: ClassGroup, b, characters=None, normalize: bool = False) -> "CombinationSpec":
        b = tuple(complex(x) for x in b)
        if characters is None:
            characters = g.merged_characters()
            if len(b) != len(characters):
                raise InvalidInput(f"D={g.D} has J={len(characters)} merged characters, got {len(b)} coefficients")
        characters = tuple(int(j) for j in characters)
        seen = set()
        for j in characters:
            if not 0 <= j < g.h:
                raise InvalidInput(f"character index {j} out of range for h={g.h}")
            rep = min(j, (g.h - j) % g.h)
            if rep in seen:
                raise InvalidInput("characters must be distinct up to conjugation")
            seen.add(rep)
        xi = tuple(4 if g.is_real_character(j) else 2 for j in characters)
        spec = cls(g.D, characters, b, xi)
        return spec.normalize() if normalize else spec

    def to_json(self) -> dict:
        return {
            "D": self.D,
            "J": self.J,
            "characters": list(self.characters),
            "b": [{"re": c.real, "im": c.imag} for c in self.b],
            "xi": list(self.xi),
            "normalized": self.normalized,
            "norm": self.norm,
            "source_class": self.source_class,
        }


def _class_weights(g: ClassGroup, coeffs: dict) -> tuple[np.ndarray, complex]:
    weights = np.zeros(g.h, dtype=complex)
    for j, bj in coeffs.items():
        if not 0 <= j < g.h:
            raise InvalidInput(f"character index {j} out of range for h={g.h}")
        weights += bj * g.chars[j]
    return weights / g.w, complex(coeffs.get(0, 0.0)) * g.h / g.w


def _combined_bracket(g, coeffs, s, tol, cutoff):
    weights, pole_weight = _class_weights(g, coeffs)
    lat = 0.0j
    br = None
    for A, ev in enumerate(class_evaluators(g, cutoff)):
        if weights[A] == 0 and br is not None:
            continue
        br = ev.bracket(s, tol)
        lat += weights[A] * br.lattice
    return br, lat, pole_weight


def combination_value(g: ClassGroup, coeffs: dict, s: complex, tol: Tolerance = DEFAULT_TOL,
                      cutoff: float = DEFAULT_CUTOFF) -> complex:
    """sum_j coeffs[j] * L(s, chi_j).  Only the trivial character carries the
    pole terms, so combinations without it are regular at s = 1."""
    s = complex(s)
    if coeffs.get(0, 0) != 0 and abs(s - 1.0) < _POLE_RADIUS:
        raise PoleAtOne("combination includes the trivial character, pole at s = 1")
    br, lat, pole_weight = _combined_bracket(g, coeffs, s, tol, cutoff)
    return _assemble(br, lat, pole_weight)


def eval_hecke(g: ClassGroup, j: int, s: complex, tol: Tolerance = DEFAULT_TOL) -> complex:
    """L(s, chi_j) = (1/w) sum_A chi_j(A) E(s, Q_A)."""
    return combination_value(g, {j: 1.0}, s, tol)


def _check_spec(spec: CombinationSpec, g: ClassGroup):
    if spec.D != g.D:
        raise InvalidInput(f"combination is for D={spec.D}, class group has D={g.D}")


def eval_F(spec: CombinationSpec, g: ClassGroup, s: complex, tol: Tolerance = DEFAULT_TOL) -> complex:
    _check_spec(spec, g)
    return combination_value(g, spec.coefficient_map(), s, tol)


def completed(spec: CombinationSpec, g: ClassGroup, s: complex, tol: Tolerance = DEFAULT_TOL) -> complex:
    """G(s) = (sqrt|D| / 2 pi)^s Gamma(s) F(s) = Delta^{s/2} pi^{-s} Gamma(s) F(s)."""
    _check_spec(spec, g)
    s = complex(s)
    coeffs = spec.coefficient_map()
    if coeffs.get(0, 0) != 0:
        if abs(s - 1.0) < _POLE_RADIUS:
            raise PoleAtOne("completed function has a pole at s = 1")
        if abs(s) < _POLE_RADIUS:
            raise PoleOfGamma("completed function has a pole at s = 0")
    br, lat, pole_weight = _combined_bracket(g, coeffs, s, tol, DEFAULT_CUTOFF)
    total = lat
    if pole_weight:
        total += pole_weight * (br.pole_one + br.pole_zero)
    log_scale = 0.5 * s * math.log(-g.D / 4.0) + br.K
    return cmath.exp(log_scale) * total


def fe_residual(spec: CombinationSpec, g: ClassGroup, s: complex, tol: Tolerance = DEFAULT_TOL,
                relative: bool = False) -> float:
    """|G(s) - G(1-s)| / max(|G(s)|, 1), or / |G(s)| when ``relative``."""
    a = completed(spec, g, s, tol)
    b = completed(spec, g, 1.0 - complex(s), tol)
    den = abs(a) if relative else max(abs(a), 1.0)
    return abs(a - b) / den


def combination_function(spec: CombinationSpec, g: ClassGroup | None = None, tol: Tolerance = DEFAULT_TOL):
    """F as a plain callable of s, for the zero scanner."""
    g = g if g is not None else spec.group
    _check_spec(spec, g)
    coeffs = spec.coefficient_map()

    def F(s):
        return combination_value(g, coeffs, s, tol)

    F.spec = spec
    return F


# ------------------------------------------------------- Dirichlet coefficients

def dirichlet_coefficients(spec: CombinationSpec, g: ClassGroup, N: int) -> np.ndarray:
    """c_n, 0 <= n <= N, with F(s) = sum_n c_n n^{-s} for Re s > 1 (c_0 = 0)."""
    _check_spec(spec, g)
    weights, _ = _class_weights(g, spec.coefficient_map())
    c = np.zeros(N + 1, dtype=complex)
    for A, f in enumerate(g.forms):
        if weights[A] != 0:
            c += weights[A] * representation_counts(f, N)
    return c


def _divisor_tail(N: float, sigma: float) -> float:
    # sum_{n>N} d(n) n^{-sigma} via partial summation with D(x) <= x log x + x
    s1 = sigma - 1.0
    return sigma * N ** (-s1) * (math.log(N) / s1 + 1.0 / s1 ** 2 + 1.0 / s1)


def sigma_free(spec: CombinationSpec, g: ClassGroup, N: int = 20000, tol: float = 1e-6) -> float:
    """An abscissa right of which F has no zeros: the leading Dirichlet term
    dominates the rest of the series in absolute value.  Coefficients beyond
    N are bounded by sum_j |b_j| d(n)."""
    c = np.abs(dirichlet_coefficients(spec, g, N))
    nz = np.nonzero(c > 1e-12)[0]
    n0 = int(nz[0])
    lead = c[n0]
    rest_n = nz[1:].astype(float)
    rest_c = c[nz[1:]]
    bsum = sum(abs(x) for x in spec.b)

    def margin(sig):
        head = float(np.sum(rest_c * (n0 / rest_n) ** sig))
        return lead - head - bsum * n0 ** sig * _divisor_tail(N, sig)

    lo, hi = 1.0 + 1e-3, 2.0
    while margin(hi) <= 0:
        lo, hi = hi, hi * 2
        if hi > 200:
            raise InvalidInput("leading Dirichlet coefficient never dominates")
    if margin(lo) > 0:
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if margin(mid) > 0:
            hi = mid
        else:
            lo = mid
    return hi

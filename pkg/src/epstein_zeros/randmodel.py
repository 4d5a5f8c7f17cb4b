"""Random Euler-product model for Hecke L-functions and their combinations.

Each rational prime p gets an independent phase X(p) = exp(i U_p), and the
prime ideals above p see X(p) (degree one) or X(p)^2 (inert, norm p^2).
Merging the conjugate ideals of a split prime, every local factor of
L_j(sigma : X) has the form

    (1 - a_j(p) z + e_p z^2)^{-1},   z = X(p) p^{-sigma},

with e_p = 1 (split), -1 (inert, a_j(p) = 0) or 0 (ramified).

Samples are keyed by (seed, sample index): sample i draws its phases from a
Philox stream keyed by (seed, i), one uniform per prime in increasing order.
Outputs therefore do not depend on the block size or thread count, and a
larger prime cutoff extends rather than reshuffles the phases.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special as sp

from .epstein import CombinationSpec
from .errors import InvalidInput
from .quadforms import ClassGroup, PrimeSplit, kronecker, prime_class, primes_upto

_SPLIT, _INERT, _RAMIFIED = 1, -1, 0
_MASK64 = (1 << 64) - 1


def sigma_T(theta: float, T: float) -> float:
    return 0.5 + math.log(T) ** (-theta)


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    n_samples: int
    P: int
    truncation_note: str = ""

    def to_json(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "n": self.n_samples, "P": self.P,
                "truncation_note": self.truncation_note}


@dataclass(frozen=True)
class ComplexEstimate:
    mean: complex
    stderr: float
    n_samples: int


class ModelInstance:
    """Prime data for one combination and one prime cutoff."""

    def __init__(self, spec: CombinationSpec, g: ClassGroup | None = None, P: int = 10**6, seed: int = 0,
                 swap_conjugates: bool = False):
        g = g if g is not None else spec.group
        if g.D != spec.D:
            raise InvalidInput("combination and class group disagree on D")
        if P < 2:
            raise InvalidInput("prime cutoff must be at least 2")
        self.spec, self.g, self.P, self.seed = spec, g, int(P), int(seed) & _MASK64
        self.swapped = swap_conjugates
        p = primes_upto(self.P)
        kind = np.empty(p.size, dtype=np.int8)
        cls = np.full(p.size, -1, dtype=np.int64)
        D = g.D
        for i, q in enumerate(p.tolist()):
            kr = kronecker(D, q)
            if kr == -1:
                kind[i] = _INERT
                continue
            kind[i] = _SPLIT if kr == 1 else _RAMIFIED
            k = prime_class(g, q)
            cls[i] = (-k) % g.h if swap_conjugates else k
        self.primes = p
        self.kind = kind
        self.class_index = cls
        self.e = kind.astype(float)
        self.a = np.vstack([self.char_coeffs(j) for j in spec.characters])
        self._log_p = np.log(p.astype(float))

    def __repr__(self):
        return f"ModelInstance(D={self.g.D}, J={self.spec.J}, P={self.P}, seed={self.seed})"

    def prime_splits(self):
        names = {_SPLIT: "split", _INERT: "inert", _RAMIFIED: "ramified"}
        for p, k, c in zip(self.primes.tolist(), self.kind.tolist(), self.class_index.tolist()):
            yield PrimeSplit(p, names[k], None if c < 0 else c)

    def char_coeffs(self, j: int) -> np.ndarray:
        """a_j(p) over all primes p <= P for character index j."""
        if not 0 <= j < self.g.h:
            raise InvalidInput(f"character index {j} out of range for h={self.g.h}")
        chi = self.g.chars[j]
        out = np.zeros(self.class_index.size)
        split = self.kind == _SPLIT
        ram = self.kind == _RAMIFIED
        out[split] = 2.0 * chi[self.class_index[split]].real
        out[ram] = chi[self.class_index[ram]].real
        return out

    def _index_of_prime(self, p: int) -> int:
        if p > self.P:
            raise InvalidInput(f"p={p} exceeds the prime cutoff P={self.P}")
        i = int(np.searchsorted(self.primes, p))
        if i >= self.primes.size or self.primes[i] != p:
            raise InvalidInput(f"{p} is not prime")
        return i

    # -- sampling ---------------------------------------------------------

    def phases(self, i: int) -> np.ndarray:
        key = ((self.seed << 64) | (int(i) & _MASK64))
        rng = np.random.Generator(np.random.Philox(key=key))
        return 2.0 * math.pi * rng.random(self.primes.size)

    def log_L(self, sigma: float, start: int, n: int) -> np.ndarray:
        """log L_j(sigma : X_i) for samples i in [start, start + n), shape (n, J)."""
        if not sigma > 0.5:
            raise InvalidInput("sigma must exceed 1/2")
        U = np.vstack([self.phases(i) for i in range(start, start + n)])
        r = np.exp(-sigma * self._log_p)[None, :]
        zr = np.cos(U) * r
        zi = np.sin(U) * r
        # e_p z^2 in real arithmetic; complex log is the bottleneck otherwise
        wr = self.e[None, :] * (zr * zr - zi * zi)
        wi = self.e[None, :] * (2.0 * zr * zi)
        out = np.empty((n, self.spec.J), dtype=complex)
        for j in range(self.spec.J):
            a = self.a[j][None, :]
            re = 1.0 - a * zr + wr
            im = wi - a * zi
            out[:, j].real = -0.5 * np.log(re * re + im * im).sum(axis=1)
            out[:, j].imag = -np.arctan2(im, re).sum(axis=1)
        return out

    def log_L_batch(self, sigma: float, N: int, start: int = 0, threads: int = 1, block: int = 64) -> np.ndarray:
        starts = list(range(start, start + N, block))
        sizes = [min(block, start + N - s0) for s0 in starts]
        if threads <= 1:
            parts = [self.log_L(sigma, s0, k) for s0, k in zip(starts, sizes)]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(lambda a: self.log_L(sigma, *a), zip(starts, sizes)))
        return np.vstack(parts) if parts else np.zeros((0, self.spec.J), dtype=complex)

    def truncation_tail(self, sigma: float) -> float:
        """Standard deviation of the omitted primes' contribution to Re log L_j:
        sqrt(sum_{p > P} a_j(p)^2 p^{-2 sigma} / 2), with a_j(p)^2 averaging at
        most 2 over primes.  The omitted part has mean zero."""
        return math.sqrt(float(sp.exp1((2 * sigma - 1) * math.log(self.P))))


def _log_abs_combination(b: np.ndarray, logL: np.ndarray) -> np.ndarray:
    shift = logL.real.max(axis=1, keepdims=True)
    return np.log(np.abs((b[None, :] * np.exp(logL - shift)).sum(axis=1))) + shift[:, 0]


def sample_F(m: ModelInstance, sigma: float, i: int) -> complex:
    """F(sigma : X_i) = sum_j b_j L_j(sigma : X_i) for the i-th sample."""
    logL = m.log_L(sigma, i, 1)[0]
    return complex(np.sum(np.asarray(m.spec.b) * np.exp(logL)))


def mc_log_abs_F(m: ModelInstance, sigma: float, N: int, threads: int = 1, start: int = 0) -> McEstimate:
    """Monte-Carlo estimate of E[log |F(sigma : X)|]."""
    logL = m.log_L_batch(sigma, N, start, threads)
    vals = _log_abs_combination(np.asarray(m.spec.b), logL)
    note = f"primes <= {m.P}; omitted-prime std of Re log L ~ {m.truncation_tail(sigma):.3g}"
    return McEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(N)), N, m.P, note)


def log_abs_F_samples(m: ModelInstance, sigma: float, N: int, threads: int = 1, start: int = 0) -> np.ndarray:
    return _log_abs_combination(np.asarray(m.spec.b), m.log_L_batch(sigma, N, start, threads))


# -- prime sums -------------------------------------------------------------

def a_coeff(m: ModelInstance, j: int, p: int) -> float:
    """a_j(p): sum of chi_j over the prime ideals of norm p."""
    i = m._index_of_prime(p)
    return float(m.char_coeffs(j)[i])


def euler_log_coeffs(m: ModelInstance, j: int, p: int, nmax: int = 50) -> np.ndarray:
    """a_j(p^n) for n = 0..nmax (entry 0 is 0)."""
    i = m._index_of_prime(p)
    n = np.arange(1, nmax + 1)
    out = np.zeros(nmax + 1, dtype=complex)
    kind = m.kind[i]
    if kind == _INERT:
        even = n % 2 == 0
        out[1:][even] = 1.0 / (n[even] // 2)
    else:
        alpha = m.g.chars[j][m.class_index[i]]
        if kind == _SPLIT:
            out[1:] = (alpha ** n + np.conj(alpha) ** n) / n
        else:
            out[1:] = alpha ** n / n
    return out.real if np.all(np.abs(out.imag) < 1e-15) else out


def soc_sum(m: ModelInstance, j: int, l: int, sigma: float, tail: bool = False) -> float:
    """sum_{p <= P} a_j(p) a_l(p) p^{-2 sigma}; with ``tail`` the primes above P
    are added in mean: average of a_j a_l over split classes times
    int_P^inf x^{-2 sigma} / log x dx."""
    aj, al = m.char_coeffs(j), m.char_coeffs(l)
    w = np.exp(-2.0 * sigma * m._log_p)
    total = float(np.sum(aj * al * w))
    if tail:
        total += _split_average(m.g, j, l) * float(sp.exp1((2 * sigma - 1) * math.log(m.P)))
    return total


def _split_average(g: ClassGroup, j: int, l: int) -> float:
    # split primes: density 1/2, equidistributed over classes
    cj = 2.0 * g.chars[j].real
    cl = 2.0 * g.chars[l].real
    return 0.5 * float(np.mean(cj * cl))


def soc_slope(m: ModelInstance, j: int, l: int, sigmas, tail: bool = False) -> tuple[float, float]:
    """Least-squares slope and intercept of soc_sum against log(1/(2 sigma - 1))."""
    x = np.array([math.log(1.0 / (2 * s - 1)) for s in sigmas])
    y = np.array([soc_sum(m, j, l, s, tail) for s in sigmas])
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


# -- local moments ----------------------------------------------------------

def A_kl(m: ModelInstance, p: int, sigma: float, k, l, M: int = 1024, nmax: int | None = 50) -> complex:
    """E[prod_j g_j(p, sigma : X)^{k_j} g_j(p, sigma : conj X)^{l_j}] over X
    uniform on the circle, by the M-point trapezoid rule.  ``nmax=None`` uses
    the closed-form logarithm instead of the truncated series."""
    k = np.asarray(k, dtype=int)
    l = np.asarray(l, dtype=int)
    J = m.spec.J
    if k.shape != (J,) or l.shape != (J,) or (k < 0).any() or (l < 0).any():
        raise InvalidInput(f"k and l must be nonnegative vectors of length {J}")
    theta = 2.0 * math.pi * np.arange(M) / M
    X = np.exp(1j * theta)
    i = m._index_of_prime(p)
    prod = np.ones(M, dtype=complex)
    for jj, char in enumerate(m.spec.characters):
        if k[jj] == 0 and l[jj] == 0:
            continue
        if nmax is None:
            z = X * p ** (-sigma)
            gX = -np.log(1.0 - m.a[jj][i] * z + m.e[i] * z * z)
            zc = np.conj(X) * p ** (-sigma)
            gXc = -np.log(1.0 - m.a[jj][i] * zc + m.e[i] * zc * zc)
        else:
            c = euler_log_coeffs(m, char, p, nmax)
            n = np.arange(nmax + 1)
            coef = c * p ** (-sigma * n)
            gX = np.polynomial.polynomial.polyval(X, coef)
            gXc = np.polynomial.polynomial.polyval(np.conj(X), coef)
        prod *= gX ** k[jj] * gXc ** l[jj]
    return complex(prod.mean())


def char_function_probe(m: ModelInstance, sigma: float, x, y, N: int = 1000, threads: int = 1,
                        start: int = 0) -> ComplexEstimate:
    """E[exp(2 pi i sum_j (x_j Re log L_j + y_j Im log L_j))] by Monte Carlo."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (m.spec.J,) or y.shape != (m.spec.J,):
        raise InvalidInput(f"x and y must have length J={m.spec.J}")
    if not np.any(x) and not np.any(y):
        return ComplexEstimate(1.0 + 0j, 0.0, N)
    if N < 1000:
        raise InvalidInput("char_function_probe needs N >= 1000")
    logL = m.log_L_batch(sigma, N, start, threads)
    vals = np.exp(2j * math.pi * (logL.real @ x + logL.imag @ y))
    err = math.sqrt((vals.real.var(ddof=1) + vals.imag.var(ddof=1)) / N)
    return ComplexEstimate(complex(vals.mean()), err, N)


def gaussian_probe_prediction(m: ModelInstance, sigma: float, x, y) -> float:
    """exp(-pi^2 sum_j S_jj (x_j^2 + y_j^2)), S_jj the truncated prime sum:
    the characteristic function of a centred Gaussian with the model's
    per-prime variances a_j(p)^2 p^{-2 sigma} / 2 in each coordinate."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    S = np.array([soc_sum(m, j, j, sigma) for j in m.spec.characters])
    return float(math.exp(-math.pi ** 2 * float(np.sum(S * (x ** 2 + y ** 2)))))

"""Binary quadratic forms, class groups of imaginary quadratic fields and
prime splitting.

Forms are integer triples ``(a, b, c)`` for ``a x^2 + b x y + c y^2``.  Class
groups are restricted to cyclic ones, for which the character table is
``chi_j(A_k) = exp(2 pi i j k / h)`` once classes are indexed as powers of a
generator.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import (
    InvalidInput,
    NonFundamentalDiscriminant,
    NotPositiveDefinite,
    RepresentationNotFound,
    UnsupportedGroup,
)


class QuadForm(NamedTuple):
    a: int
    b: int
    c: int

    @property
    def disc(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def __call__(self, m, n):
        return self.a * m * m + self.b * m * n + self.c * n * n

    def is_reduced(self) -> bool:
        a, b, c = self
        if not (abs(b) <= a <= c):
            return False
        if (abs(b) == a or a == c) and b < 0:
            return False
        return True


def reduce(f) -> QuadForm:
    """Gauss reduction of a positive definite form."""
    a, b, c = (int(v) for v in f)
    if a <= 0 or b * b - 4 * a * c >= 0:
        raise NotPositiveDefinite(f"form {(a, b, c)} is not positive definite")
    while True:
        # translate b into (-a, a]
        if not -a < b <= a:
            k = (a - b) // (2 * a)
            c = a * k * k + b * k + c
            b = b + 2 * a * k
        if a > c:
            a, b, c = c, -b, a
            continue
        if a == c and b < 0:
            b = -b
        return QuadForm(a, b, c)


def inverse_form(f) -> QuadForm:
    return reduce((f[0], -f[1], f[2]))


def compose_forms(f1, f2) -> QuadForm:
    """Dirichlet composition of two primitive forms of equal discriminant,
    returned reduced."""
    a1, b1, c1 = (int(v) for v in f1)
    a2, b2, c2 = (int(v) for v in f2)
    D = b1 * b1 - 4 * a1 * c1
    if b2 * b2 - 4 * a2 * c2 != D:
        raise InvalidInput("forms have different discriminants")
    if a1 > a2:
        a1, b1, c1, a2, b2, c2 = a2, b2, c2, a1, b1, c1
    s = (b1 + b2) // 2
    n = b2 - s
    if a2 % a1 == 0:
        y1, d = 0, a1
    else:
        d, u, _ = _xgcd(a2, a1)
        y1 = u
    if s % d == 0:
        y2, x2, d1 = -1, 0, d
    else:
        d1, u, v = _xgcd(s, d)
        x2, y2 = u, -v
    v1 = a1 // d1
    v2 = a2 // d1
    r = (y1 * y2 * n - x2 * c2) % v1
    b3 = b2 + 2 * v2 * r
    a3 = v1 * v2
    c3 = (b3 * b3 - D) // (4 * a3)
    return reduce((a3, b3, c3))


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, u, v) with u a + v b = g = gcd(a, b) >= 0."""
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def _squarefree(n: int) -> bool:
    n = abs(n)
    p = 2
    while p * p <= n:
        if n % (p * p) == 0:
            return False
        p += 1 if p == 2 else 2
    return True


def is_fundamental(D: int) -> bool:
    if D >= 0:
        return False
    if D % 4 == 1:
        return _squarefree(D)
    if D % 4 == 0:
        m = D // 4
        return m % 4 in (2, 3) and _squarefree(m)
    return False


def kronecker(D: int, p: int) -> int:
    """Kronecker symbol (D / p) for a prime p."""
    if p == 2:
        if D % 2 == 0:
            return 0
        return 1 if D % 8 in (1, 7) else -1
    r = D % p
    if r == 0:
        return 0
    return 1 if pow(r, (p - 1) // 2, p) == 1 else -1


def reduced_forms(D: int) -> list[QuadForm]:
    """All reduced forms of discriminant D < 0, ordered by (a, |b|, -b)."""
    out = []
    amax = math.isqrt(-D // 3) + 1
    for a in range(1, amax + 1):
        for b in range(-a + 1, a + 1):
            if (b - D) % 2:
                continue
            num = b * b - D
            if num % (4 * a):
                continue
            c = num // (4 * a)
            f = QuadForm(a, b, c)
            if f.is_reduced():
                out.append(f)
    out.sort(key=lambda f: (f.a, abs(f.b), -f.b))
    return out


def _roots_of_unity(D: int) -> int:
    return {-3: 6, -4: 4}.get(D, 2)


@dataclass(frozen=True)
class ClassGroup:
    """Cyclic class group of Q(sqrt D); ``forms[k]`` represents g^k for the
    generator g = forms[1]."""

    D: int
    forms: tuple[QuadForm, ...]
    w: int
    _index: dict = field(repr=False, compare=False, hash=False)

    @property
    def h(self) -> int:
        return len(self.forms)

    @cached_property
    def chars(self) -> np.ndarray:
        h = self.h
        jk = np.outer(np.arange(h), np.arange(h))
        return np.exp(2j * np.pi * jk / h)

    def index_of(self, f) -> int:
        return self._index[reduce(f)]

    def compose(self, i: int, j: int) -> int:
        self._check(i)
        self._check(j)
        return (i + j) % self.h

    def inverse(self, i: int) -> int:
        self._check(i)
        return (-i) % self.h

    def _check(self, i):
        if not 0 <= i < self.h:
            raise IndexError(f"class index {i} out of range for h={self.h}")

    def is_real_character(self, j: int) -> bool:
        return (2 * j) % self.h == 0

    def merged_characters(self) -> list[int]:
        """One representative per {chi, conj(chi)} pair, real characters
        included, in increasing index order."""
        return [j for j in range(self.h) if j <= (self.h - j) % self.h or j == 0]

    def to_json(self) -> dict:
        return {
            "D": self.D,
            "h": self.h,
            "w": self.w,
            "forms": [list(f) for f in self.forms],
            "chars": [[{"re": float(z.real), "im": float(z.imag)} for z in row] for row in self.chars],
        }


def class_group(D: int) -> ClassGroup:
    if not is_fundamental(D):
        raise NonFundamentalDiscriminant(f"{D} is not a negative fundamental discriminant")
    forms = reduced_forms(D)
    h = len(forms)
    principal = forms[0]
    if h == 1:
        return ClassGroup(D, (principal,), _roots_of_unity(D), {principal: 0})
    gen = None
    for f in forms[1:]:
        g, k = f, 1
        while g != principal:
            g = compose_forms(g, f)
            k += 1
        if k == h:
            gen = f
            break
    if gen is None:
        raise UnsupportedGroup(f"class group of D={D} (h={h}) is not cyclic")
    ordered = [principal, gen]
    for _ in range(h - 2):
        ordered.append(compose_forms(ordered[-1], gen))
    index = {f: k for k, f in enumerate(ordered)}
    if len(index) != h:
        raise UnsupportedGroup("composition table inconsistent")
    return ClassGroup(D, tuple(ordered), _roots_of_unity(D), index)


@dataclass(frozen=True)
class PrimeSplit:
    p: int
    kind: str  # "split" | "inert" | "ramified"
    class_index: int | None = None


def find_representation(f, p: int, bound: int):
    """Search |m|, |n| <= bound for f(m, n) == p; return (m, n) or None."""
    a, b, c = f
    for n in range(0, bound + 1):
        # solve a m^2 + b n m + (c n^2 - p) = 0 over the integers
        disc = b * b * n * n - 4 * a * (c * n * n - p)
        if disc < 0:
            if n > 0 and c * n * n > 4 * p:
                break
            continue
        r = math.isqrt(disc)
        if r * r != disc:
            continue
        for num in (-b * n + r, -b * n - r):
            if num % (2 * a) == 0:
                m = num // (2 * a)
                if abs(m) <= bound:
                    return m, n
    return None


def splitting(g: ClassGroup, p: int, bound: int | None = None) -> PrimeSplit:
    """Splitting type of p in Q(sqrt D), with the class of a prime above p
    found by searching representations of p by the reduced class forms."""
    k = kronecker(g.D, p)
    if k == -1:
        return PrimeSplit(p, "inert")
    kind = "split" if k == 1 else "ramified"
    if bound is None:
        bound = math.ceil(4 * math.sqrt(p))
    for idx, f in enumerate(g.forms):
        if find_representation(f, p, bound) is not None:
            return PrimeSplit(p, kind, idx)
    raise RepresentationNotFound(f"no class form of D={g.D} represents p={p} within |m|,|n|<={bound}")


def _sqrt_mod(a: int, p: int) -> int:
    """Square root of a quadratic residue a modulo an odd prime p."""
    a %= p
    if a == 0:
        return 0
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    # Tonelli-Shanks
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c, t, r = i, b * b % p, t * b * b % p, r * b % p
    return r


def prime_class(g: ClassGroup, p: int) -> int | None:
    """Class index of a prime ideal above a split or ramified p, via the form
    (p, b, (b^2 - D)/4p); None for inert p.  Fast path for bulk use."""
    D = g.D
    if kronecker(D, p) == -1:
        return None
    if p == 2:
        b = next(b for b in range(4) if (b * b - D) % 8 == 0)
    else:
        b = _sqrt_mod(D, p)
        if (b - D) % 2:
            b = p - b if b else p
        if (b - D) % 2:
            b += p
    return g.index_of((p, b, (b * b - D) // (4 * p)))


def primes_upto(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for i in range(2, math.isqrt(n) + 1):
        if sieve[i]:
            sieve[i * i :: i] = False
    return np.nonzero(sieve)[0].astype(np.int64)


def char_value(g: ClassGroup, j: int, k: int) -> complex:
    return cmath.exp(2j * math.pi * j * k / g.h)

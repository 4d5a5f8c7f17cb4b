"""Reference computations that share no code path with the main modules."""
from __future__ import annotations

import math

import mpmath as mp


def epstein_bessel(form, s, dps=None, nmax=None):
    """E(s, Q) from the Fourier expansion in one lattice variable (zeta terms
    plus a K-Bessel series).  Valid for all s != 1; needs extra working
    precision at large |Im s| to absorb the Gamma(s) cancellation."""
    a, b, c = (int(v) for v in form)
    D = b * b - 4 * a * c
    s = mp.mpc(s)
    if dps is None:
        dps = 30 + int(abs(s.imag) * 0.7)
    with mp.workdps(dps):
        s = mp.mpc(s)
        k = mp.sqrt(-D)
        main = 2 * mp.zeta(2 * s) * mp.power(a, -s)
        main += (mp.power(2, 2 * s) * mp.power(a, s - 1) * mp.sqrt(mp.pi) * mp.gamma(s - 0.5)
                 * mp.zeta(2 * s - 1) / (mp.gamma(s) * mp.power(k, 2 * s - 1)))
        pref = 8 * mp.power(mp.pi, s) / mp.gamma(s) * mp.power(a, -s) * mp.power(2 * a / k, s - 0.5)
        nu = s - 0.5
        total = mp.mpc(0)
        if nmax is None:
            nmax = int(a * (dps * 2.4 + abs(s.imag)) / (mp.pi * k)) + 5
        for N in range(1, nmax + 1):
            sig = mp.fsum(mp.power(d, 1 - 2 * s) for d in range(1, N + 1) if N % d == 0)
            total += (mp.power(N, nu) * sig * mp.cos(mp.pi * N * b / a)
                      * mp.besselk(nu, mp.pi * N * k / a))
        return complex(main + pref * total)


def gaussian_integer_value() -> float:
    """E(2, x^2 + y^2) = 4 zeta(2) beta(2), beta(2) Catalan's constant."""
    with mp.workdps(30):
        return float(4 * mp.zeta(2) * mp.catalan)


def grid_zeros(f, sigma_min, sigma_max, t_min, t_max, h=0.05, newton_tol=1e-13):
    """Zeros of f located without any argument tracking: cells of a uniform
    grid where both Re f and Im f change sign at the corners seed a Newton
    iteration; converged points inside the rectangle are deduplicated."""
    import numpy as np

    ns = int(round((sigma_max - sigma_min) / h))
    nt = int(round((t_max - t_min) / h))
    xs = np.linspace(sigma_min, sigma_max, ns + 1)
    ts = np.linspace(t_min, t_max, nt + 1)
    vals = np.array([[complex(f(complex(x, t))) for x in xs] for t in ts])
    re, im = np.sign(vals.real), np.sign(vals.imag)

    def changes(a):
        c = np.stack([a[:-1, :-1], a[1:, :-1], a[:-1, 1:], a[1:, 1:]])
        return c.min(axis=0) != c.max(axis=0)

    cand = np.argwhere(changes(re) & changes(im))
    found = []
    for it, ix in cand:
        z0 = z = complex(xs[ix] + h / 2, ts[it] + h / 2)
        for _ in range(50):
            if abs(z - z0) > 2 * h:
                break
            d = (f(z + 1e-6) - f(z - 1e-6)) / 2e-6
            step = f(z) / d
            z -= step
            if abs(step) < newton_tol * max(1.0, abs(z)):
                break
        else:
            continue
        if abs(z - z0) > 2 * h:
            continue
        if not (sigma_min < z.real < sigma_max and t_min < z.imag < t_max):
            continue
        if all(abs(z - w) > 1e-7 for w in found):
            found.append(z)
    return sorted(found, key=lambda z: (z.imag, z.real))


def region_mc(xi, N=10**7, seed=12345, chunk=10**6):
    """MC estimates (mean, stderr) of sum_l int_{R_l} u_l e^{-sum u^2/xi} du and
    of the region-1 weight, from N(0, xi/2) draws."""
    import numpy as np

    rng = np.random.default_rng(seed)
    xi = np.asarray(xi, dtype=float)
    mass = float(np.prod(np.sqrt(np.pi * xi)))
    sd = np.sqrt(xi / 2)
    s1 = s2 = w1 = 0.0
    done = 0
    while done < N:
        n = min(chunk, N - done)
        u = rng.standard_normal((n, xi.size)) * sd
        mx = u.max(axis=1)
        s1 += float(mx.sum())
        s2 += float((mx * mx).sum())
        w1 += float((u.argmax(axis=1) == 0).sum())
        done += n
    mean = s1 / N
    var = s2 / N - mean * mean
    p = w1 / N
    return (mass * mean, mass * math.sqrt(var / N)), (mass * p, mass * math.sqrt(p * (1 - p) / N))

"""Zero counting and localization for analytic functions on rectangles.

The argument principle is evaluated by phase tracking: along each edge the
step is halved until successive values differ in argument by less than
pi/2.  Every routine accepts either a plain callable f(s) or a
CombinationSpec (with its class group), so synthetic functions exercise the
same code paths as Hecke combinations.
"""
from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import epstein
from .epstein import CombinationSpec
from .errors import BoundaryZero, InvalidInput, NumericFailure
from .quadforms import ClassGroup
from .randmodel import ModelInstance, mc_log_abs_F, sigma_T
from .special import DEFAULT_TOL, Tolerance

MAX_PHASE_STEP = math.pi / 2
_JITTERS = (0.0, 0.0173, -0.0291, 0.0419, -0.0537, 0.0661)


@dataclass(frozen=True)
class Rectangle:
    sigma_min: float
    sigma_max: float
    t_min: float
    t_max: float

    def __post_init__(self):
        if not (self.sigma_min < self.sigma_max and self.t_min < self.t_max):
            raise InvalidInput(f"degenerate rectangle {self}")

    @property
    def corners(self) -> list[complex]:
        return [complex(self.sigma_min, self.t_min), complex(self.sigma_max, self.t_min),
                complex(self.sigma_max, self.t_max), complex(self.sigma_min, self.t_max)]

    @property
    def diameter(self) -> float:
        return math.hypot(self.sigma_max - self.sigma_min, self.t_max - self.t_min)

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.sigma_min + self.sigma_max), 0.5 * (self.t_min + self.t_max))

    def contains(self, s: complex, closed: bool = True) -> bool:
        if closed:
            return self.sigma_min <= s.real <= self.sigma_max and self.t_min <= s.imag <= self.t_max
        return self.sigma_min < s.real < self.sigma_max and self.t_min < s.imag < self.t_max

    def to_json(self) -> dict:
        return {"sigma_min": self.sigma_min, "sigma_max": self.sigma_max, "t_min": self.t_min, "t_max": self.t_max}


@dataclass
class ZeroScanReport:
    rect: Rectangle
    winding: int
    zeros: list = field(default_factory=list)  # (location, |F| residual)
    min_boundary_modulus: float = math.inf
    evaluations: int = 0
    jitter: float = 0.0

    def to_json(self) -> dict:
        return {
            "rect": self.rect.to_json(),
            "winding": self.winding,
            "zeros": [{"re": z.real, "im": z.imag, "residual": r} for z, r in self.zeros],
            "min_boundary_modulus": self.min_boundary_modulus,
            "evaluations": self.evaluations,
            "jitter": self.jitter,
        }


class _Counted:
    """Memoizing wrapper that counts distinct evaluations."""

    def __init__(self, f, has_pole: bool):
        self.f = f
        self.has_pole = has_pole
        self.cache: dict[complex, complex] = {}

    def __call__(self, s: complex) -> complex:
        s = complex(s)
        v = self.cache.get(s)
        if v is None:
            v = complex(self.f(s))
            self.cache[s] = v
        return v

    @property
    def evaluations(self) -> int:
        return len(self.cache)


def as_function(target, g: ClassGroup | None = None, tol: Tolerance = DEFAULT_TOL) -> _Counted:
    if isinstance(target, _Counted):
        return target
    if isinstance(target, CombinationSpec):
        return _Counted(epstein.combination_function(target, g, tol), target.has_pole)
    if callable(target):
        return _Counted(target, bool(getattr(target, "has_pole", False)))
    raise InvalidInput("expected a CombinationSpec or a callable")


def _check_pole(f: _Counted, rect: Rectangle):
    if f.has_pole and rect.contains(1.0 + 0j):
        raise InvalidInput("rectangle contains the pole at s = 1")


# -- phase tracking ----------------------------------------------------------------

def _edge_samples(a: complex, b: complex, h0: float) -> list[complex]:
    """Endpoints plus the points of the global grid h Z (h = 2^-m <= h0)
    strictly between them; edges shared by neighbouring boxes, and sub-edges
    of a parent edge, therefore reuse the same evaluation points."""
    h = 2.0 ** math.floor(math.log2(h0))
    if a.imag == b.imag:
        lo, hi = sorted((a.real, b.real))
        inner = [complex(k * h, a.imag) for k in range(math.floor(lo / h) + 1, math.ceil(hi / h))]
    else:
        lo, hi = sorted((a.imag, b.imag))
        inner = [complex(a.real, k * h) for k in range(math.floor(lo / h) + 1, math.ceil(hi / h))]
    inner = [p for p in inner if p != a and p != b]
    if (b.real, b.imag) < (a.real, a.imag):
        inner.reverse()
    return [a] + inner + [b]


def _track_edge(f: _Counted, a: complex, b: complex, h0: float, refine_limit: int, floor: float):
    """Return (total phase change, min modulus, points, unwrapped args) along a->b."""
    pts = _edge_samples(a, b, min(h0, abs(b - a) / 4))
    vals = [f(p) for p in pts]
    out_pts = [pts[0]]
    out_args = [cmath.phase(vals[0])]
    total = 0.0
    minmod = min(abs(v) for v in vals)
    for z0, z1, v0, v1 in zip(pts[:-1], pts[1:], vals[:-1], vals[1:]):
        stack = [(z0, z1, v0, v1, 0)]
        # depth-first so that points are emitted in order
        while stack:
            p0, p1, w0, w1, depth = stack.pop()
            for w, p in ((w0, p0), (w1, p1)):
                if abs(w) <= floor:
                    raise BoundaryZero(f"|F| = {abs(w):.3g} on the contour at {p}", point=p)
            d = cmath.phase(w1 / w0)
            if abs(d) < MAX_PHASE_STEP:
                total += d
                out_pts.append(p1)
                out_args.append(out_args[-1] + d)
                continue
            if depth >= refine_limit:
                raise BoundaryZero(f"phase step did not resolve near {p0}", point=0.5 * (p0 + p1))
            pm = 0.5 * (p0 + p1)
            wm = f(pm)
            minmod = min(minmod, abs(wm))
            stack.append((pm, p1, wm, w1, depth + 1))
            stack.append((p0, pm, w0, wm, depth + 1))
    return total, minmod, out_pts, out_args


def _contour_scale(f: _Counted, rect: Rectangle) -> float:
    mods = [abs(f(c)) for c in rect.corners]
    mods.append(abs(f(rect.center + 0.5 * (rect.sigma_max - rect.sigma_min))))
    return float(np.median(mods))


def _winding(f: _Counted, rect: Rectangle, h0: float, refine_limit: int, threads: int = 1):
    scale = _contour_scale(f, rect)
    floor = 1e-10 * scale
    c = rect.corners
    edges = [(c[i], c[(i + 1) % 4]) for i in range(4)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=min(threads, 4)) as pool:
            res = list(pool.map(lambda e: _track_edge(f, e[0], e[1], h0, refine_limit, floor), edges))
    else:
        res = [_track_edge(f, a, b, h0, refine_limit, floor) for a, b in edges]
    total = sum(r[0] for r in res)
    w = total / (2 * math.pi)
    k = round(w)
    if abs(w - k) > 1e-6:
        raise NumericFailure(f"winding number {w} is not an integer")
    return int(k), min(r[1] for r in res)


DEFAULT_STEP = 0.25  # initial sample spacing; each edge also gets at least four steps


def _default_step(rect: Rectangle) -> float:
    return DEFAULT_STEP


def winding_number(target, g: ClassGroup | None = None, rect: Rectangle | None = None,
                   refine_limit: int = 40, h0: float | None = None, threads: int = 1,
                   tol: Tolerance = DEFAULT_TOL) -> int:
    return winding_report(target, g, rect, refine_limit, h0, threads, tol).winding


def winding_report(target, g, rect: Rectangle, refine_limit: int = 40, h0: float | None = None,
                   threads: int = 1, tol: Tolerance = DEFAULT_TOL) -> ZeroScanReport:
    f = as_function(target, g, tol)
    _check_pole(f, rect)
    k, minmod = _winding(f, rect, h0 or _default_step(rect), refine_limit, threads)
    return ZeroScanReport(rect, k, [], minmod, f.evaluations)


# -- localization --------------------------------------------------------------------

def _newton(f: _Counted, z: complex, scale: float, mult: int = 1, maxit: int = 60,
            radius: float = math.inf) -> complex | None:
    # iterates are confined to |z - z0| <= radius; evaluation cost grows with |Im z|
    h = 1e-6
    z0 = z
    for _ in range(maxit):
        if abs(z - z0) > radius:
            return None
        fz = f(z)
        if fz == 0:
            return z
        d = (f(z + h) - f(z - h)) / (2 * h)
        if d == 0:
            return None
        step = mult * fz / d
        z = z - step
        if abs(step) < 1e-14 * max(1.0, abs(z)):
            return z
    return z if abs(f(z)) < 1e-10 * scale else None


def _quadrants(rect: Rectangle, jitter: float) -> list[Rectangle]:
    sm = rect.sigma_min + (0.5 + jitter) * (rect.sigma_max - rect.sigma_min)
    tm = rect.t_min + (0.5 - 0.7 * jitter) * (rect.t_max - rect.t_min)
    return [Rectangle(rect.sigma_min, sm, rect.t_min, tm), Rectangle(sm, rect.sigma_max, rect.t_min, tm),
            Rectangle(rect.sigma_min, sm, tm, rect.t_max), Rectangle(sm, rect.sigma_max, tm, rect.t_max)]


def _local_scale(f: _Counted, z: complex, r: float = 1e-3) -> float:
    return max(abs(f(z + r * d)) for d in (1, -1, 1j, -1j))


def _is_multiple(f: _Counted, z: complex, w: int, r: float = 1e-6) -> bool:
    try:
        return _winding(f, Rectangle(z.real - r, z.real + r, z.imag - r, z.imag + r), r / 2, 20)[0] == w
    except (BoundaryZero, NumericFailure):
        return False


def verify_zero(target, g, rho: complex, box: float = 1e-4, tol: float = 1e-8) -> tuple[bool, int, float]:
    """(ok, winding in the box of side ``box`` centred at rho, |F(rho)| / local scale)."""
    f = as_function(target, g)
    h = box / 2
    rect = Rectangle(rho.real - h, rho.real + h, rho.imag - h, rho.imag + h)
    k, _ = _winding(f, rect, box / 4, 40)
    rel = abs(f(rho)) / _local_scale(f, rho)
    return (k >= 1 and rel <= tol), k, rel


def locate_zeros(target, g: ClassGroup | None = None, rect: Rectangle | None = None,
                 refine_limit: int = 40, h0: float | None = None, min_box: float = 1e-6,
                 threads: int = 1, tol: Tolerance = DEFAULT_TOL) -> ZeroScanReport:
    """Winding count plus every zero inside ``rect`` (with multiplicity).

    Boxes are quadrisected until they hold at most one zero; that zero is
    then polished by Newton's method from the box centre.  A zero on an
    internal cut makes the cut move to the next jitter offset.
    """
    f = as_function(target, g, tol)
    _check_pole(f, rect)
    step = h0 or _default_step(rect)
    total, minmod = _winding(f, rect, step, refine_limit, threads)
    zeros: list[tuple[complex, float]] = []

    def recurse(box: Rectangle, w: int):
        if w == 0:
            return
        if w == 1 or box.diameter < 1e-2:
            z = _newton(f, box.center, _contour_scale(f, box), mult=w, radius=box.diameter)
            if z is not None and box.contains(z) and (w == 1 or _is_multiple(f, z, w)):
                zeros.extend([(z, abs(f(z)) / _local_scale(f, z))] * w)
                return
        if box.diameter < min_box:
            z = box.center
            for _ in range(w):
                zeros.append((z, abs(f(z)) / _local_scale(f, z)))
            return
        for jit in _JITTERS:
            try:
                kids = _quadrants(box, jit)
                ws = [_winding(f, k, step, refine_limit)[0] for k in kids]
            except BoundaryZero:
                continue
            if sum(ws) != w:
                continue
            for k, wk in zip(kids, ws):
                recurse(k, wk)
            return
        raise NumericFailure(f"could not subdivide {box} without hitting a zero on a cut")

    recurse(rect, total)
    zeros.sort(key=lambda zr: (zr[0].imag, zr[0].real))
    return ZeroScanReport(rect, total, zeros, minmod, f.evaluations)


# -- counts near the critical line ------------------------------------------------------

@dataclass
class CountReport:
    count: int
    sigma_T: float
    sigma_free: float
    t_min: float
    t_max: float
    jitter: float
    evaluations: int

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _jittered_winding(f, rect: Rectangle, jitter_seq=(0.0, 1e-4, -1e-4, 2e-4, -2e-4, 3e-4, -3e-4)):
    for jt in jitter_seq:
        r = Rectangle(rect.sigma_min, rect.sigma_max, rect.t_min + jt, rect.t_max + jt)
        try:
            k, _ = _winding(f, r, _default_step(r), 40)
            return k, jt
        except BoundaryZero:
            continue
    raise BoundaryZero(f"every jittered contour of {rect} met a zero")


def count_in(target, g, sigma_lo: float, sigma_hi: float, t1: float, t2: float) -> CountReport:
    f = as_function(target, g)
    if sigma_lo >= sigma_hi:
        return CountReport(0, sigma_lo, sigma_hi, t1, t2, 0.0, 0)
    rect = Rectangle(sigma_lo, sigma_hi, t1, t2)
    _check_pole(f, rect)
    k, jt = _jittered_winding(f, rect)
    return CountReport(k, sigma_lo, sigma_hi, t1, t2, jt, f.evaluations)


def count_above_report(spec: CombinationSpec, g: ClassGroup | None, theta: float, T: float,
                       t_range: tuple[float, float] | None = None) -> CountReport:
    """Zeros with Re s > sigma_T(theta) and T < Im s < 2T (or ``t_range``)."""
    if T < 10:
        raise InvalidInput("T must be at least 10")
    g = g if g is not None else spec.group
    sT = sigma_T(theta, T)
    sf = epstein.sigma_free(spec, g)
    t1, t2 = t_range if t_range is not None else (T, 2 * T)
    return count_in(spec, g, sT, sf, t1, t2)


def count_above(spec: CombinationSpec, g: ClassGroup | None, theta: float, T: float) -> int:
    return count_above_report(spec, g, theta, T).count


# -- Littlewood identity --------------------------------------------------------------

@dataclass
class LittlewoodReport:
    sigma0: float
    sigma1: float
    T1: float
    T2: float
    zero_side: float
    contour_side: float
    integrals: dict
    zeros: list
    residual: float
    relative_residual: float

    def to_json(self) -> dict:
        d = dict(self.__dict__)
        d["zeros"] = [{"re": z.real, "im": z.imag} for z in self.zeros]
        return d


def _arg_function(f: _Counted, pts, args):
    ts = np.array([p.real for p in pts]) if pts[0].imag == pts[-1].imag else np.array([p.imag for p in pts])
    args = np.asarray(args)
    order = np.argsort(ts)
    ts, args = ts[order], args[order]

    def arg_at(x: float, make_point) -> float:
        ref = float(np.interp(x, ts, args))
        a = cmath.phase(f(make_point(x)))
        return a + 2 * math.pi * round((ref - a) / (2 * math.pi))

    return arg_at


def littlewood_check(target, g: ClassGroup | None, sigma0: float, T1: float, T2: float,
                     sigma1: float | None = None, quad_eps: float = 1e-10) -> LittlewoodReport:
    """2 pi sum (beta - sigma0) over zeros in [sigma0, sigma1] x [T1, T2] against

        int log|F(sigma0+it)| dt - int log|F(sigma1+it)| dt
        + int arg F(sigma+iT2) dsigma - int arg F(sigma+iT1) dsigma,

    with arg F continued from sigma1 + iT1 up the right edge and then
    leftward along each horizontal edge."""
    f = as_function(target, g)
    if sigma1 is None:
        if not isinstance(target, CombinationSpec):
            raise InvalidInput("sigma1 is required for a plain callable")
        sigma1 = epstein.sigma_free(target, g if g is not None else target.group)
    if f.has_pole and T1 <= 1.0:
        raise InvalidInput("Littlewood contours must have T1 > 1")
    rect = Rectangle(sigma0, sigma1, T1, T2)
    _check_pole(f, rect)
    scan = locate_zeros(f, None, rect)
    zero_side = 2 * math.pi * sum(z.real - sigma0 for z, _ in scan.zeros)

    h0 = _default_step(rect) / 2
    floor = 0.0
    right_total, _, _, _ = _track_edge(f, complex(sigma1, T1), complex(sigma1, T2), h0, 40, floor)
    base_bottom = cmath.phase(f(complex(sigma1, T1)))
    base_top = base_bottom + right_total
    _, _, pb, ab = _track_edge(f, complex(sigma1, T1), complex(sigma0, T1), h0 / 2, 40, floor)
    _, _, pt, at = _track_edge(f, complex(sigma1, T2), complex(sigma0, T2), h0 / 2, 40, floor)
    ab = [a - ab[0] + base_bottom for a in ab]
    at = [a - at[0] + base_top for a in at]
    arg_bottom = _arg_function(f, pb, ab)
    arg_top = _arg_function(f, pt, at)

    def quad(fun, a, b):
        return integrate.quad(fun, a, b, epsabs=quad_eps, epsrel=quad_eps, limit=2000)[0]

    left = quad(lambda t: math.log(abs(f(complex(sigma0, t)))), T1, T2)
    right = quad(lambda t: math.log(abs(f(complex(sigma1, t)))), T1, T2)
    top = quad(lambda x: arg_top(x, lambda y: complex(y, T2)), sigma0, sigma1)
    bottom = quad(lambda x: arg_bottom(x, lambda y: complex(y, T1)), sigma0, sigma1)
    contour = left - right + top - bottom
    resid = abs(zero_side - contour)
    return LittlewoodReport(sigma0, sigma1, T1, T2, zero_side, contour,
                            {"left_log": left, "right_log": right, "top_arg": top, "bottom_arg": bottom},
                            [z for z, _ in scan.zeros], resid, resid / max(1.0, abs(zero_side)))


# -- off-line zeros --------------------------------------------------------------------

def dh_search(spec: CombinationSpec, g: ClassGroup | None, t_max: float, t_min: float = 0.0,
              width: float = 10.0) -> list[complex]:
    """Zeros with Re s > 1, scanning [1 + 1e-6, sigma_free] x [k, k + width]."""
    g = g if g is not None else spec.group
    if g.h == 1:
        return []
    f = as_function(spec, g)
    sf = epstein.sigma_free(spec, g)
    found = []
    k = max(t_min, 2.0) if spec.has_pole else t_min
    while k < t_max:
        rect = Rectangle(1.0 + 1e-6, sf, k, min(k + width, t_max))
        for jt in (0.0, 1e-4, -1e-4, 2e-4):
            r = Rectangle(rect.sigma_min, rect.sigma_max, rect.t_min + jt, rect.t_max + jt)
            try:
                rep = locate_zeros(f, None, r)
                found.extend(z for z, _ in rep.zeros)
                break
            except BoundaryZero:
                continue
        k += width
    return found


# -- comparisons with the random model and the main term --------------------------------

def _windows(T: float, windows: int | None, width: float) -> list[tuple[float, float]]:
    if windows is None:
        return [(T, 2 * T)]
    if width * windows > T:
        raise InvalidInput("windows overlap")
    gap = T / windows
    return [(T + i * gap + 0.5 * (gap - width), T + i * gap + 0.5 * (gap + width)) for i in range(windows)]


def _mean_log_abs(f, sigma: float, t1: float, t2: float, n_nodes: int, panel: float = 0.5,
                  tol: float = 1e-8, max_depth: int = 12) -> float:
    """(1/(t2-t1)) int log|F(sigma+it)| dt by composite Gauss-Legendre.

    ``n_nodes`` fixes the base panels; a panel is halved while its rule and
    the rule on its two halves differ by more than tol per unit length,
    which happens next to zeros close to the line."""
    n_panels = max(1, int(math.ceil((t2 - t1) / panel)))
    per = max(4, int(math.ceil(n_nodes / n_panels)))
    x, w = np.polynomial.legendre.leggauss(per)

    def rule(a, b):
        ts = 0.5 * (a + b) + 0.5 * (b - a) * x
        vals = [math.log(abs(f(complex(sigma, t)))) for t in ts]
        return 0.5 * (b - a) * float(np.dot(w, vals))

    def adapt(a, b, whole, depth):
        m = 0.5 * (a + b)
        left, right = rule(a, m), rule(m, b)
        if depth >= max_depth or abs(left + right - whole) <= tol * (b - a):
            return left + right
        return adapt(a, m, left, depth + 1) + adapt(m, b, right, depth + 1)

    edges = np.linspace(t1, t2, n_panels + 1)
    total = sum(adapt(a, b, rule(a, b), 0) for a, b in zip(edges[:-1], edges[1:]))
    return total / (t2 - t1)


@dataclass
class ProbeReport:
    theta: float
    T: float
    sigma: float
    windows: list
    window_means: list
    t_average: float
    mc_mean: float
    mc_stderr: float
    gap: float
    n_nodes: int

    def to_json(self) -> dict:
        return dict(self.__dict__)


def conjecture_probe(spec: CombinationSpec, g: ClassGroup | None, theta: float, T: float,
                     n_nodes: int = 400, windows: int | None = None, width: float = 20.0,
                     P: int = 10**5, N: int = 20000, seed: int = 0, threads: int = 1) -> ProbeReport:
    """Average of log|F(sigma_T + it)| over [T, 2T] (or over equally spaced
    windows in it) against the random-model mean at the same sigma."""
    g = g if g is not None else spec.group
    f = as_function(spec, g)
    sig = sigma_T(theta, T)
    wins = _windows(T, windows, width)
    means = []
    for t1, t2 in wins:
        for jt in (0.0, 1e-6, -1e-6):
            try:
                means.append(_mean_log_abs(f, sig + jt, t1, t2, n_nodes))
                break
            except (ValueError, ZeroDivisionError):
                continue
        else:
            raise BoundaryZero(f"log|F| undefined on sigma = {sig}")
    avg = float(np.mean(means))
    m = ModelInstance(spec, g, P=P, seed=seed)
    est = mc_log_abs_F(m, sig, N, threads)
    return ProbeReport(theta, T, sig, wins, means, avg, est.mean, est.stderr, avg - est.mean, n_nodes)


@dataclass
class MainTermComparison:
    theta: float
    T: float
    count: float
    count_stderr: float
    main_term: float
    ratio: float
    error_scale: float
    windows: list
    window_counts: list

    def to_json(self) -> dict:
        return dict(self.__dict__)


def compare_main_term(spec: CombinationSpec, g: ClassGroup | None, theta: float, T: float,
                      windows: int | None = None, width: float = 20.0) -> MainTermComparison:
    """Zero count against the leading term of the zero-density asymptotic.
    With ``windows`` the count over [T, 2T] is extrapolated from that many
    equally spaced sub-windows of the given width."""
    from .asymptotics import MainTermParams, zero_density_main_term

    g = g if g is not None else spec.group
    spec_n = spec.normalize()
    params = MainTermParams.from_theta_T(spec_n.xi, spec_n.b, theta, T, normalize=False)
    main = zero_density_main_term(params)
    wins = _windows(T, windows, width)
    counts = [count_above_report(spec, g, theta, T, t_range=w).count for w in wins]
    if windows is None:
        count, err = float(counts[0]), 0.0
    else:
        scale = T / width
        count = scale * float(np.mean(counts))
        err = scale * float(np.std(counts, ddof=1)) / math.sqrt(len(counts)) if len(counts) > 1 else math.nan
    LL = math.log(math.log(T))
    return MainTermComparison(theta, T, count, err, main, count / main, LL ** -0.25 * math.sqrt(LL), wins, counts)

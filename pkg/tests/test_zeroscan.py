import math

import pytest

from epstein_zeros.epstein import CombinationSpec, sigma_free
from epstein_zeros.errors import BoundaryZero, InvalidInput
from epstein_zeros.quadforms import class_group
from epstein_zeros.randmodel import sigma_T
from epstein_zeros.special import Tolerance
from epstein_zeros.zeroscan import (
    Rectangle,
    compare_main_term,
    conjecture_probe,
    count_above,
    count_above_report,
    count_in,
    dh_search,
    littlewood_check,
    locate_zeros,
    verify_zero,
    winding_number,
    winding_report,
)

R1, R2 = 0.55 + 12j, 0.8 + 13j


def two_zeros(s):
    return (s - R1) * (s - R2)


@pytest.fixture(scope="module")
def spec15():
    return CombinationSpec.from_epstein(class_group(-15), 0)


@pytest.fixture(scope="module")
def spec15b():
    return CombinationSpec.from_epstein(class_group(-15), 1)


def test_rectangle_validation():
    with pytest.raises(InvalidInput):
        Rectangle(1, 1, 0, 1)
    with pytest.raises(InvalidInput):
        Rectangle(0, 1, 2, 1)


def test_synthetic_single_zero():
    rect = Rectangle(0, 1, 9, 11)
    assert winding_number(lambda s: s - (0.6 + 10j), None, rect) == 1
    assert winding_number(lambda s: s - (0.6 + 10j), None, Rectangle(0, 1, 11, 12)) == 0


def test_synthetic_two_zeros_located():
    rep = locate_zeros(two_zeros, None, Rectangle(0, 2, 10, 15))
    assert rep.winding == 2 and len(rep.zeros) == 2
    got = sorted((z for z, _ in rep.zeros), key=lambda z: z.imag)
    assert abs(got[0] - R1) < 1e-8 and abs(got[1] - R2) < 1e-8


def test_double_zero_counted_twice():
    rho = 0.5 + 5.3j
    rep = locate_zeros(lambda s: (s - rho) ** 2 * (s + 3), None, Rectangle(0, 1, 5, 6))
    assert rep.winding == 2
    assert all(abs(z - rho) < 1e-6 for z, _ in rep.zeros)


def test_zero_on_boundary_raises():
    with pytest.raises(BoundaryZero):
        winding_number(lambda s: s - (0.5 + 10j), None, Rectangle(0.5, 1, 9, 11))


def test_winding_threads_independent(spec15):
    rect = Rectangle(0.4, 1.4, 10, 25)
    a = winding_report(spec15, None, rect, threads=1)
    b = winding_report(spec15, None, rect, threads=4)
    assert a.winding == b.winding


def test_h1_no_zeros_right_of_one_and_a_half():
    g = class_group(-4)
    spec = CombinationSpec.explicit(g, [1.0])
    assert winding_number(spec, g, Rectangle(1.5, 2.5, 10, 40)) == 0


def test_pole_rectangle_rejected(spec15):
    with pytest.raises(InvalidInput):
        winding_number(spec15, None, Rectangle(0.5, 1.5, -1, 1))


def test_children_windings_add_up(spec15):
    parent = Rectangle(0.4, 1.3, 10, 30)
    kids = [Rectangle(0.4, 0.83, 10, 21.1), Rectangle(0.83, 1.3, 10, 21.1),
            Rectangle(0.4, 0.83, 21.1, 30), Rectangle(0.83, 1.3, 21.1, 30)]
    assert winding_number(spec15, None, parent) == sum(winding_number(spec15, None, k) for k in kids)


def test_count_additivity(spec15b):
    sf = sigma_free(spec15b, class_group(-15))
    a = count_in(spec15b, None, 0.6, sf, 10, 20).count
    b = count_in(spec15b, None, 0.6, sf, 20, 40).count
    c = count_in(spec15b, None, 0.6, sf, 10, 40).count
    assert a + b == c


def test_zeros_invariant_under_scaling_and_tolerance(spec15b):
    rect = Rectangle(0.3, 1.2, 15, 25)
    base = locate_zeros(spec15b, None, rect)
    scaled = locate_zeros(spec15b.scaled(2 - 3j), None, rect)
    tighter = locate_zeros(spec15b, None, rect, tol=Tolerance(rel_err=1e-13))
    assert base.winding == scaled.winding == tighter.winding == len(base.zeros)
    for other in (scaled, tighter):
        for (z, _), (w, _) in zip(base.zeros, other.zeros):
            assert abs(z - w) < 1e-8


def test_located_zeros_verify(spec15b):
    rep = locate_zeros(spec15b, None, Rectangle(0.3, 1.2, 15, 25))
    assert rep.zeros
    for z, resid in rep.zeros:
        assert resid < 1e-8
        ok, k, _ = verify_zero(spec15b, None, z)
        assert ok and k == 1


def test_conjugate_mirror(spec15):
    up = locate_zeros(spec15, None, Rectangle(0.3, 1.3, 10, 30))
    down = locate_zeros(spec15, None, Rectangle(0.3, 1.3, -30, -10))
    assert up.winding == down.winding
    for (z, _), (w, _) in zip(up.zeros, sorted(down.zeros, key=lambda zr: -zr[0].imag)):
        assert abs(z - w.conjugate()) < 1e-8


def test_functional_equation_partner(spec15):
    rep = locate_zeros(spec15, None, Rectangle(0.3, 1.3, 10, 30))
    off = [z for z, _ in rep.zeros if z.real > 0.5 + 1e-6]
    assert off
    for z in off:
        partner = 1 - z.conjugate()
        local = locate_zeros(spec15, None, Rectangle(partner.real - 0.01, partner.real + 0.01,
                                                     partner.imag - 0.01, partner.imag + 0.01))
        assert local.winding == 1 and abs(local.zeros[0][0] - partner) < 1e-8


def test_count_above_empty_strip(spec15):
    g = class_group(-15)
    rep = count_in(spec15, g, 2.0, 1.5, 50, 100)
    assert rep.count == 0
    # theta near zero puts sigma_T at about 1.5
    assert count_above(spec15, g, 1e-3, 50) == 0


def test_count_above_matches_locate(spec15):
    g = class_group(-15)
    rep = count_above_report(spec15, g, 0.5, 50)
    rect = Rectangle(rep.sigma_T, rep.sigma_free, 50 + rep.jitter, 100 + rep.jitter)
    assert rep.count == len(locate_zeros(spec15, g, rect).zeros)


def test_count_above_monotone(spec15):
    g = class_group(-15)
    counts = [count_above(spec15, g, th, 30) for th in (0.2, 0.5, 0.9)]
    assert sigma_T(0.2, 30) > sigma_T(0.5, 30) > sigma_T(0.9, 30)
    assert counts[0] <= counts[1] <= counts[2]


def test_count_above_needs_T(spec15):
    with pytest.raises(InvalidInput):
        count_above(spec15, None, 0.5, 5)


def test_littlewood_synthetic():
    f = lambda s: s - (0.8 + 10j)
    rep = littlewood_check(f, None, 0.6, 8, 12, sigma1=1.5)
    assert abs(rep.zero_side - 2 * math.pi * 0.2) < 1e-12
    assert rep.residual < 1e-8


def test_littlewood_shift_past_zero():
    rep_a = littlewood_check(two_zeros, None, 0.5, 10, 15, sigma1=1.5)
    rep_b = littlewood_check(two_zeros, None, 0.6, 10, 15, sigma1=1.5)
    # 0.55 is crossed: only the 0.8 zero remains, and it loses 0.1
    expect = rep_a.zero_side - 2 * math.pi * (0.05 + 0.1)
    assert abs(rep_b.zero_side - expect) < 1e-12
    assert abs(rep_b.contour_side - expect) < 1e-4


def test_littlewood_epstein(spec15b):
    rep = littlewood_check(spec15b, class_group(-15), 0.55, 20, 40)
    assert rep.relative_residual < 1e-4


def test_littlewood_rejects_low_contour(spec15):
    with pytest.raises(InvalidInput):
        littlewood_check(spec15, None, 0.55, 0.5, 10)


def test_dh_search_h1_empty():
    g = class_group(-4)
    assert dh_search(CombinationSpec.explicit(g, [1.0]), g, 500) == []


def test_dh_search_short_range_contract(spec15):
    # any zero returned lies right of 1 and verifies
    for z in dh_search(spec15, None, 70, t_min=55):
        assert z.real > 1
        ok, k, _ = verify_zero(spec15, None, z)
        assert ok and k == 1


def test_probe_h1_small_gap():
    g = class_group(-4)
    spec = CombinationSpec.explicit(g, [1.0])
    rep = conjecture_probe(spec, g, 0.5, 1e3, windows=5, width=10, P=10**4, N=4000)
    assert abs(rep.gap) <= 0.1


def test_probe_quadrature_converged(spec15):
    from epstein_zeros.zeroscan import as_function, _mean_log_abs

    f = as_function(spec15)
    a = _mean_log_abs(f, 0.7, 100, 110, 400)
    b = _mean_log_abs(f, 0.7, 100, 110, 800)
    assert abs(a - b) < 1e-6


def test_compare_main_term_algebra(spec15):
    rep = compare_main_term(spec15, None, 0.5, 30)
    assert rep.ratio == rep.count / rep.main_term
    LL = math.log(math.log(30))
    assert rep.error_scale == LL ** -0.25 * math.sqrt(LL)

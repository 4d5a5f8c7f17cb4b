import cmath
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from epstein_zeros.epstein import (
    CombinationSpec,
    EpsteinEvaluator,
    class_evaluators,
    completed,
    dirichlet_coefficients,
    eval_epstein,
    eval_F,
    eval_hecke,
    fe_residual,
    lattice_sum,
    sigma_free,
)
from epstein_zeros.errors import InvalidInput, PoleAtOne, UnsupportedCombination
from epstein_zeros.oracles import epstein_bessel, gaussian_integer_value
from epstein_zeros.quadforms import class_group


def rel(a, b):
    return abs(a - b) / abs(b)


def test_gaussian_integers_at_two():
    ev = EpsteinEvaluator((1, 0, 1))
    assert rel(eval_epstein(ev, 2), gaussian_integer_value()) < 1e-13
    assert abs(eval_epstein(ev, 2) - 6.0268120396) < 1e-9


@pytest.mark.parametrize("form", [(1, 0, 1), (1, 1, 4), (2, 1, 2), (2, 1, 3), (1, 0, 6), (3, 2, 5)])
@pytest.mark.parametrize("s", [2, 0.7 + 10j, 0.5 + 33j, -0.5 + 3j, 0.3 - 4j])
def test_against_bessel_expansion(form, s):
    ev = EpsteinEvaluator(form)
    assert rel(eval_epstein(ev, s), epstein_bessel(form, s)) < 1e-11


@pytest.mark.parametrize("form", [(1, 1, 4), (2, 1, 3)])
@pytest.mark.parametrize("s", [1.5, 2 + 5j, 3 - 2j])
def test_against_direct_series(form, s):
    # the tail-corrected lattice sum has error of order X^{-Re s / 2}
    X = 2e5
    ev = EpsteinEvaluator(form)
    assert rel(eval_epstein(ev, s), lattice_sum(form, s, X)) < 10 * X ** (-complex(s).real / 2)


@settings(max_examples=20, deadline=None)
@given(st.floats(1.5, 3.0), st.floats(-20, 20))
def test_direct_dirichlet_agreement(sig, t):
    # F = sum c_n n^{-s}, truncated where the tail is below 1e-10
    g = class_group(-15)
    spec = CombinationSpec.from_epstein(g, 1)
    N = 40000
    c = dirichlet_coefficients(spec, g, N)
    s = complex(sig, t)
    n = np.arange(1, N + 1)
    head = np.sum(c[1:] * np.exp(-s * np.log(n)))
    tail = 2 * math.pi / math.sqrt(15) * N ** (1 - s) / (s - 1)
    val = eval_F(spec, g, s)
    assert abs(val - (head + tail)) <= 50 * N ** (-sig / 2) * abs(val)


def test_pole_residue():
    for D in (-4, -15, -23, -20, -24):
        for f in class_group(D).forms:
            ev = EpsteinEvaluator(f)
            eps = 1e-6
            r = eps * eval_epstein(ev, 1 + eps)
            assert abs(r - 2 * math.pi / math.sqrt(-D)) < 1e-4
    ev = EpsteinEvaluator((1, 1, 4))
    seq = [10 ** -k * eval_epstein(ev, 1 + 10 ** -k) for k in range(3, 7)]
    assert all(abs(x - 2 * math.pi / math.sqrt(15)) < 10 ** -k * 10 for x, k in zip(seq, range(3, 7)))


def test_pole_at_one_rejected():
    with pytest.raises(PoleAtOne):
        eval_epstein(EpsteinEvaluator((1, 1, 4)), 1.0)
    g = class_group(-15)
    with pytest.raises(PoleAtOne):
        eval_hecke(g, 0, 1.0)
    # nontrivial characters are regular at s = 1
    assert math.isfinite(abs(eval_hecke(g, 1, 1.0)))


def test_value_at_zero():
    # E(0, Q) = -1 for every form
    for f in [(1, 0, 1), (1, 1, 4), (2, 1, 3)]:
        assert abs(eval_epstein(EpsteinEvaluator(f), 0) + 1) < 1e-12


def test_rejects_indefinite_form():
    with pytest.raises(InvalidInput):
        EpsteinEvaluator((1, 3, 1))


def test_dual_form_determinant():
    ev = EpsteinEvaluator((2, 1, 3))
    a, b, c = ev.dual
    assert abs((a * c - b * b / 4) - 1 / ev.delta) < 1e-15


@settings(max_examples=25, deadline=None)
@given(st.floats(-1, 2), st.floats(-40, 40))
def test_conjugate_symmetry(sig, t):
    ev = EpsteinEvaluator((2, 1, 3))
    s = complex(sig, t)
    if abs(s - 1) < 1e-3:
        return
    a = eval_epstein(ev, s)
    b = eval_epstein(ev, s.conjugate())
    assert abs(a - b.conjugate()) <= 1e-12 * max(abs(a), 1)


def test_hecke_trivial_d4():
    assert abs(eval_hecke(class_group(-4), 0, 2) - 1.5067030099) < 1e-9


def test_hecke_roundtrip_d23():
    g = class_group(-23)
    s = 0.6 + 20j
    L = [eval_hecke(g, j, s) for j in range(3)]
    for k, ev in enumerate(class_evaluators(g)):
        back = g.w / g.h * sum(np.conj(g.chars[j, k]) * L[j] for j in range(3))
        E = eval_epstein(ev, s)
        assert abs(back - E) / max(abs(E), 1) < 1e-12


def test_hecke_coefficients_from_ideal_counts():
    # a_chi(n) = sum over ideals of norm n of chi(class), via the prime splitting
    from epstein_zeros.quadforms import prime_class, kronecker

    g = class_group(-15)
    spec = CombinationSpec.explicit(g, [1.0], characters=[1])
    c = dirichlet_coefficients(spec, g, 50).real
    chi = g.chars[1].real

    def local(p, e):
        kr = kronecker(-15, p)
        if kr == -1:
            return 1.0 if e % 2 == 0 else 0.0
        x = chi[prime_class(g, p)]
        if kr == 0:
            return x ** e
        return sum(x ** i * x ** (e - i) for i in range(e + 1))

    for n in range(1, 51):
        val, m, p = 1.0, n, 2
        while m > 1:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            if e:
                val *= local(p, e)
            p += 1
        assert abs(c[n] - val) < 1e-12, n


def test_combination_examples(g15, g23):
    spec = CombinationSpec.from_epstein(g15, 0, normalize=True)
    s = 0.7 + 10j
    F = eval_F(spec, g15, s) * spec.norm
    E = eval_epstein(EpsteinEvaluator((1, 1, 4)), s)
    assert rel(F, E) < 1e-12
    one = CombinationSpec.explicit(class_group(-4), [1.0])
    assert eval_F(one, class_group(-4), s) == eval_hecke(class_group(-4), 0, s)
    spec23 = CombinationSpec.from_epstein(g23, 1)
    assert np.allclose(spec23.b, [2 / 3, -2 / 3], atol=1e-15)
    assert spec23.xi == (4, 2)


@pytest.mark.parametrize("D", [-4, -15, -20, -23, -24, -31])
def test_xi_product(D):
    g = class_group(D)
    spec = CombinationSpec.from_epstein(g, 0)
    assert spec.xi_product == 2 ** (3 * spec.J - g.h)


def test_spec_validation(g15):
    with pytest.raises(UnsupportedCombination):
        CombinationSpec.explicit(g15, [1.0, 0.0])
    with pytest.raises(InvalidInput):
        CombinationSpec.explicit(g15, [1.0])
    with pytest.raises(InvalidInput):
        CombinationSpec(-15, (0,), (0.5,), (4,), normalized=True)
    n = CombinationSpec.explicit(g15, [3.0, 4.0], normalize=True)
    assert abs(sum(abs(x) ** 2 for x in n.b) - 1) < 1e-15 and n.norm == 5.0


def test_merged_coefficient_vanishing_rejected():
    # h = 4: class 1 has chi_1(A_1) = i, so 2 Re chi_1 = 0
    g = class_group(-39)
    assert g.h == 4
    with pytest.raises(UnsupportedCombination):
        CombinationSpec.from_epstein(g, 1)


def test_completed_examples(g15):
    spec = CombinationSpec.from_epstein(g15, 0)
    assert fe_residual(spec, g15, 0.5 + 7j) < 1e-9
    assert fe_residual(spec, g15, 2.0) < 1e-8
    t = 13.7
    a = completed(spec, g15, complex(0.5, t))
    b = completed(spec, g15, complex(0.5, -t))
    assert abs(a - b.conjugate()) <= 1e-12 * max(abs(a), 1)
    # on the critical line G(1/2+it) = G(1/2-it) = conj G(1/2+it), so it is real
    assert abs(a.imag) <= 1e-9 * max(abs(a), 1)


@pytest.mark.parametrize("D", [-15, -20, -23, -24])
def test_functional_equation_random_points(D):
    g = class_group(D)
    rng = np.random.default_rng(7)
    worst = 0.0
    for k in range(g.h):
        spec = CombinationSpec.from_epstein(g, k)
        for _ in range(100 // g.h + 1):
            s = complex(rng.uniform(-1, 2), rng.uniform(-50, 50))
            if abs(s - 1) < 1e-3 or abs(s) < 1e-3:
                continue
            worst = max(worst, fe_residual(spec, g, s))
    assert worst < 1e-8


def test_scaled_spec_values(g15):
    spec = CombinationSpec.from_epstein(g15, 1)
    s = 0.8 + 17j
    assert rel(eval_F(spec.scaled(3 - 2j), g15, s), (3 - 2j) * eval_F(spec, g15, s)) < 1e-14


def test_parallel_matches_sequential():
    ev = EpsteinEvaluator((2, 1, 3))
    pts = [complex(0.5 + 0.1 * k, 3.0 * k) for k in range(1, 25)]
    seq = [eval_epstein(ev, s) for s in pts]
    fresh = EpsteinEvaluator((2, 1, 3))
    with ThreadPoolExecutor(4) as pool:
        par = list(pool.map(lambda s: eval_epstein(fresh, s), pts))
    assert par == seq


def test_sigma_free_bounds_zero_region(g15):
    spec = CombinationSpec.from_epstein(g15, 0)
    sf = sigma_free(spec, g15)
    assert 1 < sf < 4
    # the leading term dominates: |F(s)| stays away from zero right of sf
    for t in np.linspace(0, 200, 41):
        F = eval_F(spec, g15, complex(sf, t))
        assert abs(F) > 0


def test_lattice_radius_guard():
    ev = EpsteinEvaluator((1, 1, 4))
    with pytest.raises(InvalidInput):
        ev.lattice(1e7)

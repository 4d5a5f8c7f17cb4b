import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from epstein_zeros.asymptotics import (
    MainTermParams,
    coefficient_table,
    d_coeff,
    density_G_leading,
    difference_check,
    error_term_two,
    eval_error_term,
    eval_I_mn,
    eval_I_mn_plain,
    expt_main_term,
    I_main_terms,
    integrate_density,
    integrate_density_tensor,
    load_envelope_constants,
    logint_bound_check,
    logint_grid,
    moment_bound_check,
    moment_integral,
    q0000,
    q_coeff,
    region_integral_u,
    region_weight,
    region_weights,
    zero_density_main_term,
)
from epstein_zeros.errors import InvalidInput, VacantCoefficient
from epstein_zeros.oracles import region_mc

xis = st.lists(st.sampled_from([2.0, 4.0]), min_size=1, max_size=4)


def test_region_weight_examples():
    assert abs(region_weight(1, [4]) - math.sqrt(4 * math.pi)) < 1e-14
    assert abs(region_weight(1, [4, 4]) - 2 * math.pi) < 1e-10
    assert region_integral_u([4]) == 0.0
    assert abs(region_integral_u([4, 4]) - 4 * math.sqrt(2 * math.pi)) < 1e-10


def test_region_against_mc():
    (u, u_se), (w, w_se) = region_mc([4, 2], N=2 * 10**6, seed=1)
    assert abs(region_weight(1, [4, 2]) - w) < 3 * w_se
    (u, u_se), _ = region_mc([4, 2, 2], N=2 * 10**6, seed=2)
    assert abs(region_integral_u([4, 2, 2]) - u) < 3 * u_se


@pytest.mark.parametrize("xi", [list(x) for J in range(1, 5) for x in itertools.product([2.0, 4.0], repeat=J)])
def test_partition_identity(xi):
    total = sum(region_weights(xi))
    assert abs(total - math.prod(math.sqrt(math.pi * x) for x in xi)) < 1e-9


@settings(max_examples=20, deadline=None)
@given(xis, st.randoms())
def test_permutation_equivariance(xi, rnd):
    perm = list(range(len(xi)))
    rnd.shuffle(perm)
    pxi = [xi[i] for i in perm]
    w = region_weights(xi)
    pw = region_weights(pxi)
    assert np.allclose(pw, [w[i] for i in perm], atol=1e-10)
    assert abs(region_integral_u(pxi) - region_integral_u(xi)) < 1e-9


@pytest.mark.parametrize("J", [2, 3, 4])
def test_equal_xi_exchangeable(J):
    w = region_weights([2.0] * J)
    assert max(w) - min(w) < 1e-10


def test_invalid_region_index():
    with pytest.raises(InvalidInput):
        region_weight(3, [4, 4])


def test_d_coeff_examples():
    assert abs(d_coeff([0, 0], [4, 2]) - math.sqrt(4 * math.pi) * math.sqrt(2 * math.pi)) < 1e-13
    assert d_coeff([1, 2], [4, 2]) == 0.0
    assert abs(d_coeff([2, 0], [4, 2]) - 4 * math.pi * math.sqrt(2)) < 1e-12


@pytest.mark.parametrize("n", range(7))
@pytest.mark.parametrize("xi", [2.0, 4.0])
def test_d_coeff_quadrature(n, xi):
    ref = integrate.quad(lambda v: v ** n * math.exp(-v * v / xi), -np.inf, np.inf, epsabs=1e-13, epsrel=1e-13)[0]
    assert abs(d_coeff([n], [xi]) - ref) < 1e-10 * max(1, abs(ref))


def test_q_coeff_examples():
    xi = [4.0, 2.0]
    z = [0, 0]
    assert abs(q_coeff(z, z, z, z, xi) - math.pi ** -2 / 8) < 1e-16
    assert q_coeff(z, z, [1, 0], z, xi) == 0
    assert q_coeff([1, 1], [1, 1], [0, 0], [0, 0], xi) == 0  # order 8
    with pytest.raises(VacantCoefficient):
        q_coeff(z, z, [2, 1], z, xi)


def test_q_coeff_supplied_btilde():
    xi = [4.0]
    v = q_coeff([1], [0], [0], [0], xi, btilde={((2,), (0,)): 1.0})
    assert v != 0


def test_coefficient_table_vanishing():
    t = coefficient_table([4.0, 2.0], max_order=2)
    for n, d in t.d.items():
        if any(k % 2 for k in n):
            assert d == 0
    for (k, l, m, n), q in t.q.items():
        order = 2 * sum(k) + 2 * sum(l) + sum(m) + sum(n)
        if order == 1:
            assert q == 0
    assert t.vacant


@pytest.mark.parametrize("xi", [[4.0], [4.0, 2.0], [2.0, 2.0, 4.0]])
def test_q0_d0_identity(xi):
    J = len(xi)
    lhs = q0000(xi) * d_coeff([0] * J, xi)
    assert abs(lhs - math.pi ** (-J / 2) * math.prod(x ** -0.5 for x in xi)) < 1e-15


def test_density_examples():
    p = MainTermParams.from_L([4.0, 2.0], [1, 1], 3.0)
    assert abs(density_G_leading([0, 0], [0, 0], p) - math.pi ** -2 / 8 / 9) < 1e-16
    a = density_G_leading([0.5, 0], [0, 0], p)
    b = density_G_leading([1.5, 0], [0, 0], p)
    assert a > b


@pytest.mark.parametrize("xi", [[4.0], [4.0, 2.0], [2.0, 2.0, 4.0]])
def test_density_integrates_to_one(xi):
    p = MainTermParams.from_L(xi, [1] * len(xi), 2.5)
    assert abs(integrate_density(p) - 1) < 1e-9


def test_density_tensor_grid_two():
    p = MainTermParams.from_L([4.0, 2.0], [1, 1], 2.5)
    assert abs(integrate_density_tensor(p, nodes=16) - 1) < 1e-9


def test_expt_main_term_equal_weights():
    for J in (2, 3):
        xi = [4.0] * J
        p = MainTermParams.from_L(xi, [1] * J, 4.0)
        first = math.sqrt(p.L) * region_integral_u(xi) / math.sqrt(p.xi_product * math.pi ** J)
        assert abs(expt_main_term(p) - first + math.log(J) / 2) < 1e-9


def test_expt_main_term_two():
    p = MainTermParams.from_theta_T([4.0, 4.0], [1, 1], 0.5, 1e4)
    first = math.sqrt(p.L) * 4 * math.sqrt(2 * math.pi) / math.sqrt(16 * math.pi ** 2)
    assert abs(expt_main_term(p) - (first - math.log(2) / 2)) < 1e-10


def test_expt_main_term_against_mc():
    # main-term integrand: int log|sum b e^{(u+iv) sqrtL}| weighted, divided by d_0 times normalization
    p = MainTermParams.from_L([4.0, 4.0], [1, 1], 20.0)
    est = eval_I_mn_plain([0, 0], [0, 0], p, N=400000, seed=3)
    norm = math.pi ** p.J * p.xi_product
    mc = est.mean / norm
    assert abs(mc - expt_main_term(p)) < 3 * est.stderr / norm + 0.05


def test_zero_density_scaling():
    T = 1e4
    a = zero_density_main_term(MainTermParams.from_theta_T([4, 4], [1, 1], 0.5, T))
    b = zero_density_main_term(MainTermParams.from_theta_T([4, 4], [1, 1], 0.5, 2 * T))
    LL = math.log(math.log(T))
    LL2 = math.log(math.log(2 * T))
    pred = 2 * (math.log(2 * T) / math.log(T)) ** 0.5 * math.sqrt(LL / LL2)
    assert abs(b / a - pred) < 1e-12


def test_zero_density_xi_ratio():
    T = 1e4
    a = MainTermParams.from_theta_T([4, 4], [1, 1], 0.5, T)
    b = MainTermParams.from_theta_T([4, 2], [1, 1], 0.5, T)
    ratio = zero_density_main_term(b) / zero_density_main_term(a)
    pred = math.sqrt(2) * region_integral_u([4, 2]) / region_integral_u([4, 4])
    assert abs(ratio - pred) < 1e-12


def test_zero_density_needs_T():
    with pytest.raises(InvalidInput):
        zero_density_main_term(MainTermParams.from_L([4, 4], [1, 1], 2.0))


def test_I_mn_h1_zero():
    p = MainTermParams.from_L([4.0], [1], 4.0)
    est = eval_I_mn([0], [0], p, N=20000)
    assert abs(est.mean) <= 3 * est.stderr + 1e-12


def test_I_mn_control_variate_matches_plain():
    p = MainTermParams.from_L([4.0, 2.0], [0.6, 0.8], 4.0)
    a = eval_I_mn([0, 0], [0, 0], p, N=200000, seed=4)
    b = eval_I_mn_plain([0, 0], [0, 0], p, N=200000, seed=5)
    assert abs(a.mean - b.mean) < 3 * math.hypot(a.stderr, b.stderr)


def test_error_term_quadrature_against_mc():
    p = MainTermParams.from_L([4.0, 2.0], [0.6, 0.8j], 3.0)
    det = error_term_two(p)
    mc = eval_error_term([0, 0], [0, 0], p, N=400000, seed=6)
    assert abs(det - mc.mean) < 4 * mc.stderr


def test_error_term_shrinks():
    vals = []
    for LL in (4.0, 9.0, 16.0):
        p = MainTermParams.from_L([4.0, 4.0], [1, 1], LL)
        vals.append(abs(error_term_two(p)))
    assert vals[0] > vals[1] > vals[2]


def test_I_main_terms_odd_n_vanish():
    p = MainTermParams.from_L([4.0, 2.0], [1, 1], 4.0)
    assert I_main_terms([0, 0], [1, 0], p) == (0.0, 0.0)


def test_difference_check_zero_width():
    p = MainTermParams.from_theta_T([4.0, 4.0], [1, 1], 0.5, 1e6)
    r = difference_check(0.0, 0.5, 0.5, [0, 0], [0, 0], p)
    assert r.lhs == 0.0


def test_difference_check_leading_coefficient():
    # d/dtheta of theta^alpha sqrt(theta LL) = (alpha + 1/2) theta^{alpha - 1/2} sqrt(LL)
    alpha, th, h, LL = 0.7, 0.4, 1e-5, 9.0
    f = lambda t: t ** alpha * math.sqrt(t * LL)
    fd = (f(th + h) - f(th - h)) / (2 * h)
    assert abs(fd - (alpha + 0.5) * th ** (alpha - 0.5) * math.sqrt(LL)) < 1e-8


def test_difference_check_within_budget():
    p = MainTermParams(xi=(4.0, 4.0), b=(2 ** -0.5, 2 ** -0.5), theta=0.5, loglogT=9.0)
    r = difference_check(0.0, 0.51, 0.50, [0, 0], [0, 0], p, N=100000)
    assert abs(r.residual["theta1"]) <= 3 * r.lhs_stderr + 10 * r.budget


def test_logint_examples():
    assert abs(logint_bound_check(10, 0.1) - math.log(10) * math.log(10)) < 0.1
    assert abs(logint_bound_check(0, 0.5) - math.log(2) ** 2 / 2) < 1e-10


def test_logint_singular_point():
    # log singularity at u = 0.4 for z = -0.4
    v = logint_bound_check(-0.4, 0.1)
    ref = integrate.quad(lambda u: abs(math.log(abs(u - 0.4))) / u, 0.1, 1, points=[0.4], limit=200)[0]
    assert abs(v - ref) < 1e-8


def test_logint_frozen_envelope():
    C = load_envelope_constants()["logint_C"]
    for eps in (0.2, 0.1, 0.05, 0.02):
        assert max(logint_bound_check(z, eps) * eps for z in logint_grid()) <= C


def test_moment_examples():
    C = load_envelope_constants()["moment_C"]
    est = moment_integral(1, 1.0, [1.0], N=50000)
    assert est.mean > 0
    r = moment_bound_check(3, 25.0, [2 ** -0.5, 2 ** -0.5], N=100000, C=C["2"])
    assert r.holds


@pytest.mark.parametrize("J,k", [(1, 1), (1, 2), (2, 1), (2, 2)])
def test_moment_scaling_slope(J, k):
    b = [J ** -0.5] * J
    a = moment_integral(k, 25.0, b, N=100000).mean
    c = moment_integral(k, 100.0, b, N=100000).mean
    slope = math.log(c / a) / math.log(4)
    assert J - 0.1 <= slope <= J + k + 0.1


def test_moment_validation():
    with pytest.raises(InvalidInput):
        moment_integral(4, 1.0, [1.0])
    with pytest.raises(InvalidInput):
        moment_integral(1, 0.5, [1.0])


def test_params_validation():
    with pytest.raises(InvalidInput):
        MainTermParams.from_theta_T([4, 4], [1, 1], 1.5, 1e4)
    with pytest.raises(InvalidInput):
        MainTermParams.from_theta_T([4, 4], [1], 0.5, 1e4)
    with pytest.raises(InvalidInput):
        MainTermParams.from_L([4, 4], [1, 1], -1.0)
